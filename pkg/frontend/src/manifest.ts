/** Discovery of experiment run directories under a results root. */

import * as fs from "fs";
import * as path from "path";

export interface ExperimentRuns {
  expId: string;
  title: string;
  /** arm name -> absolute run directories (one per seed) */
  arms: Map<string, string[]>;
}

export function loadExperiment(root: string, expId: string): ExperimentRuns | null {
  // accept either <root>/<expId>/manifest.json or <root> itself being the
  // experiment directory
  const candidates = [path.join(root, expId), root];
  for (const dir of candidates) {
    const manifestPath = path.join(dir, "manifest.json");
    if (!fs.existsSync(manifestPath)) continue;
    const manifest = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
    if (manifest.experiment !== expId) continue;
    const arms = new Map<string, string[]>();
    for (const [arm, runDirs] of Object.entries(manifest.arms as Record<string, string[]>)) {
      arms.set(arm, runDirs.map((d) => path.resolve(dir, d)));
    }
    return { expId, title: manifest.title ?? expId, arms };
  }
  return null;
}
