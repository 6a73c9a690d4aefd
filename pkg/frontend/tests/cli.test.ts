import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { run } from "../src/cli";
import { ROUNDS_COLUMNS } from "../src/csv";

const FIXTURES = path.join(__dirname, "fixtures", "runs");

let tmp: string;
beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "nexus-cli-"));
  vi.spyOn(console, "log").mockImplementation(() => {});
  vi.spyOn(console, "error").mockImplementation(() => {});
});
afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
  vi.restoreAllMocks();
});

function copyFixtures(dest: string) {
  fs.cpSync(FIXTURES, dest, { recursive: true });
}

describe("nexus-plots all", () => {
  it("produces the figures for every present experiment", () => {
    const out = path.join(tmp, "figs");
    expect(run({ figure: "all", in: FIXTURES, out })).toBe(0);
    const written = fs.readdirSync(out).sort();
    expect(written).toEqual([
      "fig10_reputation.svg",
      "fig5_selection.svg",
      "fig6_sybil.svg",
    ]);
  });

  it("fails when nothing is renderable", () => {
    const empty = path.join(tmp, "empty");
    fs.mkdirSync(empty);
    expect(run({ figure: "all", in: empty, out: path.join(tmp, "o") })).toBe(2);
  });
});

describe("single figure mode", () => {
  it("renders one figure on demand", () => {
    const out = path.join(tmp, "one");
    expect(run({ figure: "fig10", in: FIXTURES, out })).toBe(0);
    expect(fs.existsSync(path.join(out, "fig10_reputation.svg"))).toBe(true);
  });

  it("errors on a figure whose experiment data is missing", () => {
    expect(run({ figure: "fig4", in: FIXTURES, out: path.join(tmp, "o") })).toBe(2);
  });

  it("errors on unknown ids", () => {
    expect(run({ figure: "fig99", in: FIXTURES, out: path.join(tmp, "o") })).toBe(2);
  });

  it("errors on a missing input directory", () => {
    expect(run({ figure: "all", in: path.join(tmp, "nope"), out: path.join(tmp, "o") })).toBe(2);
  });
});

describe("schema failures", () => {
  it("exits nonzero naming the missing column on a truncated CSV", () => {
    const broken = path.join(tmp, "runs");
    copyFixtures(broken);
    const target = path.join(broken, "exp4", "random", "seed0", "rounds.csv");
    const lines = fs.readFileSync(target, "utf8").split("\n");
    const cut = lines[0].split(",").slice(0, 5).join(",");
    fs.writeFileSync(target, [cut, ...lines.slice(1)].join("\n"));
    const errors: string[] = [];
    vi.spyOn(console, "error").mockImplementation((msg: unknown) => {
      errors.push(String(msg));
    });
    expect(run({ figure: "fig5", in: broken, out: path.join(tmp, "o") })).toBe(2);
    expect(errors.join("\n")).toMatch(/missing column "[a-z_]+"/);
  });

  it("renders an empty-axes figure for header-only input", () => {
    const hollow = path.join(tmp, "hollow");
    copyFixtures(hollow);
    const runDir = path.join(hollow, "exp4", "random", "seed0");
    fs.writeFileSync(path.join(runDir, "rounds.csv"), ROUNDS_COLUMNS.join(",") + "\n");
    // all exp4 runs header-only -> still a valid figure file
    for (const arm of fs.readdirSync(path.join(hollow, "exp4"))) {
      const armDir = path.join(hollow, "exp4", arm);
      if (!fs.statSync(armDir).isDirectory()) continue;
      for (const seed of fs.readdirSync(armDir)) {
        fs.writeFileSync(path.join(armDir, seed, "rounds.csv"), ROUNDS_COLUMNS.join(",") + "\n");
      }
    }
    const out = path.join(tmp, "figs");
    expect(run({ figure: "fig5", in: hollow, out })).toBe(0);
    const svg = fs.readFileSync(path.join(out, "fig5_selection.svg"), "utf8");
    expect(svg).toContain("no data rows: empty axes");
  });
});
