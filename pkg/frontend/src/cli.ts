#!/usr/bin/env node
/**
 * nexus-plots: render the simulator's CSV outputs into the figure family.
 *
 *   nexus-plots <figure-id|all> --in <run-dir> --out <dir>
 *
 * The run directory is the root written by `nexus-sim exp` (one subdirectory
 * per experiment). `all` renders every figure whose experiment data is
 * present; asking for a specific figure whose data is missing is an error.
 */

import * as fs from "fs";
import * as path from "path";
import yargs from "yargs";

import { SchemaError } from "./csv";
import { FIGURES, renderFigure } from "./figures";

export interface PlotArgs {
  figure: string;
  in: string;
  out: string;
}

export function run(args: PlotArgs): number {
  const { figure, out } = args;
  const root = args.in;
  if (!fs.existsSync(root)) {
    console.error(`error: input directory not found: ${root}`);
    return 2;
  }
  const wanted = figure === "all" ? Object.keys(FIGURES) : [figure];
  if (figure !== "all" && !(figure in FIGURES)) {
    console.error(`error: unknown figure id "${figure}" (known: ${Object.keys(FIGURES).join(", ")}, all)`);
    return 2;
  }
  fs.mkdirSync(out, { recursive: true });

  let rendered = 0;
  for (const figureId of wanted) {
    let result;
    try {
      result = renderFigure(figureId, root);
    } catch (err) {
      if (err instanceof SchemaError) {
        console.error(`error: ${figureId}: ${err.message}`);
        return 2;
      }
      throw err;
    }
    if (result === null) {
      const note = `${figureId}: no ${FIGURES[figureId].experiment} data under ${root}`;
      if (figure === "all") {
        console.log(`skip ${note}`);
        continue;
      }
      console.error(`error: ${note}`);
      return 2;
    }
    const target = path.join(out, result.fileName);
    fs.writeFileSync(target, result.svg);
    console.log(`wrote ${target}`);
    rendered += 1;
  }
  if (figure === "all" && rendered === 0) {
    console.error(`error: no renderable experiment data found under ${root}`);
    return 2;
  }
  return 0;
}

export function main(argv: string[]): number {
  const parsed = yargs(argv)
    .command("$0 <figure>", "render figures from simulator CSV output", (y) =>
      y
        .positional("figure", {
          describe: "figure id (fig4..fig10) or 'all'",
          type: "string",
          demandOption: true,
        })
        .option("in", {
          describe: "run directory written by the simulator",
          type: "string",
          demandOption: true,
        })
        .option("out", {
          describe: "output directory for figure files",
          type: "string",
          demandOption: true,
        }),
    )
    .strict()
    .exitProcess(false)
    .parseSync();
  return run({
    figure: String(parsed.figure),
    in: String(parsed.in),
    out: String(parsed.out),
  });
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
