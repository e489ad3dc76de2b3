#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FIGURE_KINDS, FigureKind } from "./csv";
import { renderFile } from "./render";

export function main(argv: string[]): number {
  const args = yargs(argv)
    .command("render", "render one figure from a harness CSV")
    .option("csv", { type: "string", demandOption: true,
                     describe: "input CSV from the mcisi CLI" })
    .option("kind", { choices: FIGURE_KINDS, demandOption: true,
                      describe: "figure kind matching the CSV schema" })
    .option("out", { type: "string", demandOption: true,
                     describe: "output SVG path" })
    .strict()
    .parseSync();
  try {
    renderFile(args.csv, args.kind as FigureKind, args.out);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

if (require.main === module) {
  process.exit(main(hideBin(process.argv)));
}
