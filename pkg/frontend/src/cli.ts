#!/usr/bin/env node
/** render --figure {2|3|E1|E2} --manifest PATH --out PATH */

import { writeFileSync } from "node:fs";

import { CsvError } from "./csv.js";
import { ManifestError, readManifest } from "./manifest.js";
import { renderFigure } from "./svg.js";

function usage(): never {
  console.error("usage: render --figure {2|3|E1|E2} --manifest PATH --out PATH");
  process.exit(2);
}

export function main(argv: string[]): number {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || argv[i + 1] === undefined) usage();
    args.set(argv[i].slice(2), argv[i + 1]);
  }
  const figure = args.get("figure");
  const manifestPath = args.get("manifest");
  const out = args.get("out");
  if (!figure || !manifestPath || !out) usage();
  try {
    const manifest = readManifest(manifestPath);
    const spec = manifest.figures[figure];
    if (!spec) {
      console.error(`${manifestPath}: no figure '${figure}' in manifest`);
      return 2;
    }
    writeFileSync(out, renderFigure(spec, manifestPath));
    return 0;
  } catch (e) {
    if (e instanceof CsvError || e instanceof ManifestError) {
      console.error(e.message);
      return 1;
    }
    throw e;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
