/** Reader for the simulation CLI's curve CSV format. */

import { readFileSync } from "node:fs";

export interface Curve {
  t: number[];
  mean: number[];
  stderr: number[];
  n: number;
}

export const CSV_HEADER = "t,mean,stderr,n";

export class CsvError extends Error {
  constructor(
    public readonly path: string,
    detail: string,
  ) {
    super(`${path}: ${detail}`);
    this.name = "CsvError";
  }
}

/** Parse a curve CSV (header `t,mean,stderr,n`, one row per grid point). */
export function parseCurve(path: string, text: string): Curve {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() !== CSV_HEADER) {
    throw new CsvError(path, `missing '${CSV_HEADER}' header`);
  }
  if (lines.length < 2) {
    throw new CsvError(path, "no data rows");
  }
  const t: number[] = [];
  const mean: number[] = [];
  const stderr: number[] = [];
  let n = 1;
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 4) {
      throw new CsvError(path, `row ${i + 1}: expected 4 columns, got ${cells.length}`);
    }
    const values = cells.map(Number);
    if (values.some((v) => Number.isNaN(v))) {
      throw new CsvError(path, `row ${i + 1}: non-numeric value`);
    }
    t.push(values[0]);
    mean.push(values[1]);
    stderr.push(values[2]);
    n = values[3];
  }
  return { t, mean, stderr, n };
}

export function readCurve(path: string): Curve {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new CsvError(path, "cannot read file");
  }
  return parseCurve(path, text);
}
