/** Figure-manifest schema: which curves and fit overlays each figure shows.
 *
 * The manifest is produced alongside the simulation outputs; this renderer
 * is a read-only consumer and computes nothing beyond plotting transforms.
 */

import { readFileSync } from "node:fs";

export type FigureId = "2" | "3" | "E1" | "E2";

export interface CurveRef {
  csv: string; // path relative to the manifest file
  label: string;
  color?: string;
  marker?: "circle" | "square" | "triangle" | "none";
  /** Plot 1 - mean instead of mean (deficit curves stored as deficits need nothing;
   * this is for correlators plotted as deficits). */
  transform?: "identity" | "one_minus" | "normalized";
}

export interface FitRef {
  label: string;
  model: "early_growth" | "exponential" | "gaussian" | "quadratic_rate_law";
  rate_lambda: number;
  prefactor_epsilon: number;
  plateau: number;
  window: [number, number];
  /** Same plotting transform applied to the model curve. */
  transform?: "identity" | "one_minus";
}

export interface PanelSpec {
  title?: string;
  x_label: string;
  y_label: string;
  x_scale: "linear" | "log";
  y_scale: "linear" | "log";
  curves: CurveRef[];
  fits: FitRef[];
}

export interface FigureSpec extends PanelSpec {
  inset?: PanelSpec;
}

export interface FigureManifest {
  schema_version: number;
  rng_algorithm: string;
  code_version?: string;
  figures: Record<string, FigureSpec>;
}

export class ManifestError extends Error {
  constructor(
    public readonly path: string,
    detail: string,
  ) {
    super(`${path}: ${detail}`);
    this.name = "ManifestError";
  }
}

const FIGURE_IDS: FigureId[] = ["2", "3", "E1", "E2"];

function checkPanel(path: string, where: string, panel: PanelSpec): void {
  if (!Array.isArray(panel.curves)) {
    throw new ManifestError(path, `${where}: 'curves' must be an array`);
  }
  for (const scale of [panel.x_scale, panel.y_scale]) {
    if (scale !== "linear" && scale !== "log") {
      throw new ManifestError(path, `${where}: scale must be 'linear' or 'log'`);
    }
  }
  for (const c of panel.curves) {
    if (typeof c.csv !== "string" || c.csv.length === 0) {
      throw new ManifestError(path, `${where}: curve without a csv path`);
    }
  }
  for (const f of panel.fits ?? []) {
    if (!["early_growth", "exponential", "gaussian", "quadratic_rate_law"].includes(f.model)) {
      throw new ManifestError(path, `${where}: unknown fit model '${f.model}'`);
    }
    if (!Array.isArray(f.window) || f.window.length !== 2) {
      throw new ManifestError(path, `${where}: fit '${f.label}' needs a [lo, hi] window`);
    }
  }
}

export function parseManifest(path: string, text: string): FigureManifest {
  let data: FigureManifest;
  try {
    data = JSON.parse(text);
  } catch (e) {
    throw new ManifestError(path, `invalid JSON (${(e as Error).message})`);
  }
  if (typeof data.schema_version !== "number") {
    throw new ManifestError(path, "missing numeric schema_version");
  }
  if (!data.figures || typeof data.figures !== "object") {
    throw new ManifestError(path, "missing 'figures' object");
  }
  for (const id of Object.keys(data.figures)) {
    if (!FIGURE_IDS.includes(id as FigureId)) {
      throw new ManifestError(path, `unknown figure id '${id}'`);
    }
    const fig = data.figures[id];
    checkPanel(path, `figure ${id}`, fig);
    if (fig.inset) checkPanel(path, `figure ${id} inset`, fig.inset);
  }
  return data;
}

export function readManifest(path: string): FigureManifest {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new ManifestError(path, "cannot read file");
  }
  return parseManifest(path, text);
}
