/** Plotting transforms for fit overlays.
 *
 * These mirror the model parameterizations the simulation side uses when it
 * reports a fit; the renderer only evaluates them, it never re-fits.
 */

import type { FitRef } from "./manifest.js";

export function evaluateFit(fit: FitRef, t: number): number {
  switch (fit.model) {
    case "early_growth":
      return 1.0 - fit.prefactor_epsilon * Math.exp(fit.rate_lambda * t);
    case "exponential":
      return fit.plateau + fit.prefactor_epsilon * Math.exp(-fit.rate_lambda * t);
    case "gaussian":
      return fit.plateau + fit.prefactor_epsilon * Math.exp(-((fit.rate_lambda * t) ** 2));
    case "quadratic_rate_law":
      return fit.rate_lambda * t * t;
  }
}

/** Sample the fit over its reported window. */
export function sampleFit(fit: FitRef, points = 120): { t: number[]; y: number[] } {
  const [lo, hi] = fit.window;
  const t: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < points; i++) {
    const x = lo + ((hi - lo) * i) / (points - 1);
    let v = evaluateFit(fit, x);
    if (fit.transform === "one_minus") v = 1.0 - v;
    t.push(x);
    y.push(v);
  }
  return { t, y };
}
