"""Decay-model fitting and classification.

Log-linear least squares throughout: deterministic and initialization-free.
Early growth fits log(1 - F) against t; exponential decay fits
log(F - plateau) against t; Gaussian decay fits against t^2. Weighted by
1/stderr^2 when the curve carries statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlators import DecayCurve

# Auto-window defaults; the fit window actually used is always reported.
EARLY_GROWTH_WINDOW = (1e-5, 0.1)  # in 1 - F
DECAY_WINDOW = (0.2, 0.8)  # in plateau-subtracted normalized amplitude
PLATEAU_TAIL_FRACTION = 0.1
MIN_POINTS = 5


class FitError(ValueError):
    """Raised when a curve cannot support the requested fit."""


@dataclass(frozen=True)
class DecayFit:
    model: str  # early_growth | exponential | gaussian | quadratic_rate_law
    rate_lambda: float
    prefactor_epsilon: float
    plateau: float
    window: tuple[float, float]
    r_squared: float
    residual_sum: float
    ambiguous: bool = False

    @property
    def scrambling_time(self) -> float:
        """(1/lambda) ln(1/epsilon) for early-growth fits."""
        return np.log(1.0 / self.prefactor_epsilon) / self.rate_lambda

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        """Model curve at the given times (inverse of the fitting transform)."""
        t = np.asarray(times, dtype=float)
        if self.model == "early_growth":
            return 1.0 - self.prefactor_epsilon * np.exp(self.rate_lambda * t)
        if self.model == "exponential":
            return self.plateau + self.prefactor_epsilon * np.exp(-self.rate_lambda * t)
        if self.model == "gaussian":
            return self.plateau + self.prefactor_epsilon * np.exp(-((self.rate_lambda * t) ** 2))
        if self.model == "quadratic_rate_law":
            return self.rate_lambda * t**2
        raise FitError(f"unknown model {self.model!r}")


def _weighted_linear_fit(x, y, w):
    """Weighted least squares y = a + b x; returns (a, b, r^2, rss)."""
    sw = np.sum(w)
    mx, my = np.sum(w * x) / sw, np.sum(w * y) / sw
    cov = np.sum(w * (x - mx) * (y - my))
    var = np.sum(w * (x - mx) ** 2)
    if var == 0:
        raise FitError("degenerate fit window: no spread in the abscissa")
    b = cov / var
    a = my - b * mx
    resid = y - (a + b * x)
    rss = float(np.sum(w * resid**2))
    tss = float(np.sum(w * (y - my) ** 2))
    r2 = 1.0 if tss == 0 else max(0.0, 1.0 - rss / tss)
    return a, b, r2, rss


def _weights(curve: DecayCurve, mask: np.ndarray) -> np.ndarray:
    se = curve.stderr[mask]
    if np.all(se > 0):
        return 1.0 / se**2
    return np.ones(int(np.sum(mask)))


def fit_early_growth(curve: DecayCurve, window: tuple[float, float] | None = None) -> DecayFit:
    """Fit 1 - F = epsilon e^{lambda t} on the early-growth window."""
    t = curve.grid.times
    growth = 1.0 - curve.mean
    lo, hi = window if window is not None else EARLY_GROWTH_WINDOW
    mask = (growth >= lo) & (growth <= hi)
    if int(np.sum(mask)) < MIN_POINTS:
        raise FitError(
            f"only {int(np.sum(mask))} points with 1 - F in [{lo:g}, {hi:g}]; need {MIN_POINTS}"
        )
    if np.any(growth[mask] <= 0):
        raise FitError("nonpositive 1 - F values inside the fit window")
    w = _weights(curve, mask)
    a, b, r2, rss = _weighted_linear_fit(t[mask], np.log(growth[mask]), w)
    if b <= 0:
        raise FitError("no growth: fitted rate is nonpositive")
    t_win = (float(t[mask][0]), float(t[mask][-1]))
    return DecayFit(
        model="early_growth",
        rate_lambda=float(b),
        prefactor_epsilon=float(np.exp(a)),
        plateau=0.0,
        window=t_win,
        r_squared=r2,
        residual_sum=rss,
    )


def _estimate_plateau(curve: DecayCurve) -> float:
    n_tail = max(1, int(len(curve.grid) * PLATEAU_TAIL_FRACTION))
    return float(np.mean(curve.mean[-n_tail:]))


def _decay_fit(
    curve: DecayCurve,
    window: tuple[float, float] | None,
    gaussian: bool,
    subtract_plateau: bool = True,
) -> DecayFit:
    t = curve.grid.times
    plateau = _estimate_plateau(curve) if subtract_plateau else 0.0
    y = curve.mean - plateau
    amp0 = curve.mean[0] - plateau
    if amp0 <= 0:
        raise FitError("curve does not decay: nonpositive initial amplitude")
    frac = y / amp0
    lo, hi = window if window is not None else DECAY_WINDOW
    mask = (frac >= lo) & (frac <= hi)
    if int(np.sum(mask)) < MIN_POINTS:
        raise FitError(
            f"only {int(np.sum(mask))} points in the decay window [{lo:g}, {hi:g}]"
        )
    if np.any(y[mask] <= 0):
        raise FitError("nonpositive values after plateau subtraction inside the window")
    x = t[mask] ** 2 if gaussian else t[mask]
    w = _weights(curve, mask)
    a, b, r2, _ = _weighted_linear_fit(x, np.log(y[mask]), w)
    if b >= 0:
        raise FitError("no decay: fitted slope is nonnegative")
    rate = float(np.sqrt(-b)) if gaussian else float(-b)
    prefac = float(np.exp(a))
    t_win = (float(t[mask][0]), float(t[mask][-1]))
    fit = DecayFit(
        model="gaussian" if gaussian else "exponential",
        rate_lambda=rate,
        prefactor_epsilon=prefac,
        plateau=plateau,
        window=t_win,
        r_squared=r2,
        residual_sum=0.0,
    )
    # Residual sum in curve space over the window, comparable across models.
    resid = curve.mean[mask] - fit.evaluate(t[mask])
    return DecayFit(**{**fit.__dict__, "residual_sum": float(np.sum(resid**2))})


def fit_exponential(
    curve: DecayCurve,
    window: tuple[float, float] | None = None,
    subtract_plateau: bool = True,
) -> DecayFit:
    """Fit F - plateau = c e^{-lambda t}; plateau from the tail average."""
    return _decay_fit(curve, window, gaussian=False, subtract_plateau=subtract_plateau)


def fit_gaussian(
    curve: DecayCurve,
    window: tuple[float, float] | None = None,
    subtract_plateau: bool = True,
) -> DecayFit:
    """Fit F - plateau = c e^{-(lambda t)^2} on the same window scheme."""
    return _decay_fit(curve, window, gaussian=True, subtract_plateau=subtract_plateau)


def model_select(curve: DecayCurve, window: tuple[float, float] | None = None) -> DecayFit:
    """Run exponential and Gaussian fits, return the smaller-residual one.

    Ties within 1% relative residual are flagged as ambiguous on the
    returned fit. Requires at least 20 points below 0.9 of the normalized
    amplitude so both models see a real decay.
    """
    if int(np.sum(curve.mean < 0.9 * curve.mean[0])) < 20:
        raise FitError("need >= 20 points below 0.9 of the initial value")
    errors = []
    fits = {}
    for name, fitter in (("exponential", fit_exponential), ("gaussian", fit_gaussian)):
        try:
            fits[name] = fitter(curve, window)
        except FitError as exc:
            errors.append(f"{name}: {exc}")
    if not fits:
        raise FitError("both fits rejected -- " + "; ".join(errors))
    if len(fits) == 1:
        return next(iter(fits.values()))
    fe, fg = fits["exponential"], fits["gaussian"]
    best, other = (fe, fg) if fe.residual_sum <= fg.residual_sum else (fg, fe)
    ambiguous = other.residual_sum <= 1.01 * best.residual_sum
    return DecayFit(**{**best.__dict__, "ambiguous": ambiguous})


def fit_rate_law(points: list[tuple[float, float]]) -> DecayFit:
    """Least-squares fit lambda = c g^2 through the (g, lambda) sweep points."""
    if len(points) < 4:
        raise FitError(f"need >= 4 sweep points, got {len(points)}")
    g = np.array([p[0] for p in points], dtype=float)
    lam = np.array([p[1] for p in points], dtype=float)
    x = g**2
    c = float(np.sum(lam * x) / np.sum(x * x))
    resid = lam - c * x
    rss = float(np.sum(resid**2))
    tss = float(np.sum((lam - lam.mean()) ** 2))
    r2 = 1.0 if tss == 0 else max(0.0, 1.0 - rss / tss)
    return DecayFit(
        model="quadratic_rate_law",
        rate_lambda=c,
        prefactor_epsilon=0.0,
        plateau=0.0,
        window=(float(g.min()), float(g.max())),
        r_squared=r2,
        residual_sum=rss,
    )
