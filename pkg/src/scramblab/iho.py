"""Coupled inverted harmonic oscillators, solved in closed form.

The two-mode Hamiltonian is

    H = sum_i [ p_i^2 / (2 m_i) - m_i w_i^2 x_i^2 / 2 ] + delta x_1 x_2,

where w_i are stored as real magnitudes of inverted (imaginary) frequencies.
Everything is Gaussian: states are (mean, covariance) pairs in (x..., p...)
ordering with vacuum covariance I/2 (hbar = 1), evolution is the symplectic
map of the linearized classical flow, and the scrambling observables reduce
to reduced-state purity and closed-form Gaussian overlaps.

Evolution and overlaps run in extended precision (mpmath): the observables of
interest are deficits of order delta^2 ~ 1e-10 below 1, while covariance
entries reach m_1 e^{2t} ~ 1e7 — determinant cancellation in double precision
destroys the signal entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .correlators import DecayCurve, TimeGrid
from .linalg import LinalgError

# Hyperbolic-blowup guard: covariance entries past this abort the evolution.
COV_BLOWUP_LIMIT = 1e100

# Working precision (decimal digits) for flows, determinants and overlaps.
PRECISION_DPS = 40


def _to_mp(a) -> mp.matrix:
    """Numpy array (float or mpf entries) -> mpmath matrix."""
    arr = np.atleast_2d(np.asarray(a))
    out = mp.matrix(arr.shape[0], arr.shape[1])
    for i in range(arr.shape[0]):
        for j in range(arr.shape[1]):
            out[i, j] = mp.mpf(arr[i, j])
    return out


def _col_to_mp(v) -> mp.matrix:
    return mp.matrix([mp.mpf(x) for x in np.asarray(v).ravel()])


def _from_mp(m: mp.matrix) -> np.ndarray:
    arr = np.array(m.tolist(), dtype=object)
    if arr.shape[1] == 1:
        return arr.ravel()
    return arr


def as_float(a) -> np.ndarray:
    """Extended-precision (object-dtype) array -> plain float array."""
    return np.asarray(a, dtype=object).astype(float)


def gaussian_moment(width_param: float) -> float:
    """<x^2> for the normalized density of psi(x) ~ exp(-x^2 / w)."""
    if width_param <= 0:
        raise LinalgError("width parameter must be positive")
    return width_param / 4.0


@dataclass(frozen=True)
class IhoParams:
    """Masses, inverted-frequency magnitudes and coupling of the two modes.

    The initial product state is psi_1(x_1) ~ exp(-x_1^2/m_2),
    psi_2(x_2) ~ exp(-x_2^2/m_1); c1_sq and c2_sq are its position second
    moments.
    """

    m1: float
    m2: float
    omega1: float
    omega2: float
    delta: float

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise LinalgError("masses must be positive")
        if self.omega1 < 0 or self.omega2 < 0:
            raise LinalgError("frequency magnitudes must be nonnegative")

    @property
    def c1_sq(self) -> float:
        return gaussian_moment(self.m2)

    @property
    def c2_sq(self) -> float:
        return gaussian_moment(self.m1)


@dataclass(frozen=True)
class NormalModeData:
    """Decoupling transformation x_1 = (y_1+y_2)/sqrt(2),
    x_2 = (eta y_1 - xi y_2)/sqrt(2) and the resulting mode parameters."""

    eta: float
    xi: float
    d_param: float
    m_eff: tuple[float, float]
    k_eff: tuple[float, float]  # m~ w~^2, negative for inverted modes


def normal_modes(p: IhoParams) -> NormalModeData:
    """Decouple the two coupled oscillators.

    With inverted frequencies the squared frequencies enter as -w^2, so
    D = (w1^2 - w2^2) m1 / delta. delta = 0 is rejected (D is undefined;
    the modes are already decoupled).
    """
    if p.delta == 0:
        raise LinalgError("delta = 0: modes are already decoupled, no transformation needed")
    d_param = (p.omega1**2 - p.omega2**2) * p.m1 / p.delta
    root = np.sqrt(d_param**2 + 4 * p.m1 / p.m2)
    # Compute the larger root directly and the smaller one from the product
    # eta * xi = m1/m2 to avoid cancellation when |D| is large.
    if d_param >= 0:
        eta = (root + d_param) / 2
        xi = p.m1 / p.m2 / eta
    else:
        xi = (root - d_param) / 2
        eta = p.m1 / p.m2 / xi
    s = (eta + xi) ** 2 / 2
    m_eff = (
        s * p.m1 * p.m2 / (p.m1 + xi**2 * p.m2),
        s * p.m1 * p.m2 / (p.m1 + eta**2 * p.m2),
    )
    k1 = -p.m1 * p.omega1**2  # inverted-frequency spring constants
    k2 = -p.m2 * p.omega2**2
    # Diagonal of R^T K R for R = [[1, 1], [eta, -xi]] / sqrt(2); together
    # with m_eff this reproduces the generalized eigenvalues of (K, M).
    k_eff = (
        (k1 + 2 * p.delta * eta + k2 * eta**2) / 2,
        (k1 - 2 * p.delta * xi + k2 * xi**2) / 2,
    )
    return NormalModeData(eta=eta, xi=xi, d_param=d_param, m_eff=m_eff, k_eff=k_eff)


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H = 1/2 p^T M^-1 p + 1/2 x^T K x + f . x (K may be indefinite)."""

    mass: np.ndarray
    potential: np.ndarray
    linear: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return np.atleast_2d(self.mass).shape[0]


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and symmetrized covariance in (x..., p...) ordering."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean)
        cov = np.asarray(self.cov)
        if mean.dtype != object:
            mean = mean.astype(float)
        if cov.dtype != object:
            cov = cov.astype(float)
        n2 = mean.size
        if n2 % 2 != 0 or cov.shape != (n2, n2):
            raise LinalgError("mean must have even length matching cov")
        cov_f = as_float(cov)
        if np.max(np.abs(cov_f - cov_f.T)) > 1e-12 * max(1.0, np.max(np.abs(cov_f))):
            raise LinalgError("covariance must be symmetric")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def reduced(self, mode: int) -> "GaussianState":
        n = self.n_modes
        idx = [mode, n + mode]
        return GaussianState(mean=self.mean[idx], cov=self.cov[np.ix_(idx, idx)])

    def purity(self) -> float:
        """Tr(rho^2) = 1 / (2^n sqrt(det cov)) for vacuum cov = I/2."""
        with mp.workdps(PRECISION_DPS):
            det = mp.det(_to_mp(self.cov))
            if det <= 0:
                raise LinalgError("degenerate covariance in purity")
            return float(1.0 / (2**self.n_modes * mp.sqrt(det)))


def symplectic_form(n_modes: int) -> np.ndarray:
    o = np.zeros((2 * n_modes, 2 * n_modes))
    o[:n_modes, n_modes:] = np.eye(n_modes)
    o[n_modes:, :n_modes] = -np.eye(n_modes)
    return o


def gaussian_from_width(width_param: float) -> GaussianState:
    """Single-mode pure state for psi(x) ~ exp(-x^2 / w): cov diag(w/4, 1/w)."""
    if width_param <= 0:
        raise LinalgError("width parameter must be positive")
    return GaussianState(mean=np.zeros(2), cov=np.diag([width_param / 4, 1 / width_param]))


def product_state(states: list[GaussianState]) -> GaussianState:
    n = sum(s.n_modes for s in states)
    mean = np.zeros(2 * n)
    cov = np.zeros((2 * n, 2 * n))
    off = 0
    for s in states:
        k = s.n_modes
        ix = list(range(off, off + k)) + list(range(n + off, n + off + k))
        mean[ix] = s.mean
        cov[np.ix_(ix, ix)] = s.cov
        off += k
    return GaussianState(mean=mean, cov=cov)


def _flow_generator(ham: QuadraticHamiltonian) -> np.ndarray:
    m = np.atleast_2d(np.asarray(ham.mass, dtype=float))
    k = np.atleast_2d(np.asarray(ham.potential, dtype=float))
    n = m.shape[0]
    a = np.zeros((2 * n, 2 * n))
    a[:n, n:] = np.linalg.inv(m)
    a[n:, :n] = -k
    return a


def flow_matrix(ham: QuadraticHamiltonian, t: float) -> np.ndarray:
    """Symplectic matrix of the linearized classical flow, exp(A t).

    Returned with extended-precision (mpf) entries; use ``as_float`` for a
    plain float view.
    """
    with mp.workdps(PRECISION_DPS):
        return _from_mp(mp.expm(_to_mp(_flow_generator(ham)) * mp.mpf(t)))


def evolve_gaussian(state: GaussianState, ham: QuadraticHamiltonian, t: float) -> GaussianState:
    """Evolve mean and covariance under the quadratic Hamiltonian for time t.

    mean -> S mean + drift (affine classical flow), cov -> S cov S^T.
    Raises on hyperbolic blowup past COV_BLOWUP_LIMIT.
    """
    n = state.n_modes
    if ham.n_modes != n:
        raise LinalgError("Hamiltonian and state mode counts differ")
    with mp.workdps(PRECISION_DPS):
        s = mp.expm(_to_mp(_flow_generator(ham)) * mp.mpf(t))
        cov = s * _to_mp(state.cov) * s.T
        if max(abs(float(x)) for x in cov) > COV_BLOWUP_LIMIT:
            raise LinalgError(
                f"covariance blowup at t = {t}: entries exceed {COV_BLOWUP_LIMIT:.0e}"
            )
        mean = s * _col_to_mp(state.mean)
        if ham.linear is not None:
            f = np.asarray(ham.linear, dtype=float)
            c = np.concatenate([np.zeros(n), -f])
            # Affine flow via the augmented generator [[A, c], [0, 0]].
            a = _flow_generator(ham)
            aug = np.zeros((2 * n + 1, 2 * n + 1))
            aug[: 2 * n, : 2 * n] = a
            aug[: 2 * n, 2 * n] = c
            phi = mp.expm(_to_mp(aug) * mp.mpf(t))
            mean = phi[: 2 * n, : 2 * n] * _col_to_mp(state.mean) + phi[: 2 * n, 2 * n]
        cov = (cov + cov.T) / 2
        return GaussianState(mean=_from_mp(mean), cov=_from_mp(cov))


def gaussian_overlap(s1: GaussianState, s2: GaussianState) -> float:
    """Tr(rho_1 rho_2); for pure states this is |<phi_1|phi_2>|^2."""
    with mp.workdps(PRECISION_DPS):
        v = _to_mp(s1.cov) + _to_mp(s2.cov)
        dmu = _col_to_mp(s1.mean) - _col_to_mp(s2.mean)
        det = mp.det(v)
        if det <= 0:
            raise LinalgError("degenerate covariance sum in Gaussian overlap")
        quad = (dmu.T * mp.lu_solve(v, dmu))[0]
        return float(mp.e ** (-0.5 * quad) / mp.sqrt(det))


def coupled_hamiltonian(p: IhoParams) -> QuadraticHamiltonian:
    return QuadraticHamiltonian(
        mass=np.diag([p.m1, p.m2]),
        potential=np.array(
            [
                [-p.m1 * p.omega1**2, p.delta],
                [p.delta, -p.m2 * p.omega2**2],
            ]
        ),
    )


def initial_state(p: IhoParams) -> GaussianState:
    return product_state([gaussian_from_width(p.m2), gaussian_from_width(p.m1)])


def iho_otoc(p: IhoParams, grid: TimeGrid) -> DecayCurve:
    """Haar-averaged OTOC of the coupled pair, computed as the purity of the
    second mode's reduced state under the exact Gaussian evolution."""
    ham = coupled_hamiltonian(p)
    state0 = initial_state(p)
    vals = np.empty(len(grid))
    for i, t in enumerate(grid.times):
        vals[i] = evolve_gaussian(state0, ham, t).reduced(1).purity()
    return DecayCurve(
        grid=grid, mean=vals, stderr=np.zeros_like(vals), n_realizations=1, label="iho_otoc"
    )


def _mode2_hamiltonian(p: IhoParams, shift_sign: float) -> QuadraticHamiltonian:
    c1 = np.sqrt(p.c1_sq)
    return QuadraticHamiltonian(
        mass=np.array([[p.m2]]),
        potential=np.array([[-p.m2 * p.omega2**2]]),
        linear=np.array([shift_sign * p.delta * c1]),
    )


def iho_le_exact(p: IhoParams, grid: TimeGrid) -> tuple[DecayCurve, DecayCurve]:
    """Exact echo pair (M, M_1) for the second mode.

    M_1(t) is the squared overlap of psi_2 evolved under the two
    sign-shifted Hamiltonians H_2 +/- delta c_1 x; averaging the echo over
    the four equally likely sign pairs gives M = 1/2 + M_1/2 (coinciding
    signs close the echo exactly).
    """
    h_plus = _mode2_hamiltonian(p, +1.0)
    h_minus = _mode2_hamiltonian(p, -1.0)
    psi2 = gaussian_from_width(p.m1)
    m1 = np.empty(len(grid))
    for i, t in enumerate(grid.times):
        s_p = evolve_gaussian(psi2, h_plus, t)
        s_m = evolve_gaussian(psi2, h_minus, t)
        m1[i] = gaussian_overlap(s_p, s_m)
    m = 0.5 + 0.5 * m1
    zeros = np.zeros_like(m1)
    return (
        DecayCurve(grid=grid, mean=m, stderr=zeros, n_realizations=1, label="iho_le_m"),
        DecayCurve(grid=grid, mean=m1, stderr=zeros, n_realizations=1, label="iho_le_m1"),
    )


@dataclass(frozen=True)
class BchTerms:
    """Second-order echo-operator expansion coefficients at one time.

    The echo operator is exp[-i(Sigma(t) delta + Gamma(t) delta^2 / 2 + ...)]
    with Sigma = sigma_x_coeff * x + sigma_p_coeff * p + sigma_const.
    """

    sigma_x_coeff: float
    sigma_p_coeff: float
    sigma_const: float
    gamma: float


def bch_terms(p: IhoParams, t: float) -> BchTerms:
    """Heisenberg-evolution coefficients for the mode-2 echo expansion.

    The perturbation is 2 c_1 x; with an inverted frequency the circular
    functions of the harmonic result become hyperbolic.
    """
    w = p.omega2
    m = p.m2
    if w <= 0:
        raise LinalgError("omega2 must be positive for the hyperbolic expansion")
    c1 = np.sqrt(p.c1_sq)
    return BchTerms(
        sigma_x_coeff=2 * c1 * np.sinh(w * t) / w,
        sigma_p_coeff=2 * c1 * (np.cosh(w * t) - 1) / (m * w**2),
        sigma_const=0.0,
        gamma=4 * p.c1_sq * (t / w**2 - np.sinh(w * t) / w**3) / m,
    )


def iho_le_bch(p: IhoParams, grid: TimeGrid) -> DecayCurve:
    """Second-order closed form M_1(t) = 1 - 4 delta^2 c1^2 c2^2 sinh^2(w2 t)/w2^2."""
    if p.omega2 <= 0:
        raise LinalgError("omega2 must be positive")
    w = p.omega2
    vals = 1.0 - p.delta**2 * 4 * p.c1_sq * p.c2_sq * np.sinh(w * grid.times) ** 2 / w**2
    return DecayCurve(
        grid=grid,
        mean=vals,
        stderr=np.zeros_like(vals),
        n_realizations=1,
        label="iho_le_bch",
    )
