"""Scrambling observables.

Regularized OTOC with the thermal-circle scheme (one quarter-power of the
thermal state between each operator, equivalent to evaluation at complex
time t - i*beta/4), its Haar averages (exact over the small factor, Monte
Carlo over both factors), Loschmidt echoes, sign-noise-averaged and
coarse-grained echoes, and reduced-state purity.

All evolution goes through one eigendecomposition of the Hamiltonian; per
time point the work is a couple of dense matrix products.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .ensembles import RngStream, sample_haar_unitary, sample_noise_operator
from .linalg import (
    BipartitePartition,
    EigenDecomposition,
    LinalgError,
    as_matrix,
    eig_hermitian,
    hermitian_part,
    kron,
    partial_trace,
)

IMAG_RESIDUE_ATOL = 1e-8


class ImaginaryResidueError(ValueError):
    """An analytically real trace came back with a large imaginary part."""


@dataclass(frozen=True)
class TimeGrid:
    """Strictly ascending sequence of sample times, starting at 0 by default."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise LinalgError("time grid must be a nonempty 1-D sequence")
        if np.any(np.diff(t) <= 0):
            raise LinalgError("time grid must be strictly ascending")
        if np.any(t < 0):
            raise LinalgError("time grid entries must be nonnegative")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def linear(cls, t_max: float, n_points: int) -> "TimeGrid":
        return cls(np.linspace(0.0, t_max, n_points))

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class DecayCurve:
    """Sampled correlator curve with per-point statistics."""

    grid: TimeGrid
    mean: np.ndarray
    stderr: np.ndarray
    n_realizations: int
    label: str = ""

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        stderr = np.asarray(self.stderr, dtype=float)
        if mean.shape != self.grid.times.shape or stderr.shape != mean.shape:
            raise LinalgError("curve arrays must match the grid length")
        if np.any(stderr < 0):
            raise LinalgError("stderr entries must be nonnegative")
        mean.setflags(write=False)
        stderr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stderr", stderr)

    def normalized(self) -> "DecayCurve":
        """Divide by the initial value (both mean and stderr)."""
        f0 = self.mean[0]
        if f0 == 0:
            raise LinalgError("cannot normalize a curve with zero initial value")
        return DecayCurve(
            grid=self.grid,
            mean=self.mean / f0,
            stderr=self.stderr / abs(f0),
            n_realizations=self.n_realizations,
            label=self.label,
        )

    def relabel(self, label: str) -> "DecayCurve":
        return DecayCurve(self.grid, self.mean, self.stderr, self.n_realizations, label)


def average_curves(curves: list[DecayCurve], label: str = "") -> DecayCurve:
    """Pointwise mean and standard error over realization curves.

    Accumulation is in list order, so parallel runs that collect results by
    realization index reproduce the serial result bit-for-bit.
    """
    if not curves:
        raise LinalgError("need at least one curve")
    grid = curves[0].grid
    stack = np.stack([c.mean for c in curves])
    mean = stack.mean(axis=0)
    n = len(curves)
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return DecayCurve(grid=grid, mean=mean, stderr=stderr, n_realizations=n, label=label)


def _take_real(values: np.ndarray, scale: float) -> np.ndarray:
    """Drop an imaginary residue below tolerance; fail loudly above it."""
    worst = float(np.max(np.abs(values.imag))) if values.size else 0.0
    tol = IMAG_RESIDUE_ATOL * max(1.0, abs(scale))
    if worst > tol:
        raise ImaginaryResidueError(
            f"imaginary residue {worst:.3e} exceeds tolerance {tol:.0e}"
        )
    return values.real.copy()


def _embed(op, part: BipartitePartition | None, factor: str) -> np.ndarray:
    """Lift a subsystem operator to the full space when a partition is given."""
    m = as_matrix(op)
    if part is None:
        return m
    if factor == "A" and m.shape == (part.d_a, part.d_a):
        return kron(m, np.eye(part.d_b))
    if factor == "B" and m.shape == (part.d_b, part.d_b):
        return kron(np.eye(part.d_a), m)
    if m.shape == (part.dim, part.dim):
        return m
    raise LinalgError(f"operator shape {m.shape} fits neither factor {factor} nor full space")


def _thermal_quarter_weights(decomp: EigenDecomposition, beta: float) -> np.ndarray:
    """Diagonal of y = (e^{-beta H}/Z)^{1/4} in the eigenbasis."""
    e = decomp.eigenvalues - decomp.eigenvalues.min()
    w = np.exp(-beta * e)
    return (w / w.sum()) ** 0.25


def _otoc_values(
    hdec: EigenDecomposition,
    a,
    b,
    beta: float,
    grid: TimeGrid,
    part: BipartitePartition | None,
    regularized: bool,
) -> np.ndarray:
    """Raw complex OTOC trace values (real only for Hermitian A, B)."""
    if beta < 0:
        raise LinalgError("beta must be nonnegative")
    u = hdec.eigenvectors
    a_t = u.conj().T @ _embed(a, part, "A") @ u
    b_t = u.conj().T @ _embed(b, part, "B") @ u
    y = _thermal_quarter_weights(hdec, beta)
    if regularized:
        b_left = (y[:, None] * b_t.conj().T) * y[None, :]  # y B^dag y
        b_right = (y[:, None] * b_t) * y[None, :]  # y B y (outer y's close the trace)
    else:
        w = y**4  # plain thermal weights e^{-beta E}/Z
    e = hdec.eigenvalues
    values = np.empty(len(grid), dtype=complex)
    for idx, t in enumerate(grid.times):
        phases = np.exp(1j * e * t)
        at = (phases[:, None] * a_t) * phases.conj()[None, :]
        if regularized:
            left = at.conj().T @ b_left
            right = at @ b_right
            values[idx] = np.sum(left.T * right)
        else:
            m1 = at.conj().T @ b_t.conj().T
            m2 = at @ b_t
            values[idx] = np.sum(w * np.sum(m1 * m2.T, axis=1))
    return values


def otoc_regularized(
    hdec: EigenDecomposition,
    a,
    b,
    beta: float,
    grid: TimeGrid,
    normalize: bool = True,
    part: BipartitePartition | None = None,
    regularized: bool = True,
) -> DecayCurve:
    """Four-point correlator Tr[y A^dag(t) y B^dag y A(t) y B].

    By default the thermal state is split into four quarter powers y around
    the trace (thermal-circle regularization). With ``regularized=False``
    the plain thermal average Tr[rho_beta A^dag(t) B^dag A(t) B] is returned
    instead. A and B may be given on their subsystem factors together with
    ``part``; they are embedded as A (x) I and I (x) B. The trace is real
    for Hermitian A and B; a small imaginary residue is discarded and a
    large one raises.
    """
    values = _otoc_values(hdec, a, b, beta, grid, part, regularized)
    real = _take_real(values, scale=abs(values[0]))
    curve = DecayCurve(
        grid=grid,
        mean=real,
        stderr=np.zeros_like(real),
        n_realizations=1,
        label="otoc",
    )
    if normalize:
        if curve.mean[0] == 0:
            raise LinalgError("cannot normalize: OTOC vanishes at t = 0")
        curve = curve.normalized()
    return curve


def _haar_a_bilinear(
    hdec: EigenDecomposition,
    b_dag_slot: np.ndarray,
    b_slot: np.ndarray,
    part: BipartitePartition,
    beta: float,
    z_values: np.ndarray,
) -> np.ndarray:
    """(1/(Z d_A)) Tr_B[ Tr_A(Q Bdag P) Tr_A(Q B P) ] at complex times z,
    with Q = e^{-iH(z - i beta/4)} and P = e^{iH(z + i beta/4)}."""
    if beta < 0:
        raise LinalgError("beta must be nonnegative")
    u = hdec.eigenvectors
    e = hdec.eigenvalues - hdec.eigenvalues.min()
    log_z = np.log(np.sum(np.exp(-beta * e)))
    bd_t = u.conj().T @ _embed(b_dag_slot, part, "B") @ u
    b_t = u.conj().T @ _embed(b_slot, part, "B") @ u
    out = np.empty(len(z_values), dtype=complex)
    for idx, z in enumerate(np.asarray(z_values, dtype=complex)):
        # Z^{-1/2} absorbed into each of Q and P via the shifted spectrum.
        q = np.exp(-1j * e * (z - 0.25j * beta) - 0.25 * log_z)
        p = np.exp(1j * e * (z + 0.25j * beta) - 0.25 * log_z)
        g1 = partial_trace(u @ ((q[:, None] * bd_t) * p[None, :]) @ u.conj().T, part, "A")
        g2 = partial_trace(u @ ((q[:, None] * b_t) * p[None, :]) @ u.conj().T, part, "A")
        out[idx] = np.sum(g1.T * g2) / part.d_a
    return out


def otoc_haar_exact_a_complex(
    hdec: EigenDecomposition,
    b,
    part: BipartitePartition,
    beta: float,
    z_values: np.ndarray,
) -> np.ndarray:
    """Haar average of the regularized OTOC over the small factor, at
    complex times (unnormalized).

    This is the analytic continuation of the thermal-circle scheme; for
    each fixed Im(z) = tau the magnitude is maximal at Re(z) = 0, which is
    the boundedness property behind the decay-rate bound. Returns complex
    values; real-axis callers take the real part.
    """
    bm = as_matrix(b)
    return _haar_a_bilinear(hdec, bm.conj().T, bm, part, beta, z_values)


def otoc_haar_exact_a(
    hdec: EigenDecomposition,
    b,
    part: BipartitePartition,
    beta: float,
    grid: TimeGrid,
    normalize: bool = True,
) -> DecayCurve:
    """Exact Haar average of the regularized OTOC over the small factor."""
    values = otoc_haar_exact_a_complex(hdec, b, part, beta, grid.times.astype(complex))
    real = _take_real(values, scale=abs(values[0]))
    curve = DecayCurve(
        grid=grid,
        mean=real,
        stderr=np.zeros_like(real),
        n_realizations=1,
        label="otoc_haar_A",
    )
    if normalize:
        curve = curve.normalized()
    return curve


def otoc_haar_exact(
    hdec: EigenDecomposition,
    part: BipartitePartition,
    beta: float,
    grid: TimeGrid,
    normalize: bool = True,
) -> DecayCurve:
    """Exact Haar average of the regularized OTOC over both factors.

    The B average is a first Haar moment, so it reduces to a sum over
    matrix units: E_B[f(B^dag, B)] = (1/d_B) sum_ab f(E_ab, E_ba). Each
    term reuses the exact A-average formula.
    """
    values = np.zeros(len(grid), dtype=complex)
    zs = grid.times.astype(complex)
    for a in range(part.d_b):
        for b in range(part.d_b):
            e_ab = np.zeros((part.d_b, part.d_b), dtype=complex)
            e_ab[a, b] = 1.0
            values += _haar_a_bilinear(hdec, e_ab, e_ab.conj().T, part, beta, zs)
    values /= part.d_b
    real = _take_real(values, scale=abs(values[0]))
    curve = DecayCurve(
        grid=grid,
        mean=real,
        stderr=np.zeros_like(real),
        n_realizations=1,
        label="otoc_haar_exact",
    )
    if normalize:
        curve = curve.normalized()
    return curve


def otoc_haar_mc(
    hdec: EigenDecomposition,
    part: BipartitePartition,
    beta: float,
    grid: TimeGrid,
    n_samples: int,
    rng: RngStream,
    state_vector: np.ndarray | None = None,
    normalize: bool = True,
    b_fixed: np.ndarray | None = None,
) -> DecayCurve:
    """Monte Carlo Haar average of the OTOC over unitaries A and B.

    With ``state_vector`` set, each thermal quarter power is replaced by the
    pure-state projector (pure-state regularization); the result is scaled
    by d_A*d_B so its expectation equals the reduced purity Tr(rho_B(t)^2)
    of the evolved state. With ``b_fixed`` only A is resampled (the A-only
    average that the exact formula computes in closed form).
    """
    if n_samples < 1:
        raise LinalgError("n_samples must be >= 1")
    if state_vector is not None:
        return _otoc_haar_mc_pure(hdec, part, grid, n_samples, rng, state_vector, normalize)
    # Per-sample traces are complex for unitary draws; their Haar mean is
    # real, so the real part is an unbiased estimator of the average.
    samples = np.empty((n_samples, len(grid)))
    for k in range(n_samples):
        a = sample_haar_unitary(part.d_a, rng)
        b = b_fixed if b_fixed is not None else sample_haar_unitary(part.d_b, rng)
        samples[k] = _otoc_values(hdec, a, b, beta, grid, part, regularized=True).real
    return _reduce_mc(samples, grid, normalize, label="otoc_haar_mc")


def _otoc_haar_mc_pure(hdec, part, grid, n_samples, rng, state_vector, normalize):
    psi = np.asarray(state_vector, dtype=complex).ravel()
    if psi.size != part.dim:
        raise LinalgError("state vector length must equal the partition dimension")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise LinalgError(f"state vector is not normalized: |psi| = {nrm}")
    u = hdec.eigenvectors
    e = hdec.eigenvalues
    psi_e = u.conj().T @ psi
    # Per-sample value factorizes as |<psi(t)|A (x) I|psi(t)>|^2 |<psi|I (x) B|psi>|^2
    # (rank-one regularization), so precompute the reduced density matrices.
    rho_a_t = []
    for t in grid.times:
        psi_t = (u @ (np.exp(-1j * e * t) * psi_e)).reshape(part.d_a, part.d_b)
        rho_a_t.append(np.einsum("ab,cb->ac", psi_t, psi_t.conj()))
    m0 = psi.reshape(part.d_a, part.d_b)
    rho_b0 = np.einsum("ab,ac->bc", m0, m0.conj())
    samples = np.empty((n_samples, len(grid)))
    scale = part.d_a * part.d_b
    for k in range(n_samples):
        a = sample_haar_unitary(part.d_a, rng)
        b = sample_haar_unitary(part.d_b, rng)
        b_part = abs(np.sum(b.T * rho_b0)) ** 2
        for idx in range(len(grid)):
            a_part = abs(np.sum(a.T * rho_a_t[idx])) ** 2
            samples[k, idx] = scale * a_part * b_part
    return _reduce_mc(samples, grid, normalize=False, label="otoc_haar_mc_pure")


def _reduce_mc(samples: np.ndarray, grid: TimeGrid, normalize: bool, label: str) -> DecayCurve:
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    curve = DecayCurve(grid=grid, mean=mean, stderr=stderr, n_realizations=n, label=label)
    if normalize:
        curve = curve.normalized()
    return curve


def loschmidt_echo(
    h,
    v1,
    v2,
    beta: float,
    grid: TimeGrid,
) -> DecayCurve:
    """|<e^{i(H+V1)t} e^{-i(H+V2)t}>_beta|^2 with the normalized thermal
    average Tr(rho_beta . ) taken in the unperturbed Hamiltonian's state."""
    hm = hermitian_part(h)
    v1m, v2m = hermitian_part(v1), hermitian_part(v2)
    if hm.shape != v1m.shape or hm.shape != v2m.shape:
        raise LinalgError("H, V1, V2 must share one dimension")
    d1 = eig_hermitian(hm + v1m)
    d2 = eig_hermitian(hm + v2m)
    hdec = eig_hermitian(hm)
    e = hdec.eigenvalues - hdec.eigenvalues.min()
    w = np.exp(-beta * e)
    rho = (hdec.eigenvectors * (w / w.sum())) @ hdec.eigenvectors.conj().T
    overlap = d1.eigenvectors.conj().T @ d2.eigenvectors
    back = d2.eigenvectors.conj().T @ rho @ d1.eigenvectors
    g = overlap * back.T  # G_mn = (U1^dag U2)_mn (U2^dag rho U1)_nm
    e1, e2 = d1.eigenvalues, d2.eigenvalues
    amp = np.einsum(
        "tm,mn,nt->t",
        np.exp(1j * np.outer(grid.times, e1)),
        g,
        np.exp(-1j * np.outer(e2, grid.times)),
    )
    m = np.abs(amp) ** 2
    m = np.clip(m, 0.0, None)
    return DecayCurve(
        grid=grid,
        mean=m,
        stderr=np.zeros_like(m),
        n_realizations=1,
        label="loschmidt_echo",
    )


def _le_from_signs(h_b, couplings, delta, beta_le, grid, signs1, signs2, eig_cache):
    key1, key2 = tuple(signs1), tuple(signs2)
    for key in (key1, key2):
        if key not in eig_cache:
            v = delta * sum(s * c for s, c in zip(key, couplings))
            eig_cache[key] = eig_hermitian(h_b + v)
    d1, d2 = eig_cache[key1], eig_cache[key2]
    hdec = eig_cache["__h__"]
    e = hdec.eigenvalues - hdec.eigenvalues.min()
    w = np.exp(-beta_le * e)
    rho = (hdec.eigenvectors * (w / w.sum())) @ hdec.eigenvectors.conj().T
    overlap = d1.eigenvectors.conj().T @ d2.eigenvectors
    back = d2.eigenvectors.conj().T @ rho @ d1.eigenvectors
    g = overlap * back.T
    amp = np.einsum(
        "tm,mn,nt->t",
        np.exp(1j * np.outer(grid.times, d1.eigenvalues)),
        g,
        np.exp(-1j * np.outer(d2.eigenvalues, grid.times)),
    )
    return np.clip(np.abs(amp) ** 2, 0.0, None)


def _prep_le(h_b, couplings, delta, beta, use_effective_beta):
    hm = hermitian_part(h_b)
    mats = [as_matrix(c) for c in couplings]
    if not mats:
        raise LinalgError("coupling list must be nonempty")
    if any(m.shape != hm.shape for m in mats):
        raise LinalgError("couplings must match the Hamiltonian dimension")
    beta_le = beta / 2 if use_effective_beta else beta
    cache = {"__h__": eig_hermitian(hm)}
    return hm, mats, beta_le, cache


def noise_averaged_le(
    h_b,
    couplings_b,
    delta: float,
    beta: float,
    grid: TimeGrid,
    n_pairs: int,
    rng: RngStream,
    exhaustive: bool = False,
    use_effective_beta: bool = True,
) -> DecayCurve:
    """Loschmidt echo averaged over independent pairs of sign-noise draws.

    ``beta`` is the OTOC inverse temperature; the echo's thermal average is
    taken at the effective beta/2 by default. Coinciding sign vectors
    contribute 1 exactly, as they must. With ``exhaustive`` the full set of
    4^k sign pairs is enumerated instead of sampled.
    """
    hm, mats, beta_le, cache = _prep_le(h_b, couplings_b, delta, beta, use_effective_beta)
    k = len(mats)
    rows = []
    if exhaustive:
        if 4**k > 4096:
            raise LinalgError(f"exhaustive enumeration of 4^{k} pairs is too large")
        for s1 in itertools.product((-1, 1), repeat=k):
            for s2 in itertools.product((-1, 1), repeat=k):
                rows.append(_le_from_signs(hm, mats, delta, beta_le, grid, s1, s2, cache))
    else:
        if n_pairs < 1:
            raise LinalgError("n_pairs must be >= 1")
        gen = rng.generator
        for _ in range(n_pairs):
            s1 = tuple(int(s) for s in gen.integers(0, 2, size=k) * 2 - 1)
            s2 = tuple(int(s) for s in gen.integers(0, 2, size=k) * 2 - 1)
            rows.append(_le_from_signs(hm, mats, delta, beta_le, grid, s1, s2, cache))
    samples = np.stack(rows)
    return _reduce_mc(samples, grid, normalize=False, label="noise_averaged_le")


def coarse_grained_le(
    h_b,
    couplings_b,
    delta: float,
    beta: float,
    grid: TimeGrid,
    rng: RngStream,
    use_effective_beta: bool = True,
) -> DecayCurve:
    """Single-pair surrogate for the noise-averaged echo (many-channel limit)."""
    hm, mats, beta_le, cache = _prep_le(h_b, couplings_b, delta, beta, use_effective_beta)
    if delta == 0:  # no perturbation: the echo closes exactly
        ones = np.ones(len(grid))
        return DecayCurve(
            grid=grid,
            mean=ones,
            stderr=np.zeros_like(ones),
            n_realizations=1,
            label="coarse_grained_le",
        )
    n1 = sample_noise_operator(mats, delta, rng)
    n2 = sample_noise_operator(mats, delta, rng)
    vals = _le_from_signs(
        hm, mats, delta, beta_le, grid, tuple(n1.signs), tuple(n2.signs), cache
    )
    return DecayCurve(
        grid=grid,
        mean=vals,
        stderr=np.zeros_like(vals),
        n_realizations=1,
        label="coarse_grained_le",
    )


def purity_reduced(state_vector, part: BipartitePartition) -> float:
    """Tr(rho_B^2) for a pure bipartite state."""
    psi = np.asarray(state_vector, dtype=complex).ravel()
    if psi.size != part.dim:
        raise LinalgError("state vector length must equal the partition dimension")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise LinalgError(f"state vector is not normalized: |psi| = {nrm}")
    m = psi.reshape(part.d_a, part.d_b)
    rho_b = np.einsum("ab,ac->bc", m, m.conj())
    return float(np.sum(np.abs(rho_b) ** 2))
