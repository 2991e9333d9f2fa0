"""Dense complex-matrix primitives.

Everything downstream (correlators, models, ensembles) runs on plain
``numpy.ndarray`` matrices; the helpers here enforce the contracts the rest
of the package relies on: Hermiticity checking/symmetrization, spectral
factorization, complex-time propagators, tensor products, partial traces,
Hilbert-Schmidt geometry and thermal weights.

Time evolution is always done through one eigendecomposition per
Hamiltonian: every experiment evaluates many times t for a single H, so a
single O(d^3) factorization amortizes over the whole time grid and supports
complex time natively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_ATOL = 1e-10

# Largest exponent e^x representable comfortably in double precision.
_EXP_OVERFLOW = 700.0

# Dense storage only; guards kron and model builders.
MAX_DENSE_DIM = 2**12


class LinalgError(ValueError):
    """Raised when a matrix violates a structural precondition."""


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex array and verify all entries are finite."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise LinalgError(f"expected a 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix contains non-finite entries")
    return m


def hermitian_part(a) -> np.ndarray:
    """(A + A^dagger) / 2 after validating A is Hermitian within tolerance.

    Inputs within HERMITICITY_ATOL of Hermitian are symmetrized; anything
    worse is rejected with the maximum asymmetry reported.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise LinalgError(f"matrix is not square: {m.shape}")
    asym = np.max(np.abs(m - m.conj().T))
    if asym > HERMITICITY_ATOL:
        raise LinalgError(
            f"matrix is not Hermitian: max |H - H^dag| = {asym:.3e} "
            f"exceeds {HERMITICITY_ATOL:.0e}"
        )
    return (m + m.conj().T) / 2


@dataclass(frozen=True)
class BipartitePartition:
    """Dimensions of the two tensor factors of a bipartite Hilbert space."""

    d_a: int
    d_b: int

    def __post_init__(self):
        if self.d_a < 1 or self.d_b < 1:
            raise LinalgError("subsystem dimensions must be positive")

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral factorization H = U diag(E) U^dagger, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def eig_hermitian(h) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix (ascending eigenvalues)."""
    hm = hermitian_part(h)
    vals, vecs = np.linalg.eigh(hm)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def propagator(decomp: EigenDecomposition, z: complex) -> np.ndarray:
    """U diag(e^{-i E z}) U^dagger for complex time z.

    Real z gives the unitary e^{-iHt}; an imaginary part mixes in thermal
    damping/growth, so the exponents are checked against double-precision
    overflow before exponentiating.
    """
    z = complex(z)
    exponents = decomp.eigenvalues * z.imag  # real part of -i E z
    worst = float(np.max(np.abs(exponents))) if decomp.dim else 0.0
    if worst > _EXP_OVERFLOW:
        raise LinalgError(
            f"propagator overflow: |E * Im(z)| reaches {worst:.3e} > {_EXP_OVERFLOW}"
        )
    phases = np.exp(-1j * decomp.eigenvalues * z)
    u = decomp.eigenvectors
    return (u * phases) @ u.conj().T


def kron(a, b) -> np.ndarray:
    """Kronecker product with a dense-size guard."""
    am, bm = as_matrix(a), as_matrix(b)
    if am.shape[0] * bm.shape[0] > MAX_DENSE_DIM or am.shape[1] * bm.shape[1] > MAX_DENSE_DIM:
        raise LinalgError(
            f"kron product dimension {am.shape[0] * bm.shape[0]} exceeds "
            f"dense limit {MAX_DENSE_DIM}"
        )
    return np.kron(am, bm)


def partial_trace(m, part: BipartitePartition, over: str) -> np.ndarray:
    """Partial trace of a (d_a*d_b)-dimensional operator over factor A or B."""
    mm = as_matrix(m)
    d = part.dim
    if mm.shape != (d, d):
        raise LinalgError(f"operator shape {mm.shape} does not match partition dim {d}")
    t = mm.reshape(part.d_a, part.d_b, part.d_a, part.d_b)
    if over == "A":
        return np.trace(t, axis1=0, axis2=2)
    if over == "B":
        return np.trace(t, axis1=1, axis2=3)
    raise LinalgError(f"over must be 'A' or 'B', got {over!r}")


def thermal_weight(decomp: EigenDecomposition, beta: float, power: float = 1.0) -> np.ndarray:
    """(e^{-beta H} / Z_beta)^power, computed stably in the eigenbasis.

    Eigenvalues are shifted by the ground-state energy before exponentiating,
    so only the spectral span matters for overflow/underflow.
    """
    if beta < 0:
        raise LinalgError("beta must be nonnegative")
    if power <= 0:
        raise LinalgError("power must be positive")
    e = decomp.eigenvalues - decomp.eigenvalues.min()
    log_w = -beta * e
    log_z = np.log(np.sum(np.exp(log_w)))
    scaled = power * (log_w - log_z)
    if np.all(scaled < -_EXP_OVERFLOW):
        raise LinalgError("thermal weights underflow to zero for this beta/power")
    w = np.exp(scaled)
    u = decomp.eigenvectors
    return (u * w) @ u.conj().T


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(A^dagger B)."""
    am, bm = as_matrix(a), as_matrix(b)
    if am.shape != bm.shape:
        raise LinalgError(f"shape mismatch {am.shape} vs {bm.shape}")
    return complex(np.sum(am.conj() * bm))


def hs_norm(a) -> float:
    return float(np.sqrt(hs_inner(a, a).real))


# Pauli basis on the 2-dimensional factor; identity included so the four
# operators are Hermitian and orthonormal in the d_A-weighted sense
# Tr(V^i V^j) = 2 delta_ij.
PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
