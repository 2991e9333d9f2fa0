"""Random ensembles: GUE matrices, Haar unitaries, exact subsystem Haar
averaging and the +/-1 sign-noise perturbation operators.

All samplers draw from an explicit :class:`RngStream`, so disorder averages
are bit-reproducible and distinct streams can run in parallel without shared
state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    BipartitePartition,
    LinalgError,
    as_matrix,
    hermitian_part,
    hs_norm,
    kron,
    partial_trace,
)

#: Algorithm identifier recorded in experiment manifests.
RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence(seed, spawn_key=stream_path)"


@dataclass
class RngStream:
    """Seeded random stream addressed by a path of indices.

    Identical (seed, stream_index) pairs reproduce identical draw sequences
    bit-exactly. ``substream(i)`` appends ``i`` to the stream's path, so
    substreams of distinct parents never collide. A stream holds mutable
    generator state and must not be shared between threads; spawn one
    stream per realization instead.
    """

    seed: int
    stream_index: "int | tuple[int, ...]" = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        path = self.stream_index
        if isinstance(path, int):
            path = (path,)
        else:
            path = tuple(int(i) for i in path)
        object.__setattr__(self, "stream_index", path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def substream(self, index: int) -> "RngStream":
        """Independent stream derived by appending ``index`` to the path."""
        return RngStream(seed=self.seed, stream_index=self.stream_index + (index,))


@dataclass(frozen=True)
class NoiseRealization:
    """One draw of the sign-noise perturbation delta * sum_k s_k V_B^k."""

    signs: np.ndarray
    delta: float
    operator: np.ndarray


def _ginibre(d: int, rng: RngStream) -> np.ndarray:
    g = rng.generator
    return g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))


def sample_gue(d: int, rng: RngStream) -> np.ndarray:
    """GUE draw: (G + G^dagger)/sqrt(2) with G complex standard Ginibre.

    Off-diagonal entries have independent N(0,1) real and imaginary parts
    (E|H_ij|^2 = 2); diagonal entries are real with variance 2. The
    empirical spectral density approaches a semicircle of radius
    2*sqrt(2d).
    """
    if d < 1:
        raise LinalgError("dimension must be >= 1")
    g = _ginibre(d, rng)
    return (g + g.conj().T) / np.sqrt(2)


def sample_haar_unitary(d: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase fix."""
    if d < 1:
        raise LinalgError("dimension must be >= 1")
    q, r = np.linalg.qr(_ginibre(d, rng))
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return q


def haar_average_conjugation(o, part: BipartitePartition, over: str = "A") -> np.ndarray:
    """Exact Haar average of U^dagger O U over unitaries on one factor.

    For averaging over factor A this is (1/d_A) I_A (x) Tr_A(O); the
    symmetric formula holds for factor B.
    """
    om = as_matrix(o)
    if om.shape != (part.dim, part.dim):
        raise LinalgError(f"operator shape {om.shape} does not match partition")
    if over == "A":
        return kron(np.eye(part.d_a), partial_trace(om, part, "A")) / part.d_a
    if over == "B":
        return kron(partial_trace(om, part, "B"), np.eye(part.d_b)) / part.d_b
    raise LinalgError(f"over must be 'A' or 'B', got {over!r}")


def sample_noise_operator(
    couplings: list[np.ndarray], delta: float, rng: RngStream
) -> NoiseRealization:
    """Draw a sign vector s in {-1,+1}^k and build delta * sum_k s_k V^k."""
    if not couplings:
        raise LinalgError("coupling list must be nonempty")
    if delta <= 0:
        raise LinalgError("delta must be positive")
    mats = [as_matrix(v) for v in couplings]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise LinalgError("coupling operators must share one dimension")
    signs = rng.generator.integers(0, 2, size=len(mats)) * 2 - 1
    op = delta * sum(s * m for s, m in zip(signs, mats))
    signs.setflags(write=False)
    return NoiseRealization(signs=signs, delta=delta, operator=op)


def sample_random_hermitian(d: int, rng: RngStream) -> np.ndarray:
    """GUE-distributed Hermitian operator rescaled to Tr(A^dagger A) = d."""
    h = sample_gue(d, rng)
    return hermitian_part(h * (np.sqrt(d) / hs_norm(h)))
