"""Model builders: the bipartite random-matrix Hamiltonian

    H = I_A (x) H_B + H_A (x) I_B + delta * sum_k V_A^k (x) V_B^k

with Pauli couplings on the single-qubit factor and GUE couplings on the
large factor, and the complex-fermion SYK Hamiltonian with an optional
coupling deformation around two probe sites.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .ensembles import RngStream, sample_gue
from .linalg import (
    PAULIS,
    BipartitePartition,
    LinalgError,
    hermitian_part,
    hs_norm,
    kron,
)

MAX_FERMIONS = 14


@dataclass(frozen=True)
class BipartiteModel:
    part: BipartitePartition
    h_a: np.ndarray
    h_b: np.ndarray
    couplings_a: tuple[np.ndarray, ...]
    couplings_b: tuple[np.ndarray, ...]
    delta: float
    h_total: np.ndarray

    def interaction(self) -> np.ndarray:
        """delta * sum_k V_A^k (x) V_B^k reassembled from the stored parts."""
        acc = np.zeros((self.part.dim, self.part.dim), dtype=complex)
        for va, vb in zip(self.couplings_a, self.couplings_b):
            acc += kron(va, vb)
        return self.delta * acc


def build_bipartite(d_b: int, delta: float, rng: RngStream) -> BipartiteModel:
    """Qubit (x) d_b random-matrix model.

    H_A, H_B and the V_B^k are independent GUE draws; each V_B^k is rescaled
    so its Hilbert-Schmidt norm equals ||H_B||, making delta the relative
    coupling strength. The V_A^k are the four Pauli operators (including
    identity), which satisfy Tr(V^i V^j) = d_A delta_ij exactly.
    """
    if d_b < 2:
        raise LinalgError("d_b must be >= 2")
    if delta < 0:
        raise LinalgError("delta must be nonnegative")
    h_a = sample_gue(2, rng)
    h_b = sample_gue(d_b, rng)
    norm_b = hs_norm(h_b)
    couplings_b = tuple(
        (lambda v: v * (norm_b / hs_norm(v)))(sample_gue(d_b, rng)) for _ in range(4)
    )
    part = BipartitePartition(d_a=2, d_b=d_b)
    h_total = kron(np.eye(2), h_b) + kron(h_a, np.eye(d_b))
    for va, vb in zip(PAULIS, couplings_b):
        h_total += delta * kron(va, vb)
    return BipartiteModel(
        part=part,
        h_a=h_a,
        h_b=h_b,
        couplings_a=PAULIS,
        couplings_b=couplings_b,
        delta=delta,
        h_total=hermitian_part(h_total),
    )


@lru_cache(maxsize=64)
def jordan_wigner(n: int, site: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense annihilation/creation pair (c_i, c_i^dagger) for n fermion modes.

    Jordan-Wigner string convention: c_i = Z^(x i) (x) sigma^- (x) I^(x n-i-1),
    which satisfies {c_i, c_j^dagger} = delta_ij and {c_i, c_j} = 0.
    """
    if n < 1 or n > MAX_FERMIONS:
        raise LinalgError(f"n must be in [1, {MAX_FERMIONS}] for dense storage")
    if site < 0 or site >= n:
        raise LinalgError(f"site {site} out of range for {n} modes")
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # sigma^- = |0><1|
    op = np.ones((1, 1), dtype=complex)
    for k in range(n):
        if k < site:
            op = np.kron(op, z)
        elif k == site:
            op = np.kron(op, lower)
        else:
            op = np.kron(op, np.eye(2))
    op.setflags(write=False)
    dag = op.conj().T
    dag.setflags(write=False)
    return op, dag


def number_operator(n: int) -> np.ndarray:
    acc = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        c, cdag = jordan_wigner(n, i)
        acc += cdag @ c
    return acc


@dataclass(frozen=True)
class SykModel:
    """Complex-fermion SYK Hamiltonian with quartic all-to-all couplings.

    ``pristine`` maps the canonical pair index ((i,j),(k,l)) with i<j, k<l to
    the undeformed coupling draw; the stored Hamiltonian applies the factor g
    to every coupling whose index set touches a probe site.
    """

    n_fermions: int
    pristine: dict[tuple[tuple[int, int], tuple[int, int]], complex]
    variance_scale: float
    g: float
    probe_sites: tuple[int, int]
    h_total: np.ndarray

    def coupling(self, i: int, j: int, k: int, l: int) -> complex:
        """Deformed J_{ij;kl} for arbitrary index order (antisymmetrized)."""
        if i == j or k == l:
            return 0.0 + 0.0j
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -sign
        if k > l:
            k, l, sign = l, k, -sign
        try:
            val = self.pristine[((i, j), (k, l))]
        except KeyError:
            # Hermitian partner: J_{ij;kl} = conj(J_{lk;ji})
            val = np.conj(self.pristine[((k, l), (i, j))])
        if self.g < 1.0 and {i, j, k, l} & set(self.probe_sites):
            val = val * self.g
        return complex(sign * val)

    def probe_operators(self) -> tuple[np.ndarray, np.ndarray]:
        """Hermitian probes c^dagger + c on the two probe sites."""
        out = []
        for s in self.probe_sites:
            c, cdag = jordan_wigner(self.n_fermions, s)
            out.append(c + cdag)
        return tuple(out)


def _pair_index(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _syk_hamiltonian(
    n: int,
    pristine: dict,
    g: float,
    probe_sites: tuple[int, int],
) -> np.ndarray:
    pairs = _pair_index(n)
    d = 2**n
    # H = prefac * sum_{ijkl} J_{ij;kl} c+_i c+_j c_k c_l; antisymmetry in
    # (i,j) and (k,l) turns the full sum into 4x the canonical-order sum.
    # Quartic monomials of Jordan-Wigner operators are signed permutation-like
    # matrices with O(d) nonzeros, so the assembly runs on sparse matrices.
    prefac = 4.0 / (2 * n) ** 1.5
    probe = set(probe_sites)
    ops = [
        (sparse.csr_matrix(c), sparse.csr_matrix(cdag))
        for c, cdag in (jordan_wigner(n, i) for i in range(n))
    ]
    lefts = [ops[i][1] @ ops[j][1] for (i, j) in pairs]  # c+_i c+_j
    rights = [ops[k][0] @ ops[l][0] for (k, l) in pairs]  # c_k c_l
    h = sparse.csr_matrix((d, d), dtype=complex)
    for a_idx, (i, j) in enumerate(pairs):
        for b_idx in range(a_idx, len(pairs)):
            k, l = pairs[b_idx]
            jval = pristine[((i, j), (k, l))]
            if g < 1.0 and {i, j, k, l} & probe:
                jval = jval * g
            term = (prefac * jval) * (lefts[a_idx] @ rights[b_idx])
            h = h + term
            if b_idx > a_idx:
                h = h + term.conj().T
    return hermitian_part(h.toarray())


def build_syk(
    n_fermions: int,
    variance_scale: float,
    g: float,
    probe_sites: tuple[int, int],
    rng: RngStream,
) -> SykModel:
    """Draw an SYK coupling tensor and assemble the dense Hamiltonian.

    Independent entries are drawn only for canonical index order (i<j, k<l,
    pair-index a <= b); Hermiticity J_{ij;kl} = conj(J_{lk;ji}) and the
    (i,j)/(k,l) antisymmetry propagate everything else. Diagonal pair
    entries (a == b) are real. Each independent entry has total variance
    ``variance_scale``.
    """
    n = n_fermions
    if n < 4 or n > MAX_FERMIONS:
        raise LinalgError(f"n_fermions must be in [4, {MAX_FERMIONS}]")
    if not (0 < g <= 1):
        raise LinalgError("g must be in (0, 1]")
    if variance_scale <= 0:
        raise LinalgError("variance_scale must be positive")
    a, b = probe_sites
    if a == b or not (0 <= a < n) or not (0 <= b < n):
        raise LinalgError(f"probe sites {probe_sites} invalid for {n} modes")

    gen = rng.generator
    pairs = _pair_index(n)
    scale = np.sqrt(variance_scale)
    pristine: dict = {}
    for ai, pa in enumerate(pairs):
        for bi in range(ai, len(pairs)):
            pb = pairs[bi]
            if ai == bi:
                pristine[(pa, pb)] = complex(gen.standard_normal() * scale)
            else:
                re, im = gen.standard_normal(2) * (scale / np.sqrt(2))
                pristine[(pa, pb)] = complex(re, im)

    h = _syk_hamiltonian(n, pristine, g, tuple(probe_sites))
    return SykModel(
        n_fermions=n,
        pristine=pristine,
        variance_scale=variance_scale,
        g=g,
        probe_sites=tuple(probe_sites),
        h_total=h,
    )


def deform_syk(model: SykModel, g: float) -> SykModel:
    """Re-apply the probe-site deformation at a new g to the pristine draws."""
    if not (0 < g <= 1):
        raise LinalgError("g must be in (0, 1]")
    h = _syk_hamiltonian(model.n_fermions, model.pristine, g, model.probe_sites)
    return SykModel(
        n_fermions=model.n_fermions,
        pristine=model.pristine,
        variance_scale=model.variance_scale,
        g=g,
        probe_sites=model.probe_sites,
        h_total=h,
    )
