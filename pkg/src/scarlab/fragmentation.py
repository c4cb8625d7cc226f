"""Static and dynamical decomposition of the computational basis.

A string is integrable-type when it uses at most one label from ``A`` and at
most one from ``B``; such strings span the XXZ-like subspaces ``H_{a,b}``.
Strings made of a single label are reported as frozen because they belong to
several ``H_{a,b}`` at once.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .hilbert import BasisIndex, ManyBodyOperator

INTEGRABLE = "integrable"
FROZEN = "frozen"
NON_INTEGRABLE = "non_integrable"
XXZ_TOL = 1e-12


@dataclass
class Sector:
    """One block of a basis partition.

    ``labels`` is ``(a, b)`` for integrable sectors, ``(a,)`` for frozen
    strings and ``(component_id,)`` for dynamical non-integrable components
    (empty for the static non-integrable block).
    """

    kind: str
    indices: np.ndarray
    labels: tuple = ()
    N: int = 0
    L: int = 0

    @property
    def size(self) -> int:
        return int(self.indices.size)

    @property
    def name(self) -> str:
        if self.kind == INTEGRABLE:
            return f"integrable{self.labels}"
        if self.kind == FROZEN:
            return f"frozen({self.labels[0]})"
        if self.labels:
            return f"non_integrable_component({self.labels[0]})"
        return NON_INTEGRABLE


@dataclass
class SectorDecomposition:
    N: int
    L: int
    sectors: list
    provenance: str = ""
    target: Optional[int] = None  # position of the level-statistics sector
    meta: dict = field(default_factory=dict)

    @property
    def total_dim(self) -> int:
        return sum(s.size for s in self.sectors)

    def sector_ids(self) -> np.ndarray:
        """Sector position of every basis index (-1 if uncovered)."""
        sid = np.full(self.N**self.L, -1, dtype=np.int64)
        for k, s in enumerate(self.sectors):
            sid[s.indices] = k
        return sid

    def is_partition(self, basis: Optional[BasisIndex] = None) -> bool:
        """Whether the sectors cover ``basis`` (default: the full basis) exactly once."""
        allidx = np.concatenate([s.indices for s in self.sectors]) if self.sectors else np.zeros(0, int)
        expect = np.arange(self.N**self.L) if basis is None or basis.mask is None else np.asarray(basis.mask)
        return allidx.size == expect.size and np.array_equal(np.sort(allidx), np.sort(expect))

    def of_kind(self, kind: str) -> list:
        return [s for s in self.sectors if s.kind == kind]

    @property
    def target_sector(self) -> Optional[Sector]:
        return None if self.target is None else self.sectors[self.target]

    def report(self, samples: int = 3) -> list:
        out = []
        for s in self.sectors:
            strings = [BasisIndex(self.N, self.L).decode(int(i)) for i in s.indices[:samples]]
            out.append({"kind": s.name, "size": s.size, "sample_strings": [list(x) for x in strings]})
        return out

    def to_json(self, path) -> None:
        payload = {"N": self.N, "L": self.L, "provenance": self.provenance,
                   "target": None if self.target is None else self.sectors[self.target].name,
                   "sectors": self.report()}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)


def _classify(digits: np.ndarray, N: int, A: Sequence[int], B: Sequence[int]):
    """Label-usage table plus frozen and integrable-type masks."""
    used = np.zeros((digits.shape[0], N), dtype=bool)
    for c in range(N):
        used[:, c] = np.any(digits == c, axis=1)
    nA = used[:, [a - 1 for a in A]].sum(axis=1)
    nB = used[:, [b - 1 for b in B]].sum(axis=1)
    n_used = used.sum(axis=1)
    frozen = n_used == 1
    integrable = (nA == 1) & (nB == 1)
    return used, frozen, integrable


def label_sets(basis: BasisIndex, A: Sequence[int], B: Sequence[int]) -> SectorDecomposition:
    """Static classification of the (masked) basis by the labels each string uses."""
    N, L = basis.N, basis.L
    if sorted(set(A) | set(B)) != list(range(1, N + 1)) or set(A) & set(B):
        raise ValueError("A and B must partition the labels 1..N")
    idx = np.arange(basis.full_dim) if basis.mask is None else np.asarray(basis.mask, dtype=np.int64)
    digits = basis.digits()
    used, frozen, integrable = _classify(digits, N, A, B)
    sectors = []
    for c in range(1, N + 1):
        sel = frozen & used[:, c - 1]
        sectors.append(Sector(FROZEN, idx[sel], (c,), N, L))
    for a in sorted(A):
        for b in sorted(B):
            sel = integrable & used[:, a - 1] & used[:, b - 1]
            sectors.append(Sector(INTEGRABLE, idx[sel], (a, b), N, L))
    rest = ~(frozen | integrable)
    sectors.append(Sector(NON_INTEGRABLE, idx[rest], (), N, L))
    return SectorDecomposition(N, L, sectors, provenance="static", meta={"A": list(A), "B": list(B)})


def krylov_components(
    H: ManyBodyOperator,
    N: int,
    L: int,
    A: Sequence[int],
    B: Sequence[int],
    seed_indices: Optional[Sequence[int]] = None,
) -> SectorDecomposition:
    """Connected components of the basis graph of ``H``.

    Two basis states are linked when the off-diagonal element between them is
    nonzero. Each component inherits the static kind of its strings (a
    component mixing static kinds is labelled ``mixed``). When ``seed_indices``
    is given only the components containing the seeds are returned. The
    largest non-integrable component becomes ``target``.
    """
    if H.dim != N**L:
        raise ValueError("operator dimension does not match N**L")
    if not H.is_hermitian():
        raise ValueError("krylov_components needs a hermitian operator")
    m = H.matrix
    pattern = sp.csr_matrix((np.ones(m.nnz), m.indices, m.indptr), shape=m.shape)
    n_comp, comp = connected_components(pattern, directed=False)
    static = label_sets(BasisIndex(N, L), A, B)
    sid = static.sector_ids()
    order = np.argsort(comp, kind="stable")
    bounds = np.searchsorted(comp[order], np.arange(n_comp + 1))
    keep = None
    if seed_indices is not None:
        keep = set(int(comp[i]) for i in seed_indices)
    sectors, nonint = [], []
    for c in range(n_comp):
        if keep is not None and c not in keep:
            continue
        members = np.sort(order[bounds[c]:bounds[c + 1]])
        kinds = np.unique(sid[members])
        if kinds.size > 1:
            sectors.append(Sector("mixed", members, (c,), N, L))
            continue
        base = static.sectors[int(kinds[0])]
        if base.kind == NON_INTEGRABLE:
            nonint.append(len(sectors))
            sectors.append(Sector(NON_INTEGRABLE, members, (c,), N, L))
        else:
            sectors.append(Sector(base.kind, members, base.labels, N, L))
    target = max(nonint, key=lambda k: sectors[k].size) if nonint else None
    return SectorDecomposition(N, L, sectors, provenance=H.fingerprint(), target=target,
                               meta={"A": list(A), "B": list(B), "n_components": n_comp})


def invariance_violations(H: ManyBodyOperator, decomposition: SectorDecomposition,
                          samples: Optional[int] = None, seed: int = 0) -> int:
    """Number of nonzero entries ``H[r, c]`` leaving the sector of column ``c``.

    With ``samples`` set, only that many random columns per sector are scanned.
    """
    sid = decomposition.sector_ids()
    csc = H.matrix.tocsc()
    if samples is None:
        cols = np.repeat(np.arange(H.dim), np.diff(csc.indptr))
        rows = csc.indices
    else:
        rng = np.random.default_rng(seed)
        picked = [rng.choice(s.indices, size=min(samples, s.size), replace=False)
                  for s in decomposition.sectors if s.size]
        pick = np.concatenate(picked)
        sub = csc[:, pick].tocoo()
        rows, cols = sub.row, pick[sub.col]
    bad = (sid[rows] != sid[cols]) & (sid[cols] >= 0)
    return int(np.count_nonzero(bad))


# ---------------------------------------------------------------------------
# XXZ reduction
# ---------------------------------------------------------------------------


def xxz_oracle(L: int, gamma: float, eta: int = 1, fields=(0.0, 0.0)) -> np.ndarray:
    """Dense periodic spin-1/2 chain ``sum_j [eta s+_j s-_{j+1} + h.c. - cos(gamma)(n_j m_{j+1} + m_j n_{j+1})]``.

    ``n`` projects on up and ``m`` on down; ``fields`` adds ``f_up n_j + f_dn m_j``.
    Built from explicit Kronecker products, independently of :func:`embed`.
    """
    splus = np.array([[0, 1], [0, 0]], dtype=complex)
    n_up = np.diag([1.0, 0.0]).astype(complex)
    n_dn = np.diag([0.0, 1.0]).astype(complex)

    def site_op(ops: dict) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for j in range(L):
            out = np.kron(out, ops.get(j, np.eye(2)))
        return out

    H = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(L):
        k = (j + 1) % L
        hop = site_op({j: splus, k: splus.T}) * eta
        H += hop + hop.conj().T
        H -= math.cos(gamma) * (site_op({j: n_up, k: n_dn}) + site_op({j: n_dn, k: n_up}))
        H += fields[0] * site_op({j: n_up}) + fields[1] * site_op({j: n_dn})
    return H


def alternating_gauge(L: int) -> np.ndarray:
    """Diagonal of ``prod_j (sigma^z_j)^j``."""
    z = np.array([1.0, -1.0])
    out = np.ones(1)
    for j in range(1, L + 1):
        out = np.kron(out, z**j)
    return out


def ab_subspace_indices(N: int, L: int, a: int, b: int) -> np.ndarray:
    """Indices of ``H_{a,b}`` ordered like the spin-1/2 basis with a -> up, b -> down."""
    bits = BasisIndex(2, L).digits()
    local = np.where(bits == 0, a - 1, b - 1)
    return local @ (N ** np.arange(L - 1, -1, -1, dtype=np.int64))


@dataclass
class XXZReport:
    labels: tuple
    max_deviation: float
    gauge_applied: bool
    passed: bool


def verify_xxz_reduction(
    H: ManyBodyOperator,
    sector: Sector,
    gamma: float,
    eta: int = 1,
    fields=(0.0, 0.0),
    tol: float = XXZ_TOL,
) -> XXZReport:
    """Compare ``H`` restricted to ``H_{a,b}`` with the spin-1/2 XXZ oracle.

    For ``eta = -1`` the restriction is conjugated by the alternating
    ``sigma^z`` gauge (even ``L`` only) and compared with the untwisted oracle.
    """
    if sector.kind != INTEGRABLE:
        raise ValueError(f"sector {sector.name} is not integrable")
    a, b = sector.labels
    N, L = sector.N, sector.L
    idx = ab_subspace_indices(N, L, a, b)
    block = H.matrix[idx][:, idx].toarray()
    gauge = eta == -1
    if gauge:
        if L % 2:
            raise ValueError("the alternating gauge needs an even chain length")
        g = alternating_gauge(L)
        block = g[:, None] * block * g[None, :]
    elif eta != 1:
        raise ValueError("eta must be +1 or -1")
    dev = float(np.max(np.abs(block - xxz_oracle(L, gamma, 1, fields))))
    return XXZReport((a, b), dev, gauge, dev < tol)
