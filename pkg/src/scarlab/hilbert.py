"""Basis indexing, local-operator embedding and state-vector algebra.

Conventions used throughout the package:

* local labels are 1-based (``c = 1..N``) in the public interface and
  stored 0-based in digit arrays;
* a basis string ``(c_1, ..., c_L)`` is encoded in base ``N`` with site 1
  as the most significant digit;
* sites are 1-based in every public function.
"""
from __future__ import annotations

import hashlib
import os
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_DENSE_CAP = 20000
DROP_TOL = 1e-14
HERMITIAN_TOL = 1e-12


class DenseCapExceeded(RuntimeError):
    """Raised when a dense conversion would exceed the configured dimension cap."""


def dense_cap() -> int:
    """Dense-conversion cap, overridable through ``SCARLAB_DENSE_CAP``."""
    value = os.environ.get("SCARLAB_DENSE_CAP")
    return int(value) if value else DEFAULT_DENSE_CAP


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasisIndex:
    """Bijection between basis strings and integer indices.

    Parameters
    ----------
    N : int
        Local dimension.
    L : int
        Number of sites.
    mask : sequence of int, optional
        Strictly increasing list of indices selecting a subspace.
    """

    N: int
    L: int
    mask: Optional[tuple] = None

    def __post_init__(self):
        if self.N < 2 or self.L < 1:
            raise ValueError(f"invalid basis N={self.N}, L={self.L}")
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=np.int64)
            if m.size and (np.any(np.diff(m) <= 0) or m[0] < 0 or m[-1] >= self.full_dim):
                raise ValueError("mask must be strictly increasing and inside the basis")
            object.__setattr__(self, "mask", tuple(int(i) for i in m))

    @property
    def full_dim(self) -> int:
        return self.N**self.L

    @property
    def dim(self) -> int:
        return self.full_dim if self.mask is None else len(self.mask)

    @property
    def weights(self) -> np.ndarray:
        return self.N ** np.arange(self.L - 1, -1, -1, dtype=np.int64)

    def encode(self, labels: Sequence[int]) -> int:
        """Index of the 1-based label string ``labels``."""
        digits = np.asarray(labels, dtype=np.int64) - 1
        if digits.shape != (self.L,) or np.any(digits < 0) or np.any(digits >= self.N):
            raise ValueError(f"bad basis string {labels!r}")
        return int(digits @ self.weights)

    def decode(self, index: int) -> tuple:
        """1-based label string of ``index``."""
        if not 0 <= index < self.full_dim:
            raise ValueError(f"index {index} out of range")
        return tuple(int(c) + 1 for c in digits_of(np.array([index]), self.N, self.L)[0])

    def digits(self) -> np.ndarray:
        """0-based digit table of shape ``(dim, L)`` for the (masked) basis."""
        idx = np.arange(self.full_dim) if self.mask is None else np.asarray(self.mask)
        return digits_of(idx, self.N, self.L)


def digits_of(indices: np.ndarray, N: int, L: int) -> np.ndarray:
    """0-based digits of ``indices`` (site 1 first)."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty((indices.size, L), dtype=np.int64)
    rest = indices.copy()
    for s in range(L - 1, -1, -1):
        out[:, s] = rest % N
        rest //= N
    return out


@lru_cache(maxsize=16)
def _chain_digits(N: int, L: int) -> np.ndarray:
    out = digits_of(np.arange(N**L), N, L)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Dense operator on ``k`` adjacent sites of local dimension ``d``."""

    d: int
    k: int
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        size = self.d**self.k
        if m.shape != (size, size):
            raise ValueError(f"matrix shape {m.shape} does not match d^k = {size}")
        if self.hermitian and np.max(np.abs(m - m.conj().T), initial=0.0) >= HERMITIAN_TOL:
            raise ValueError("operator flagged hermitian but M != M^dagger")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        self._check(other)
        return LocalOperator(self.d, self.k, self.matrix + other.matrix)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        self._check(other)
        return LocalOperator(self.d, self.k, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "LocalOperator":
        return LocalOperator(self.d, self.k, scalar * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        self._check(other)
        return LocalOperator(self.d, self.k, self.matrix @ other.matrix)

    def _check(self, other):
        if (self.d, self.k) != (other.d, other.k):
            raise ValueError("local operators act on different spaces")

    @property
    def dagger(self) -> "LocalOperator":
        return LocalOperator(self.d, self.k, self.matrix.conj().T)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) < tol

    def kron(self, other: "LocalOperator") -> "LocalOperator":
        """Operator on ``k + other.k`` sites, ``self`` on the left block."""
        if self.d != other.d:
            raise ValueError("local dimensions differ")
        return LocalOperator(self.d, self.k + other.k, np.kron(self.matrix, other.matrix))


def identity(d: int, k: int = 1) -> LocalOperator:
    return LocalOperator(d, k, np.eye(d**k), hermitian=True)


def standard_basis_element(d: int, a: int, b: int) -> LocalOperator:
    """Single-site matrix ``|a><b|`` with 1-based labels."""
    if not (1 <= a <= d and 1 <= b <= d):
        raise ValueError(f"labels ({a}, {b}) out of range for d={d}")
    m = np.zeros((d, d), dtype=complex)
    m[a - 1, b - 1] = 1.0
    return LocalOperator(d, 1, m)


def ket(d: int, *labels: int) -> np.ndarray:
    """Computational basis vector ``|labels>`` on ``len(labels)`` sites."""
    v = np.zeros(d ** len(labels), dtype=complex)
    v[BasisIndex(d, len(labels)).encode(labels)] = 1.0
    return v


class ManyBodyOperator:
    """Sparse operator on the full chain Hilbert space.

    Entries are stored canonicalized (duplicates merged, sorted, moduli below
    ``1e-14`` dropped). ``hermitian`` is a claim that is verified on
    construction.
    """

    __slots__ = ("matrix", "hermitian")

    def __init__(self, matrix, hermitian: bool = False):
        m = sp.csr_matrix(matrix, dtype=complex, copy=True)
        m.sum_duplicates()
        m.data[np.abs(m.data) < DROP_TOL] = 0.0
        m.eliminate_zeros()
        m.sort_indices()
        if m.shape[0] != m.shape[1]:
            raise ValueError("operator must be square")
        self.matrix = m
        self.hermitian = bool(hermitian)
        if self.hermitian and self.hermitian_error() >= HERMITIAN_TOL:
            raise ValueError(f"operator claimed hermitian, deviation {self.hermitian_error():.3e}")

    @classmethod
    def from_entries(cls, dim: int, rows, cols, values, hermitian: bool = False):
        m = sp.coo_matrix((np.asarray(values, dtype=complex), (rows, cols)), shape=(dim, dim))
        return cls(m, hermitian=hermitian)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def entries(self):
        """Canonical ``(rows, cols, values)`` coordinate list."""
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def hermitian_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(np.max(np.abs(diff.data), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermitian_error() < tol

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.matrix.data.imag), initial=0.0))

    def to_dense(self, cap: Optional[int] = None) -> np.ndarray:
        cap = dense_cap() if cap is None else cap
        if self.dim > cap:
            raise DenseCapExceeded(f"dimension {self.dim} exceeds dense cap {cap}")
        return self.matrix.toarray()

    def restrict(self, indices) -> "ManyBodyOperator":
        """Submatrix on the basis states ``indices`` (kept in the given order)."""
        idx = np.asarray(indices, dtype=np.int64)
        return ManyBodyOperator(self.matrix[idx][:, idx], hermitian=self.hermitian)

    def _combine(self, other, sign):
        if isinstance(other, ManyBodyOperator):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            herm = self.hermitian and other.hermitian
            return ManyBodyOperator(self.matrix + sign * other.matrix, hermitian=herm)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, scalar):
        herm = self.hermitian and np.isreal(scalar)
        return ManyBodyOperator(self.matrix * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, ManyBodyOperator):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return ManyBodyOperator(self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    def fingerprint(self) -> str:
        """SHA-256 of the canonical sparse representation."""
        m = self.matrix
        h = hashlib.sha256()
        h.update(np.int64(self.dim).tobytes())
        for arr in (m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.astype(np.complex128)):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def commutator_norm(self, other: "ManyBodyOperator") -> float:
        c = self.matrix @ other.matrix - other.matrix @ self.matrix
        return float(np.max(np.abs(c.data), initial=0.0))

    @property
    def dagger(self) -> "ManyBodyOperator":
        return ManyBodyOperator(self.matrix.conj().T, hermitian=self.hermitian)

    def __repr__(self):
        return f"ManyBodyOperator(dim={self.dim}, nnz={self.matrix.nnz}, hermitian={self.hermitian})"


def embed(op: LocalOperator, first_site: int, L: int, periodic: bool = False) -> ManyBodyOperator:
    """Embed ``op`` on sites ``first_site .. first_site + k - 1`` (1-based).

    The i-th tensor factor of ``op`` acts on chain site
    ``(first_site - 1 + i) mod L``; wrapping past site ``L`` requires
    ``periodic=True``.
    """
    d, k = op.d, op.k
    if k > L:
        raise ValueError(f"support {k} exceeds chain length {L}")
    if not 1 <= first_site <= L:
        raise ValueError(f"site {first_site} outside 1..{L}")
    if first_site + k - 1 > L and not periodic:
        raise ValueError("operator support exceeds the open chain; pass periodic=True")
    sites = [(first_site - 1 + i) % L for i in range(k)]

    dim = d**L
    weights = d ** np.arange(L - 1, -1, -1, dtype=np.int64)
    site_w = weights[sites]
    local_w = d ** np.arange(k - 1, -1, -1, dtype=np.int64)
    # offset of local state x in the chain index: sum_i digit_i(x) * d^(L-1-site_i)
    local_digits = digits_of(np.arange(d**k), d, k)
    offsets = local_digits @ site_w

    chain_digits = _chain_digits(d, L)
    local_index = chain_digits[:, sites] @ local_w

    mat = op.matrix
    rows, cols, vals = [], [], []
    for c in range(d**k):
        nz = np.nonzero(np.abs(mat[:, c]) >= DROP_TOL)[0]
        if nz.size == 0:
            continue
        base = np.nonzero(local_index == c)[0]
        for r in nz:
            rows.append(base + (offsets[r] - offsets[c]))
            cols.append(base)
            vals.append(np.full(base.size, mat[r, c]))
    if not rows:
        return ManyBodyOperator(sp.csr_matrix((dim, dim), dtype=complex), hermitian=op.is_hermitian())
    return ManyBodyOperator.from_entries(
        dim, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), hermitian=op.is_hermitian()
    )


def zero_operator(dim: int) -> ManyBodyOperator:
    return ManyBodyOperator(sp.csr_matrix((dim, dim), dtype=complex), hermitian=True)


def bond_sum(op: LocalOperator, L: int, periodic: bool = True) -> ManyBodyOperator:
    """Translation-invariant sum of ``op`` over all starting sites."""
    last = L if periodic else L - op.k + 1
    total = sp.csr_matrix((op.d**L, op.d**L), dtype=complex)
    for j in range(1, last + 1):
        total = total + embed(op, j, L, periodic=periodic).matrix
    out = ManyBodyOperator(total)
    out.hermitian = out.is_hermitian()
    return out


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    """Dense amplitude vector with optional label metadata."""

    amplitudes: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).ravel()
        if not np.all(np.isfinite(a)):
            raise ValueError("state amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, dict(self.label))

    def vdot(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(scalar * self.amplitudes, dict(self.label))

    __rmul__ = __mul__


def product_state(site_vectors: Sequence[np.ndarray]) -> StateVector:
    """Tensor product of single-site vectors, site 1 leftmost."""
    out = np.ones(1, dtype=complex)
    for v in site_vectors:
        out = np.kron(out, np.asarray(v, dtype=complex))
    return StateVector(out)


def apply(op: ManyBodyOperator, v: StateVector) -> StateVector:
    """Sparse matrix-vector product."""
    if op.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim}, state {v.dim}")
    return StateVector(op.matrix @ v.amplitudes, dict(v.label))


def residual(op: ManyBodyOperator, v: StateVector, energy: float = 0.0) -> float:
    """``||(op - energy) v|| / ||v||``."""
    w = op.matrix @ v.amplitudes - energy * v.amplitudes
    return float(np.linalg.norm(w) / np.linalg.norm(v.amplitudes))
