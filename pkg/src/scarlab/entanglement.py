"""Bipartite entanglement entropy, the analytic scar entropy and its size scaling."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .hilbert import StateVector

SCHMIDT_DROP = 1e-14
NORM_TOL = 1e-10
EXACT_LMAX = 20


class UnnormalizedStateWarning(UserWarning):
    """An input state was normalized before computing its entropy."""


def _chain_length(dim: int, d: int) -> int:
    L = round(math.log(dim) / math.log(d))
    if d**L != dim:
        raise ValueError(f"dimension {dim} is not a power of {d}")
    return L


def schmidt_values(state, L_A: int, local_dim: int) -> np.ndarray:
    """Squared Schmidt coefficients of the left block of ``L_A`` sites."""
    amp = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    L = _chain_length(amp.size, local_dim)
    if not 1 <= L_A < L:
        raise ValueError(f"cut {L_A} outside 1..{L - 1}")
    nrm = np.linalg.norm(amp)
    if abs(nrm - 1) > NORM_TOL:
        warnings.warn(f"state norm {nrm:.3e} differs from 1; normalizing", UnnormalizedStateWarning)
        amp = amp / nrm
    s = np.linalg.svd(amp.reshape(local_dim**L_A, -1), compute_uv=False)
    return s**2


def _entropy_from_probs(p: np.ndarray) -> float:
    p = p[p > SCHMIDT_DROP]
    return float(-np.sum(p * np.log(p)))


def bipartite_entropy(state, L_A: int, local_dim: int) -> float:
    """Von Neumann entropy of the contiguous left block of ``L_A`` sites."""
    return _entropy_from_probs(schmidt_values(state, L_A, local_dim))


def batch_entropies(vectors: np.ndarray, L_A: int, local_dim: int, chunk: int = 512) -> np.ndarray:
    """Entropies of the (normalized) columns of ``vectors``."""
    dim, n = vectors.shape
    L = _chain_length(dim, local_dim)
    if not 1 <= L_A < L:
        raise ValueError(f"cut {L_A} outside 1..{L - 1}")
    dA = local_dim**L_A
    out = np.empty(n)
    for start in range(0, n, chunk):
        block = vectors[:, start:start + chunk]
        mats = block.T.reshape(block.shape[1], dA, dim // dA)
        s2 = np.linalg.svd(mats, compute_uv=False) ** 2
        s2 /= s2.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(s2 > SCHMIDT_DROP, -s2 * np.log(s2), 0.0)
        out[start:start + block.shape[1]] = terms.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# analytic entropy of the N = 3 unfolded scars
# ---------------------------------------------------------------------------


def _check_occupation(m2, m3, L, L_A):
    if min(m2, m3) < 0 or m2 + m3 > L:
        raise ValueError(f"need 0 <= m2, m3 and m2 + m3 <= L (got {m2}, {m3}, {L})")
    if not 1 <= L_A < L:
        raise ValueError(f"cut {L_A} outside 1..{L - 1}")


def _log_norm_factor(m2, m3, L):
    """``ln[m2! m3! L! / (L - m2 - m3)!]`` elementwise."""
    return gammaln(m2 + 1) + gammaln(m3 + 1) + gammaln(L + 1) - gammaln(L - m2 - m3 + 1)


def _log_comb(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _k_grid(m2, m3, L, L_A):
    L_B = L - L_A
    k2 = np.arange(max(0, m2 - L_B), min(m2, L_A) + 1)
    rows, cols = [], []
    for a in k2:
        lo, hi = max(0, m2 + m3 - a - L_B), min(m3, L_A - a)
        if hi >= lo:
            b = np.arange(lo, hi + 1)
            rows.append(np.full(b.size, a))
            cols.append(b)
    return np.concatenate(rows), np.concatenate(cols)


def _exact_norm_factor(m2, m3, L):
    return math.factorial(m2) * math.factorial(m3) * math.factorial(L) // math.factorial(L - m2 - m3)


def reduced_spectrum(m2: int, m3: int, L: int, L_A: int):
    """Reduced-density-matrix eigenvalues ``lambda_{k2,k3}`` of ``|S_{L-m2-m3,m2,m3}>``.

    Returns ``(k2, k3, lam)`` over the admissible range
    ``k2 + k3 <= L_A`` and ``(m2 - k2) + (m3 - k3) <= L - L_A``.
    Exact integer arithmetic is used up to ``L = 20`` and log-gamma beyond.
    """
    _check_occupation(m2, m3, L, L_A)
    k2, k3 = _k_grid(m2, m3, L, L_A)
    L_B = L - L_A
    if L <= EXACT_LMAX:
        den = _exact_norm_factor(m2, m3, L)
        lam = np.array([
            Fraction(_exact_norm_factor(a, b, L_A) * _exact_norm_factor(m2 - a, m3 - b, L_B)
                     * math.comb(m2, a) ** 2 * math.comb(m3, b) ** 2, den)
            for a, b in zip(k2.tolist(), k3.tolist())
        ], dtype=float)
    else:
        log_lam = (_log_norm_factor(k2, k3, L_A) + _log_norm_factor(m2 - k2, m3 - k3, L_B)
                   - _log_norm_factor(m2, m3, L) + 2 * _log_comb(m2, k2) + 2 * _log_comb(m3, k3))
        lam = np.exp(log_lam)
    total = lam.sum()
    if abs(total - 1) > 1e-10:
        raise ArithmeticError(f"reduced spectrum sums to {total!r}")
    return k2, k3, lam


def scar_entropy_analytic(m2: int, m3: int, L: int, L_A: int) -> float:
    """Half-chain-style entropy of an N = 3 unfolded scar without building the state."""
    if m2 == 0 and m3 == 0 or m2 == L or m3 == L:
        _check_occupation(m2, m3, L, L_A)
        return 0.0
    return _entropy_from_probs(reduced_spectrum(m2, m3, L, L_A)[2])


def entropy_decomposition(m2: int, m3: int, L: int, L_A: int) -> tuple:
    """Split the entropy into the ``k3`` marginal part and the conditional ``k2`` part.

    Returns ``(S, S_marginal, S_conditional)`` with ``S = S_marginal + S_conditional``.
    """
    k2, k3, lam = reduced_spectrum(m2, m3, L, L_A)
    values = np.unique(k3)
    p3 = np.array([lam[k3 == v].sum() for v in values])
    s_marg = _entropy_from_probs(p3)
    s_cond = 0.0
    for v, p in zip(values, p3):
        if p > SCHMIDT_DROP:
            s_cond += p * _entropy_from_probs(lam[k3 == v] / p)
    return _entropy_from_probs(lam), s_marg, float(s_cond)


# ---------------------------------------------------------------------------
# scaling with system size
# ---------------------------------------------------------------------------


@dataclass
class EntropyCurve:
    fractions: tuple
    points: list
    slope: float
    intercept: float
    residual: float
    meta: dict = field(default_factory=dict)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def entropies(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def parse_fractions(text) -> tuple:
    """``"1/3,1/3,1/3"`` or a sequence of numbers -> tuple of Fractions summing to 1."""
    items = text.split(",") if isinstance(text, str) else list(text)
    fr = tuple(Fraction(str(x).strip()) for x in items)
    if len(fr) != 3 or any(f < 0 for f in fr) or sum(fr) != 1:
        raise ValueError(f"need three non-negative fractions summing to 1, got {text!r}")
    return fr


def scaling_lengths(lmax: int, base: int = 12) -> list:
    """``base * 2^k`` up to ``lmax``."""
    out, L = [], base
    while L <= lmax:
        out.append(L)
        L *= 2
    if not out:
        raise ValueError(f"lmax {lmax} below the base length {base}")
    return out


def entropy_scaling(fill_fractions, L_list: Sequence[int], L_A: Optional[Sequence[int]] = None) -> EntropyCurve:
    """Analytic entropies of ``|S_m>`` with ``m = fractions * L`` and a fit of S against ln L.

    ``L_A`` defaults to ``L // 2`` for each length.
    """
    fr = parse_fractions(fill_fractions)
    Ls = [int(L) for L in L_list]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError("lengths must be strictly increasing")
    cuts = [L // 2 for L in Ls] if L_A is None else list(L_A)
    points = []
    for L, cut in zip(Ls, cuts):
        m = [f * L for f in fr]
        if any(x.denominator != 1 for x in m):
            raise ValueError(f"L={L} incompatible with fractions {fr}")
        points.append((L, scar_entropy_analytic(int(m[1]), int(m[2]), L, cut)))
    x = np.log(Ls)
    y = np.array([p[1] for p in points])
    if len(Ls) >= 2:
        slope, intercept = np.polyfit(x, y, 1)
        res = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    else:
        slope, intercept, res = float("nan"), float(y[0]), 0.0
    return EntropyCurve(fr, points, float(slope), float(intercept), res)


def write_scaling_csv(curves: Sequence[EntropyCurve], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["L", "fractions", "S_ent", "fit_slope"])
        for c in curves:
            tag = " ".join(str(f) for f in c.fractions)
            for L, S in c.points:
                w.writerow([L, tag, repr(float(S)), repr(c.slope)])
