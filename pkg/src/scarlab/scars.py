"""Generalized spin-helix states, the unfolded scar basis and supplementary towers."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hilbert import LocalOperator, StateVector, _chain_digits, dense_cap, embed, product_state
from .models import (
    ModelSpec,
    SplittingSpec,
    aklt_tower_annihilator,
    library_hamiltonian,
    spin_matrices,
)


class HelixCompatibilityError(ValueError):
    """Periodic boundary conditions are incompatible with the helix winding."""


@dataclass(frozen=True)
class HelixParams:
    betas: tuple
    model: ModelSpec

    def __post_init__(self):
        b = tuple(complex(x) for x in self.betas)
        if len(b) != self.model.N:
            raise ValueError(f"need {self.model.N} amplitudes, got {len(b)}")
        if not any(b):
            raise ValueError("at least one amplitude must be nonzero")
        object.__setattr__(self, "betas", b)


@dataclass(frozen=True)
class ScarLabel:
    m: tuple

    def __post_init__(self):
        m = tuple(int(x) for x in self.m)
        if any(x < 0 for x in m):
            raise ValueError("occupations must be non-negative")
        object.__setattr__(self, "m", m)

    @property
    def L(self) -> int:
        return sum(self.m)


@dataclass
class ScarTower:
    """Ordered orthonormal scar states with their labels and optional energies."""

    states: list
    labels: list
    energies: Optional[list] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def matrix(self) -> np.ndarray:
        """States as the columns of a ``(dim, K)`` array."""
        return np.column_stack([s.amplitudes for s in self.states])

    def gram(self) -> np.ndarray:
        V = self.matrix()
        return V.conj().T @ V

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(len(self)))))

    def records(self) -> list:
        out = []
        for i, (s, lab) in enumerate(zip(self.states, self.labels)):
            out.append({
                "label": list(lab) if isinstance(lab, (tuple, list)) else lab,
                "energy": None if self.energies is None else float(self.energies[i]),
                "norm": float(s.label.get("raw_norm", s.norm)),
            })
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.records(), fh, indent=1)

    def dump_amplitudes(self, path) -> None:
        """Little-endian complex64 amplitudes, one state after another."""
        self.matrix().T.astype("<c8").tofile(path)


# ---------------------------------------------------------------------------
# helix states
# ---------------------------------------------------------------------------


def _require_helix(spec: ModelSpec):
    if not spec.helix_compatible:
        raise HelixCompatibilityError(f"gamma L / 2pi is not an integer (gamma={spec.gamma}, L={spec.L})")


def helix_site_phases(spec: ModelSpec, j: int) -> np.ndarray:
    """Per-label factor on site ``j`` (1-based): 1 on A, ``e^{i(j-1)gamma} eta_b^{j-1}`` on B."""
    ph = np.ones(spec.N, dtype=complex)
    for b in spec.B:
        ph[b - 1] = np.exp(1j * (j - 1) * spec.gamma) * spec.eta(b) ** (j - 1)
    return ph


def helix_state(params: HelixParams, normalize: bool = False) -> StateVector:
    """Product state with B-label amplitudes winding by gamma (and the twist) per site."""
    spec = params.model
    _require_helix(spec)
    beta = np.asarray(params.betas)
    psi = product_state([beta * helix_site_phases(spec, j) for j in range(1, spec.L + 1)])
    return psi.normalized() if normalize else psi


def compositions(N: int, L: int):
    """All occupation vectors ``(m_1..m_N)`` of non-negative integers summing to ``L``."""
    if N == 1:
        yield (L,)
        return
    for first in range(L, -1, -1):
        for rest in compositions(N - 1, L - first):
            yield (first,) + rest


def scar_dimension(N: int, L: int) -> int:
    if N < 1 or L < 1:
        raise ValueError("need N >= 1 and L >= 1")
    return math.comb(L + N - 1, N - 1)


def log_multinomial(m: Sequence[int]) -> float:
    return math.lgamma(sum(m) + 1) - sum(math.lgamma(x + 1) for x in m)


def multinomial(m: Sequence[int]) -> int:
    out, total = 1, 0
    for x in m:
        total += x
        out *= math.comb(total, x)
    return out


def _occupation_mask(digits: np.ndarray, m: Sequence[int]) -> np.ndarray:
    mask = np.ones(digits.shape[0], dtype=bool)
    for c, mc in enumerate(m):
        mask &= (digits == c).sum(axis=1) == mc
    return mask


def unfolded_scar(spec: ModelSpec, label, normalize: bool = True) -> StateVector:
    """Coefficient of ``prod_c beta_c^{m_c}`` in the helix polynomial.

    Each string with occupations ``m`` enters with weight
    ``prod_{j: c_j in B} e^{i(j-1)gamma} eta_{c_j}^{j-1}``.
    """
    m = label.m if isinstance(label, ScarLabel) else tuple(label)
    if len(m) != spec.N or sum(m) != spec.L or min(m) < 0:
        raise ValueError(f"occupation {m} incompatible with N={spec.N}, L={spec.L}")
    digits = _chain_digits(spec.N, spec.L)
    idx = np.nonzero(_occupation_mask(digits, m))[0]
    sub = digits[idx]
    phase_table = np.array([helix_site_phases(spec, j) for j in range(1, spec.L + 1)])  # (L, N)
    weights = np.prod(phase_table[np.arange(spec.L)[None, :], sub], axis=1)
    amp = np.zeros(spec.N**spec.L, dtype=complex)
    amp[idx] = weights
    # squared norm equals the multinomial L! / prod m_c! exactly
    raw = math.exp(0.5 * log_multinomial(m)) if spec.L > 20 else math.sqrt(multinomial(m))
    meta = {"m": m, "raw_norm": raw}
    if normalize:
        amp = amp / raw
    return StateVector(amp, meta)


def scar_energy(label, splitting: SplittingSpec) -> float:
    """On-site splitting energy ``sum_c f_c m_c`` of an unfolded scar.

    In the N = 3 convention this is ``(J1 + J2) m_2 - (J1 - J2) m_3``.
    """
    m = np.asarray(label.m if isinstance(label, ScarLabel) else label, dtype=float)
    return float(splitting.label_fields(len(m)) @ m)


def scar_tower(spec: ModelSpec, splitting: Optional[SplittingSpec] = None) -> ScarTower:
    """All unfolded scars of ``spec``, ordered as :func:`compositions`."""
    _require_helix(spec)
    labels = list(compositions(spec.N, spec.L))
    states = [unfolded_scar(spec, m) for m in labels]
    energies = None if splitting is None else [scar_energy(m, splitting) for m in labels]
    return ScarTower(states, labels, energies, name="xxc")


# ---------------------------------------------------------------------------
# clock and fermionic helices
# ---------------------------------------------------------------------------


def _clock_theta(M):
    return math.pi - math.pi / M


def _require_clock(M, L):
    x = L * _clock_theta(M) / (2 * math.pi)
    if abs(x - round(x)) > 1e-12:
        raise HelixCompatibilityError(f"L(pi - gamma)/2pi not integer for M={M}, L={L}")


def clock_helix(M: int, beta: complex, L: int) -> StateVector:
    _require_clock(M, L)
    th = _clock_theta(M)
    p = np.arange(M)
    return product_state([beta**p * np.exp(1j * p * (j - 1) * th) for j in range(1, L + 1)])


def clock_unfolded_scar(M: int, L: int, n: int) -> StateVector:
    """Coefficient of ``beta^n`` in the clock helix, normalized."""
    _require_clock(M, L)
    if not 0 <= n <= L * (M - 1):
        raise ValueError(f"charge {n} outside 0..{L * (M - 1)}")
    digits = _chain_digits(M, L)
    sel = digits.sum(axis=1) == n
    phase = np.exp(1j * _clock_theta(M) * (digits[sel] @ np.arange(L)))
    amp = np.zeros(M**L, dtype=complex)
    amp[sel] = phase
    raw = float(np.sqrt(sel.sum()))
    return StateVector(amp / raw, {"n": n, "raw_norm": raw})


def clock_tower(M: int, L: int, fields: Optional[Sequence[float]] = None) -> ScarTower:
    """Unfolded clock scars for total clock number n = 0..L(M-1)."""
    ns = list(range(L * (M - 1) + 1))
    states = [clock_unfolded_scar(M, L, n) for n in ns]
    energies = None
    if fields is not None:
        f = np.asarray(fields, dtype=float)
        if np.any(np.abs(f - f[1] * np.arange(M)) > 1e-14):
            raise ValueError("clock tower energies need fields linear in the clock label")
        energies = [float(f[1] * n) for n in ns]
    return ScarTower(states, ns, energies, name="clock")


def fermionic_helix(beta_up: complex, beta_down: complex, beta_d: complex, L: int, gamma: float) -> StateVector:
    """Spinful-fermion helix in the bosonic (0, up, dn, d) representation."""
    x = gamma * L / (2 * math.pi)
    if L % 2 or abs(x - round(x)) > 1e-12:
        raise HelixCompatibilityError("fermionic helix needs even L and gamma L / 2pi integer")
    sites = []
    for j in range(1, L + 1):
        w = np.exp(1j * (j - 1) * gamma)
        sites.append(np.array([1.0, beta_up * w, beta_down * w, beta_d * (-1) ** (j - 1)]))
    return product_state(sites)


# ---------------------------------------------------------------------------
# supplementary towers
# ---------------------------------------------------------------------------

TOWER_NAMES = ("dicke", "twisted_helix", "eta_pairing", "spin1_xy", "aklt")


def _site_sum(local: np.ndarray, L: int, stagger: bool):
    d = local.shape[0]
    total = None
    for j in range(1, L + 1):
        sign = (-1) ** j if stagger else 1
        term = sign * embed(LocalOperator(d, 1, local), j, L).matrix
        total = term if total is None else total + term
    return total


def _ladder_tower(raising, seed: np.ndarray, count: int, name: str, truncate: bool = False) -> ScarTower:
    """Normalized ``(raising)^n seed`` for n < count.

    A vanishing state is an error unless ``truncate`` is set, in which case
    the tower ends at the first vanishing power.
    """
    states, v = [], seed.astype(complex)
    for n in range(count):
        nrm = float(np.linalg.norm(v))
        if nrm < 1e-10:
            if truncate and n > 0:
                break
            raise ValueError(f"{name} tower state n={n} vanished")
        states.append(StateVector(v / nrm, {"n": n, "raw_norm": nrm}))
        v = raising @ (v / nrm)
    return ScarTower(states, list(range(len(states))), None, name=name)


def aklt_ground_state(L: int) -> StateVector:
    """Unique ground state of the periodic AKLT chain."""
    H = library_hamiltonian("aklt", L)
    if H.dim <= min(dense_cap(), 2000):
        # the AKLT matrix is real
        w, v = np.linalg.eigh(H.to_dense().real)
    else:
        from scipy.sparse.linalg import eigsh

        w, v = eigsh(H.matrix.real, k=2, which="SA")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    if w[1] - w[0] < 1e-8:
        raise RuntimeError(f"AKLT ground state degenerate at L={L} (gap {w[1] - w[0]:.2e})")
    g = v[:, 0]
    # fix the global phase for reproducibility
    k = int(np.argmax(np.abs(g)))
    g = g * abs(g[k]) / g[k]
    return StateVector(g, {"energy": float(w[0])})


def supplementary_tower(name: str, L: int, gamma: Optional[float] = None) -> ScarTower:
    """Scar towers of the supplementary models.

    ``dicke`` (spin-1/2, n = 0..L), ``eta_pairing`` (N = 4 bosonic
    representation, n = 0..L), ``spin1_xy`` (n = 0..L) and ``aklt``
    (n = 0..L/2, ending early where the raised state vanishes, e.g. n = 3 at
    L = 6). ``twisted_helix`` is the unfolded spin-1/2 helix tower at angle
    ``gamma`` (default ``2 pi / L``). Staggered towers need even ``L``.
    """
    if name == "twisted_helix":
        return xxz_helix_tower(L, 2 * math.pi / L if gamma is None else gamma)
    if name == "dicke":
        splus = spin_matrices(2)[0]
        seed = np.zeros(2**L)
        seed[-1] = 1.0  # |dn ... dn>
        return _ladder_tower(_site_sum(splus, L, False), seed, L + 1, name)
    if L % 2:
        raise ValueError(f"{name} tower needs an even chain length")
    if name == "eta_pairing":
        create = np.zeros((4, 4))
        create[3, 0] = 1.0  # |d><0|
        seed = np.zeros(4**L)
        seed[0] = 1.0
        return _ladder_tower(_site_sum(create, L, True), seed, L + 1, name)
    if name in ("spin1_xy", "aklt"):
        splus = spin_matrices(3)[0]
        Q = _site_sum(splus @ splus, L, True)
        if name == "spin1_xy":
            seed = np.zeros(3**L)
            seed[-1] = 1.0  # label 3 = S^z -1 on every site
            return _ladder_tower(Q, seed, L + 1, name)
        if L > 10:
            raise ValueError("AKLT tower limited to L <= 10")
        return _ladder_tower(Q, aklt_ground_state(L).amplitudes, L // 2 + 1, name, truncate=True)
    raise ValueError(f"unknown tower {name!r}")


def supplementary_operator(name: str, L: int, gamma: Optional[float] = None):
    """Extensive operator paired with each supplementary tower for whole-tower checks."""
    if name == "dicke":
        return library_hamiltonian("dmi_z", L)
    if name == "twisted_helix":
        return library_hamiltonian("twisted_dmi", L, {"gamma": 2 * math.pi / L if gamma is None else gamma})
    if name == "eta_pairing":
        return library_hamiltonian("eta_dmi", L)
    if name == "spin1_xy":
        return library_hamiltonian("spin1_xy_annihilator", L)
    if name == "aklt":
        return aklt_tower_annihilator(L)
    raise ValueError(f"unknown tower {name!r}")


def xxz_helix_tower(L: int, gamma: float) -> ScarTower:
    """Unfolded spin-1/2 helix states (N = 2, A = {up}, B = {down})."""
    spec = ModelSpec(2, (1,), (2,), gamma, L)
    return scar_tower(spec)
