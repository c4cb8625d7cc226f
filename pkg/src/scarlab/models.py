"""Hamiltonian builders for the XXC family and related scarred chains.

Local label conventions:

* N = 2: labels (1, 2) = (up, down).
* N = 3 (spin-1 realization): labels (1, 2, 3) = (S^z = 0, +1, -1).
* N = 4 (spinful fermions): labels (1, 2, 3, 4) = (|0>, |up>, |down>, |d>).
* clock models: label ``a + 1`` holds the clock state ``|a>``, a = 0..M-1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .hilbert import (
    LocalOperator,
    ManyBodyOperator,
    bond_sum,
    embed,
    standard_basis_element,
)

HELIX_TOL = 1e-12


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """XXC-family model on a periodic chain.

    ``twists`` maps labels in ``B`` to +1 or -1; missing entries default to +1.
    ``gamma_over_pi`` optionally carries gamma as an exact rational multiple of
    pi so that the helix compatibility condition can be checked exactly.
    """

    N: int
    A: tuple
    B: tuple
    gamma: float
    L: int
    twists: dict = field(default_factory=dict)
    gamma_over_pi: Optional[Fraction] = None

    def __post_init__(self):
        A, B = tuple(sorted(self.A)), tuple(sorted(self.B))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if not A or not B:
            raise ValueError("both label sets must be nonempty")
        if set(A) & set(B):
            raise ValueError("label sets A and B overlap")
        if set(A) | set(B) != set(range(1, self.N + 1)):
            raise ValueError(f"A and B must cover 1..{self.N}")
        twists = {int(b): int(t) for b, t in self.twists.items()}
        for b, t in twists.items():
            if b not in B:
                raise ValueError(f"twist given for label {b} not in B")
            if t not in (1, -1):
                raise ValueError(f"twist for label {b} must be +1 or -1")
        object.__setattr__(self, "twists", twists)
        if self.gamma_over_pi is not None:
            frac = Fraction(self.gamma_over_pi)
            object.__setattr__(self, "gamma_over_pi", frac)
            if abs(float(frac) * math.pi - self.gamma) > 1e-12:
                raise ValueError("gamma and gamma_over_pi disagree")
        if self.L < 2:
            raise ValueError("chain length must be at least 2")

    @classmethod
    def rational(cls, N, A, B, num, den, L, twists=None) -> "ModelSpec":
        """Spec with ``gamma = (num / den) * pi``."""
        frac = Fraction(num, den)
        return cls(N, tuple(A), tuple(B), float(frac) * math.pi, L, dict(twists or {}), frac)

    def eta(self, b: int) -> int:
        return self.twists.get(b, 1)

    def with_length(self, L: int) -> "ModelSpec":
        return ModelSpec(self.N, self.A, self.B, self.gamma, L, dict(self.twists), self.gamma_over_pi)

    def with_gamma(self, gamma: float) -> "ModelSpec":
        return ModelSpec(self.N, self.A, self.B, gamma, self.L, dict(self.twists))

    @property
    def helix_compatible(self) -> bool:
        """Whether ``gamma * L / (2 pi)`` is an integer."""
        if self.gamma_over_pi is not None:
            return (self.gamma_over_pi * self.L / 2).denominator == 1
        x = self.gamma * self.L / (2 * math.pi)
        return abs(x - round(x)) < HELIX_TOL


@dataclass(frozen=True)
class PerturbationSpec:
    """Integrability-breaking ``h'_j`` terms sandwiched by the helix projectors.

    ``random_sx_neighbor`` uses ``h'_j = c_j S^x_{j-1}`` with coefficients drawn
    uniformly from ``[low, high]`` by a generator seeded with ``seed``.
    ``custom`` takes ``terms``: a list of ``(bond j, first_site, LocalOperator)``
    triples, each sandwiched by ``P_{j,j+1}``.
    """

    kind: str = "random_sx_neighbor"
    seed: int = 42
    low: float = 0.5
    high: float = 1.5
    coefficients: Optional[tuple] = None
    terms: tuple = ()

    def __post_init__(self):
        if self.kind not in ("random_sx_neighbor", "custom"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        for _, _, op in self.terms:
            if not op.is_hermitian():
                raise ValueError("perturbation operators must be hermitian")

    def resolved_coefficients(self, L: int) -> np.ndarray:
        if self.coefficients is not None:
            c = np.asarray(self.coefficients, dtype=float)
            if c.shape != (L,):
                raise ValueError(f"need {L} coefficients, got {c.shape}")
            return c
        rng = np.random.default_rng(self.seed)
        return rng.uniform(self.low, self.high, size=L)


@dataclass(frozen=True)
class SplittingSpec:
    """On-site fields lifting the scar degeneracy.

    With ``fields`` unset this is ``sum_j [J1 S^z_j + J2 (S^z_j)^2]`` in the
    spin-1 (N = 3) convention. ``fields`` gives one on-site energy per label
    for any other local dimension.
    """

    J1: float = 0.31
    J2: float = 0.17
    fields: Optional[tuple] = None

    def __post_init__(self):
        vals = [self.J1, self.J2] + list(self.fields or ())
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("splitting couplings must be finite")

    def label_fields(self, N: int) -> np.ndarray:
        if self.fields is not None:
            f = np.asarray(self.fields, dtype=float)
            if f.shape != (N,):
                raise ValueError(f"need {N} label fields, got {f.shape}")
            return f
        if N != 3:
            raise ValueError("J1/J2 splitting is defined for the N=3 spin-1 convention only")
        sz = SPIN1_SZ
        return self.J1 * sz + self.J2 * sz**2


def fermionic_fields(mu: float, h: float, U: float) -> tuple:
    """Label fields for ``mu n + h (n_up - n_dn)/2 + U n_up n_dn`` on (0, up, dn, d)."""
    return (0.0, mu + h / 2, mu - h / 2, 2 * mu + U)


# ---------------------------------------------------------------------------
# local spin matrices
# ---------------------------------------------------------------------------

SPIN1_SZ = np.array([0.0, 1.0, -1.0])


def _standard_spin(d: int):
    s = (d - 1) / 2
    m = s - np.arange(d)
    sp_ = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        sp_[i - 1, i] = math.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sz = np.diag(m).astype(complex)
    return sp_, sz


def spin_matrices(d: int):
    """``(S^+, S^-, S^z)`` in this package's label order for local dimension ``d``.

    Standard descending-m ordering except for d = 3, which uses the
    (0, +1, -1) order of the spin-1 realization.
    """
    sp_, sz = _standard_spin(d)
    if d == 3:
        perm = np.array([1, 0, 2])  # label order (0, +1, -1) from (+1, 0, -1)
        sp_ = sp_[np.ix_(perm, perm)]
        sz = sz[np.ix_(perm, perm)]
    return sp_, sp_.conj().T, sz


def spin_xyz(d: int):
    splus, sminus, sz = spin_matrices(d)
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    return sx, sy, sz


def _op(d, k, m, hermitian=False):
    return LocalOperator(d, k, m, hermitian=hermitian)


def _E(d, a, b):
    return standard_basis_element(d, a, b).matrix


# ---------------------------------------------------------------------------
# XXC family
# ---------------------------------------------------------------------------


def xxc_density(spec: ModelSpec) -> LocalOperator:
    """Hermitian two-site XXC bond operator."""
    N, g = spec.N, spec.gamma
    h = np.zeros((N * N, N * N), dtype=complex)
    for a in spec.A:
        for b in spec.B:
            eta = spec.eta(b)
            h += eta * np.kron(_E(N, a, b), _E(N, b, a))
            h += (1 / eta) * np.kron(_E(N, b, a), _E(N, a, b))
            h -= math.cos(g) * (np.kron(_E(N, a, a), _E(N, b, b)) + np.kron(_E(N, b, b), _E(N, a, a)))
    return _op(N, 2, h, hermitian=True)


def tl_generator(spec: ModelSpec) -> LocalOperator:
    """Non-Hermitian deformation ``e_j`` of the XXC bond operator."""
    N = spec.N
    proj_A = sum(_E(N, a, a) for a in spec.A)
    one = np.eye(N)
    shift = 1j * math.sin(spec.gamma) * (np.kron(proj_A, one) - np.kron(one, proj_A))
    return _op(N, 2, xxc_density(spec).matrix + shift)


def pair_projector(d: int, x: int, y: int, eta: complex) -> np.ndarray:
    """``1/2 (|xy> - eta |yx>)(<xy| - conj(eta) <yx|)`` on two sites."""
    v = np.zeros(d * d, dtype=complex)
    v[(x - 1) * d + (y - 1)] += 1.0
    v[(y - 1) * d + (x - 1)] -= eta
    return 0.5 * np.outer(v, v.conj())


def helix_projector(spec: ModelSpec) -> LocalOperator:
    """Two-site projector annihilating every two-site marginal of the helix states.

    Sums run over unordered pairs of distinct labels inside A and inside B.
    """
    N = spec.N
    P = np.zeros((N * N, N * N), dtype=complex)
    for a, a2 in combinations(spec.A, 2):
        P += pair_projector(N, a, a2, 1)
    for b, b2 in combinations(spec.B, 2):
        P += pair_projector(N, b, b2, spec.eta(b) * spec.eta(b2))
    return _op(N, 2, P, hermitian=True)


def field_operator(fields: Sequence[float]) -> LocalOperator:
    return _op(len(fields), 1, np.diag(np.asarray(fields, dtype=complex)), hermitian=True)


def perturbation_operator(
    projector: LocalOperator, perturbation: PerturbationSpec, L: int
) -> ManyBodyOperator:
    """``sum_j P_{j,j+1} h'_j P_{j,j+1}`` on the periodic chain."""
    d = projector.d
    dim = d**L
    total = None
    if perturbation.kind == "random_sx_neighbor":
        sx = _op(d, 1, spin_xyz(d)[0], hermitian=True)
        coeffs = perturbation.resolved_coefficients(L)
        terms = [(j, (j - 2) % L + 1, coeffs[j - 1] * sx) for j in range(1, L + 1)]
    else:
        terms = list(perturbation.terms)
    for j, site, op in terms:
        if op.d != d:
            raise ValueError("perturbation local dimension differs from the model")
        Pj = embed(projector, j, L, periodic=True).matrix
        hj = embed(op, site, L, periodic=True).matrix
        term = Pj @ hj @ Pj
        total = term if total is None else total + term
    if total is None:
        total = ManyBodyOperator(np.zeros((dim, dim))).matrix
    return ManyBodyOperator(total, hermitian=True)


def field_sum(fields: Sequence[float], L: int) -> ManyBodyOperator:
    return bond_sum(field_operator(fields), L)


def _assemble(density, projector, L, perturbation, fields) -> ManyBodyOperator:
    H = bond_sum(density, L)
    if perturbation is not None:
        H = H + perturbation_operator(projector, perturbation, L)
    if fields is not None:
        H = H + field_sum(fields, L)
    return ManyBodyOperator(H.matrix, hermitian=True)


def build_hamiltonian(
    spec: ModelSpec,
    perturbation: Optional[PerturbationSpec] = None,
    splitting: Optional[SplittingSpec] = None,
) -> ManyBodyOperator:
    """``H_XXC + sum_j P h'_j P + on-site splitting`` on the periodic chain."""
    fields = splitting.label_fields(spec.N) if splitting is not None else None
    return _assemble(xxc_density(spec), helix_projector(spec), spec.L, perturbation, fields)


def xxc_hamiltonian(spec: ModelSpec) -> ManyBodyOperator:
    return bond_sum(xxc_density(spec), spec.L)


def total_sz(L: int, d: int = 3) -> ManyBodyOperator:
    return bond_sum(_op(d, 1, spin_matrices(d)[2], hermitian=True), L)


# ---------------------------------------------------------------------------
# spinful fermions (N = 4)
# ---------------------------------------------------------------------------

FERMION_SPEC_LABELS = {"0": 1, "up": 2, "dn": 3, "d": 4}


def _jordan_wigner(n_modes: int):
    """Annihilators for ``n_modes`` fermionic modes on the occupation basis."""
    a = np.array([[0, 1], [0, 0]], dtype=complex)  # |n=0><n=1|
    z = np.diag([1.0, -1.0]).astype(complex)
    ops = []
    for m in range(n_modes):
        factors = [z] * m + [a] + [np.eye(2)] * (n_modes - m - 1)
        out = np.ones((1, 1), dtype=complex)
        for f in factors:
            out = np.kron(out, f)
        ops.append(out)
    return ops


def _fermion_to_labels() -> np.ndarray:
    """Permutation taking the 4-mode occupation basis to the two-site label basis.

    Modes are ordered site-major with up before down; a single site with
    occupations (n_up, n_dn) carries label 1 + {(0,0): 0, (1,0): 1, (0,1): 2, (1,1): 3}.
    """
    local = {(0, 0): 0, (1, 0): 1, (0, 1): 2, (1, 1): 3}
    perm = np.empty(16, dtype=np.int64)
    for occ in range(16):
        bits = [(occ >> (3 - i)) & 1 for i in range(4)]
        perm[occ] = local[(bits[0], bits[1])] * 4 + local[(bits[2], bits[3])]
    return perm


def _fermion_two_site():
    c = _jordan_wigner(4)  # 1up, 1dn, 2up, 2dn
    perm = _fermion_to_labels()
    P = np.zeros((16, 16))
    P[perm, np.arange(16)] = 1.0

    def to_labels(m):
        return P @ m @ P.T

    return [to_labels(x) for x in c]


def _V(nj, nk):
    return (nj - nk) ** 2 * (2 - nj - nk) ** 2


def fermionic_interaction(nj: int, nk: int) -> int:
    """Nearest-neighbour interaction ``(n_j - n_k)^2 (2 - n_j - n_k)^2``."""
    return _V(nj, nk)


def fermionic_density(gamma: float) -> LocalOperator:
    """Two-site spinful-fermion bond operator: hopping minus ``cos(gamma) V``."""
    c1u, c1d, c2u, c2d = _fermion_two_site()
    hop = np.zeros((16, 16), dtype=complex)
    for ca, cb in ((c1u, c2u), (c1d, c2d)):
        hop += ca.conj().T @ cb + cb.conj().T @ ca
    n1 = c1u.conj().T @ c1u + c1d.conj().T @ c1d
    n2 = c2u.conj().T @ c2u + c2d.conj().T @ c2d
    n1d, n2d = np.real(np.diag(n1)).round().astype(int), np.real(np.diag(n2)).round().astype(int)
    V = np.diag([_V(a, b) for a, b in zip(n1d, n2d)]).astype(complex)
    return _op(4, 2, hop - math.cos(gamma) * V, hermitian=True)


def two_site_fermion_number() -> np.ndarray:
    n_site = np.array([0, 1, 1, 2])
    return (n_site[:, None] + n_site[None, :]).ravel()


def fermionic_block(gamma: float, n: int) -> LocalOperator:
    """Restriction of :func:`fermionic_density` to total two-site fermion number ``n``."""
    if n not in range(5):
        raise ValueError("fermion number must be in 0..4")
    h = fermionic_density(gamma).matrix
    mask = two_site_fermion_number() == n
    out = np.zeros_like(h)
    out[np.ix_(mask, mask)] = h[np.ix_(mask, mask)]
    return _op(4, 2, out, hermitian=True)


def fermionic_spec(gamma: float, L: int, gamma_over_pi=None) -> ModelSpec:
    """N = 4 XXC spec equivalent to the fermionic model (A = {up, dn}, B = {0, d}, eta_d = -1)."""
    return ModelSpec(4, (2, 3), (1, 4), gamma, L, {1: 1, 4: -1},
                     Fraction(gamma_over_pi) if gamma_over_pi is not None else None)


def fermionic_perturbation(gamma: float, L: int) -> PerturbationSpec:
    """The n = 2 block on every bond, written as ``P h' P`` terms."""
    block = fermionic_block(gamma, 2)
    return PerturbationSpec(kind="custom", terms=tuple((j, j, block) for j in range(1, L + 1)))


# ---------------------------------------------------------------------------
# clock models
# ---------------------------------------------------------------------------


def _clock_check(M):
    if M < 2:
        raise ValueError("clock models need M >= 2")
    return math.pi / M


def clock_ladders(M: int):
    """``(S^+, tau)`` with ``S^+|a> = |a+1>`` (zero at the top) and ``tau|a> = e^{2 i a gamma}|a>``."""
    g = _clock_check(M)
    splus = np.zeros((M, M), dtype=complex)
    for a in range(M - 1):
        splus[a + 1, a] = 1.0
    tau = np.diag(np.exp(2j * np.arange(M) * g))
    return splus, tau


def clock_density(M: int) -> LocalOperator:
    """Two-site U(1)-invariant clock Hamiltonian density (Hermiticity verified)."""
    g = _clock_check(M)
    splus, tau = clock_ladders(M)
    sminus = splus.conj().T
    one = np.eye(M)
    h = np.zeros((M * M, M * M), dtype=complex)
    for a in range(1, M):
        hop = M * (-1) ** a * np.linalg.matrix_power(np.kron(sminus, splus), a)
        ta = np.linalg.matrix_power(tau, a)
        diag = (M / 2 - a) * np.exp(1j * a * g) * (np.kron(ta, one) + np.kron(one, ta) - 2 * np.eye(M * M))
        h += (hop + hop.conj().T + diag) / (2 * math.sin(a * g))
    return _op(M, 2, h, hermitian=True)


def clock_charge(M: int) -> LocalOperator:
    """Single-site U(1) charge ``Q_j``."""
    g = _clock_check(M)
    _, tau = clock_ladders(M)
    q = sum(np.exp(1j * a * g) * np.linalg.matrix_power(tau, a) / (2j * math.sin(a * g)) for a in range(1, M))
    return _op(M, 1, q, hermitian=True)


def clock_deformed_density(M: int) -> LocalOperator:
    """Local annihilator ``h - i M (Q_j - Q_{j+1}) / 2`` of the clock helix states.

    The sign is fixed by requiring the two-site marginals of the helix
    (phase ratio ``e^{-i p (pi - gamma)}``) to lie in the null space.
    """
    q = clock_charge(M).matrix
    one = np.eye(M)
    shift = -1j * M * (np.kron(q, one) - np.kron(one, q)) / 2
    return _op(M, 2, clock_density(M).matrix + shift)


def clock_projector(M: int) -> LocalOperator:
    """Two-site projector orthogonal to every two-site marginal of the clock helix.

    Marginals of the helix carry ``|p, q> : |q, p>`` in the fixed ratio
    ``1 : e^{-i (q - p)(pi - gamma)}``.
    """
    theta = math.pi - _clock_check(M)
    P = np.zeros((M * M, M * M), dtype=complex)
    for p, q in combinations(range(M), 2):
        P += pair_projector(M, p + 1, q + 1, np.exp(-1j * (q - p) * theta))
    return _op(M, 2, P, hermitian=True)


def build_clock_hamiltonian(
    M: int,
    L: int,
    perturbation: Optional[PerturbationSpec] = None,
    fields: Optional[Sequence[float]] = None,
) -> ManyBodyOperator:
    return _assemble(clock_density(M), clock_projector(M), L, perturbation, fields)


# ---------------------------------------------------------------------------
# supplementary library
# ---------------------------------------------------------------------------

LIBRARY_NAMES = ("dmi_x", "dmi_y", "dmi_z", "twisted_dmi", "spin1_xy_annihilator", "eta_dmi", "aklt")


def _half_spins():
    sx, sy, sz = spin_xyz(2)
    return {"x": sx, "y": sy, "z": sz}


def dmi_density(axis: str) -> LocalOperator:
    """``(S_j x S_{j+1}) . axis`` for spin-1/2."""
    S = _half_spins()
    cyc = {"x": ("y", "z"), "y": ("z", "x"), "z": ("x", "y")}
    u, v = cyc[axis]
    return _op(2, 2, np.kron(S[u], S[v]) - np.kron(S[v], S[u]), hermitian=True)


def dmi_deformed_density(axis: str) -> LocalOperator:
    """``h - (i/2)(S^axis_j - S^axis_{j+1})``, a local annihilator of the Dicke tower."""
    S = _half_spins()[axis]
    one = np.eye(2)
    return _op(2, 2, dmi_density(axis).matrix - 0.5j * (np.kron(S, one) - np.kron(one, S)))


def twisted_dmi_density(gamma: float) -> LocalOperator:
    """z-DMI bond after the gauge ``prod_j exp(-i j gamma S^z_j)``."""
    up_dn = np.kron(_E(2, 1, 2), _E(2, 2, 1))  # |ud><du|
    h = 0.5j * (np.exp(1j * gamma) * up_dn - np.exp(-1j * gamma) * up_dn.conj().T)
    return _op(2, 2, h, hermitian=True)


def twisted_dmi_deformed_density(gamma: float) -> LocalOperator:
    Sz = _half_spins()["z"]
    one = np.eye(2)
    return _op(2, 2, twisted_dmi_density(gamma).matrix - 0.5j * (np.kron(Sz, one) - np.kron(one, Sz)))


def _spin1_ket(m1, m2):
    lab = {0: 1, 1: 2, -1: 3}
    v = np.zeros(9, dtype=complex)
    v[(lab[m1] - 1) * 3 + lab[m2] - 1] = 1.0
    return v


def spin1_xy_density() -> LocalOperator:
    """``i(|-1,1><1,-1| - |1,-1><-1,1|)``."""
    a, b = _spin1_ket(-1, 1), _spin1_ket(1, -1)
    return _op(3, 2, 1j * (np.outer(a, b) - np.outer(b, a)), hermitian=True)


def spin1_xy_deformed_density() -> LocalOperator:
    sz = np.diag(SPIN1_SZ).astype(complex)
    f = -sz - sz @ sz
    one = np.eye(3)
    return _op(3, 2, spin1_xy_density().matrix + 0.5j * (np.kron(f, one) - np.kron(one, f)))


def eta_dmi_density() -> LocalOperator:
    """``i(c+_{j+1,up} c+_{j+1,dn} c_{j,dn} c_{j,up} - h.c.)`` in the (0, up, dn, d) basis.

    Pair operators are bosonic, so the two-site matrix is ``i(|0,d><d,0| - |d,0><0,d|)``.
    """
    c1u, c1d, c2u, c2d = _fermion_two_site()
    hop = c2u.conj().T @ c2d.conj().T @ c1d @ c1u
    return _op(4, 2, 1j * (hop - hop.conj().T), hermitian=True)


def eta_dmi_deformed_density() -> LocalOperator:
    D = np.diag([0, 0, 0, 1]).astype(complex)
    one = np.eye(4)
    return _op(4, 2, eta_dmi_density().matrix + 1j * (np.kron(one, D) - np.kron(D, one)))


def aklt_density() -> LocalOperator:
    """Projector of two spin-1's onto total spin 2."""
    sx, sy, sz = spin_xyz(3)
    SS = np.kron(sx, sx) + np.kron(sy, sy) + np.kron(sz, sz)
    P2 = 0.5 * SS + SS @ SS / 6 + np.eye(9) / 3
    return _op(3, 2, P2, hermitian=True)


def library_density(name: str, **params) -> LocalOperator:
    builders = {
        "dmi_x": lambda: dmi_density("x"),
        "dmi_y": lambda: dmi_density("y"),
        "dmi_z": lambda: dmi_density("z"),
        "twisted_dmi": lambda: twisted_dmi_density(params["gamma"]),
        "spin1_xy_annihilator": spin1_xy_density,
        "eta_dmi": eta_dmi_density,
        "aklt": aklt_density,
    }
    if name not in builders:
        raise ValueError(f"unknown library model {name!r}")
    return builders[name]()


def library_deformed_density(name: str, **params) -> Optional[LocalOperator]:
    """Non-Hermitian local annihilator summing to the same periodic Hamiltonian.

    Returns ``None`` for ``aklt``, whose tower is only annihilated as a whole.
    """
    builders = {
        "dmi_x": lambda: dmi_deformed_density("x"),
        "dmi_y": lambda: dmi_deformed_density("y"),
        "dmi_z": lambda: dmi_deformed_density("z"),
        "twisted_dmi": lambda: twisted_dmi_deformed_density(params["gamma"]),
        "spin1_xy_annihilator": spin1_xy_deformed_density,
        "eta_dmi": eta_dmi_deformed_density,
        "aklt": lambda: None,
    }
    if name not in builders:
        raise ValueError(f"unknown library model {name!r}")
    return builders[name]()


def library_hamiltonian(name: str, L: int, params: Optional[dict] = None) -> ManyBodyOperator:
    """Periodic-chain sum of the named supplementary density."""
    density = library_density(name, **(params or {}))
    if L < 2:
        raise ValueError("chain too short")
    return bond_sum(density, L)


def aklt_tower_annihilator(L: int) -> ManyBodyOperator:
    """``H_AKLT - S^z_tot``."""
    return library_hamiltonian("aklt", L) - total_sz(L, 3)
