"""Temperley-Lieb checks, local annihilation checks and the annihilator solver.

The solver looks for two-site operators ``h = (1 - P) X P`` whose periodic
sums are Hermitian. Such an ``h`` kills every state whose two-site marginals
lie in ``range(1 - P)``, and the Hermitian sum is then a Hamiltonian with
those states as zero modes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hilbert import LocalOperator, ManyBodyOperator, StateVector, embed

TL_TOL = 1e-10
ANNIHILATION_TOL = 1e-10
NULL_THRESHOLD = 1e-10
CONSTRAINT_LENGTHS = (2, 3)
VERIFY_LENGTHS = (4, 5)


def _maxabs(m) -> float:
    return float(np.max(np.abs(m), initial=0.0))


# ---------------------------------------------------------------------------
# Temperley-Lieb relations
# ---------------------------------------------------------------------------


@dataclass
class TLReport:
    gamma: float
    quadratic: float  # e^2 + 2 cos(gamma) e
    e1e2e1: float
    e2e1e2: float
    commute: float  # [e1, e3] on four sites
    tol: float = TL_TOL

    @property
    def max_deviation(self) -> float:
        return max(self.quadratic, self.e1e2e1, self.e2e1e2, self.commute)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "quadratic": self.quadratic, "e1e2e1": self.e1e2e1,
                "e2e1e2": self.e2e1e2, "commute": self.commute, "passed": self.passed}


def verify_temperley_lieb(e: LocalOperator, gamma: float, tol: float = TL_TOL) -> TLReport:
    """Deviations of ``e`` from the Temperley-Lieb relations with loop weight ``-2 cos(gamma)``."""
    if e.k != 2:
        raise ValueError("Temperley-Lieb check needs a two-site operator")
    d, m = e.d, e.matrix
    one = np.eye(d)
    quad = _maxabs(m @ m + 2 * math.cos(gamma) * m)
    e1, e2 = np.kron(m, one), np.kron(one, m)
    a = _maxabs(e1 @ e2 @ e1 - e1)
    b = _maxabs(e2 @ e1 @ e2 - e2)
    f1, f3 = np.kron(m, np.eye(d * d)), np.kron(np.eye(d * d), m)
    c = _maxabs(f1 @ f3 - f3 @ f1)
    return TLReport(gamma, quad, a, b, c, tol)


# ---------------------------------------------------------------------------
# annihilation checks
# ---------------------------------------------------------------------------


@dataclass
class AnnihilationReport:
    max_residual: float
    worst: tuple  # (bond, state position) or (state position,)
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def verify_local_annihilation(h_tilde: LocalOperator, states: Sequence[StateVector], L: int,
                              periodic: bool = True, tol: float = ANNIHILATION_TOL) -> AnnihilationReport:
    """Largest ``||h_{j,j+1}|psi>|| / ||psi||`` over bonds and states."""
    if h_tilde.k != 2:
        raise ValueError("local annihilation check needs a two-site operator")
    bonds = range(1, L + 1) if periodic else range(1, L)
    worst, where = 0.0, ()
    for j in bonds:
        op = embed(h_tilde, j, L, periodic=periodic).matrix
        for n, s in enumerate(states):
            r = float(np.linalg.norm(op @ s.amplitudes)) / s.norm
            if r >= worst:
                worst, where = r, (j, n)
    return AnnihilationReport(worst, where, tol)


def verify_extensive_annihilation(H: ManyBodyOperator, tower, tol: float = ANNIHILATION_TOL) -> AnnihilationReport:
    """Largest ``||H|S>|| / ||S||`` over the states of ``tower``."""
    states = tower.states if hasattr(tower, "states") else list(tower)
    worst, where = 0.0, ()
    for n, s in enumerate(states):
        if s.dim != H.dim:
            raise ValueError("tower and operator dimensions differ")
        r = float(np.linalg.norm(H.matrix @ s.amplitudes)) / s.norm
        if r >= worst:
            worst, where = r, (n,)
    return AnnihilationReport(worst, where, tol)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


@dataclass
class AnnihilatorSolution:
    """Real-linear basis of ``{h = (1-P) X P : periodic sums of h are Hermitian}``.

    The basis is orthonormal in the real Frobenius inner product
    ``Re tr(A^dagger B)``.
    """

    d: int
    basis: list
    projector: LocalOperator
    singular_values: np.ndarray
    checks: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, target: LocalOperator) -> np.ndarray:
        """Real coefficients of the orthogonal projection of ``target`` onto the span."""
        t = target.matrix.ravel()
        return np.array([np.vdot(b.matrix.ravel(), t).real for b in self.basis])

    def span_residual(self, target: LocalOperator) -> float:
        """``||target - proj(target)|| / ||target||`` in the Frobenius norm."""
        t = target.matrix
        approx = sum((c * b.matrix for c, b in zip(self.project(target), self.basis)), np.zeros_like(t))
        nrm = np.linalg.norm(t)
        return float(np.linalg.norm(t - approx) / (nrm if nrm > 0 else 1.0))

    def to_json(self, path=None) -> dict:
        payload = {
            "d": self.d,
            "solution_dim": self.dim,
            "singular_values": [float(s) for s in self.singular_values],
            "solutions": [[[[float(z.real), float(z.imag)] for z in row] for row in b.matrix] for b in self.basis],
            "checks": self.checks,
        }
        if path is not None:
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=1)
        return payload


def _periodic_sum(m: np.ndarray, d: int, L: int) -> np.ndarray:
    op = LocalOperator(d, 2, m)
    total = embed(op, 1, L, periodic=True).matrix
    for j in range(2, L + 1):
        total = total + embed(op, j, L, periodic=True).matrix
    return total.toarray()


def _antihermitian_part(m: np.ndarray, d: int, L: int) -> np.ndarray:
    S = _periodic_sum(m, d, L)
    return S - S.conj().T


def check_projector(P: LocalOperator, tol: float = 1e-10) -> None:
    if P.k != 2:
        raise ValueError("projector must act on two sites")
    m = P.matrix
    if _maxabs(m - m.conj().T) > tol:
        raise ValueError("projector is not hermitian")
    if _maxabs(m @ m - m) > tol:
        raise ValueError("projector is not idempotent")


def solve_annihilators(P: LocalOperator, threshold: float = NULL_THRESHOLD,
                       constraint_lengths: Sequence[int] = CONSTRAINT_LENGTHS,
                       verify_lengths: Sequence[int] = VERIFY_LENGTHS) -> AnnihilatorSolution:
    """All two-site ``h = (1 - P) X P`` whose periodic sums are Hermitian.

    Real and imaginary parts of ``X`` in the basis ``|u_i><v_j|`` (``u``
    spanning ``range(1 - P)``, ``v`` spanning ``range(P)``) are the unknowns.
    The Hermiticity conditions on the listed periodic lengths form a real
    linear map whose null space (singular values below ``threshold`` times the
    largest) is returned. Each solution is re-checked on ``verify_lengths``.
    """
    check_projector(P)
    d = P.d
    w, vecs = np.linalg.eigh(P.matrix)
    U = vecs[:, w < 0.5]
    V = vecs[:, w >= 0.5]
    gens = []
    for i in range(U.shape[1]):
        for j in range(V.shape[1]):
            E = np.outer(U[:, i], V[:, j].conj())
            gens.append(E)
            gens.append(1j * E)
    if not gens:
        return AnnihilatorSolution(d, [], P, np.zeros(0), {"lengths": list(verify_lengths)})
    cols = []
    for g in gens:
        parts = [_antihermitian_part(g, d, L).ravel() for L in constraint_lengths]
        c = np.concatenate(parts)
        cols.append(np.concatenate([c.real, c.imag]))
    A = np.column_stack(cols)
    _, sv, vt = np.linalg.svd(A, full_matrices=True)
    top = sv[0] if sv.size and sv[0] > 0 else 1.0
    rank = int(np.sum(sv > threshold * top))
    null = vt[rank:]
    basis = []
    for coeffs in null:
        m = sum(c * g for c, g in zip(coeffs, gens))
        basis.append(LocalOperator(d, 2, m))
    sol = AnnihilatorSolution(d, basis, P, sv)
    sol.checks = solution_checks(sol, verify_lengths)
    return sol


def solution_checks(sol: AnnihilatorSolution, lengths: Sequence[int] = VERIFY_LENGTHS) -> dict:
    """Constraint residuals and Hermiticity of periodic sums for every solution."""
    P = sol.projector.matrix
    one = np.eye(P.shape[0])
    out = {"right_kernel": 0.0, "left_kernel": 0.0, "h2_norm": 0.0,
           "hermiticity": {str(L): 0.0 for L in lengths}}
    for b in sol.basis:
        m = b.matrix
        out["right_kernel"] = max(out["right_kernel"], _maxabs(m @ (one - P)))
        out["left_kernel"] = max(out["left_kernel"], _maxabs(P @ m))
        out["h2_norm"] = max(out["h2_norm"], _maxabs(_periodic_sum(m, sol.d, 2)))
        for L in lengths:
            key = str(L)
            out["hermiticity"][key] = max(out["hermiticity"][key], _maxabs(_antihermitian_part(m, sol.d, L)))
    out["lengths"] = list(lengths)
    return out


# ---------------------------------------------------------------------------
# named projectors and file input
# ---------------------------------------------------------------------------


def singlet_projector() -> LocalOperator:
    """Projector on the two-site spin-1/2 singlet."""
    s = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    return LocalOperator(2, 2, np.outer(s, s.conj()))


def helix_complement_projector(gamma: float) -> LocalOperator:
    """Projector orthogonal to every two-site marginal of the spin-1/2 helix at angle ``gamma``.

    The marginals span ``|uu>``, ``|dd>`` and ``|ud> + e^{-i gamma}|du>``; the
    complement is ``|ud> - e^{-i gamma}|du>``.
    """
    v = np.array([0, 1, -np.exp(-1j * gamma), 0], dtype=complex) / math.sqrt(2)
    return LocalOperator(2, 2, np.outer(v, v.conj()))


def named_projector(name: str, **params) -> LocalOperator:
    if name == "singlet":
        return singlet_projector()
    if name == "helix_complement":
        return helix_complement_projector(float(params["gamma"]))
    if name == "zero":
        d = int(params.get("d", 2))
        return LocalOperator(d, 2, np.zeros((d * d, d * d)))
    raise ValueError(f"unknown projector {name!r}")


def projector_from_json(payload: dict) -> LocalOperator:
    """Projector from ``{"named": ..., ...}`` or ``{"d": d, "matrix": [[[re, im], ...], ...]}``."""
    if "named" in payload:
        params = {k: v for k, v in payload.items() if k != "named"}
        if "gamma" in params and isinstance(params["gamma"], dict):
            g = params["gamma"]
            params["gamma"] = math.pi * g["num"] / g["den"]
        return named_projector(payload["named"], **params)
    d = int(payload["d"])
    raw = np.asarray(payload["matrix"], dtype=float)
    if raw.shape != (d * d, d * d, 2):
        raise ValueError(f"matrix must have shape ({d * d}, {d * d}, 2)")
    return LocalOperator(d, 2, raw[..., 0] + 1j * raw[..., 1])
