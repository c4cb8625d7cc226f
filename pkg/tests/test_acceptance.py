"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import csv
import json
import math

import numpy as np
import pytest

from scarlab.annihilators import (
    singlet_projector,
    solve_annihilators,
    verify_extensive_annihilation,
    verify_temperley_lieb,
)
from scarlab.entanglement import bipartite_entropy, entropy_scaling, scaling_lengths, scar_entropy_analytic
from scarlab.fragmentation import (
    INTEGRABLE,
    invariance_violations,
    label_sets,
    verify_xxz_reduction,
)
from scarlab.hilbert import BasisIndex, residual
from scarlab.models import (
    ModelSpec,
    PerturbationSpec,
    SplittingSpec,
    build_clock_hamiltonian,
    build_hamiltonian,
    dmi_deformed_density,
    fermionic_fields,
    fermionic_perturbation,
    fermionic_spec,
    tl_generator,
)
from scarlab.scars import (
    clock_tower,
    compositions,
    scar_tower,
    supplementary_operator,
    supplementary_tower,
    unfolded_scar,
)


def random_spec(rng, N, gamma):
    labels = rng.permutation(np.arange(1, N + 1))
    k = int(rng.integers(1, N))
    A, B = tuple(int(x) for x in labels[:k]), tuple(int(x) for x in labels[k:])
    twists = {b: int(rng.choice([1, -1])) for b in B}
    return ModelSpec(N, A, B, gamma, 4, twists)


def test_criterion_1_temperley_lieb(acceptance):
    rng = np.random.default_rng(1)
    worst = 0.0
    for N in (2, 3, 4):
        for gamma in rng.uniform(0.1, math.pi - 0.1, size=20):
            rep = verify_temperley_lieb(tl_generator(random_spec(rng, N, gamma)), gamma)
            worst = max(worst, rep.max_deviation)
    assert acceptance(1, worst < 1e-10, f"max TL deviation {worst:.2e} (tol 1e-10)")


def _tower_check(H, T):
    res = max(residual(H, s, e) for s, e in zip(T.states, T.energies))
    return res, T.orthonormality_error(), len(T)


def test_criterion_2_scar_eigenstates(acceptance):
    results = {}
    spec = ModelSpec.rational(3, (1,), (2, 3), 2, 9, 9)
    split = SplittingSpec()
    results["N=3 L=9"] = _tower_check(build_hamiltonian(spec, PerturbationSpec(seed=42), split),
                                      scar_tower(spec, split)) + (55,)
    g = math.pi / 3
    fspec = fermionic_spec(g, 6)
    fsplit = SplittingSpec(fields=fermionic_fields(0.23, 0.41, 0.37))
    results["N=4 L=6"] = _tower_check(build_hamiltonian(fspec, fermionic_perturbation(g, 6), fsplit),
                                      scar_tower(fspec, fsplit)) + (84,)
    cf = (0.0, 0.3, 0.6)
    results["clock M=3 L=6"] = _tower_check(build_clock_hamiltonian(3, 6, PerturbationSpec(seed=42), cf),
                                            clock_tower(3, 6, cf)) + (13,)
    ok = all(r < 1e-10 and o < 1e-10 and n == want for r, o, n, want in results.values())
    detail = "; ".join(f"{k}: residual {r:.1e}, ortho {o:.1e}, count {n}/{w}" for k, (r, o, n, w) in results.items())
    assert acceptance(2, ok, detail)


def test_criterion_3_fragmentation(acceptance):
    worst, leaks, partition_ok, gauge_cases = 0.0, 0, True, 0
    cases = [
        ModelSpec(3, (1,), (2, 3), 0.8, 5),
        ModelSpec(3, (1,), (2, 3), 0.8, 6, {3: -1}),
        ModelSpec(4, (1, 2), (3, 4), 1.3, 4, {4: -1}),
        ModelSpec(4, (2, 3), (1, 4), math.pi / 3, 6, {4: -1}),
    ]
    for spec in cases:
        split = SplittingSpec(fields=tuple(0.1 * np.arange(1, spec.N + 1)))
        f = split.label_fields(spec.N)
        H = build_hamiltonian(spec, PerturbationSpec(seed=3), split)
        static = label_sets(BasisIndex(spec.N, spec.L), spec.A, spec.B)
        partition_ok &= static.total_dim == spec.N**spec.L and static.is_partition()
        for sec in static.of_kind(INTEGRABLE):
            a, b = sec.labels
            eta = spec.eta(b)
            gauge_cases += eta == -1
            worst = max(worst, verify_xxz_reduction(H, sec, spec.gamma, eta, (f[a - 1], f[b - 1])).max_deviation)
        leaks += invariance_violations(H, static)
    ok = partition_ok and worst < 1e-12 and leaks == 0 and gauge_cases > 0
    assert acceptance(3, ok, f"partition {partition_ok}, XXZ deviation {worst:.1e} "
                             f"({gauge_cases} gauged sectors), cross-sector elements {leaks}")


@pytest.mark.slow
def test_criterion_4_chaos(acceptance, l8_run):
    _, out = l8_run
    stats = json.loads((out / "rstat.json").read_text())
    r, ks = stats["r_mean"], stats["ks_distance"]
    ok = 0.50 <= r <= 0.55 and ks < 0.1
    assert acceptance(4, ok, f"<r> = {r:.4f} in [0.50, 0.55], KS = {ks:.4f} < 0.1 "
                             f"({stats['n_levels']} levels, {stats['sector']})")


def test_criterion_5_entanglement(acceptance):
    worst = 0.0
    for L in range(2, 11):
        spec = ModelSpec(3, (1,), (2, 3), 0.5, L)
        for m in compositions(3, L):
            psi = unfolded_scar(spec, m)
            for cut in range(1, L):
                worst = max(worst, abs(scar_entropy_analytic(m[1], m[2], L, cut) - bipartite_entropy(psi, cut, 3)))
    lengths = scaling_lengths(3072)
    s1 = entropy_scaling("1/3,1/3,1/3", lengths).slope
    s2 = entropy_scaling("1/2,0,1/2", lengths).slope
    ok = worst < 1e-10 and 0.9 <= s1 <= 1.1 and 0.4 <= s2 <= 0.6
    assert acceptance(5, ok, f"analytic vs Schmidt {worst:.1e} (L <= 10); slopes {s1:.4f}, {s2:.4f}")


@pytest.mark.slow
def test_criterion_6_atypicality(acceptance, l8_run):
    _, out = l8_run
    rows = list(csv.DictReader(open(out / "scar_entropy.csv")))
    bad = [r for r in rows if not float(r["entropy"]) < float(r["thermal_median"])]
    ok = len(rows) > 0 and not bad
    assert acceptance(6, ok, f"{len(rows)} flagged scars, {len(bad)} at or above their decile median")


def test_criterion_7_annihilator_solver(acceptance):
    sol = solve_annihilators(singlet_projector())
    span = max(sol.span_residual(dmi_deformed_density(a)) for a in "xyz")
    herm = max(sol.checks["hermiticity"][str(L)] for L in (4, 5))
    h2 = sol.checks["h2_norm"]
    ok = sol.dim == 3 and span < 1e-10 and h2 < 1e-12 and herm < 1e-10
    assert acceptance(7, ok, f"dimension {sol.dim}, DMI span residual {span:.1e}, "
                             f"H2 norm {h2:.1e}, hermiticity L=4,5 {herm:.1e}")


def test_criterion_8_supplementary(acceptance):
    L = 6
    res = {name: verify_extensive_annihilation(supplementary_operator(name, L),
                                               supplementary_tower(name, L)).max_residual
           for name in ("dicke", "twisted_helix", "spin1_xy", "eta_pairing", "aklt")}
    ok = all(v < (1e-8 if k == "aklt" else 1e-10) for k, v in res.items())
    assert acceptance(8, ok, ", ".join(f"{k} {v:.1e}" for k, v in res.items()))
