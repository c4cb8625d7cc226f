import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from scarlab.fragmentation import xxz_oracle
from scarlab.hilbert import BasisIndex, ManyBodyOperator
from scarlab.spectral import (
    EigenstateRecord,
    TooFewLevels,
    collapse_degeneracies,
    decile_atypicality,
    eigensolve_sector,
    energy_clusters,
    goe_cdf,
    goe_surmise,
    ks_distance_goe,
    r_statistic,
    scar_overlap,
    spacing_histogram,
    spectral_report,
    unfold,
    unfolded_spacings,
    write_eigenstates_csv,
    write_pofs_csv,
    write_rstat_json,
    write_spectrum_csv,
)

POISSON_R = 2 * math.log(2) - 1


def surmise_samples(n, seed=0):
    u = np.random.default_rng(seed).uniform(size=n)
    return np.sqrt(-4 * np.log1p(-u) / math.pi)


class TestEigensolve:
    def test_sigma_x(self):
        w, v = eigensolve_sector(ManyBodyOperator(np.array([[0, 1], [1, 0]])))
        assert np.allclose(w, [-1, 1])
        assert np.allclose(np.abs(v), 1 / math.sqrt(2))

    def test_xxz_sector_power_sums(self):
        H = xxz_oracle(4, 0.6)
        ups = (BasisIndex(2, 4).digits() == 0).sum(axis=1)
        idx = np.nonzero(ups == 2)[0]
        w, v = eigensolve_sector(ManyBodyOperator(H), idx)
        block = H[np.ix_(idx, idx)]
        # power sums up to the dimension fix the spectrum
        Mk = np.eye(idx.size)
        for k in range(1, idx.size + 1):
            Mk = Mk @ block
            assert np.isclose(np.trace(Mk).real, np.sum(w**k), rtol=1e-10, atol=1e-10)
        assert np.allclose(v.conj().T @ v, np.eye(idx.size), atol=1e-12)

    def test_complex_hermitian(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        M = a + a.conj().T
        w, v = eigensolve_sector(ManyBodyOperator(M))
        assert np.allclose(M @ v, v * w)

    def test_rejects_nonhermitian(self):
        with pytest.raises(ValueError):
            eigensolve_sector(ManyBodyOperator(np.array([[0, 1], [0, 0]])))


class TestLevelStatistics:
    def test_equal_spacing(self):
        assert np.isclose(r_statistic(np.arange(200.0)), 1.0)

    def test_poisson(self):
        e = np.cumsum(np.random.default_rng(1).exponential(size=100_000))
        assert abs(r_statistic(e, 1.0) - POISSON_R) < 0.005

    def test_goe_matrices(self):
        rng = np.random.default_rng(2)
        rs = []
        for _ in range(10):
            a = rng.normal(size=(300, 300))
            rs.append(r_statistic(np.linalg.eigvalsh(a + a.T), 0.5))
        assert abs(np.mean(rs) - 0.5307) < 0.01

    @given(st.floats(0.1, 100), st.floats(-50, 50))
    def test_affine_invariance(self, a, b):
        e = np.sort(np.random.default_rng(4).normal(size=300))
        assert np.isclose(r_statistic(a * e + b), r_statistic(e))

    def test_degeneracy_collapse(self):
        e = np.array([0.0, 1.0, 1.0 + 1e-15, 2.0])
        assert collapse_degeneracies(e).size == 3

    def test_too_few_levels(self):
        with pytest.raises(TooFewLevels):
            r_statistic(np.arange(20.0))

    def test_surmise_normalized(self):
        assert abs(integrate.quad(goe_surmise, 0, np.inf)[0] - 1) < 1e-10
        assert abs(integrate.quad(lambda s: s * goe_surmise(s), 0, np.inf)[0] - 1) < 1e-10
        assert np.isclose(goe_cdf(1.3), integrate.quad(goe_surmise, 0, 1.3)[0])

    def test_unfolded_mean_one(self):
        e = np.sort(np.random.default_rng(5).normal(size=1000))
        s, deg = unfolded_spacings(e)
        assert np.isclose(s.mean(), 1.0) and 1 <= deg <= 7

    def test_unfold_monotone(self):
        x = np.sort(np.random.default_rng(6).uniform(size=500))
        u, _ = unfold(x, 7)
        assert np.all(np.diff(u) > 0)

    def test_ks_distance(self):
        assert ks_distance_goe(surmise_samples(20_000)) < 0.02
        assert ks_distance_goe(np.random.default_rng(7).exponential(size=20_000)) > 0.1

    def test_histogram_integrates_to_one(self):
        e = np.cumsum(surmise_samples(3000, 8))
        h = spacing_histogram(e, bins=30)
        assert np.isclose(h.integral(), 1.0)
        assert np.allclose(h.goe_reference, goe_surmise(h.centers))

    def test_report(self):
        e = np.cumsum(surmise_samples(2000, 9))
        rep = spectral_report(e)
        assert rep.ks_distance < 0.1 and 0.45 < rep.r_mean < 0.6
        assert rep.unfolding["degree"] >= 1


class TestScarOverlap:
    def _unitary(self, n, seed):
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        return q

    def test_exact_scar(self):
        U = self._unitary(30, 0)
        tower = U[:, :3]
        ov = scar_overlap(np.arange(30.0), U, tower)
        assert np.allclose(ov.overlaps[:3], 1) and np.allclose(ov.overlaps[3:], 0, atol=1e-12)
        assert ov.flags.sum() == 3

    def test_trace_identity(self):
        U = self._unitary(40, 1)
        tower = self._unitary(40, 2)[:, :5] @ np.random.default_rng(0).normal(size=(5, 5))
        ov = scar_overlap(np.arange(40.0), U, tower)
        assert np.isclose(ov.overlaps.sum(), 5)

    def test_rank_deficient_tower(self):
        U = self._unitary(20, 3)
        tower = np.column_stack([U[:, 0], U[:, 0], U[:, 1]])
        ov = scar_overlap(np.arange(20.0), U, tower)
        assert ov.flags.sum() == 2

    def test_random_overlap_scale(self):
        D, K = 400, 8
        U = self._unitary(D, 4)
        tower = self._unitary(D, 5)[:, :K]
        ov = scar_overlap(np.arange(float(D)), U, tower)
        assert abs(ov.overlaps.mean() - K / D) < 1e-12
        assert ov.overlaps.max() < 0.2

    def test_degenerate_cluster_rotated(self):
        U = self._unitary(10, 6)
        mixed = U.copy()
        mixed[:, 0] = (U[:, 0] + U[:, 1]) / math.sqrt(2)
        mixed[:, 1] = (U[:, 0] - U[:, 1]) / math.sqrt(2)
        energies = np.array([0.0, 0.0] + list(range(1, 9)), dtype=float)
        ov = scar_overlap(energies, mixed, U[:, :1])
        assert np.isclose(ov.overlaps[0], 1) and np.isclose(ov.overlaps[1], 0, atol=1e-12)
        assert np.isclose(abs(np.vdot(ov.vectors[:, 0], U[:, 0])), 1)

    def test_clusters(self):
        assert energy_clusters(np.array([0, 1e-12, 1, 2, 2])) == [(0, 2), (2, 3), (3, 5)]


class TestAtypicality:
    def test_flagged_records_compared(self):
        rng = np.random.default_rng(0)
        recs = [EigenstateRecord(float(e), 0.0, 2.0 + 0.01 * rng.normal(), 0.0, False, "bulk")
                for e in np.linspace(-1, 1, 200)]
        recs.append(EigenstateRecord(0.1, 0.0, 0.5, 1.0, True, "bulk"))
        recs.append(EigenstateRecord(5.0, 0.0, 0.0, 1.0, True, "other"))
        out = decile_atypicality(recs, "bulk")
        assert len(out) == 2
        assert all(ent < med for _, ent, _, med in out)
        assert out[1][2] == 9


class TestWriters:
    def test_roundtrip(self, tmp_path):
        e = np.cumsum(surmise_samples(500, 10))
        rep = spectral_report(e)
        write_spectrum_csv(e, tmp_path / "s.csv")
        write_rstat_json(rep, tmp_path / "r.json", {"sector": "x"})
        write_pofs_csv(rep.histogram, tmp_path / "p.csv")
        write_eigenstates_csv([EigenstateRecord(1.0, 0.5, 0.3, 1.0, True)], tmp_path / "e.csv")
        rows = list(csv.reader(open(tmp_path / "s.csv")))
        assert rows[0] == ["index", "energy"] and float(rows[1][1]) == e[0]
        meta = json.loads((tmp_path / "r.json").read_text())
        assert meta["sector"] == "x" and np.isclose(meta["r_mean"], rep.r_mean)
        assert len(list(csv.reader(open(tmp_path / "p.csv")))) == 41
        assert list(csv.reader(open(tmp_path / "e.csv")))[1][-1] == "1"
