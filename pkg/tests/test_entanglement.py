import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from scarlab.entanglement import (
    UnnormalizedStateWarning,
    batch_entropies,
    bipartite_entropy,
    entropy_decomposition,
    entropy_scaling,
    parse_fractions,
    reduced_spectrum,
    scaling_lengths,
    scar_entropy_analytic,
    schmidt_values,
    write_scaling_csv,
)
from scarlab.hilbert import ket
from scarlab.models import ModelSpec
from scarlab.scars import compositions, unfolded_scar


def occupations(L):
    return st.tuples(st.integers(0, L), st.integers(0, L)).filter(lambda m: m[0] + m[1] <= L)


class TestNumerical:
    def test_product_state(self):
        assert bipartite_entropy(ket(3, 1, 2, 3, 1), 2, 3) == 0

    def test_singlet(self):
        s = (ket(2, 1, 2) - ket(2, 2, 1)) / math.sqrt(2)
        assert np.isclose(bipartite_entropy(s, 1, 2), math.log(2))

    def test_two_site_scar(self):
        s = unfolded_scar(ModelSpec(3, (1,), (2, 3), 0.4, 2), (1, 0, 1))
        assert np.isclose(bipartite_entropy(s, 1, 3), math.log(2))

    def test_unnormalized_warns(self):
        with pytest.warns(UnnormalizedStateWarning):
            p = schmidt_values(2 * ket(2, 1, 1), 1, 2)
        assert np.isclose(p.sum(), 1)

    def test_bad_cut(self):
        with pytest.raises(ValueError):
            bipartite_entropy(ket(2, 1, 1), 2, 2)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        V = rng.normal(size=(81, 7)) + 1j * rng.normal(size=(81, 7))
        V /= np.linalg.norm(V, axis=0)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            single = [bipartite_entropy(V[:, k], 2, 3) for k in range(7)]
        assert np.allclose(batch_entropies(V, 2, 3, chunk=3), single)

    @given(st.integers(0, 10**6))
    def test_symmetry_and_bound(self, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=3**5) + 1j * rng.normal(size=3**5)
        v /= np.linalg.norm(v)
        for cut in range(1, 5):
            S = bipartite_entropy(v, cut, 3)
            assert -1e-12 <= S <= min(cut, 5 - cut) * math.log(3) + 1e-12
        assert np.isclose(bipartite_entropy(v, 2, 3), bipartite_entropy(v.reshape(9, 27).T.ravel(), 3, 3))


class TestAnalytic:
    @pytest.mark.parametrize("L", [2, 3, 4, 5, 6, 7, 8])
    def test_matches_schmidt(self, L):
        spec = ModelSpec(3, (1,), (2, 3), 0.7, L)
        worst = 0.0
        for m in compositions(3, L):
            psi = unfolded_scar(spec, m)
            for cut in range(1, L):
                worst = max(worst, abs(scar_entropy_analytic(m[1], m[2], L, cut) - bipartite_entropy(psi, cut, 3)))
        assert worst < 1e-12

    @given(st.integers(2, 30).flatmap(lambda L: st.tuples(st.just(L), occupations(L), st.integers(1, L - 1))))
    def test_spectrum_properties(self, args):
        L, (m2, m3), cut = args
        _, _, lam = reduced_spectrum(m2, m3, L, cut)
        assert np.all(lam >= 0) and np.isclose(lam.sum(), 1)
        assert np.isclose(scar_entropy_analytic(m2, m3, L, cut), scar_entropy_analytic(m2, m3, L, L - cut))

    @given(st.integers(2, 24).flatmap(lambda L: st.tuples(st.just(L), occupations(L), st.integers(1, L - 1))))
    def test_decomposition(self, args):
        L, (m2, m3), cut = args
        S, marg, cond = entropy_decomposition(m2, m3, L, cut)
        assert np.isclose(S, marg + cond, atol=1e-12)
        k2, k3, lam = reduced_spectrum(m2, m3, L, cut)
        p3 = {v: lam[k3 == v].sum() for v in np.unique(k3)}
        for v, p in p3.items():
            assert np.isclose(p, stats.hypergeom(L, m3, cut).pmf(v))

    def test_exact_and_loggamma_agree(self):
        from scarlab import entanglement
        exact = scar_entropy_analytic(6, 7, 20, 9)
        saved = entanglement.EXACT_LMAX
        entanglement.EXACT_LMAX = 0
        try:
            approx = scar_entropy_analytic(6, 7, 20, 9)
        finally:
            entanglement.EXACT_LMAX = saved
        assert abs(exact - approx) < 1e-12

    def test_sub_volume_at_nine(self):
        S = scar_entropy_analytic(3, 3, 9, 4)
        assert 0 < S < 4 * math.log(3)

    def test_invalid(self):
        with pytest.raises(ValueError):
            scar_entropy_analytic(5, 5, 8, 4)


class TestScaling:
    def test_lengths(self):
        assert scaling_lengths(100) == [12, 24, 48, 96]
        with pytest.raises(ValueError):
            scaling_lengths(5)

    def test_fractions(self):
        assert parse_fractions("1/2, 0, 1/2")[1] == 0
        with pytest.raises(ValueError):
            parse_fractions("1/2,1/2,1/2")

    @pytest.mark.parametrize("fr,slope", [("1/3,1/3,1/3", 0.9882), ("1/2,0,1/2", 0.4938), ("1,0,0", 0.0)])
    def test_slopes(self, fr, slope):
        curve = entropy_scaling(fr, scaling_lengths(3072))
        assert abs(curve.slope - slope) < 1e-3

    def test_slopes_approach_half_per_species(self):
        curves = [entropy_scaling("1/3,1/3,1/3", scaling_lengths(lm)).slope for lm in (768, 3072, 12288)]
        assert np.all(np.diff(curves) > 0) and abs(curves[-1] - 1) < 0.01

    def test_logarithmic_growth(self):
        curve = entropy_scaling("1/3,1/3,1/3", scaling_lengths(1536))
        S = curve.entropies
        assert np.all(np.diff(S) > 0)
        assert np.all(S < 0.5 * curve.lengths * math.log(3))
        assert curve.residual < 0.05

    def test_incompatible_length(self):
        with pytest.raises(ValueError):
            entropy_scaling("1/3,1/3,1/3", [10])

    def test_csv(self, tmp_path):
        curve = entropy_scaling("1/2,0,1/2", [12, 24])
        write_scaling_csv([curve], tmp_path / "s.csv")
        rows = list(csv.reader(open(tmp_path / "s.csv")))
        assert rows[0] == ["L", "fractions", "S_ent", "fit_slope"] and len(rows) == 3
