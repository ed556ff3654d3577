import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smcurve.entropy_energy import (
    EntropyKind,
    EntropyModel,
    annealed_log_volume_density,
    binary_entropy,
    energy_density,
    entropy_continuous,
    entropy_ising,
    entropy_ising_from_overlap,
    entropy_ising_small_eps,
)
from smcurve.geometry import DomainError

LN2 = math.log(2.0)


class TestContinuousEntropy:
    def test_half(self):
        assert entropy_continuous(0.5) == pytest.approx(1.4189385332046727, abs=1e-14)

    def test_symmetric(self):
        assert entropy_continuous(0.25) == pytest.approx(entropy_continuous(0.75), abs=1e-14)

    def test_log_divergence_at_zero(self):
        eps = np.array([1e-4, 1e-6, 1e-8])
        gap = entropy_continuous(eps) - np.log(eps)
        # approaches the constant (1 + ln 2pi)/2 + ln pi
        np.testing.assert_allclose(gap, 0.5 * (1 + math.log(2 * math.pi)) + math.log(math.pi),
                                   atol=1e-6)

    def test_endpoints(self):
        assert entropy_continuous(0.0) == -math.inf
        assert entropy_continuous(1.0) == -math.inf


class TestIsingEntropy:
    @pytest.mark.parametrize("eps, s", [(0.0, 0.0), (0.5, LN2), (1.0, 0.0)])
    def test_values(self, eps, s):
        assert entropy_ising(eps) == pytest.approx(s, abs=1e-15)

    def test_two_parametrizations_agree(self):
        eps = np.linspace(0.0, 1.0, 100_001)
        np.testing.assert_allclose(entropy_ising(eps), entropy_ising_from_overlap(eps), atol=1e-10)

    def test_nonnegative_with_max_at_half(self):
        eps = np.linspace(0.0, 1.0, 20_001)
        s = entropy_ising(eps)
        assert np.all(s >= 0)
        assert eps[np.argmax(s)] == pytest.approx(0.5)
        assert s.max() == pytest.approx(LN2, abs=1e-15)

    def test_binary_entropy_ends(self):
        np.testing.assert_array_equal(binary_entropy([0.0, 1.0]), [0.0, 0.0])


class TestSmallEps:
    def test_inverse_e(self):
        assert entropy_ising_small_eps(math.exp(-1)) == pytest.approx(0.6678528535273738, abs=1e-14)

    def test_one(self):
        assert entropy_ising_small_eps(1.0) == 0.0

    def test_agrees_with_exact_for_small_eps(self):
        a, b = entropy_ising_small_eps(0.01), entropy_ising(0.01)
        assert abs(a - b) / b < 0.05


class TestEnergy:
    def test_zero_error(self):
        assert energy_density(0.0, 7.0) == 0.0

    def test_two_ln_two(self):
        assert energy_density(0.5, 2.0) == pytest.approx(2 * LN2, abs=1e-15)

    def test_first_order(self):
        e = energy_density(0.01, 10.0)
        assert e == pytest.approx(0.10050335853501449, abs=1e-14)
        assert abs(e - 0.1) / 0.1 < 0.01

    def test_infinite_at_one(self):
        assert energy_density(1.0, 1.0) == math.inf
        assert energy_density(1.0, 0.0) == 0.0

    def test_negative_alpha(self):
        with pytest.raises(DomainError):
            energy_density(0.1, -1.0)

    def test_strictly_increasing(self):
        eps = np.linspace(0.0, 0.999, 10_000)
        assert np.all(np.diff(energy_density(eps, 1.3)) > 0)

    @given(st.floats(0.0, 0.99), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
    def test_linear_in_alpha(self, eps, a, b):
        assert energy_density(eps, a + b) == pytest.approx(
            energy_density(eps, a) + energy_density(eps, b), rel=1e-12, abs=1e-300)


class TestLogVolumeDensity:
    def test_ising_boundary_is_zero(self):
        m = EntropyModel(EntropyKind.ISING_EXACT)
        for alpha in (0.0, 0.5, 3.0, 100.0):
            assert annealed_log_volume_density(m, 0.0, alpha) == 0.0

    def test_bound_one_crossing(self):
        m = EntropyModel(EntropyKind.CONTINUOUS_BOUND_ONE)
        assert annealed_log_volume_density(m, 1 - math.exp(-1), 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_pure_entropy(self):
        m = EntropyModel.from_name("ising-exact")
        assert m.log_volume_density(0.5, 0.0) == pytest.approx(LN2)

    def test_continuous_diverges_at_zero(self):
        m = EntropyModel.from_name("continuous-exact")
        for alpha in (0.1, 1.0, 10.0):
            assert annealed_log_volume_density(m, 0.0, alpha) == -math.inf
            assert annealed_log_volume_density(m, 1e-12, alpha) < -20

    def test_minus_inf_at_one(self):
        m = EntropyModel.from_name("continuous-bound")
        assert annealed_log_volume_density(m, 1.0, 1.0) == -math.inf


class TestTabulated:
    def test_interpolates(self):
        m = EntropyModel.tabulated([(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)])
        assert m(0.25) == pytest.approx(0.5)
        assert m.domain == (0.0, 1.0)

    def test_extrapolation_is_an_error(self):
        m = EntropyModel.tabulated([(0.1, 0.0), (0.5, 1.0)])
        with pytest.raises(DomainError):
            m(0.05)

    @pytest.mark.parametrize("pairs", [[(0.0, 1.0)], [(0.5, 1.0), (0.2, 0.0)],
                                       [(0.0, 1.0), (1.5, 0.0)], [(0.0, 1.0), (1.0, math.nan)]])
    def test_bad_tables(self, pairs):
        with pytest.raises(ValueError):
            EntropyModel.tabulated(pairs)

    def test_table_only_for_tabulated(self):
        with pytest.raises(ValueError):
            EntropyModel(EntropyKind.ISING_EXACT, ((0.0, 0.0), (1.0, 0.0)))

    def test_from_csv(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# comment\neps,s\n0,0\n0.5,0.6931\n1,0\n")
        m = EntropyModel.from_csv(p)
        assert m(0.5) == pytest.approx(0.6931)

    def test_names_round_trip(self):
        for kind in EntropyKind:
            if kind is not EntropyKind.TABULATED:
                assert EntropyModel.from_name(kind.value).name == kind.value
