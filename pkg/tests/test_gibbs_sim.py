import math
import warnings

import numpy as np
import pytest

from smcurve.gibbs_sim import (
    MAX_ENUMERATION_N,
    GibbsConfig,
    IntegrityError,
    LowTrialsWarning,
    WeightSpace,
    boltzmann_errors,
    boltzmann_gen_error,
    empirical_learning_curve,
    exact_gibbs_gen_error,
    generate_instance,
    iter_ising_students,
    metropolis_gibbs,
    phase_map,
    round_half_even,
    survival_frequencies,
    version_space,
    version_space_errors,
)


class TestInstance:
    def test_shapes_and_realizable(self):
        inst = generate_instance(7, 30, WeightSpace.ISING, seed=1)
        assert inst.patterns.shape == (30, 7)
        assert set(np.unique(inst.teacher)) <= {-1.0, 1.0}
        assert inst.realizable and inst.alpha == pytest.approx(30 / 7)

    def test_sphere_norm(self):
        inst = generate_instance(9, 5, WeightSpace.SPHERE, seed=2)
        assert abs(inst.teacher @ inst.teacher - 9) < 1e-9

    def test_repeatable(self):
        a = generate_instance(8, 20, "ising", seed=5)
        b = generate_instance(8, 20, "ising", seed=5)
        assert a.patterns.tobytes() == b.patterns.tobytes()
        assert a.teacher.tobytes() == b.teacher.tobytes()

    def test_no_data(self):
        inst = generate_instance(5, 0, seed=0)
        assert inst.m == 0 and version_space(inst).shape == (32, 5)

    @pytest.mark.parametrize("n, m", [(0, 1), (3, -1)])
    def test_bad_sizes(self, n, m):
        with pytest.raises(ValueError):
            generate_instance(n, m)

    def test_mismatched_fields(self):
        inst = generate_instance(4, 3, seed=0)
        with pytest.raises(ValueError):
            inst.with_labels(np.ones(5))


class TestEnumeration:
    def test_covers_hypercube_once(self):
        rows = np.concatenate([s for _, s in iter_ising_students(6, chunk=7)])
        assert rows.shape == (64, 6)
        assert len({r.tobytes() for r in rows}) == 64

    def test_bit_order(self):
        _, first = next(iter_ising_students(3))
        np.testing.assert_array_equal(first[1], [1, -1, -1])

    def test_cap(self):
        with pytest.raises(ValueError):
            next(iter_ising_students(MAX_ENUMERATION_N + 1))

    @pytest.mark.parametrize("seed", range(5))
    def test_n1_version_space_is_teacher(self, seed):
        inst = generate_instance(1, 1, WeightSpace.ISING, seed=seed)
        np.testing.assert_array_equal(version_space(inst), inst.teacher[None, :])

    def test_members_have_zero_training_error(self):
        inst = generate_instance(10, 15, seed=3)
        for s in version_space(inst):
            assert inst.training_errors(s) == 0

    def test_teacher_in_version_space(self):
        inst = generate_instance(10, 40, seed=4)
        vs = version_space(inst)
        assert any(np.array_equal(s, inst.teacher) for s in vs)

    def test_sphere_rejected(self):
        with pytest.raises(ValueError):
            version_space(generate_instance(4, 2, WeightSpace.SPHERE, seed=0))


class TestExactGibbs:
    def test_n1(self):
        inst = generate_instance(1, 3, seed=0)
        assert exact_gibbs_gen_error(inst, 50, seed=0).mean_eps == 0.0

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_no_data_is_exactly_half(self, n):
        p = exact_gibbs_gen_error(generate_instance(n, 0, seed=n), 10)
        assert p.mean_eps == pytest.approx(0.5, abs=1e-12) and p.stderr == 0.0

    def test_empty_version_space(self):
        inst = generate_instance(6, 40, seed=1)
        flipped = inst.with_labels(-inst.labels)
        flipped = flipped.with_labels(np.where(np.arange(40) == 0, inst.labels, flipped.labels))
        with pytest.raises(IntegrityError):
            version_space_errors(flipped)

    def test_single_trial_flagged(self):
        p = exact_gibbs_gen_error(generate_instance(6, 6, seed=0), 1, seed=0)
        assert p.low_trials and p.stderr == 0.0

    def test_zero_temperature_boltzmann_equals_version_space_mean(self):
        inst = generate_instance(10, 20, seed=7)
        assert boltzmann_gen_error(inst, 0.0) == pytest.approx(version_space_errors(inst).mean(),
                                                               abs=1e-14)

    def test_boltzmann_weights(self):
        inst = generate_instance(6, 10, seed=0)
        _, w = boltzmann_errors(inst, 1e9)
        np.testing.assert_allclose(w, 1 / 64, rtol=1e-6)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(tau=-1), dict(sweeps=0), dict(sweeps=5, burn_in=5),
                                    dict(step=0), dict(anneal_from=-1)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            GibbsConfig(**kw)

    def test_schedule(self):
        c = GibbsConfig(tau=0.1, sweeps=10, burn_in=5, anneal_from=2.0)
        s = c.schedule()
        assert s[0] == pytest.approx(2.0) and s[4] == pytest.approx(0.1)
        assert np.all(np.diff(s[:5]) < 0) and np.all(s[5:] == 0.1)

    def test_flat_schedule(self):
        np.testing.assert_array_equal(GibbsConfig(tau=0.3, sweeps=4).schedule(), 0.3)

    def test_banker_rounding(self):
        assert [round_half_even(x) for x in (2.5, 3.5, 6.0)] == [2, 4, 6]


class TestMetropolis:
    def test_zero_temperature_energy_never_rises(self):
        inst = generate_instance(15, 60, seed=2)
        for seed in range(5):
            run = metropolis_gibbs(inst, GibbsConfig(tau=0.0, sweeps=100, seed=seed))
            assert np.all(np.diff(run.energy) <= 0)

    def test_sphere_chain_keeps_norm(self):
        inst = generate_instance(8, 20, WeightSpace.SPHERE, seed=1)
        run = metropolis_gibbs(inst, GibbsConfig(tau=0.0, sweeps=50, seed=0))
        assert abs(run.student @ run.student - 8) < 1e-9
        assert np.all(np.diff(run.energy) <= 0)

    def test_hot_chain_is_uniform(self):
        inst = generate_instance(10, 50, seed=3)
        means = [metropolis_gibbs(inst, GibbsConfig(tau=1e6, sweeps=2000, seed=s)).mean_gen_error
                 for s in range(10)]
        mean = float(np.mean(means))
        se = float(np.std(means, ddof=1) / math.sqrt(len(means)))
        assert abs(mean - 0.5) <= max(3 * se, 0.01)

    def test_zero_temperature_reaches_version_space(self):
        zero = 0
        for seed in range(100):
            inst = generate_instance(10, 50, seed=1000 + seed)
            run = metropolis_gibbs(inst, GibbsConfig(tau=0.0, sweeps=200, seed=seed))
            zero += run.train_error == 0
        assert zero > 50

    def test_final_energy_matches_student(self):
        inst = generate_instance(12, 30, seed=4)
        run = metropolis_gibbs(inst, GibbsConfig(tau=0.5, sweeps=40, seed=1))
        assert run.energy[-1] == inst.training_errors(run.student)
        assert run.train_error == pytest.approx(run.energy[-1] / 30)

    def test_repeatable(self):
        inst = generate_instance(10, 30, seed=0)
        a = metropolis_gibbs(inst, GibbsConfig(tau=0.2, sweeps=30, seed=9))
        b = metropolis_gibbs(inst, GibbsConfig(tau=0.2, sweeps=30, seed=9))
        np.testing.assert_array_equal(a.snapshots, b.snapshots)

    def test_low_temperature_tracks_thermal_average(self):
        # finite-temperature route against exact enumeration of the Gibbs measure
        inst = generate_instance(8, 16, seed=5)
        exact = boltzmann_gen_error(inst, 0.5)
        cfg = GibbsConfig(tau=0.5, sweeps=20_000, burn_in=500, seed=3)
        assert metropolis_gibbs(inst, cfg).mean_gen_error == pytest.approx(exact, abs=0.02)


class TestCurves:
    def test_exact_curve_decreases(self):
        cfg = GibbsConfig(seed=11)
        pts = empirical_learning_curve(10, [0.5, 2.0, 5.0], cfg, 40)
        eps = [p.mean_eps for p in pts]
        assert eps[0] > eps[1] > eps[2]
        assert all(p.sampler == "exact" for p in pts)
        assert [p.m for p in pts] == [5, 20, 50]

    def test_single_trial_warns(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            pts = empirical_learning_curve(6, [1.0], GibbsConfig(), 1)
        assert pts[0].stderr == 0.0 and pts[0].low_trials
        assert any(issubclass(x.category, LowTrialsWarning) for x in w)

    def test_same_seed_same_curve(self):
        cfg = GibbsConfig(tau=0.3, sweeps=20, seed=4)
        a = empirical_learning_curve(8, [1.0, 2.0], cfg, 5, sampler="metropolis", threads=1)
        b = empirical_learning_curve(8, [1.0, 2.0], cfg, 5, sampler="metropolis", threads=3)
        assert a == b

    def test_exact_sampler_needs_ising(self):
        with pytest.raises(ValueError):
            empirical_learning_curve(8, [1.0], GibbsConfig(), 2, WeightSpace.SPHERE, "exact")


class TestPhaseMap:
    def test_edges(self):
        pm = phase_map(8, [0.0, 4.0], [0.0, 1e6], GibbsConfig(sweeps=50, seed=1), 8)
        assert pm.mean_eps.shape == (2, 2)
        assert pm.mean_eps[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert np.all(pm.labels()[:, 1] == "poor")
        assert pm.labels()[1, 0] == "good"
        assert list(pm.samplers) == ["exact", "metropolis"]
        assert len(list(pm.rows())) == 4

    def test_threshold_configurable(self):
        pm = phase_map(6, [2.0], [0.0], GibbsConfig(), 4, threshold=0.0)
        assert pm.labels()[0, 0] == "poor"

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            phase_map(6, [], [0.0], GibbsConfig(), 2)


class TestSurvival:
    def test_levels(self):
        levels = survival_frequencies(6, 4, 50, seed=0)
        assert len(levels) == 7
        assert levels[0].frequency == 1.0 and levels[0].eps == 0.0
        assert levels[-1].frequency == 0.0
        assert sum(lv.count for lv in levels) == 64
