import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realmask.masker import mask_state
from realmask.measure import (
    CountsTable,
    NoiseSpec,
    PauliSetting,
    apply_depolarizing,
    correlator_estimate,
    derive_seed,
    generator,
    outcome_probs,
    pauli_correlations,
    poisson_resample,
    sample_counts,
    single_qubit_probs,
    tables_from_csv,
    tables_to_csv,
)
from realmask.qcore import (
    StateVector,
    partial_trace,
    random_density,
    random_real_density,
)

BELL = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))


class TestOutcomeProbs:
    def test_bell_zz(self):
        probs = outcome_probs(BELL.density(), PauliSetting("Z", "Z"))
        assert np.abs(probs - [0.5, 0, 0, 0.5]).max() < 1e-12

    def test_bell_yy(self):
        probs = outcome_probs(BELL.density(), PauliSetting("Y", "Y"))
        assert np.abs(probs - [0, 0.5, 0.5, 0]).max() < 1e-12

    def test_maximally_mixed_uniform(self):
        for first in "XYZ":
            for second in "XYZ":
                probs = outcome_probs(np.eye(4) / 4, PauliSetting(first, second))
                assert np.abs(probs - 0.25).max() < 1e-12

    def test_marginals_match_reduced_states(self, rng):
        for _ in range(100):
            rho = random_density(4, rng)
            for axis in "XYZ":
                joint = outcome_probs(rho, PauliSetting(axis, "Z"))
                marg_first = np.array([joint[0] + joint[1], joint[2] + joint[3]])
                want = single_qubit_probs(partial_trace(rho, "A"), axis)
                assert np.abs(marg_first - want).max() < 1e-12
                joint = outcome_probs(rho, PauliSetting("Z", axis))
                marg_second = np.array([joint[0] + joint[2], joint[1] + joint[3]])
                want = single_qubit_probs(partial_trace(rho, "B"), axis)
                assert np.abs(marg_second - want).max() < 1e-12

    def test_masked_real_states_have_flat_marginals(self, rng):
        for _ in range(50):
            out = mask_state(random_real_density(4, rng))
            for axis in "XYZ":
                for qubit in ("A", "B"):
                    probs = single_qubit_probs(partial_trace(out, qubit), axis)
                    assert np.abs(probs - 0.5).max() < 1e-12

    def test_invalid_axis_rejected(self):
        with pytest.raises(ValueError):
            PauliSetting("X", "W")


class TestSampleCounts:
    def test_deterministic_outcome(self):
        t = sample_counts([1, 0, 0, 0], shots=1234, seed=1, setting="ZZ")
        assert t.counts == (1234, 0, 0, 0)

    def test_zero_probability_outcomes_never_drawn(self):
        t = sample_counts([0.5, 0, 0, 0.5], shots=4000, seed=2, setting="ZZ")
        assert t.counts[1] == 0 and t.counts[2] == 0
        assert t.counts[0] + t.counts[3] == 4000

    def test_large_sample_correlator(self):
        # <Z ⊗ Z> of the Bell state is +1 (its outcome distribution only
        # populates the ++/-- cells, so the estimate is exact at any shots).
        probs = outcome_probs(BELL.density(), PauliSetting("Z", "Z"))
        t = sample_counts(probs, shots=1_000_000, seed=3, setting="ZZ")
        assert abs(correlator_estimate(t) - 1.0) < 0.005
        # <X ⊗ Z> vanishes; a genuinely fluctuating law-of-large-numbers check.
        probs = outcome_probs(BELL.density(), PauliSetting("X", "Z"))
        t = sample_counts(probs, shots=1_000_000, seed=3, setting="XZ")
        assert abs(correlator_estimate(t)) < 0.005

    def test_seed_determinism(self):
        a = sample_counts([0.3, 0.3, 0.2, 0.2], 1000, seed=99)
        b = sample_counts([0.3, 0.3, 0.2, 0.2], 1000, seed=99)
        c = sample_counts([0.3, 0.3, 0.2, 0.2], 1000, seed=100)
        assert a.counts == b.counts
        assert a.counts != c.counts

    def test_frequency_concentration(self, rng):
        p = np.array([0.4, 0.3, 0.2, 0.1])
        shots = 1_000_000
        bound = 4 * np.sqrt(p * (1 - p) / shots)
        hits = 0
        trials = 1000
        for i in range(trials):
            t = sample_counts(p, shots, seed=derive_seed(17, "freq", i))
            freqs = np.array(t.counts) / shots
            if np.all(np.abs(freqs - p) <= bound):
                hits += 1
        assert hits >= 0.99 * trials

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            sample_counts([0.5, 0.6], 10, 0)
        with pytest.raises(ValueError):
            sample_counts([0.5, 0.5], 0, 0)


class TestCorrelator:
    @pytest.mark.parametrize("counts,value", [
        ((4000, 0, 0, 0), 1.0),
        ((1000, 1000, 1000, 1000), 0.0),
        ((2000, 0, 0, 2000), 1.0),
    ])
    def test_literal_values(self, counts, value):
        t = CountsTable("ZZ", counts, sum(counts), 0)
        assert correlator_estimate(t) == value

    @settings(max_examples=100, deadline=None)
    @given(st.tuples(*[st.integers(0, 10_000)] * 4))
    def test_bounded(self, counts):
        if sum(counts) == 0:
            return
        t = CountsTable("XY", counts, sum(counts), 0)
        assert -1.0 <= correlator_estimate(t) <= 1.0


class TestDepolarizing:
    def test_p_zero_identity(self, rng):
        rho = random_density(4, rng)
        assert np.abs(apply_depolarizing(rho, 0.0).mat - rho.mat).max() < 1e-15

    def test_p_one_maximally_mixed(self, rng):
        rho = random_density(4, rng)
        assert np.abs(apply_depolarizing(rho, 1.0).mat - np.eye(4) / 4).max() < 1e-15

    def test_small_p_fidelity(self):
        from realmask.qcore import fidelity_with_pure

        out = apply_depolarizing(BELL.density(), 0.0056)
        assert fidelity_with_pure(out, BELL) == pytest.approx(0.9958, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            apply_depolarizing(np.eye(4) / 4, 1.5)
        with pytest.raises(ValueError):
            NoiseSpec("depolarizing", -0.1)


class TestPoissonResample:
    def test_zero_counts_stay_zero(self):
        t = CountsTable("ZZ", (0, 0, 0, 0), 0, 0)
        out = poisson_resample(t, seed=5)
        assert out.counts == (0, 0, 0, 0)
        assert out.shots == 0

    def test_fixed_seed_repeats(self):
        t = CountsTable("ZZ", (1000, 500, 250, 250), 2000, 0)
        assert poisson_resample(t, 7).counts == poisson_resample(t, 7).counts

    def test_mean_and_variance_identity(self):
        t = CountsTable("Z", (4000, 0), 4000, 0)
        draws = np.array([poisson_resample(t, derive_seed(11, "pr", i)).counts[0] for i in range(10_000)])
        se_mean = np.sqrt(4000 / 10_000)
        assert abs(draws.mean() - 4000) < 3 * se_mean
        assert abs(draws.var() - 4000) / 4000 < 0.08  # chi^2 spread at 4 sigma-ish

    def test_shots_follow_counts(self):
        t = CountsTable("ZZ", (10, 20, 30, 40), 100, 0)
        out = poisson_resample(t, 1)
        assert out.shots == sum(out.counts)


class TestCountsTable:
    def test_sum_invariant_enforced(self):
        with pytest.raises(ValueError):
            CountsTable("ZZ", (1, 2, 3, 4), 11, 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            CountsTable("ZZ", (-1, 2, 3, 4), 8, 0)

    def test_csv_round_trip(self):
        tables = [
            CountsTable("XX", (10, 20, 30, 40), 100, 42),
            CountsTable("Z", (7, 3), 10, 43),
        ]
        text = tables_to_csv(tables)
        assert text.splitlines()[0] == "setting,outcome,count,shots,seed"
        again = tables_from_csv(text)
        assert again == tables

    def test_csv_rejects_wrong_header(self):
        with pytest.raises(ValueError):
            tables_from_csv("a,b,c\n")


class TestSeeds:
    def test_derive_seed_is_stable(self):
        # Frozen reference values: a change here breaks reproducibility of
        # every archived report.
        assert derive_seed(0) == 4066689987807800415
        assert derive_seed(20404, "fig3.qsv", 1) == 2910132864779351692

    def test_generator_streams_independent(self):
        a = generator(derive_seed(1, "x")).random(4)
        b = generator(derive_seed(1, "y")).random(4)
        assert not np.allclose(a, b)

    def test_exact_correlations_of_bell(self):
        t = pauli_correlations(BELL.density())
        assert np.abs(t - np.diag([1.0, -1.0, 1.0])).max() < 1e-12
