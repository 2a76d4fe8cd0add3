import math

import numpy as np
import pytest

import oracles
from conftest import random_params
from ebm_anomaly.energy import all_states
from ebm_anomaly.errors import InvalidConfig, ShapeMismatch, TooLargeToEnumerate
from ebm_anomaly.samplers import (
    SamplerConfig,
    SamplerKind,
    beta_schedule,
    clamped_moments,
    exact_distribution,
    exact_moments,
    sample_clamped,
    sample_unclamped,
)
from ebm_anomaly.types import BmTopology, ModelParams


def z_scores(est, exact, reads):
    sigma = np.sqrt(np.clip(exact * (1 - exact), 1e-12, None) / reads)
    return (est - exact) / sigma


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"num_reads": 0}, {"gibbs_thin": 0}, {"gibbs_burn_in": -1}, {"sa_sweeps": 0},
        {"sa_beta_start": 0.0}, {"sa_beta_start": 2.0, "sa_beta_end": 1.0}, {"kind": "qpu"},
        {"rng_seed": -3},
    ])
    def test_invalid(self, kw):
        with pytest.raises(InvalidConfig):
            SamplerConfig(**kw)

    def test_resolved_beta_end_checked(self):
        p = ModelParams.zeros(BmTopology(2, 1), temperature=20.0)
        with pytest.raises(InvalidConfig):
            sample_unclamped(p, SamplerConfig(kind="sa", sa_beta_start=0.1))

    def test_geometric_schedule(self):
        b = beta_schedule(0.1, 1.0, 5)
        assert b[0] == 0.1 and b[-1] == 1.0
        np.testing.assert_allclose(b[1:] / b[:-1], 10 ** 0.25)
        assert beta_schedule(0.1, 2.0, 1).tolist() == [2.0]


class TestExactDistribution:
    def test_two_state(self):
        np.testing.assert_allclose(exact_distribution(ModelParams.zeros(BmTopology(1, 0))), [0.5, 0.5])

    def test_bias_odds(self):
        T = 0.6
        p = ModelParams(BmTopology(1, 0), np.zeros((1, 0)), [T * math.log(3)], np.zeros(0), temperature=T)
        assert exact_distribution(p)[1] == pytest.approx(0.75, abs=1e-14)

    @pytest.mark.parametrize("semi", [False, True])
    def test_normalised_and_matches_oracle(self, rng, semi):
        p = random_params(rng, 2, 2, semi=semi)
        probs = exact_distribution(p)
        assert abs(probs.sum() - 1.0) < 1e-12
        dist = oracles.distribution(p)
        for s, pr in zip(all_states(4), probs):
            assert pr == pytest.approx(dist[(tuple(s[:2]), tuple(s[2:]))], abs=1e-14)

    def test_moments_match_oracle(self, rng):
        p = random_params(rng, 3, 2, semi=True)
        units, pairs = oracles.moments(p)
        ex = exact_moments(p)
        np.testing.assert_allclose(ex.mean_units, units, atol=1e-12)
        np.testing.assert_allclose(ex.mean_pairs, pairs, atol=1e-12)
        assert ex.num_reads == 0

    def test_guard(self):
        with pytest.raises(TooLargeToEnumerate):
            exact_distribution(ModelParams.zeros(BmTopology(20, 5)))
        with pytest.raises(TooLargeToEnumerate):
            sample_unclamped(ModelParams.zeros(BmTopology(20, 5)), SamplerConfig(kind="exact"))


class TestUnclamped:
    @pytest.mark.parametrize("kind", list(SamplerKind))
    def test_symmetric_two_state(self, kind):
        p = ModelParams.zeros(BmTopology(1, 0))
        sb = sample_unclamped(p, SamplerConfig(kind=kind, num_reads=10_000, sa_sweeps=10))
        assert sb.num_reads == 10_000
        assert abs(sb.mean_units[0] - 0.5) <= 0.02

    @pytest.mark.parametrize("kind", list(SamplerKind))
    def test_deterministic_under_seed(self, rng, kind):
        p = random_params(rng, 3, 2, semi=True)
        cfg = SamplerConfig(kind=kind, num_reads=500, rng_seed=7)
        a, b = sample_unclamped(p, cfg), sample_unclamped(p, cfg)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.mean_pairs, b.mean_pairs)
        c = sample_unclamped(p, cfg.replace(rng_seed=8))
        assert not np.array_equal(a.states, c.states)
        d = sample_unclamped(p, cfg, stream=(1,))
        assert not np.array_equal(a.states, d.states)

    @pytest.mark.parametrize("kind", ["gibbs", "sa", "exact"])
    def test_moments_agree_with_enumeration_small_model(self, rng, kind):
        p = random_params(rng, 2, 1, semi=True)
        ex = exact_moments(p)
        reads = 100_000
        sb = sample_unclamped(p, SamplerConfig(kind=kind, num_reads=reads, sa_sweeps=30, gibbs_thin=2))
        assert np.all(np.abs(z_scores(sb.mean_units, ex.mean_units, reads)) < 4)
        iu = np.triu_indices(3, 1)
        assert np.all(np.abs(z_scores(sb.mean_pairs[iu], ex.mean_pairs[iu], reads)) < 4)

    def test_gibbs_total_variation(self, rng):
        p = random_params(rng, 3, 3, semi=False)
        reads = 100_000
        sb = sample_unclamped(p, SamplerConfig(kind="gibbs", num_reads=reads, gibbs_thin=2, gibbs_burn_in=500))
        idx = sb.states.astype(np.int64) @ (1 << np.arange(5, -1, -1))
        emp = np.bincount(idx, minlength=64) / reads
        assert 0.5 * np.abs(emp - exact_distribution(p)).sum() < 0.02

    def test_effective_temperature_rescales_sa_target(self, rng):
        # dividing parameters by T_eff = 2 is the same target as doubling T
        p = random_params(rng, 2, 1, effective_temperature=2.0)
        hot = p.replace(effective_temperature=1.0, temperature=2.0)
        ex = exact_moments(hot)
        reads = 100_000
        sb = sample_unclamped(p, SamplerConfig(kind="sa", num_reads=reads, sa_sweeps=30, sa_beta_start=0.05))
        assert np.all(np.abs(z_scores(sb.mean_units, ex.mean_units, reads)) < 4)

    def test_sa_reads_are_final_states_of_independent_chains(self, rng):
        p = random_params(rng, 3, 2)
        sb = sample_unclamped(p, SamplerConfig(kind="sa", num_reads=64, sa_sweeps=5))
        assert sb.states.shape == (64, 5)
        assert set(np.unique(sb.states)) <= {0, 1}

    def test_gibbs_burn_in_and_thin_count(self, rng):
        p = random_params(rng, 3, 2)
        sb = sample_unclamped(p, SamplerConfig(kind="gibbs", num_reads=37, gibbs_burn_in=11, gibbs_thin=3))
        assert sb.num_reads == 37


class TestClamped:
    def test_zero_model_gives_half(self):
        p = ModelParams.zeros(BmTopology(3, 4))
        sb = sample_clamped(p, np.array([1, 0, 1]))
        np.testing.assert_array_equal(sb.hidden_means, 0.5)

    def test_zero_visible_annihilates_products(self, rng):
        p = random_params(rng, 3, 4).replace(b_h=np.zeros(4))
        sb = sample_clamped(p, np.zeros(3, dtype=int))
        assert np.all(sb.mean_pairs[:3, 3:] == 0.0)

    def test_visible_moments_are_clamped_values(self, rng):
        p = random_params(rng, 4, 2, semi=True)
        v = np.array([1, 0, 1, 1])
        sb = sample_clamped(p, v)
        assert np.array_equal(sb.visible_means, v)
        assert np.array_equal(sb.mean_pairs[:4, :4], np.outer(v, v))

    @pytest.mark.parametrize("semi", [False, True])
    def test_matches_conditional_enumeration(self, rng, semi):
        p = random_params(rng, 2, 2, semi=semi, temperature=1.3)
        for v in oracles.bits(2):
            sb = sample_clamped(p, np.array(v))
            expect = oracles.conditional_hidden_means(p, v)
            np.testing.assert_allclose(sb.hidden_means, expect, atol=1e-10)
            np.testing.assert_allclose(sb.mean_pairs[:2, 2:], np.outer(v, expect), atol=1e-10)

    def test_batch_average_and_frechet(self, rng):
        p = random_params(rng, 4, 3, semi=True)
        rows = rng.integers(0, 2, (9, 4))
        avg = clamped_moments(p, rows)
        singles = [sample_clamped(p, r) for r in rows]
        np.testing.assert_allclose(avg.mean_units, np.mean([s.mean_units for s in singles], axis=0))
        np.testing.assert_allclose(avg.mean_pairs, np.mean([s.mean_pairs for s in singles], axis=0))
        u = avg.mean_units
        assert np.all(avg.mean_pairs <= np.minimum.outer(u, u) + 1e-12)
        assert np.all(avg.mean_pairs >= np.maximum(0, np.add.outer(u, u) - 1) - 1e-12)

    def test_shape(self, rng):
        with pytest.raises(ShapeMismatch):
            sample_clamped(random_params(rng, 3, 2), np.array([1, 0]))
