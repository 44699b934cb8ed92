"""
Tests for the discrete power-law fit and its sampler
Run with: pytest test_powerlaw.py
"""

import sys
import logging
import os

import networkx as nx
import numpy as np
import pytest
from scipy.special import zeta

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

from tools.powerlaw_fit import (
    INCONCLUSIVE,
    NOT_POWER_LAW,
    POWER_LAW,
    PowerLawFit,
    powerlaw_fit,
    sample_discrete_powerlaw,
)


def test_sampler_support_and_head_mass():
    rng = np.random.default_rng(0)
    draws = sample_discrete_powerlaw(2.5, 1, 100000, rng)
    assert draws.min() >= 1
    assert np.mean(draws == 1) == pytest.approx(1 / zeta(2.5, 1), abs=0.01)
    assert np.mean(draws == 2) == pytest.approx(2 ** -2.5 / zeta(2.5, 1), abs=0.01)


def test_sampler_respects_xmin():
    draws = sample_discrete_powerlaw(3.0, 5, 2000, np.random.default_rng(1))
    assert draws.min() >= 5
    assert sample_discrete_powerlaw(3.0, 5, 0, np.random.default_rng(1)).size == 0


def test_sampler_is_seeded():
    a = sample_discrete_powerlaw(2.2, 2, 500, np.random.default_rng(9))
    b = sample_discrete_powerlaw(2.2, 2, 500, np.random.default_rng(9))
    assert np.array_equal(a, b)


# seed block for the recovery checks: sample i uses generator seed 3000 + i and bootstrap seed i
RECOVERY_SEEDS = range(3000, 3050)


def test_recovers_synthetic_power_law():
    verdicts = []
    for i, seed in enumerate(RECOVERY_SEEDS):
        degrees = sample_discrete_powerlaw(2.5, 1, 2000, np.random.default_rng(seed))
        fit = powerlaw_fit(degrees, reps=100, seed=i)
        assert 2.3 <= fit.alpha <= 2.7, seed
        verdicts.append(fit.verdict)
    assert sum(v == POWER_LAW for v in verdicts) >= 0.9 * len(verdicts)


def test_rejects_random_graph_degrees():
    verdicts = []
    for i, seed in enumerate(RECOVERY_SEEDS):
        g = nx.fast_gnp_random_graph(2000, 0.005, seed=seed)
        fit = powerlaw_fit((d for _, d in g.degree()), reps=100, seed=i)
        verdicts.append(fit.verdict)
    assert sum(v == POWER_LAW for v in verdicts) <= 0.2 * len(verdicts)


def test_constant_degrees_are_not_power_law():
    fit = powerlaw_fit([4] * 100)
    assert fit.verdict == NOT_POWER_LAW
    assert fit.p_value == 0.0
    assert fit.alpha == 8.0
    assert fit.xmin == 4


def test_small_sequences_are_inconclusive():
    fit = powerlaw_fit([1, 2, 2, 3, 3, 3, 4, 5, 8, 1, 1, 2, 6, 2, 1, 1, 3, 2, 1, 9])
    assert fit.verdict == INCONCLUSIVE
    assert fit.p_value is None
    assert powerlaw_fit([3] * 10).verdict == INCONCLUSIVE


def test_no_positive_degree():
    fit = powerlaw_fit([0, 0, 0])
    assert fit == PowerLawFit(None, None, None, None, INCONCLUSIVE, 0)


def test_fit_is_deterministic():
    degrees = sample_discrete_powerlaw(2.5, 1, 500, np.random.default_rng(4))
    assert powerlaw_fit(degrees, reps=20, seed=3) == powerlaw_fit(degrees, reps=20, seed=3)


def test_fit_fields_in_range():
    degrees = sample_discrete_powerlaw(2.5, 1, 1000, np.random.default_rng(8))
    fit = powerlaw_fit(degrees, reps=10, seed=0)
    assert 1.01 <= fit.alpha <= 8.0
    assert fit.xmin >= 1
    assert 0.0 <= fit.ks_stat <= 1.0
    assert fit.n_tail <= 1000
    if fit.verdict != INCONCLUSIVE:
        assert 0.0 <= fit.p_value <= 1.0


def test_zero_replicates_leave_verdict_inconclusive():
    degrees = sample_discrete_powerlaw(2.5, 1, 2000, np.random.default_rng(12))
    fit = powerlaw_fit(degrees, reps=0, seed=0)
    assert fit.verdict == INCONCLUSIVE
    assert fit.p_value is None
    assert fit.n_tail >= 25
    assert 2.3 <= fit.alpha <= 2.7


def test_steep_tail_is_clipped_with_warning(caplog):
    degrees = [1] * 1000 + [2]
    with caplog.at_level(logging.WARNING, logger="tools.powerlaw_fit"):
        fit = powerlaw_fit(degrees, reps=5, seed=0)
    assert fit.alpha == 8.0
    assert fit.xmin == 1
    assert "grid edge" in caplog.text
