import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cogrelay.analytic import blocking_probability, empty_probability, occupancy


def birth_death_oracle(rho, m):
    """Stationary law of the M/M/1/m generator, solved as a linear system."""
    lam, mu = rho, 1.0
    Q = np.zeros((m + 1, m + 1))
    for k in range(m):
        Q[k, k + 1] = lam
        Q[k + 1, k] = mu
    np.fill_diagonal(Q, -Q.sum(axis=1))
    A = np.vstack([Q.T, np.ones(m + 1)])
    b = np.zeros(m + 2)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


# frozen from birth_death_oracle(0.5, 2)
RHO_HALF_M2 = (4 / 7, 2 / 7, 1 / 7)


def test_oracle_freeze_matches():
    assert birth_death_oracle(0.5, 2) == pytest.approx(RHO_HALF_M2, abs=1e-12)


def test_uniform_limit():
    assert occupancy(1.0, 4) == pytest.approx([0.2] * 5, abs=0)
    assert blocking_probability(1.0, 4) == 0.2


def test_empty_queue_degenerate():
    assert list(occupancy(0.0, 3)) == [1.0, 0.0, 0.0, 0.0]
    assert blocking_probability(0.0, 3) == 0.0
    assert empty_probability(0.0, 3) == 1.0


def test_half_load_two_slots():
    assert occupancy(0.5, 2) == pytest.approx(RHO_HALF_M2, abs=1e-12)
    assert blocking_probability(0.5, 2) == pytest.approx(1 / 7, abs=1e-12)
    assert empty_probability(0.5, 2) == pytest.approx(4 / 7, abs=1e-12)


@pytest.mark.parametrize("rho", [0.1, 0.9, 1.3, 4.0, 37.0])
@pytest.mark.parametrize("m", [1, 2, 6])
def test_matches_generator_oracle(rho, m):
    assert occupancy(rho, m) == pytest.approx(birth_death_oracle(rho, m), abs=1e-10)


def test_negative_rho_rejected():
    for fn in (occupancy, blocking_probability, empty_probability):
        with pytest.raises(ValueError):
            fn(-0.1, 2)
    with pytest.raises(ValueError):
        occupancy(float("nan"), 2)


def test_extreme_loads_do_not_overflow():
    v = occupancy(1e6, 200)
    assert np.all(np.isfinite(v)) and v[-1] == pytest.approx(1 - 1e-6, rel=1e-9)
    assert blocking_probability(math.inf, 3) == 1.0


@given(st.floats(0.0, 1e4), st.integers(1, 60))
def test_sums_to_one_and_endpoints(rho, m):
    v = occupancy(rho, m)
    assert np.all(v >= 0.0)
    assert abs(v.sum() - 1.0) <= 1e-12
    assert v[-1] == pytest.approx(blocking_probability(rho, m), rel=1e-12, abs=1e-300)
    assert v[0] == pytest.approx(empty_probability(rho, m), rel=1e-12, abs=1e-300)


def test_continuity_across_one():
    for m in (1, 2, 5, 50):
        for rho in (1 - 1e-7, 1 + 1e-7):
            assert abs(blocking_probability(rho, m) - 1 / (m + 1)) <= 1e-5


def test_blocking_monotone_grid():
    rhos = np.concatenate([np.linspace(0, 3, 301), [1 - 1e-9, 1 + 1e-9, 10, 100]])
    rhos.sort()
    for m in (1, 2, 5, 50):
        b = [blocking_probability(r, m) for r in rhos]
        assert np.all(np.diff(b) >= -1e-15)
    for r in rhos:
        b = [blocking_probability(r, m) for m in range(1, 60)]
        assert np.all(np.diff(b) <= 1e-15)
