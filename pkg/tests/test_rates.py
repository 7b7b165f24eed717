import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avgcase.rates import (
    limiting_ratio,
    log_xi_asymp,
    log_xi_gd,
    log_xi_opt,
    predict,
    xi_asymp,
    xi_gd,
    xi_opt,
)
from avgcase.recurrence import disk_weights


class TestClosedForms:
    def test_hand_values(self):
        assert xi_opt(2, 1, 0) == xi_asymp(2, 1, 0) == xi_gd(2, 1, 0) == 1.0
        assert xi_opt(2, 1, 1) == pytest.approx(1 / 9, rel=1e-14)
        assert xi_opt(2, 1, 2) == pytest.approx(1 / 57, rel=1e-14)
        assert xi_gd(2, 1, 2) == pytest.approx(1 / 48, rel=1e-14)
        # (3/4)^2 * (1/4)/2 * (1/4)^0 + (1/4)^2 = 9/128 + 8/128
        assert xi_asymp(2, 1, 1) == pytest.approx(17 / 128, rel=1e-14)

    def test_limiting_ratio(self):
        assert limiting_ratio(2, 1) == 0.75
        assert limiting_ratio(3, 0) == 1.0
        assert limiting_ratio(1, 1 - 1e-12) == pytest.approx(0.0, abs=1e-11)
        with pytest.raises(ValueError):
            limiting_ratio(1, 1)

    def test_ratios_approach_limit(self):
        for xi in (xi_opt, xi_asymp):
            assert xi(2, 1, 200) / xi_gd(2, 1, 200) == pytest.approx(0.75, rel=0.02)

    def test_matches_weight_tables(self):
        big_b = disk_weights(2.0, 1.0, 60).big_b
        for t in range(60):
            assert xi_opt(2, 1, t) * big_b[t + 1] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("C,R", [(2, 1), (10, 9), (5, 1)])
    def test_optimal_below_constant_weights(self, C, R):
        for t in range(1001):
            assert log_xi_opt(C, R, t) <= log_xi_asymp(C, R, t) + 1e-12

    @pytest.mark.parametrize("C,R", [(2, 1), (10, 9), (5, 1)])
    def test_strictly_decreasing(self, C, R):
        for fn in (log_xi_opt, log_xi_asymp, log_xi_gd):
            seq = [fn(C, R, t) for t in range(1, 301)]
            assert all(a > b for a, b in zip(seq, seq[1:]))
        preds = predict(C, R, 3)
        assert [p.t for p in preds] == [0, 1, 2, 3]
        assert preds[2].xi_opt == xi_opt(C, R, 2)

    def test_long_horizon_stays_finite_in_log_space(self):
        assert np.isfinite(log_xi_opt(2, 1, 1000))
        assert log_xi_opt(2, 1, 1000) < -1000

    @pytest.mark.parametrize("args", [(1, 2, 3), (2, 1, -1), (2, 1, 1.5), (0, 0, 1)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            xi_opt(*args)


@settings(max_examples=50, deadline=None)
@given(C=st.floats(0.5, 20), frac=st.floats(0.01, 0.99), t=st.integers(0, 400))
def test_ordering_property(C, frac, t):
    R = C * frac
    lo = log_xi_opt(C, R, t)
    assert lo <= log_xi_gd(C, R, t) + 1e-12
    assert lo <= log_xi_asymp(C, R, t) + 1e-12
