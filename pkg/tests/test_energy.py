import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonpucci.energy import (
    EnergyPhase,
    big_energy,
    big_energy_exponent,
    energy_samples,
    growth_bound_at_tau,
    monotonicity_audit,
    small_delta_bound,
    small_energy,
    tau_width_bound,
)
from henonpucci.ivp import IntegratorConfig, ShootingInput, SolutionProfile, integrate_ivp
from henonpucci.pucci import ProblemParams
from henonpucci.shooting import AnnulusRequest, solve_annulus
from strategies import params as params_st


def shot(q, delta=1.0, inner=1.0, **kw):
    return integrate_ivp(ShootingInput(q, inner, delta), IntegratorConfig(**kw))


class TestFormulas:
    def test_small_energy(self):
        q = ProblemParams(1, 1, 3, 4, 0)
        assert small_energy(1, 1, 0, 1, q) == pytest.approx(0.2)
        assert small_energy(1, 0, 3.0, 7.0, q) == pytest.approx(4.5)
        q1 = ProblemParams(1, 1, 3, 4, 1)
        assert small_energy(2, 0, 2, 1, q1) == pytest.approx(1.0)

    def test_big_energy(self, C1):
        assert big_energy(1, 0.3, 0.2, 1.5, C1) == pytest.approx(small_energy(1, 0.3, 0.2, 1.5, C1))
        assert big_energy_exponent(C1) == pytest.approx(9.0)
        ratio = big_energy(2, 0.3, 0.2, 1.5, C1) / small_energy(2, 0.3, 0.2, 1.5, C1)
        assert ratio == pytest.approx(512.0)

    def test_broadcasts(self, C1):
        r = np.array([1.0, 2.0])
        assert small_energy(r, r, r, 1.0, C1).shape == (2,)


class TestSamples:
    def test_sigma_by_phase(self, C1):
        prof = shot(C1)
        es = energy_samples(prof)
        ti = prof.tau_index
        for i, e in enumerate(es[1:-1], 1):
            if e.phase is EnergyPhase.INCREASING:
                assert e.sigma_used == "Lambda" and i <= ti
            elif e.phase is EnergyPhase.DECREASING:
                assert e.sigma_used == "lambda" and i >= ti
        assert es[0].small_energy == pytest.approx(0.5)


class TestMonotonicity:
    def test_c1_annulus(self, C1):
        rep = solve_annulus(AnnulusRequest(C1, 1, 2))
        m = monotonicity_audit(rep.profile)
        assert m.ok and m.worst < 1e-7 and m.hypothesis_ok

    def test_semilinear(self):
        m = monotonicity_audit(shot(ProblemParams(1, 1, 3, 3, 0)))
        assert m.ok and m.worst < 1e-7

    def test_negative_control(self, C1):
        prof = shot(C1)
        up = prof.uprime.copy()
        k = prof.tau_index + 10
        up[k] *= 1.2
        bad = SolutionProfile.from_samples(prof.r, prof.u, up, C1, tau_index=prof.tau_index,
                                           tau=prof.tau)
        m = monotonicity_audit(bad)
        assert not m.ok and m.worst > 1e-3

    @given(params_st(), st.floats(-1.5, 2.5))
    @settings(max_examples=30)
    def test_random_profiles(self, q, logd):
        m = monotonicity_audit(shot(q, 10 ** logd, r_max=1e4))
        if m.hypothesis_ok:
            assert m.ok, m.checks


class TestBounds:
    @pytest.mark.parametrize("delta", np.geomspace(1e-3, 1e3, 13))
    def test_small_delta_bound(self, C1, delta):
        gap, rhs = small_delta_bound(shot(C1, delta))
        assert gap <= 1e-12 * rhs

    @pytest.mark.parametrize("delta", np.geomspace(1e-2, 1e3, 11))
    def test_growth_at_tau(self, C1, delta):
        lhs, rhs = growth_bound_at_tau(shot(C1, delta))
        assert lhs >= rhs

    def test_tau_width_bounded(self, C1):
        vals = []
        for d in np.geomspace(1, 1e4, 9):
            lhs, rhs = tau_width_bound(shot(C1, d))
            vals.append(lhs)
            assert lhs <= rhs
        assert max(vals) < 10 * min(vals)

    def test_needs_maximum(self, C1):
        truncated = integrate_ivp(ShootingInput(C1, 1, 1), IntegratorConfig(), r_stop=1.01)
        with pytest.raises(ValueError):
            growth_bound_at_tau(truncated)
