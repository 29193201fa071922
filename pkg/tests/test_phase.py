import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonpucci.ivp import IntegratorConfig, ShootingInput, SolutionProfile, equation_residual, integrate_ivp
from henonpucci.phase import (
    EV_QUADRANT,
    Classification,
    PhaseConfig,
    PhasePoint,
    PhaseTrajectory,
    PrecisionLoss,
    Termination,
    _field,
    apriori_box_check,
    blowup_bound_2Q,
    branch_field,
    flow_direction_audit,
    from_phase,
    geometry,
    integrate_phase,
    numerical_jacobian,
    poincare_return,
    stable_manifold_A0,
    stable_slope_A0,
    stationary_points,
    to_phase,
    unstable_manifold_O,
    unstable_slope_O,
    vector_field,
    z0_value,
)
from henonpucci.pucci import ProblemParams, derive_exponents
from henonpucci.shooting import classify_decay, find_fast_decay_delta
from strategies import params as params_st


def by_name(pts):
    return {p.name: p for p in pts}


class TestVectorField:
    def test_examples(self, C1):
        assert vector_field((1, 1), C1) == pytest.approx((2 / 3, -1))
        assert vector_field((0.1, 3), C1) == pytest.approx((2.81, 5.1))
        xd, zd = vector_field(PhasePoint(0.25, 0.75), C1)
        assert (xd, zd) == pytest.approx((0.3125, 0.9375))
        assert zd / xd == pytest.approx(3.0)

    def test_rejects_negative_z(self, C1):
        with pytest.raises(ValueError):
            vector_field((1, -1), C1)

    def test_field_consistency_1e4(self):
        rng = np.random.default_rng(1)
        for q in (ProblemParams(1, 1.5, 4, 4, 0), ProblemParams(0.5, 2, 7, 3, 1.5, "minus")):
            xs = rng.uniform(0, 6, 10_000)
            zs = rng.uniform(0, 30, 10_000)
            xd, zd = _field(xs, zs, q)
            ref = np.array([branch_field(x, z, q) for x, z in zip(xs, zs)])
            scale = 1 + xs * xs + zs
            assert np.max(np.abs(xd - ref[:, 0]) / scale) < 1e-13
            assert np.max(np.abs(zd - ref[:, 1]) / scale) < 1e-13

    @given(params_st(), st.floats(-20, -1e-3), st.floats(1e-3, 50))
    def test_2q_points_right_and_up(self, q, x, z):
        xd, zd = vector_field((x, z), q)
        assert xd > 0 and zd > 0

    def test_no_stationary_point_in_2q(self, C1):
        x, z = np.meshgrid(-np.linspace(0.05, 5, 60), np.linspace(0.05, 5, 60))
        xd, zd = _field(x, z, C1)
        assert np.min(np.hypot(xd, zd)) > 0.01


class TestStationaryPoints:
    def test_c1(self, C1):
        pts = by_name(stationary_points(C1))
        assert pts["O"].location == (0, 0) and pts["O"].classification is Classification.SADDLE
        assert pts["A0"].location == pytest.approx((1, 0))
        assert pts["A0"].classification is Classification.SADDLE
        assert pts["A0"].directions["stable"] == pytest.approx(-3.0)
        assert pts["M0"].location == pytest.approx((2 / 3, 1 / 3))
        assert pts["M0"].classification is Classification.SOURCE

    def test_c1_minus(self, C1):
        pts = by_name(stationary_points(C1.swapped()))
        assert pts["A0"].location == pytest.approx((3.5, 0))
        assert pts["M0"].location == pytest.approx((2 / 3, 17 / 9))
        assert pts["M0"].classification is Classification.SINK

    def test_degenerate_at_serrin(self, C1):
        pts = by_name(stationary_points(C1.replace(p=3.0)))
        assert pts["A0"].location == pytest.approx((1, 0))
        assert pts["M0"].location == pytest.approx((1, 0))
        assert pts["M0"].classification is Classification.DEGENERATE

    def test_center_window(self, C1):
        assert by_name(stationary_points(C1.replace(p=5.0)))["M0"].classification is Classification.CENTER
        assert by_name(stationary_points(C1.replace(p=5.0 + 1e-6)))["M0"].classification is Classification.SINK

    @given(params_st())
    def test_stationarity(self, q):
        for sp in stationary_points(q):
            if sp.location[1] >= 0:
                assert math.hypot(*_field(*sp.location, q)) < 1e-12 * max(1.0, sp.location[1])

    @given(params_st())
    def test_m0_in_1q_iff_above_serrin(self, q):
        ex = derive_exponents(q)
        if abs(q.p - ex.p_sa) > 1e-9:
            assert (z0_value(q) > 0) == (q.p > ex.p_sa)

    @given(params_st())
    @settings(max_examples=20)
    def test_numerical_jacobian_signs(self, q):
        ex = derive_exponents(q)
        if min(abs(q.p - ex.p_sa), abs(q.p - ex.p_pa)) < 1e-3:
            return
        for sp in stationary_points(q):
            if sp.location[1] < 0:
                continue
            re = np.linalg.eigvals(numerical_jacobian(*sp.location, q, branch="rminus")).real
            kind = {(True, True): Classification.SOURCE, (False, False): Classification.SINK}.get(
                (bool(re[0] > 0), bool(re[1] > 0)), Classification.SADDLE)
            assert kind is sp.classification

    def test_stable_line_a0(self, C1):
        assert stable_slope_A0(C1) == pytest.approx(-3.0)
        # the field restricted to the stable line points back to A0
        for s in (1e-3, 1e-4):
            x, z = 1 - s, 3 * s
            xd, zd = _field(x, z, C1)
            assert xd > 0 and zd < 0
            assert zd / xd == pytest.approx(-3.0, rel=1e-2)


class TestGeometry:
    def test_c1(self, C1):
        g = geometry(C1)
        assert g.ell_slope == 3
        assert g.parabola == (1.5, 1.5)
        assert g.pi2_x == pytest.approx(2 / 3)
        assert g.tangency_point == pytest.approx((0.25, 0.75))
        assert g.box == pytest.approx((1, 8 / 3))

    def test_parabola_below_line(self, C1):
        g = geometry(C1)
        x = np.linspace(0, 1, 102)[1:-1]
        assert np.all(g.parabola_z(x) < g.ell_z(x))

    def test_regions(self, C1):
        g = geometry(C1)
        assert g.region(1, 1) == "R-"
        assert g.region(0.1, 3) == "R+"
        assert g.region(0.5, 1.5) == "ell"


class TestTransforms:
    def test_power_profile_is_constant(self):
        q = ProblemParams(1, 1.5, 4, 4, 0)
        r = np.geomspace(1, 10, 20)
        tr = to_phase(SolutionProfile.from_samples(r, r ** (-2 / 3), -2 / 3 * r ** (-5 / 3), q))
        assert np.allclose(tr.x, 2 / 3) and np.allclose(tr.z, 1.0)

    def test_axis_crossing_at_tau(self, C1):
        prof = integrate_ivp(ShootingInput(C1, 1, 1))
        tr = to_phase(prof)
        i = prof.tau_index - 1  # launch sample dropped
        assert tr.x[i] == pytest.approx(0, abs=1e-9)
        assert 0 < tr.z[i] < math.inf

    def test_annular_blowups(self, C1):
        tr = to_phase(integrate_ivp(ShootingInput(C1, 1, 1)))
        assert tr.x[0] < -500 and tr.x[-1] > 50
        assert np.all(np.diff(tr.x[:5]) > 0) and np.all(np.diff(tr.x[-5:]) > 0)
        assert tr.z[0] < 1e-5 and tr.z[-1] < 1e-5

    def test_rejects_nonpositive(self, C1):
        with pytest.raises(ValueError):
            to_phase(SolutionProfile.from_samples([1, 2], [1, -1], [0, 0], C1))
        with pytest.raises(ValueError):
            from_phase(PhaseTrajectory(np.zeros(1), np.zeros(1), np.zeros(1), C1))

    def test_constant_trajectory_at_m0(self, C1):
        t = np.linspace(-1, 3, 30)
        prof = from_phase(PhaseTrajectory(t, np.full(30, 2 / 3), np.full(30, 1 / 3), C1))
        assert np.allclose(prof.u, (1 / 3) ** (1 / 3) * prof.r ** (-2 / 3), rtol=1e-14)
        a = 2 / 3
        for r, u, up in prof.samples:
            assert abs(equation_residual(r, u, up, a * (a + 1) * u / r ** 2, C1)) < 1e-10

    def test_single_point(self, C1):
        prof = from_phase(PhaseTrajectory(np.zeros(1), np.ones(1), np.ones(1), C1))
        assert len(prof) == 1 and prof.r[0] == 1.0

    @pytest.mark.parametrize("delta", [0.3, 1.0, 5.0])
    def test_round_trip(self, C1, delta):
        prof = integrate_ivp(ShootingInput(C1, 1, delta))
        tr = to_phase(prof)
        back = from_phase(tr)
        assert np.max(np.abs(back.u / prof.u[1:-1] - 1)) < 1e-8
        tr2 = to_phase(back)
        assert np.max(np.abs(tr2.x - tr.x) / (1 + np.abs(tr.x))) < 1e-8
        assert np.max(np.abs(tr2.z / tr.z - 1)) < 1e-8

    def test_ode_phase_commutation(self, C1):
        prof = integrate_ivp(ShootingInput(C1, 1, 1))
        tr = to_phase(prof)
        k = int(np.argmax(tr.x > -20))
        cfg = PhaseConfig()
        for j in range(k + 5, len(tr.t) - 5, max(1, (len(tr.t) - k) // 15)):
            ph = integrate_phase(C1, tr.x[k], tr.z[k], tr.t[k], tr.t[j], cfg)
            assert abs(ph.x[-1] - tr.x[j]) < 1e-6 * max(1, abs(tr.x[j]))
            assert abs(ph.z[-1] - tr.z[j]) < 1e-6 * max(1, tr.z[j])
        ph = integrate_phase(C1, tr.x[k], tr.z[k], tr.t[k], math.log(prof.tau) + 1, cfg)
        tc, _, _ = ph.events(EV_QUADRANT)
        assert tc[0] == pytest.approx(math.log(prof.tau), abs=1e-8)


class TestManifolds:
    def test_gamma_slope(self, C1):
        g = unstable_manifold_O(C1)
        assert g.z[1] / g.x[1] == pytest.approx(4.0, abs=1e-3)
        assert unstable_slope_O(C1) == 4.0

    @pytest.mark.xfail(strict=True, reason="unstable direction of O lies above the concavity line, "
                       "where the slope is lambda(N+a)=4, not Lambda(Ntilde+a)=4.5 (notes/decisions.md)")
    def test_gamma_slope_literal(self, C1):
        g = unstable_manifold_O(C1)
        assert g.z[1] / g.x[1] == pytest.approx(4.5, abs=1e-3)

    def test_gamma_direction_is_invariant(self, C1):
        x = 1e-7
        xd, zd = _field(x, 4 * x, C1)
        assert zd / xd == pytest.approx(4.0, rel=1e-5)
        xd, zd = _field(x, 4.5 * x, C1)
        assert abs(zd / xd - 4.5) > 0.1

    def test_gamma_backward_returns_to_o(self, C1):
        g = unstable_manifold_O(C1)
        b = integrate_phase(C1, g.x[0], g.z[0], 0.0, -2.0, PhaseConfig())
        d = np.hypot(b.x, b.z)
        assert np.all(np.diff(d) < 0) and d[-1] < 0.05 * d[0]

    def test_gamma_seed_halving(self, C1):
        g1 = unstable_manifold_O(C1)
        g2 = unstable_manifold_O(C1, eps=g1.info["seed_eps"] / 2)
        # halving the seed delays the orbit by ln2 / mu, mu = 2 + a the unstable rate
        sh = math.log(2) / (2 + C1.a)
        for t in (1.0, 3.0, 6.0):
            assert abs(np.interp(t, g1.t, g1.x) - np.interp(t + sh, g2.t, g2.x)) < 1e-4
            assert abs(np.interp(t, g1.t, g1.z) - np.interp(t + sh, g2.t, g2.z)) < 1e-4

    def test_upsilon_p6(self, C1):
        q = C1.replace(p=6.0)
        u = stable_manifold_A0(q)
        assert u.info["crossing_z"] > 0 and math.isfinite(u.info["crossing_z"])
        assert u.termination is Termination.BLOWUP_BACKWARD_2Q
        assert u.x[0] < -1e5
        assert u.info["blowup_t"] < u.info["crossing_t"]

    def test_upsilon_seed_slope(self, C1):
        q = C1.replace(p=6.0)
        u = stable_manifold_A0(q)
        A = -stable_slope_A0(q)
        assert u.info["seed_slope"] == pytest.approx(-A)
        x1 = q.Ntilde - 2
        near = (np.abs(u.x - x1) < 1e-4) & (u.x != x1)
        assert np.all(np.abs(u.z[near] / (u.x[near] - x1) + A) < 1e-3 * A)

    def test_upsilon_is_the_fast_decay_shot(self, semilinear):
        # z at the axis crossing and the radius ratio are scale invariant
        u = stable_manifold_A0(semilinear)
        rep = find_fast_decay_delta(semilinear, 1.0, fit=False)
        prof = integrate_ivp(ShootingInput(semilinear, 1.0, rep.found_delta), stop_at_max=True)
        z_tau = prof.tau ** 2 * prof.u_tau ** 5
        assert u.info["crossing_z"] == pytest.approx(z_tau, rel=1e-8)
        assert math.exp(u.info["crossing_t"] - u.info["blowup_t"]) == pytest.approx(prof.tau, rel=1e-6)

    def test_upsilon_needs_p_above_serrin(self, C1):
        with pytest.raises(ValueError):
            stable_manifold_A0(C1.replace(p=2.5))

    def test_precision_loss(self, C1):
        with pytest.raises(PrecisionLoss):
            stable_manifold_A0(C1.replace(p=6.0), t_span=1.0)


class TestAudits:
    def test_blowup_bound_on_annular_segment(self, C1):
        tr = to_phase(integrate_ivp(ShootingInput(C1, 1, 1)))
        i = np.nonzero(tr.x < 0)[0]
        rep = blowup_bound_2Q(tr.t[i], tr.x[i], tr.z[i], tr.t[i[-1]], C1)
        assert rep.ok and rep.checked == len(i)

    def test_blowup_bound_endpoint(self, C1):
        rep = blowup_bound_2Q([0.0], [-1.0], [0.5], 0.0, C1)
        assert rep.ok and rep.checked == 1

    def test_blowup_bound_negative_control(self, C1):
        # x decreasing backward too slowly to satisfy the bound
        t = np.linspace(-1, 0, 20)
        x = np.full(20, -0.5)
        rep = blowup_bound_2Q(t, x, np.full(20, 0.1), 0.0, C1)
        assert not rep.ok and any(v["kind"] == "bound" for v in rep.violations)

    def test_box_c1(self, C1):
        assert geometry(C1).box == pytest.approx((1, 8 / 3))

    def test_slow_tail_inside_box(self, C1):
        q = C1.replace(p=6.0)
        c, info = classify_decay(q, 1.0, 1.0, details=True)
        assert c.value == "Slow"
        ext = info["extension"]
        tail = PhaseTrajectory(ext.t, ext.x, ext.z, q)
        assert apriori_box_check(tail, q).ok

    def test_annular_exits_box(self, C1):
        tr = to_phase(integrate_ivp(ShootingInput(C1, 1, 1)))
        rep = apriori_box_check(tr, C1)
        assert not rep.ok and not rep.details["globally_defined"]

    def test_flow_audit(self, C1):
        for q in (C1, C1.replace(p=6.0), C1.swapped(), ProblemParams(0.7, 2, 6, 3.5, 1.2)):
            rep = flow_direction_audit(q, 10_000, seed=3)
            assert rep.ok, rep.violations[:3]
            assert rep.checked >= 9_000

    def test_flow_examples(self, C1):
        x = 0.1
        xd, zd = _field(x, 3 * x, C1)
        assert zd / xd == pytest.approx(3 * 3 * 0.1 * (2 / 3 - 0.1) / (0.1 * 1.1))
        assert zd / xd > 3
        assert _field(2 / 3, 0.2, C1)[0] < 0
        assert _field(0.5, 0.0, C1)[0] < 0


class TestReturnMap:
    def test_center(self, C1):
        q = C1.replace(p=5.0)
        z0 = z0_value(q)
        rm = poincare_return(q, 0.1 * z0, 1)
        assert abs(rm.z_returns[0] - rm.z_seed) < 1e-5

    def test_source_and_sink(self, C1):
        assert poincare_return(C1, 1e-4 * z0_value(C1), 5).monotone() == "outward"
        q = C1.replace(p=6.0)
        assert poincare_return(q, 0.1 * z0_value(q), 5).monotone() == "inward"

    def test_budget_reported(self, C1):
        q = C1.replace(p=5.0)
        assert poincare_return(q, 0.1 * z0_value(q), 3, t_budget=1.0).exhausted


def test_upsilon_winds_into_source_below_p_star(C1):
    with pytest.raises(PrecisionLoss):
        stable_manifold_A0(C1)
    ups = stable_manifold_A0(C1, require_crossing=False)
    m0 = stationary_points(C1)[2].location
    assert ups.info["crossing_t"] is None
    assert math.hypot(ups.x[0] - m0[0], ups.z[0] - m0[1]) < 1e-8
