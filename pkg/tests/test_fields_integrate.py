import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from noncomp_lab.errors import DomainExit, SchemaError
from noncomp_lab.exactnum import Dyadic, Interval
from noncomp_lab.fields import build_field, linear_field, parse_field_spec, two_well_field
from noncomp_lab.integrate import batch_flow, integrate_trajectory, interval_flow, log_norm2

FIELDS = ["radial", "two_well", "rotated_saddle", "focus", "radial:rho2=1/4,sigma2=1/2,omega=2"]
coord = st.floats(-0.9, 0.9, allow_nan=False)


def reference(F, x0, t_end, t_eval=None):
    sol = solve_ivp(lambda t, y: F.rhs(y), (0, t_end), x0, method="DOP853", rtol=1e-12, atol=1e-14, t_eval=t_eval)
    return sol.y.T


class TestFields:
    def test_spec_parsing(self):
        assert parse_field_spec("radial:rho2=1,gain=2") == ("radial", {"rho2": "1", "gain": "2"})
        with pytest.raises(SchemaError):
            parse_field_spec("radial:rho2")
        with pytest.raises(SchemaError):
            build_field({"params": {}})

    def test_polynomial_mapping(self):
        F = build_field({"h1": {"1,0": 1, "0,1": -2}, "h2": {"0,1": 1}})
        assert np.allclose(F.rhs(np.array([1.0, 1.0])), [-1.0, 1.0])

    def test_two_well_equilibria(self):
        F = two_well_field()
        for p in ([1, 0], [-1, 0], [0, 0]):
            assert np.allclose(F.rhs(np.array(p, float)), 0)

    @pytest.mark.parametrize("spec", FIELDS)
    @settings(max_examples=30)
    @given(a=coord, b=coord)
    def test_interval_encloses_float(self, spec, a, b):
        F = build_field(spec)
        h = F.eval_iv(Dyadic.coerce(a), Dyadic.coerce(b))
        J = F.jac_iv(Dyadic.coerce(a), Dyadic.coerce(b))
        v = F.rhs(np.array([a, b]))
        Jf = F.jacobian(np.array([a, b]))
        for iv, x in zip(h, v):
            lo, hi = iv.float_bounds()
            assert lo - 1e-12 <= x <= hi + 1e-12
        for i in range(2):
            for j in range(2):
                lo, hi = J[i][j].float_bounds()
                assert lo - 1e-12 <= Jf[i, j] <= hi + 1e-12

    @pytest.mark.parametrize("spec", ["radial", "two_well", "focus"])
    def test_lipschitz_bounds_jacobian(self, spec):
        F = build_field(spec)
        L = F.lipschitz(1.0)
        rng = np.random.default_rng(0)
        r = np.sqrt(rng.random(4000))
        a = 2 * np.pi * rng.random(4000)
        pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
        norms = np.linalg.norm(F.jacobian(pts), ord=2, axis=(-2, -1))
        assert norms.max() <= L

    def test_log_norm_matches_eigen(self):
        rng = np.random.default_rng(1)
        J = rng.normal(size=(50, 2, 2))
        sym = 0.5 * (J + np.swapaxes(J, -1, -2))
        assert np.allclose(log_norm2(J), np.linalg.eigvalsh(sym)[:, -1])


class TestIntegration:
    def test_origin_stationary(self):
        tr = integrate_trajectory(build_field("radial"), [0.0, 0.0], 5.0)
        assert np.all(tr.x == 0)

    @pytest.mark.parametrize("spec", ["radial", "two_well", "focus"])
    def test_error_bound_covers_reference(self, spec):
        F = build_field(spec)
        tr = integrate_trajectory(F, [0.3, 0.2], 4.0, tol=1e-9, amplification="lognorm")
        ref = reference(F, [0.3, 0.2], 4.0, t_eval=tr.t)
        err = np.linalg.norm(tr.x - ref, axis=1)
        assert np.all(err <= tr.error_bound + 1e-10)

    def test_divergence_bound(self):
        # ||phi_t(x) - phi_t(y)|| <= ||x - y|| e^{Lt} on the disk
        F = build_field("radial")
        L = F.lipschitz(1.0)
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.uniform(-0.6, 0.6, 2)
            y = x + rng.normal(scale=1e-3, size=2)
            ts = np.linspace(0, 2, 9)
            px, py = reference(F, x, 2, ts), reference(F, y, 2, ts)
            d = np.linalg.norm(px - py, axis=1)
            assert np.all(d <= np.linalg.norm(x - y) * np.exp(L * ts) * (1 + 1e-6))

    def test_domain_exit(self):
        with pytest.raises(DomainExit):
            integrate_trajectory(build_field("source"), [0.5, 0.5], 20.0)

    def test_batch_matches_reference(self):
        F = build_field("two_well")
        y0 = np.array([[0.3, 0.4], [-0.5, 0.1], [0.9, -0.2]])
        y, E = batch_flow(F, y0.copy(), np.zeros(3), 3.0, 1 / 16)
        for k in range(3):
            ref = reference(F, y0[k], 3.0)[-1]
            assert np.linalg.norm(y[k] - ref) <= E[k] + 1e-12

    def test_interval_flow_encloses(self):
        F = build_field("radial")
        X = (Interval(Dyadic(5, -4), Dyadic(41, -7)), Interval(Dyadic(1, -3)))
        boxes = interval_flow(F, X, Dyadic(1), h=Dyadic(1, -5))
        ts = np.arange(len(boxes)) / 32
        for start in ([5 / 16, 1 / 8], [41 / 128, 1 / 8]):
            traj = reference(F, start, ts[-1], ts)
            for box, p in zip(boxes, traj):
                for iv, v in zip(box, p):
                    lo, hi = iv.float_bounds()
                    assert lo <= v <= hi


def test_linear_field_exact():
    F = linear_field(1, 2, 3, 4)
    assert np.allclose(F.jacobian(np.zeros(2)), [[1, 2], [3, 4]])
