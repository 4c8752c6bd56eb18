import cmath
import math

import numpy as np
import pytest

from blowup.algebra import BivariatePolynomial, Chart, PlanarField, to_charts
from blowup.flow import (
    Arc,
    IntegrationConfig,
    Line,
    NotClosedError,
    PathDiscontinuityError,
    Termination,
    TimePath,
    TooCoarseError,
    continue_leaf,
    integrate_chart_time,
    integrate_path,
    winding_number,
)

P = BivariatePolynomial.from_coeffs

TIGHT = IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14, max_step=0.05)


def riccati_system():
    # dx/dt = x^2 on the invariant line y = 0, embedded as (x^2, -y).
    return to_charts(PlanarField(P([(2, 0, 1.0)]), P([(0, 1, -1.0)])))


def riccati_pm1_system():
    # dx/dt = x^2 - 1 embedded.
    return to_charts(PlanarField(P([(2, 0, 1.0), (0, 0, -1.0)]), P([(0, 1, -1.0)])))


def linear_uz_system(mu1: complex, mu2: complex):
    """Planar field whose uz chart is diag(mu1, mu2): f = -mu1 x, g = (mu2-mu1) y."""
    return to_charts(PlanarField(P([(1, 0, -mu1)]), P([(0, 1, mu2 - mu1)])))


def xy_of(sample):
    from blowup.algebra import chart_point
    return chart_point(sample.coords, sample.chart, Chart.XY)


# ---------------------------------------------------------------- TimePath

def test_path_segments_must_join():
    with pytest.raises(PathDiscontinuityError):
        TimePath((Line(0.0, 1.0), Line(2.0, 3.0)))


def test_circle_path_is_closed():
    path = TimePath.circle(1.0, 0.5)
    assert path.is_closed
    assert path.point(0.0) == pytest.approx(1.5)
    assert path.point(0.5) == pytest.approx(0.5)


def test_multicycle_requires_closed():
    with pytest.raises(PathDiscontinuityError):
        TimePath((Line(0.0, 1.0),), cycles=2)


# ---------------------------------------------------------- integrate_path

def test_riccati_real_line_closed_form():
    # x0 = 1: x(t) = 1/(1 - t); at t = 0.5 the value is 2.
    path = TimePath.from_points([0.0, 0.5])
    traj = integrate_path(riccati_system(), Chart.XY, (1.0, 0.0), path, TIGHT)
    assert traj.terminated_reason == Termination.COMPLETED
    assert abs(xy_of(traj.end)[0] - 2.0) < 1e-9


def test_riccati_closed_form_along_random_paths():
    # x(t) = 1/(-t + 1/x0) checked at every sample of 10 random paths that
    # keep distance >= 0.1 from the pole at T = 1.
    rng = np.random.default_rng(42)
    sys = riccati_system()
    done = 0
    while done < 10:
        pts = [0.0 + 0.0j]
        for _ in range(3):
            pts.append(pts[-1] + complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)))
        if any(_dist_to_segment(1.0 + 0j, a, b) < 0.1 for a, b in zip(pts, pts[1:])):
            continue
        done += 1
        traj = integrate_path(sys, Chart.XY, (1.0, 0.0), TimePath.from_points(pts), TIGHT)
        for smp in traj.samples:
            expected = 1.0 / (1.0 - smp.t)
            if smp.chart == Chart.XY:
                got = smp.coords[0]
            elif smp.chart == Chart.UZ:
                got = 1.0 / smp.coords[0]
            else:
                continue
            assert abs(got - expected) < 1e-9 * max(1.0, abs(expected))


def _dist_to_segment(p: complex, a: complex, b: complex) -> float:
    if a == b:
        return abs(p - a)
    lam = ((p - a) * (b - a).conjugate()).real / abs(b - a) ** 2
    lam = min(max(lam, 0.0), 1.0)
    return abs(p - (a + lam * (b - a)))


def test_riccati_semicircular_detour_past_pole():
    # Continue x0 = 1 through the pole at T = 1 via an upper semicircle;
    # the continuation is real again with x(2) = 1/(1-2) = -1.
    path = TimePath((
        Line(0.0, 0.5),
        Arc(1.0, 0.5, math.pi, 0.0),
        Line(1.5, 2.0),
    ))
    traj = integrate_path(riccati_system(), Chart.XY, (1.0, 0.0), path, TIGHT)
    assert traj.terminated_reason == Termination.COMPLETED
    assert abs(xy_of(traj.end)[0] - (-1.0)) < 1e-8
    # The detour must actually have passed through the blow-up chart.
    assert any(s.chart == Chart.UZ for s in traj.samples)


def test_riccati_lower_semicircle_gives_same_continuation():
    upper = TimePath((Line(0.0, 0.5), Arc(1.0, 0.5, math.pi, 0.0), Line(1.5, 2.0)))
    lower = TimePath((Line(0.0, 0.5), Arc(1.0, 0.5, math.pi, 2.0 * math.pi), Line(1.5, 2.0)))
    xu = xy_of(integrate_path(riccati_system(), Chart.XY, (1.0, 0.0), upper, TIGHT).end)[0]
    xl = xy_of(integrate_path(riccati_system(), Chart.XY, (1.0, 0.0), lower, TIGHT).end)[0]
    assert abs(xu - xl) < 1e-8


def test_imaginary_period_of_riccati_pm1():
    # Orbits of dx/dt = x^2 - 1 are periodic in imaginary time with period pi.
    path = TimePath.from_points([0.0, 1j * math.pi])
    traj = integrate_path(riccati_pm1_system(), Chart.XY, (1j, 0.0), path, TIGHT)
    assert abs(xy_of(traj.end)[0] - 1j) < 1e-7


def test_singularity_ball_termination():
    sys = riccati_system()
    cfg = IntegrationConfig(rel_tol=1e-10, abs_tol=1e-12, singularity_radius=0.05)
    path = TimePath.from_points([0.0, 1.2])  # runs into T = 1
    traj = integrate_path(sys, Chart.XY, (1.0, 0.0), path, cfg,
                          designated_equilibrium=(Chart.UZ, (0.0, 0.0)))
    assert traj.terminated_reason == Termination.ENTERED_SINGULARITY_BALL
    assert traj.end.chart == Chart.UZ
    assert abs(traj.end.coords[0]) < 0.055


def test_flow_property_on_catalog_style_systems():
    # Phi^{t2} o Phi^{t1} = Phi^{t1+t2} along concatenated paths.
    rng = np.random.default_rng(5)
    systems = [riccati_pm1_system(), linear_uz_system(-1.0, -2.0)]
    for sys in systems:
        for _ in range(20):
            t1 = complex(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15))
            t2 = complex(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15))
            start = (complex(rng.uniform(0.3, 0.8), rng.uniform(-0.2, 0.2)),
                     complex(rng.uniform(0.3, 0.8), 0.0))
            two_leg = integrate_path(sys, Chart.XY, start, TimePath.from_points([0.0, t1, t1 + t2]), TIGHT)
            direct = integrate_path(sys, Chart.XY, start, TimePath.from_points([0.0, t1 + t2]), TIGHT)
            a = np.array(two_leg.end.coords)
            b = np.array(direct.end.coords)
            assert np.max(np.abs(a - b)) < 1e-8


def test_reversibility():
    sys = riccati_pm1_system()
    start = (0.4 + 0.3j, 0.5 + 0.0j)
    path = TimePath.from_points([0.0, 0.4 + 0.2j, 0.1 + 0.5j])
    fwd = integrate_path(sys, Chart.XY, start, path, TIGHT)
    back_path = TimePath.from_points([0.0, -0.4 + 0.3j, -(0.1 + 0.5j) + 0.0])
    # reverse by walking the displacement backwards from the endpoint
    pts = [0.1 + 0.5j, 0.4 + 0.2j, 0.0]
    back = integrate_path(sys, fwd.end.chart, fwd.end.coords, TimePath.from_points(pts), TIGHT)
    # back path re-parametrizes t but the field is autonomous: shift to 0-based
    assert np.max(np.abs(np.array(back.end.coords) - np.array(start))) < 1e-8


def test_leaf_invariance_under_euler_multiplier():
    # Integrate the caricature's uz system in its own time t1 (accumulating t)
    # and check the xy-chart integration visits the same states at the same
    # original times.
    a = 2.0
    fld = PlanarField(P([(2, 0, 1.0), (0, 2, a / 4.0)]), P([(0, 1, -1.0), (1, 1, a)]))
    sys = to_charts(fld)
    u0, z0 = 0.8 + 0.1j, 0.4 - 0.2j
    chart_traj = integrate_chart_time(sys, Chart.UZ, (u0, z0), TimePath.from_points([0.0, 0.3 + 0.1j]), TIGHT)
    x0, y0 = 1.0 / u0, z0 / u0
    for smp in chart_traj.samples[::5]:
        t = smp.t
        if abs(t) < 1e-12:
            continue
        xy = integrate_path(sys, Chart.XY, (x0, y0), TimePath.from_points([0.0, t]), TIGHT)
        u_t, z_t = smp.coords
        got = np.array(xy.end.coords)
        want = np.array([1.0 / u_t, z_t / u_t])
        assert np.max(np.abs(got - want)) < 1e-7 * max(1.0, float(np.max(np.abs(want))))


# ---------------------------------------------------------- winding_number

def _circle_samples(center, radius, turns, n=200, phase=0.0):
    sgn = 1.0 if turns >= 0 else -1.0
    total = abs(turns) * n
    return [center + radius * cmath.exp(1j * (phase + sgn * 2 * math.pi * k / n)) for k in range(total + 1)]


def test_winding_unit_circle():
    assert winding_number(_circle_samples(0.0, 1.0, 1), 0.0) == 1


def test_winding_double_clockwise():
    assert winding_number(_circle_samples(0.0, 1.0, -2), 0.0) == -2


def test_winding_center_outside():
    assert winding_number(_circle_samples(3.0, 1.0, 1), 0.0) == 0


def test_winding_orientation_antisymmetry():
    curve = _circle_samples(0.2 + 0.1j, 1.3, 3)
    assert winding_number(list(reversed(curve)), 0.0) == -winding_number(curve, 0.0)


def test_winding_not_closed():
    curve = _circle_samples(0.0, 1.0, 1)[:-5]
    with pytest.raises(NotClosedError):
        winding_number(curve, 0.0)


def test_winding_too_coarse():
    with pytest.raises(TooCoarseError):
        winding_number(_circle_samples(0.0, 1.0, 1, n=4), 0.0)


# ----------------------------------------------------------- continue_leaf

def test_linear_holonomy_multiplier_minus_one():
    # uz system diag(-1, -2): holonomy of u over a z-loop multiplies by
    # exp(2 pi i * (1/2)) = -1.
    sys = linear_uz_system(-1.0, -2.0)
    loop = TimePath.circle(0.0, 0.1)
    u0 = 0.01
    res = continue_leaf(sys, Chart.UZ, loop, u0, TIGHT)
    assert abs(res["fiber_end"] - u0 * cmath.exp(1j * math.pi)) < 1e-8


def test_equal_eigenvalue_holonomy_is_identity():
    sys = linear_uz_system(-1.5, -1.5)
    res = continue_leaf(sys, Chart.UZ, TimePath.circle(0.0, 0.1), 0.02, TIGHT)
    assert abs(res["fiber_end"] - 0.02) < 1e-9


def test_caricature_saddle_holonomy_is_near_identity():
    # a = 2 saddle at (0,0): spectral quotient -1, multiplier exp(-2 pi i) = 1.
    a = 2.0
    fld = PlanarField(P([(2, 0, 1.0), (0, 2, a / 4.0)]), P([(0, 1, -1.0), (1, 1, a)]))
    sys = to_charts(fld)
    u0 = 1e-3
    res = continue_leaf(sys, Chart.UZ, TimePath.circle(0.0, 0.1), u0, TIGHT)
    assert abs(res["fiber_end"] - u0) < 1e-6


def test_contractible_base_loop_returns_fiber():
    # A loop not enclosing the base singular point transports trivially.
    sys = linear_uz_system(-1.0, -2.0)
    loop = TimePath.circle(0.5, 0.1)  # z = 0 outside
    res = continue_leaf(sys, Chart.UZ, loop, 0.03, TIGHT)
    assert abs(res["fiber_end"] - 0.03) < 1e-9
