"""Detours around finite-time blow-up, loop discrepancies, and holonomy.

A detour starts from an approach trajectory that ran into the singularity
ball of a blow-up equilibrium (u, z) = (0, e).  The finite blow-up time T is
estimated from the approach by fitting the leading relation

    t - T = C * u^(m-1)

over the last few samples (the relation is exact for the linearized flow and
leading-order in general).  The detour then walks a circle of given radius
around T, ``cycles`` times, dragging the lifted state along in the blow-up
chart, and reports the end-versus-start discrepancy together with the
measured winding numbers of the time loop and of both coordinate traces.

One simple time loop drives the fiber coordinate u through 1/(m-1) of a
turn, so u closes after m-1 cycles; the base coordinate z then picks up the
holonomy multiplier exp(2 pi i * mu_z/mu_u) per u-turn.  Closure of the
whole lifted loop therefore happens exactly when the number of u-turns is a
multiple of the reduced denominator of mu_z/mu_u, at nondegenerate
semisimple equilibria with rational quotient, and never otherwise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from blowup.algebra import Chart, ChartSystem, chart_point
from blowup.equilibria import EquilibriumRecord
from blowup.flow import (
    Arc,
    IntegrationConfig,
    Line,
    NotClosedError,
    Termination,
    TimePath,
    TooCoarseError,
    Trajectory,
    continue_leaf,
    integrate_path,
    winding_number,
)

__all__ = [
    "DetourReport",
    "HolonomyEstimate",
    "DetourError",
    "LoopHitsSingularityError",
    "NoInvariantFiberError",
    "NotClosedReportError",
    "holonomy_multiplier",
    "masuda_detour",
    "blowup_star",
    "approach_blowup",
]


class DetourError(RuntimeError):
    pass


class LoopHitsSingularityError(DetourError):
    """The lifted loop entered the singularity ball around the equilibrium."""


class NoInvariantFiberError(DetourError):
    """Holonomy needs an invariant fiber line or a straightening transform."""


class NotClosedReportError(DetourError):
    """A closed detour report was required but the loop did not close."""


@dataclass(frozen=True)
class HolonomyEstimate:
    multiplier: complex
    fiber_radii: tuple[float, ...]
    richardson_order: int
    predicted: complex | None
    deviation: float | None


@dataclass(frozen=True)
class DetourReport:
    cycles: int
    t_loop: TimePath
    start_state: tuple[complex, complex]
    end_state: tuple[complex, complex]
    discrepancy: float
    windings: dict
    closed: bool
    chart: str
    T_estimate: complex
    t_fit_coefficient: complex
    a_u: complex
    fiber_start_magnitude: float
    per_cycle_discrepancy: tuple[float, ...]
    closure_threshold: float


def approach_blowup(
    system: ChartSystem,
    start_xy: tuple[complex, complex],
    eq: EquilibriumRecord,
    horizon: float,
    cfg: IntegrationConfig | None = None,
) -> Trajectory:
    """Run real time forward until the state enters the equilibrium's ball.

    Convenience front end for detour experiments: integrates the original
    field from an xy start along the real segment [0, horizon] with the given
    equilibrium designated, so the trajectory stops inside its singularity
    ball if blow-up happens before the horizon.
    """
    path = TimePath.from_points([0.0, horizon])
    return integrate_path(system, Chart.XY, start_xy, path, cfg,
                          designated_equilibrium=(eq.chart, eq.location))


def _fit_blowup_time(
    system: ChartSystem,
    approach: Trajectory,
    eq: EquilibriumRecord,
    fit_samples: int = 20,
) -> tuple[complex, complex]:
    """Least squares (T, C) in t = T + C u^(m-1) over the approach tail."""
    m1 = max(system.euler_exponent, 1)
    tail = approach.samples[-fit_samples:]
    ts, us = [], []
    for smp in tail:
        try:
            here = chart_point(smp.coords, smp.chart, eq.chart)
        except ZeroDivisionError:
            continue
        ts.append(smp.t)
        us.append(here[0] - eq.location[0])
    if len(ts) < 3:
        raise DetourError("approach too short to fit the blow-up time")
    A = np.column_stack([np.ones(len(ts)), np.array(us, dtype=complex) ** m1])
    sol, *_ = np.linalg.lstsq(A, np.array(ts, dtype=complex), rcond=None)
    return complex(sol[0]), complex(sol[1])


def masuda_detour(
    system: ChartSystem,
    blowup_eq: EquilibriumRecord,
    approach: Trajectory,
    loop_radius: float,
    cycles: int,
    closure_threshold: float | None = None,
    cfg: IntegrationConfig | None = None,
) -> DetourReport:
    """Circle the estimated blow-up time and measure the lifted discrepancy.

    The time loop starts at the phase of the approach endpoint, after a
    radial transport leg from the endpoint onto the circle.  Discrepancy is
    the state-space distance between the lifted states before and after the
    ``cycles`` traversals, reported both absolutely and against the relative
    closure threshold (default 1e-6 of the fiber magnitude at loop entry).
    """
    if approach.terminated_reason != Termination.ENTERED_SINGULARITY_BALL:
        raise DetourError(
            f"approach must end inside the singularity ball, got {approach.terminated_reason}"
        )
    if cycles < 1:
        raise ValueError("cycles must be positive")
    T_est, C_fit = _fit_blowup_time(system, approach, blowup_eq, fit_samples=20)
    t_enter = approach.end.t
    gap = abs(t_enter - T_est)
    if loop_radius >= gap:
        raise DetourError(f"loop radius {loop_radius:.3g} reaches past the approach endpoint (|t-T| = {gap:.3g})")

    m1 = max(system.euler_exponent, 1)
    a_u = _principal_inverse_root(C_fit, m1)

    entry_state = chart_point(approach.end.coords, approach.end.chart, blowup_eq.chart)
    phase = cmath.phase(t_enter - T_est)
    circle_entry = T_est + loop_radius * cmath.exp(1j * phase)

    base_cfg = cfg or IntegrationConfig()
    expected_u = abs(loop_radius / C_fit) ** (1.0 / m1)
    guard = IntegrationConfig(
        rel_tol=base_cfg.rel_tol,
        abs_tol=base_cfg.abs_tol,
        max_step=min(base_cfg.max_step, 0.02),
        singularity_radius=0.05 * expected_u,
        chart_switch_threshold=base_cfg.chart_switch_threshold,
    )

    # transport leg: radially from t_enter to the circle.
    leg = TimePath((Line(t_enter, circle_entry),))
    moved = integrate_path(system, blowup_eq.chart, entry_state, leg, guard,
                           designated_equilibrium=(blowup_eq.chart, blowup_eq.location))
    if moved.terminated_reason == Termination.ENTERED_SINGULARITY_BALL:
        raise LoopHitsSingularityError("transport leg fell into the singularity ball")
    if moved.terminated_reason != Termination.COMPLETED:
        raise DetourError(f"transport leg failed: {moved.terminated_reason}")
    state = chart_point(moved.end.coords, moved.end.chart, blowup_eq.chart)
    start_state = state

    circle = TimePath((Arc(T_est, loop_radius, phase, phase + 2.0 * math.pi),))
    per_cycle: list[float] = []
    t_samples: list[complex] = []
    u_samples: list[complex] = []
    z_samples: list[complex] = []
    for _ in range(cycles):
        run = integrate_path(system, blowup_eq.chart, state, circle, guard,
                             designated_equilibrium=(blowup_eq.chart, blowup_eq.location))
        if run.terminated_reason == Termination.ENTERED_SINGULARITY_BALL:
            raise LoopHitsSingularityError("lifted loop entered the singularity ball")
        if run.terminated_reason != Termination.COMPLETED:
            raise DetourError(f"loop integration failed: {run.terminated_reason}")
        for smp in run.samples:
            here = chart_point(smp.coords, smp.chart, blowup_eq.chart)
            t_samples.append(smp.t)
            u_samples.append(here[0])
            z_samples.append(here[1])
        state = chart_point(run.end.coords, run.end.chart, blowup_eq.chart)
        per_cycle.append(_state_gap(state, start_state))

    discrepancy = per_cycle[-1]
    fiber_mag = abs(start_state[0] - blowup_eq.location[0])
    threshold = closure_threshold if closure_threshold is not None else 1e-6 * fiber_mag
    closed = discrepancy < threshold

    windings = {
        "w_t": _try_winding(t_samples, T_est),
        "w_u": _try_winding(u_samples, blowup_eq.location[0]),
        "w_z": _try_winding(z_samples, blowup_eq.location[1]),
    }
    if closed:
        missing = [k for k, v in windings.items() if v is None]
        if missing:
            raise DetourError(f"closed loop but winding extraction failed for {missing}")
        if blowup_eq.semisimple and blowup_eq.domain not in (None, "Degenerate"):
            if windings["w_t"] != system.euler_exponent * windings["w_u"]:
                raise AssertionError(
                    f"winding law violated: w_t={windings['w_t']}, "
                    f"(m-1)*w_u={system.euler_exponent * windings['w_u']}"
                )

    return DetourReport(
        cycles=cycles,
        t_loop=TimePath((Arc(T_est, loop_radius, phase, phase + 2.0 * math.pi),), cycles),
        start_state=start_state,
        end_state=state,
        discrepancy=discrepancy,
        windings=windings,
        closed=closed,
        chart=blowup_eq.chart,
        T_estimate=T_est,
        t_fit_coefficient=C_fit,
        a_u=a_u,
        fiber_start_magnitude=fiber_mag,
        per_cycle_discrepancy=tuple(per_cycle),
        closure_threshold=threshold,
    )


def _state_gap(a: tuple[complex, complex], b: tuple[complex, complex]) -> float:
    return math.hypot(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _try_winding(samples: list[complex], center: complex) -> int | None:
    pts = [complex(s) for s in samples]
    if not pts:
        return None
    if max(abs(p - center) for p in pts) < 1e-12:
        return 0  # trace collapsed onto the center: a dummy invariant line
    # close the curve up to integrator tolerance before extraction
    if abs(pts[-1] - pts[0]) > 1e-9:
        return None
    closed = pts + [pts[0]]
    try:
        return winding_number(closed, center)
    except (NotClosedError, TooCoarseError):
        return None


def _principal_inverse_root(C: complex, k: int) -> complex:
    """Principal value of C^(-1/k); the fiber direction scale of the loop."""
    if C == 0:
        return complex("nan")
    return cmath.exp(-cmath.log(C) / k)


def holonomy_multiplier(
    system: ChartSystem,
    eq: EquilibriumRecord,
    base_radius: float,
    fiber_radii: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3),
    cfg: IntegrationConfig | None = None,
) -> HolonomyEstimate:
    """Limit of h(u0)/u0 for the fiber holonomy over one base loop.

    Requires an equilibrium at infinity, where the chart structure makes the
    fiber line invariant (the first blow-up component is divisible by the
    fiber coordinate).  The multiplier for each starting radius is refined by
    Richardson extrapolation across the radii, which must come in geometric
    progression with ratio 2; the extrapolated value is compared against
    exp(2 pi i lambda) when the record carries a spectral quotient.
    """
    if eq.chart not in (Chart.UZ, Chart.VW):
        raise NoInvariantFiberError("holonomy needs a blow-up chart equilibrium")
    fld = system.field(eq.chart)
    if any(j == 0 for j, _ in fld.f.terms):
        raise NoInvariantFiberError("first chart component is not divisible by the fiber coordinate")
    radii = tuple(sorted(fiber_radii, reverse=True))
    for a, b in zip(radii, radii[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ValueError("fiber radii must fall in geometric progression with ratio 2")
    loop = TimePath.circle(eq.location[1], base_radius)
    cfg = cfg or IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14)
    multipliers = []
    for r in radii:
        res = continue_leaf(system, eq.chart, loop, complex(r), cfg)
        multipliers.append(res["fiber_end"] / r)
    # Richardson table assuming an asymptotic error series in integer powers
    table = [list(multipliers)]
    for j in range(1, len(multipliers)):
        prev = table[-1]
        table.append([
            (2.0**j * prev[i + 1] - prev[i]) / (2.0**j - 1.0)
            for i in range(len(prev) - 1)
        ])
    refined = table[-1][0]
    predicted = None
    deviation = None
    if eq.spectral_quotient is not None:
        predicted = cmath.exp(2j * math.pi * eq.spectral_quotient)
        deviation = abs(refined - predicted)
    return HolonomyEstimate(
        multiplier=complex(refined),
        fiber_radii=radii,
        richardson_order=len(radii) - 1,
        predicted=predicted,
        deviation=deviation,
    )


def blowup_star(system: ChartSystem, blowup_eq: EquilibriumRecord, report: DetourReport) -> list[dict]:
    """Real-time blow-up and blow-down directions attached to a closed loop.

    From t - T = C u^(m-1): incoming real-time branches (t < T) sit where
    C u^(m-1) is negative real, outgoing ones (t > T) where it is positive
    real, giving w_t branches of each kind that alternate in angle.  Each of
    the m-1 distinct fiber directions carries w_u sheets of the leaf.
    """
    if not report.closed:
        raise NotClosedReportError("blow-up star requires a closed detour report")
    m1 = system.euler_exponent
    w_t = report.windings["w_t"]
    C = report.t_fit_coefficient
    base = -cmath.phase(C) / m1
    branches: list[dict] = []
    for j in range(w_t):
        branches.append({"direction": cmath.exp(1j * (base + math.pi * (2 * (j % m1) + 1) / m1)),
                         "kind": "BlowUp"})
    for j in range(w_t):
        branches.append({"direction": cmath.exp(1j * (base + 2.0 * math.pi * (j % m1) / m1)),
                         "kind": "BlowDown"})
    return branches
