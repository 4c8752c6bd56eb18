"""Hamiltonian structure: fields from polynomial Hamiltonians, compactified
energies in all three charts, drift monitoring, and the pendulum loop test.

A polynomial H of degree m+1 generates the degree-m field (H_y, -H_x).  The
level set H = c compactifies chartwise to polynomials

    H_xy = H - c,
    H_uz = u^(m+1) H(1/u, z/u) - c u^(m+1),
    H_vw = v^(m+1) H(w/v, 1/v) - c v^(m+1),

which all vanish along the leaf; the drift of these quantities along a
computed trajectory measures integration quality in whichever chart the
state happens to live.

The pendulum loop test traces the energy-zero leaf of H = y^2/2 - G(x)
around the totally degenerate equilibrium v = w = 0 at infinity.  With the
regularizing root parameter th (w = th^(m-1), v ~ a th^(m+1)) the traced
loops close with windings (m-1, m+1, m-1) for (t, v, w) when the force
degree m is even; odd m splits the picture into two leaves, each closing
after half a th-cycle with the windings halved.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from blowup.algebra import BivariatePolynomial, Chart, PlanarField
from blowup.flow import Trajectory, winding_number

__all__ = [
    "PolynomialHamiltonian",
    "DegenerateLeadingTermError",
    "hamiltonian_field",
    "compactify_energy",
    "energy_drift",
    "pendulum_loop_windings",
]


class DegenerateLeadingTermError(ValueError):
    """The leading potential coefficient vanishes; no blow-up leaf to trace."""


@dataclass(frozen=True)
class PolynomialHamiltonian:
    H: BivariatePolynomial
    level_c: complex = 0.0

    def __post_init__(self):
        if self.H.degree < 2:
            raise ValueError("Hamiltonian must have degree at least 2")

    @property
    def field_degree(self) -> int:
        return self.H.degree - 1


def hamiltonian_field(ham: PolynomialHamiltonian) -> PlanarField:
    """The field (H_y, -H_x); H is constant along its complex-time leaves."""
    return PlanarField(ham.H.partial_y(), ham.H.partial_x().scaled(-1.0))


def compactify_energy(ham: PolynomialHamiltonian) -> dict[str, BivariatePolynomial]:
    """Chart versions of the shifted energy H - c, all polynomial.

    The blow-up charts carry the level as c*u^(m+1) (resp. c*v^(m+1)), so a
    trajectory stays on the zero set of each output in its own chart.
    """
    m = ham.field_degree
    H = ham.H
    c = complex(ham.level_c)
    level = BivariatePolynomial({(0, 0): c})
    h_xy = H - level
    h_uz = H.reversed_uz(m + 1) - BivariatePolynomial({(m + 1, 0): c})
    h_vw = H.reversed_vw(m + 1) - BivariatePolynomial({(m + 1, 0): c})
    return {Chart.XY: h_xy, Chart.UZ: h_uz, Chart.VW: h_vw}


def energy_drift(ham: PolynomialHamiltonian, trajectory: Trajectory) -> float:
    """Max deviation of the chart-appropriate compactified energy from 0."""
    charts = compactify_energy(ham)
    worst = 0.0
    for smp in trajectory.samples:
        val = charts[smp.chart](smp.coords[0], smp.coords[1])
        worst = max(worst, abs(val))
    return worst


def _potential_from_coeffs(g_coeffs: list[complex]) -> list[complex]:
    """Antiderivative coefficients (low to high) of the force polynomial."""
    return [0.0] + [c / (k + 1) for k, c in enumerate(g_coeffs)]


def _energy_relation(G_low_to_high: list[complex], m: int) -> BivariatePolynomial:
    """E(v, w) = v^(m-1) - 2 sum_j G_{j} w^j v^(m+1-j) on the zero level.

    G is indexed here by the power of x: G(x) = sum_j G_low[j] x^j with
    degree m+1.  The relation is the vw-chart zero set of y^2/2 - G(x).
    """
    terms = {(m - 1, 0): 1.0 + 0.0j}
    for j, Gj in enumerate(G_low_to_high):
        if abs(Gj) < 1e-300:
            continue
        key = (m + 1 - j, j)
        terms[key] = terms.get(key, 0.0) - 2.0 * Gj
    return BivariatePolynomial(terms)


def pendulum_loop_windings(
    g_coeffs: list[complex],
    loop_radius: float = 0.05,
    samples_per_turn: int = 720,
    max_halvings: int = 6,
) -> dict:
    """Windings of the traced blow-up loop of the pendulum y'' = g(y-position).

    ``g_coeffs`` are the force coefficients low-to-high; its degree m >= 2
    fixes the leading potential coefficient G0 = g_m/(m+1), which must not
    vanish.  The routine solves the energy relation for v along the circle
    w = th^(m-1) (half a circle of th per leaf when m is odd), integrates
    original time by quadrature of dt = v^(m-1) dt2, and extracts integer
    windings.  The radius is halved until two successive radii agree.
    """
    g = [complex(c) for c in g_coeffs]
    while g and abs(g[-1]) < 1e-300:
        g.pop()
    m = len(g) - 1
    if m < 2:
        raise ValueError("force degree must be at least 2")
    G = _potential_from_coeffs(g)
    G0 = G[m + 1]
    if abs(G0) < 1e-12:
        raise DegenerateLeadingTermError("leading potential coefficient vanishes")

    leaves = 1 if m % 2 == 0 else 2
    result = None
    radius = loop_radius
    for _ in range(max_halvings):
        try:
            wt, wv, ww = _trace_pendulum_loop(g, G, m, G0, radius, samples_per_turn)
        except (ValueError, ArithmeticError):
            radius *= 0.5
            continue
        if result == (wt, wv, ww):
            return {"w_t": wt, "w_v": wv, "w_w": ww, "leaves": leaves, "radius": radius}
        result = (wt, wv, ww)
        radius *= 0.5
    raise RuntimeError("winding extraction did not stabilize under radius halving")


def _trace_pendulum_loop(g, G, m, G0, theta_radius, n):
    """One traced loop; returns measured (w_t, w_v, w_w)."""
    # theta range: full turn for even m (single leaf), half for odd m.
    span = 2.0 * math.pi if m % 2 == 0 else math.pi
    thetas = [theta_radius * cmath.exp(1j * span * k / n) for k in range(n + 1)]
    relation = _energy_relation(G, m)
    rel_v = relation.partial_x()
    a = (2.0 * G0) ** (1.0 / (m - 1.0))

    vs: list[complex] = []
    ws: list[complex] = []
    v = a * thetas[0] ** (m + 1)
    for th in thetas:
        w = th ** (m - 1)
        v = _newton_track(relation, rel_v, v_guess=v if vs else a * th ** (m + 1), w=w)
        vs.append(v)
        ws.append(w)

    # original time by quadrature: dt = v^(m-1)/(dw/dt2) dw along the loop,
    # with dw/dt2 = v^(m-1) - w v^m g(w/v).
    ts = [0.0 + 0.0j]
    for k in range(n):
        t_incr = 0.0 + 0.0j
        # two-point Gauss on each segment of the theta-circle
        for node in (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)):
            th = thetas[k] * (thetas[k + 1] / thetas[k]) ** node
            w = th ** (m - 1)
            v = _newton_track(relation, rel_v, v_guess=(vs[k] + vs[k + 1]) / 2.0, w=w)
            wdot = v ** (m - 1) - w * _v_pow_g(v, w, g, m)
            dw = (m - 1) * (thetas[k + 1] - thetas[k]) * th ** (m - 2)
            t_incr += 0.5 * v ** (m - 1) / wdot * dw
        ts.append(ts[-1] + t_incr)

    # Windings about the blow-up point: t about its own mean-removed center 0
    # after removing the constant of integration, v and w about 0.
    t_center = _fit_center(ts)
    wt = winding_number([t - t_center for t in ts], 0.0)
    wv = winding_number(vs, 0.0)
    ww = winding_number(ws, 0.0)
    return abs(wt), abs(wv), abs(ww)


def _v_pow_g(v, w, g, m):
    """v^m g(w/v) expanded as sum g_j w^j v^(m-j)."""
    return sum(gj * w**j * v ** (m - j) for j, gj in enumerate(g))


def _newton_track(relation, rel_v, v_guess, w):
    v = v_guess
    for _ in range(40):
        val = relation(v, w)
        der = rel_v(v, w)
        if abs(der) < 1e-300:
            raise ArithmeticError("tangential branch point while tracking the leaf")
        step = val / der
        v = v - step
        if abs(step) < 1e-15 * max(abs(v), 1e-30):
            return v
    if abs(relation(v, w)) > 1e-10 * max(1.0, abs(v)):
        raise ArithmeticError("leaf tracking did not converge")
    return v


def _fit_center(samples: list[complex]) -> complex:
    """Blow-up time as the limit point of the loop: the traced t-values orbit
    the (finite) blow-up time; its position is the mean of a closed loop."""
    arr = np.asarray(samples[:-1], dtype=complex)
    return complex(arr.mean())
