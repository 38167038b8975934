"""Stokes-line geometry: tracing, sector classification, precanonical tests.

The Stokes lines sigma_j are the preimages under zeta of the three rays
exp(-2 pi i j/3) R_-, the AntiStokes lines alpha_j of the opposite rays
exp(-2 pi i j/3) [0, inf).  All six emanate from the turning point with
mutual angles 2 pi/3.  Along sigma_j the action Im int p_j dz vanishes;
along alpha_j the real part does.

Tracing inverts zeta along the target ray by Newton steps with a
tangent predictor, which is robust through the turning point where
direct tangent-field integration would start singular.  Level curves of
Im int p, Im int (p - pi) and Re int p away from the turning point are
traced by RK4 on the unit tangent fields conj(p), conj(p) - pi and
i conj(p).

A vertical curve is precanonical (with respect to a momentum branch)
when y -> Im int_{z0}^{z(y)} p dz is non-decreasing while
y -> Im int_{z0}^{z(y)} (p - pi) dz is non-increasing; this is the
geometry that makes the parametrix kernel contract.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
import numpy as np

from .errors import AccuracyError
from .momentum_map import OMEGA, MomentumBranch, ZetaMap


class SectorLabel(enum.Enum):
    S0 = "S0"
    S1 = "S1"
    S2 = "S2"
    ON_SIGMA0 = "on-sigma0"
    ON_SIGMA1 = "on-sigma1"
    ON_SIGMA2 = "on-sigma2"
    TURNING_POINT = "turning-point"


def _wrap(angle):
    return (angle + math.pi) % (2 * math.pi) - math.pi


def stokes_ray_angle(j):
    """Angle of the zeta-ray whose preimage is sigma_j."""
    return _wrap(math.pi - 2 * math.pi * j / 3)


def antistokes_ray_angle(j):
    return _wrap(-2 * math.pi * j / 3)


def classify_sector(zmap: ZetaMap, z, line_tol=1e-8):
    """Sector/line label of z from arg zeta(z)."""
    z = complex(z)
    if abs(z - zmap.z0) <= 1e-12:
        return SectorLabel.TURNING_POINT
    theta = cmath.phase(zmap.zeta(z))
    for j in range(3):
        if abs(_wrap(theta - stokes_ray_angle(j))) <= line_tol:
            return SectorLabel[f"ON_SIGMA{j}"]
    for j in range(3):
        if abs(_wrap(theta + 2 * math.pi * j / 3)) < math.pi / 3:
            return SectorLabel[f"S{j}"]
    # numerically between bands: attribute to the nearest line
    best = min(range(3), key=lambda j: abs(_wrap(theta - stokes_ray_angle(j))))
    return SectorLabel[f"ON_SIGMA{best}"]


# ---------------------------------------------------------------------------
# Curve tracing by zeta inversion
# ---------------------------------------------------------------------------


def _invert_zeta(zmap, target, guess, tol=1e-13, max_steps=60):
    z = guess
    for _ in range(max_steps):
        err = zmap.zeta(z) - target
        if abs(err) <= tol:
            return z
        z = z - err / zmap.zeta_deriv(z)
    raise AccuracyError("zeta inversion did not converge at target %s" % target)


def _trace_ray(zmap: ZetaMap, ray_angle, arc_budget, ds_target=0.01):
    """Polyline zeta^{-1}(s e^{i ray_angle}), s from 0 outward."""
    z0 = zmap.z0
    pts = [z0]
    zp0 = zmap.zeta_deriv(z0)
    s = ds_target * abs(zp0) * 0.1
    z = z0 + s * cmath.exp(1j * ray_angle) / zp0
    z = _invert_zeta(zmap, s * cmath.exp(1j * ray_angle), z)
    pts.append(z)
    arc = abs(z - z0)
    r_max = 0.97 * zmap.certified_radius
    while arc < arc_budget and abs(z - z0) < r_max:
        zp = zmap.zeta_deriv(z)
        ds = ds_target * abs(zp)
        s_new = s + ds
        target = s_new * cmath.exp(1j * ray_angle)
        guess = z + (target - s * cmath.exp(1j * ray_angle)) / zp
        try:
            z_new = _invert_zeta(zmap, target, guess)
        except AccuracyError:
            ds_target *= 0.5
            if ds_target < 1e-6:
                break
            continue
        arc += abs(z_new - z)
        pts.append(z_new)
        z, s = z_new, s_new
    return np.array(pts, dtype=complex)


def trace_stokes(zmap: ZetaMap, j, arc_budget=1.0, ds_target=0.01):
    """Stokes line sigma_j as a polyline from the turning point outward."""
    return _trace_ray(zmap, stokes_ray_angle(j), arc_budget, ds_target)


def trace_antistokes(zmap: ZetaMap, j, arc_budget=1.0, ds_target=0.01):
    """AntiStokes line alpha_j from the turning point outward."""
    return _trace_ray(zmap, antistokes_ray_angle(j), arc_budget, ds_target)


@dataclass
class StokesDiagram:
    """The six rays from the turning point plus the classifier data."""

    zmap: ZetaMap
    sigma: list
    alpha: list

    @classmethod
    def build(cls, zmap, arc_budget=1.0, ds_target=0.01):
        return cls(
            zmap=zmap,
            sigma=[trace_stokes(zmap, j, arc_budget, ds_target) for j in range(3)],
            alpha=[trace_antistokes(zmap, j, arc_budget, ds_target) for j in range(3)],
        )

    def initial_angle(self, which, j):
        curve = self.sigma[j] if which == "sigma" else self.alpha[j]
        return cmath.phase(curve[2] - curve[0])

    def angles_between_stokes(self):
        """Pairwise angles between consecutive Stokes tangents at z0."""
        angs = sorted(self.initial_angle("sigma", j) for j in range(3))
        gaps = [angs[1] - angs[0], angs[2] - angs[1], 2 * math.pi - (angs[2] - angs[0])]
        return gaps

    def classify(self, z):
        return classify_sector(self.zmap, z)


# ---------------------------------------------------------------------------
# Level-curve tracing
# ---------------------------------------------------------------------------

_FIELDS = {
    "Im-p": lambda p: p.conjugate(),
    "Im-p-minus-pi": lambda p: p.conjugate() - math.pi,
    "Re-p": lambda p: 1j * p.conjugate(),
}


def trace_level_curve(zmap: ZetaMap, kind, start, branch: MomentumBranch,
                      arc_budget=0.5, step=2e-3, orientation=1):
    """RK4 trace of the tangent field of a level curve through ``start``.

    Stops at the arc budget, near the domain boundary, or within 1e-6 of
    the turning point; a field magnitude below 1e-10 elsewhere raises a
    stagnation error.
    """
    if kind not in _FIELDS:
        raise ValueError("kind must be one of %s" % list(_FIELDS))
    field_of = _FIELDS[kind]

    def rhs(z):
        p = zmap.branch_value(branch, z)
        v = field_of(p)
        mag = abs(v)
        if mag < 1e-10:
            if abs(z - zmap.z0) > 1e-6:
                raise AccuracyError("tangent field stagnated away from z0")
            return 0j
        return orientation * v / mag

    pts = [complex(start)]
    z = pts[0]
    arc = 0.0
    r_max = 0.97 * zmap.certified_radius
    while arc < arc_budget:
        if abs(z - zmap.z0) > r_max or abs(z - zmap.z0) < 1e-6:
            break
        k1 = rhs(z)
        if k1 == 0:
            break
        k2 = rhs(z + 0.5 * step * k1)
        k3 = rhs(z + 0.5 * step * k2)
        k4 = rhs(z + step * k3)
        z = z + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        pts.append(z)
        arc += step
    return np.array(pts, dtype=complex)


# ---------------------------------------------------------------------------
# Precanonical curves
# ---------------------------------------------------------------------------


@dataclass
class CurveSpec:
    """A curve with its branch and sampled actions from the turning point.

    ``action_p[i]`` holds Im int_{z0}^{nodes[i]} p dz on the stated
    branch, ``action_p_minus_pi`` the same with p - pi; both come from
    the closed form of the branch actions, so no quadrature enters.
    """

    nodes: np.ndarray
    branch: MomentumBranch
    zmap: ZetaMap
    action_p: np.ndarray = field(default=None)
    action_p_minus_pi: np.ndarray = field(default=None)

    MIN_SAMPLES = 64

    @classmethod
    def from_nodes(cls, zmap, nodes, branch=MomentumBranch(0), resample=True):
        nodes = np.asarray([complex(z) for z in nodes])
        if resample and len(nodes) < cls.MIN_SAMPLES:
            dense = [nodes[0]]
            per_edge = int(np.ceil(cls.MIN_SAMPLES / max(len(nodes) - 1, 1))) + 1
            for a, b in zip(nodes, nodes[1:]):
                seg = np.linspace(0, 1, per_edge)[1:]
                dense.extend(a + (b - a) * seg)
            nodes = np.asarray(dense)
        spec = cls(nodes=nodes, branch=branch, zmap=zmap)
        spec._compute_actions()
        return spec

    def _compute_actions(self):
        j, s, n = self.branch.j, self.branch.sign, self.branch.offset
        rot = OMEGA**j
        im_p = np.empty(len(self.nodes))
        for i, z in enumerate(self.nodes):
            w = rot * self.zmap.zeta(z)
            im_p[i] = s * (2.0 / 3.0) * (w * cmath.sqrt(w)).real \
                + 2 * math.pi * n * (z - self.zmap.z0).imag
        dy = np.array([(z - self.zmap.z0).imag for z in self.nodes])
        self.action_p = im_p
        self.action_p_minus_pi = im_p - math.pi * dy

    @property
    def im_z(self):
        return np.array([z.imag for z in self.nodes])


def is_precanonical(curve: CurveSpec, vertical_tol=1e-10, mono_tol=1e-9):
    """Verticality plus the two monotonicity conditions, with margins.

    Returns a report dict; ``margin_up``/``margin_down`` are the minimal
    one-sided slopes of the two action functions against Im z.
    """
    y = curve.im_z
    dy = np.diff(y)
    vertical = bool(np.all(dy >= vertical_tol))
    report = {
        "vertical": vertical,
        "mono_up": False,
        "mono_down": False,
        "margin_up": None,
        "margin_down": None,
        "precanonical": False,
    }
    if not vertical:
        return report
    d_up = np.diff(curve.action_p)
    d_dn = np.diff(curve.action_p_minus_pi)
    report["mono_up"] = bool(np.all(d_up >= -mono_tol))
    report["mono_down"] = bool(np.all(d_dn <= mono_tol))
    report["margin_up"] = float(np.min(d_up / dy))
    report["margin_down"] = float(np.min(-d_dn / dy))
    report["precanonical"] = report["mono_up"] and report["mono_down"]
    return report


# ---------------------------------------------------------------------------
# Horizontal neighborhoods
# ---------------------------------------------------------------------------


class HorizontalNeighborhood:
    """M^d = M + [-d, d] for a vertical curve M, as a membership test.

    Negative ``d`` applies the contraction (M^{|d|} - |d|) cap M cap
    (M^{|d|} + |d|), which for a curve reduces to M itself.
    """

    def __init__(self, nodes, d):
        nodes = np.asarray([complex(z) for z in nodes])
        order = np.argsort([z.imag for z in nodes])
        self.nodes = nodes[order]
        self.d = float(d)
        self._ys = np.array([z.imag for z in self.nodes])
        self._xs = np.array([z.real for z in self.nodes])

    def curve_x(self, y):
        if y < self._ys[0] - 1e-12 or y > self._ys[-1] + 1e-12:
            return None
        return float(np.interp(y, self._ys, self._xs))

    def contains(self, z, tol=1e-9):
        z = complex(z)
        x = self.curve_x(z.imag)
        if x is None:
            return False
        if self.d >= 0:
            return abs(z.real - x) <= self.d + tol
        # contraction: on the curve and both horizontal shifts inside M^{|d|}
        if abs(z.real - x) > tol:
            return False
        wide = HorizontalNeighborhood(self.nodes, -self.d)
        return wide.contains(z - self.d, tol) and wide.contains(z + self.d, tol)


def horizontal_neighborhood(path_nodes, d):
    return HorizontalNeighborhood(path_nodes, d)
