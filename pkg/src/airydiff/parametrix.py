"""Cotangent-kernel parametrix on precanonical curves.

Given the pair W_0, W_1 of Airy-carried asymptotic solutions, the
operator R_0 with kernel

    r_0(z, zeta) = (1/2ih) [W_0(z) W_1(zeta) - W_0(zeta) W_1(z)]
                   / (W_0(zeta), W_1(zeta)) * theta_0((zeta - z)/h),

    theta_0(t) = cot(pi t) - i = 2i / (e^{2 pi i t} - 1),

is an approximate solver for the difference operator H:
H R_0 f = f + D_0 f, where D_0 has the same shape with numerator
delta_0(z) W_1(zeta) - W_0(zeta) delta_1(z), delta_j = H(W_j), and
contracts like h^(L+2/3) on a precanonical curve.  Solving
g_0 + D_0 g_0 = delta_0 by Neumann iteration and setting
Delta_0 = R_0 g_0 yields a corrected solution psi_0 = W_0 - Delta_0
whose residual H(psi_0) sits at quadrature-noise level.

Both kernels share the separable form
(1/2ih) [A W_1(zeta) - W_0(zeta) B] / (W_0, W_1)(zeta) * theta_0, with
(A, B) = (W_0(z), W_1(z)) for R_0 and (delta_0(z), delta_1(z)) for
D_0, so one quadrature routine serves both.  The poles of theta_0 sit
on the lattice z + h Z, displaced off the curve to the right by the
+0 convention.  Two rules implement that convention numerically:

* a pole too close to the path for plain Gauss panels is removed by
  subtracting its polar part c(p) (h/pi)/(zeta - p); the subtracted
  term integrates in closed form through a log whose branch follows
  the curve passing the displaced pole on its recorded side;
* evaluating at z off the curve adds the residue of every displaced
  pole lying strictly between the curve and the vertical line through
  z (sign set by which side z is on).

With these two rules the identity H R_0 f = f + D_0 f holds at the
discrete level up to quadrature error; the identity test exercises the
whole machinery end to end.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .airy_kernel import scaled_pair, w_j
from .errors import AccuracyError, ContractionError, DeformationError, PoleError
from .momentum_map import ZetaMap
from .series_engine import AsymptoticSolution, evaluate_W
from .stokes_geometry import CurveSpec, is_precanonical

_POLE_NEAR = 0.45   # in units of h: poles closer than this to the path get subtracted
_ON_NODE = 1e-9     # in units of h: a pole this close to a node counts as on it


def theta(t, variant="minus"):
    """theta_0 = cot(pi t) - i (decays as Im t -> -inf), theta_1 = cot + i.

    The exponential form avoids cancellation for large |Im t|; requests
    within 1e-10 of the integer poles raise ``PoleError``.
    """
    t = complex(t)
    if abs(t - round(t.real)) < 1e-10:
        raise PoleError("theta evaluated on an integer pole", distance=abs(t - round(t.real)))
    if t.imag >= 0:
        w = cmath.exp(2j * math.pi * t)   # |w| <= 1 here
        val = 2j / (w - 1.0)
    else:
        w = cmath.exp(-2j * math.pi * t)  # |w| < 1 here
        val = 2j * w / (1.0 - w)
    if variant == "minus":
        return val
    if variant == "plus":
        return val + 2j
    raise ValueError("variant must be 'minus' or 'plus'")


def _theta_array(t):
    """Vectorized theta_0 without pole guards (callers keep clear of poles)."""
    t = np.asarray(t, dtype=complex)
    upper = t.imag >= 0
    out = np.empty_like(t)
    w = np.exp(2j * math.pi * np.where(upper, t, 0))
    out[upper] = 2j / (w[upper] - 1.0)
    w = np.exp(-2j * math.pi * np.where(upper, 0, t))
    out[~upper] = 2j * w[~upper] / (1.0 - w[~upper])
    return out


# ---------------------------------------------------------------------------
# Kernel context
# ---------------------------------------------------------------------------


class KernelContext:
    """W_0, W_1, their residuals delta_j and the Wronskian, memoized.

    The Wronskian (W_0, W_1)(zeta) must stay above a tenth of its
    leading term h (w_0' w_1 - w_0 w_1'); falling below signals a
    degenerate working curve.
    """

    def __init__(self, coeffs, zmap: ZetaMap, order, h):
        self.h = float(h)
        self.zmap = zmap
        self.order = order
        self.coeffs = coeffs
        self.sol = {
            j: AsymptoticSolution(coeffs=coeffs, j=j, zmap=zmap, order=order)
            for j in (0, 1)
        }
        self._W = {}
        self._Wp = {}
        self._delta = {}
        self._wron = {}
        w0 = w_j(0, 0j)
        w1 = w_j(1, 0j)
        self.airy_wronskian = w0.value * w1.derivative - w0.derivative * w1.value
        self.wronskian_floor = 0.1 * self.h * abs(self.airy_wronskian)

    def W(self, j, z):
        key = (j, complex(z))
        if key not in self._W:
            self._W[key] = evaluate_W(self.sol[j], z, self.h)
        return self._W[key]

    def W_prime(self, j, z):
        key = (j, complex(z))
        if key not in self._Wp:
            self._Wp[key] = _evaluate_W_prime(self.sol[j], z, self.h)
        return self._Wp[key]

    def delta(self, j, z):
        """delta_j(z) = H(W_j)(z)."""
        key = (j, complex(z))
        if key not in self._delta:
            z, h = complex(z), self.h
            v = self.zmap.potential(z)
            self._delta[key] = self.W(j, z + h) + self.W(j, z - h) + v * self.W(j, z)
        return self._delta[key]

    def wronskian(self, zeta_pt):
        key = complex(zeta_pt)
        if key not in self._wron:
            h = self.h
            val = self.W(0, key + h) * self.W(1, key) - self.W(0, key) * self.W(1, key + h)
            if abs(val) < self.wronskian_floor:
                raise AccuracyError(
                    "Wronskian %.3e under floor %.3e at %s"
                    % (abs(val), self.wronskian_floor, key)
                )
            self._wron[key] = val
        return self._wron[key]


def _evaluate_W_prime(sol: AsymptoticSolution, z, h):
    """dW/dz through the Airy equation w'' = Z w (no finite differences)."""
    z = complex(z)
    pair = scaled_pair(sol.zmap, sol.j, z, h)
    if abs(pair.log_scale) > 700:
        raise OverflowError("W' exceeds double range here")
    s = math.exp(pair.log_scale)
    w = pair.w * s
    wp = pair.w_prime * s
    zp = sol.zmap.zeta_deriv(z)
    Z = sol.zmap.zeta(z) / h ** (2.0 / 3.0)
    sa = sb = sap = sbp = 0j
    for l in range(sol.order, -1, -1):
        sa = sa * h + complex(sol.coeffs.A[l](z))
        sap = sap * h + complex(sol.coeffs.A[l].deriv_value(z))
    for l in range(sol.order, 0, -1):
        sb = sb * h + complex(sol.coeffs.B[l](z))
        sbp = sbp * h + complex(sol.coeffs.B[l].deriv_value(z))
    sb, sbp = sb * h, sbp * h
    return w * (h ** (1.0 / 3.0) * sap + zp * Z * sb) + wp * (
        h ** (-1.0 / 3.0) * zp * sa + h ** (2.0 / 3.0) * sbp
    )


# ---------------------------------------------------------------------------
# Pointwise kernels (the public, testable surface)
# ---------------------------------------------------------------------------


def kernel_r0(ctx: KernelContext, z, zeta_pt):
    """r_0(z, zeta); the diagonal zeta = z carries its analytic limit."""
    z, zeta_pt = complex(z), complex(zeta_pt)
    h = ctx.h
    t = (zeta_pt - z) / h
    k = round(t.real)
    if abs(t - k) < _ON_NODE:
        if k != 0:
            raise PoleError("r_0 pole at zeta = z + k h", distance=abs(t - k))
        dnum = ctx.W(0, z) * ctx.W_prime(1, z) - ctx.W_prime(0, z) * ctx.W(1, z)
        return dnum / (2j * math.pi * ctx.wronskian(zeta_pt))
    num = ctx.W(0, z) * ctx.W(1, zeta_pt) - ctx.W(0, zeta_pt) * ctx.W(1, z)
    return num / (2j * h * ctx.wronskian(zeta_pt)) * theta(t)


def kernel_d0(ctx: KernelContext, z, zeta_pt, side=+1):
    """d_0(z, zeta); the +0 rule shifts an on-lattice zeta by 1e-8 h."""
    z, zeta_pt = complex(z), complex(zeta_pt)
    h = ctx.h
    t = (zeta_pt - z) / h
    if abs(t - round(t.real)) < 1e-8:
        t = t - side * 1e-8
    num = ctx.delta(0, z) * ctx.W(1, zeta_pt) - ctx.W(0, zeta_pt) * ctx.delta(1, z)
    return num / (2j * h * ctx.wronskian(zeta_pt)) * theta(t)


# ---------------------------------------------------------------------------
# Weighted curve space and its quadrature grid
# ---------------------------------------------------------------------------


@dataclass
class WeightedCurveSpace:
    """Discretized function space on a precanonical vertical curve.

    Functions carry the norm
    sup |(z - z1)^beta (z - z2)^beta f(z)| / |rho_0(z)| over the strip
    of half-width alpha h around the curve.  The quadrature grid is the
    shared backbone: straight Gauss panels between curve vertices, no
    longer than ``panel_factor * h``, geometrically graded (ratio 0.5,
    12 levels) into both endpoints to integrate the (z - z_i)^(-beta)
    weight.
    """

    zmap: ZetaMap
    curve: CurveSpec
    h: float
    alpha: float = 0.5
    beta: float = 0.5
    n_gl: int = 12
    panel_factor: float = 0.5
    grading_levels: int = 12

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("alpha and beta must lie in (0, 1)")
        rep = is_precanonical(self.curve)
        if not rep["precanonical"]:
            raise ValueError("working curve is not precanonical: %s" % rep)
        self.z1 = complex(self.curve.nodes[0])
        self.z2 = complex(self.curve.nodes[-1])
        self._build_quadrature()

    def _build_quadrature(self):
        verts = np.asarray(self.curve.nodes, dtype=complex)
        seg = np.diff(verts)
        seg_len = np.abs(seg)
        s_vert = np.concatenate([[0.0], np.cumsum(seg_len)])
        total = s_vert[-1]
        base = self.panel_factor * self.h
        bounds = set(s_vert.tolist())
        off = base
        for _ in range(self.grading_levels):
            off *= 0.5
            if off < total / 2:
                bounds.add(off)
                bounds.add(total - off)
        n_uniform = max(int(math.ceil(total / base)), 1)
        for k in range(1, n_uniform):
            bounds.add(total * k / n_uniform)
        bounds = sorted(bounds)
        gl_x, gl_w = np.polynomial.legendre.leggauss(self.n_gl)

        def point_at(s):
            idx = int(np.searchsorted(s_vert, s, side="right")) - 1
            idx = min(max(idx, 0), len(seg) - 1)
            frac = (s - s_vert[idx]) / seg_len[idx]
            return verts[idx] + seg[idx] * frac

        nodes, weights = [], []
        self.panel_points = [point_at(bounds[0])]
        for a, b in zip(bounds, bounds[1:]):
            if b - a < 1e-15:
                continue
            za, zb = point_at(a), point_at(b)
            mid, half = 0.5 * (za + zb), 0.5 * (zb - za)
            nodes.extend(mid + half * x for x in gl_x)
            weights.extend(w * half for w in gl_w)
            self.panel_points.append(zb)
        self.nodes = np.asarray(nodes)
        self.weights = np.asarray(weights)
        ys = np.array([z.imag for z in self.nodes])
        xs = np.array([z.real for z in self.nodes])
        order = np.argsort(ys)
        self._ys_sorted = ys[order]
        self._xs_sorted = xs[order]
        self._tables = {}

    # -- geometry ---------------------------------------------------------
    def curve_x(self, y):
        return float(np.interp(y, self._ys_sorted, self._xs_sorted))

    def y_range(self):
        lo = min(self.z1.imag, self.z2.imag)
        hi = max(self.z1.imag, self.z2.imag)
        return lo, hi

    def in_strip(self, z):
        z = complex(z)
        lo, hi = self.y_range()
        if not lo - 1e-12 <= z.imag <= hi + 1e-12:
            return False
        return abs(z.real - self.curve_x(z.imag)) <= self.alpha * self.h + 1e-12

    def pole_distance_proxy(self, p):
        """Rough distance from a lattice pole to the curve."""
        lo, hi = self.y_range()
        if not lo <= p.imag <= hi:
            return abs(p.imag - min(max(p.imag, lo), hi)) + 0.0
        return 0.7 * abs(p.real - self.curve_x(p.imag))

    # -- weighted norm ------------------------------------------------------
    def beta_factor(self, z):
        return (abs(z - self.z1) * abs(z - self.z2)) ** self.beta

    def rho_abs(self, z):
        return math.exp(self.zmap.log_abs_rho(0, z, self.h))

    def norm(self, values, points=None):
        """Discrete weighted sup-norm (over the quadrature nodes by default)."""
        points = self.nodes if points is None else points
        values = np.asarray(values)
        out = 0.0
        for z, v in zip(points, values):
            out = max(out, abs(v) * self.beta_factor(z) / self.rho_abs(z))
        return out

    # -- cached curve tables --------------------------------------------------
    def tables(self, ctx: KernelContext):
        key = id(ctx)
        if key not in self._tables:
            u0 = np.array([ctx.W(0, z) / ctx.wronskian(z) for z in self.nodes])
            u1 = np.array([ctx.W(1, z) / ctx.wronskian(z) for z in self.nodes])
            self._tables[key] = (u0, u1)
        return self._tables[key]


def default_working_curve(zmap: ZetaMap, y_extent=0.3, branch_j=0, ds_target=0.008):
    """The Stokes polyline through the turning point, bottom to top.

    sigma_(j+2) reversed followed by sigma_(j+1) is vertical for the
    built-in potentials and precanonical with respect to p_j (the action
    Im int p_j vanishes along it identically).
    """
    from .momentum_map import MomentumBranch
    from .stokes_geometry import trace_stokes

    lower = trace_stokes(zmap, (branch_j + 2) % 3, arc_budget=2.5, ds_target=ds_target)
    upper = trace_stokes(zmap, (branch_j + 1) % 3, arc_budget=2.5, ds_target=ds_target)
    lower = [z for z in lower if abs(z.imag - zmap.z0.imag) <= y_extent]
    upper = [z for z in upper if abs(z.imag - zmap.z0.imag) <= y_extent]
    nodes = list(reversed(lower)) + list(upper[1:])
    return CurveSpec.from_nodes(zmap, nodes, MomentumBranch(branch_j), resample=False)


# ---------------------------------------------------------------------------
# The shared pole-aware integral
# ---------------------------------------------------------------------------


def _log_integral(space: WeightedCurveSpace, pole, pass_side):
    """int_gamma dzeta/(zeta - pole), branch following the curve.

    ``pass_side`` records on which side of the displaced pole the curve
    passes; it decides the branch when a segment straddles the pole.
    """
    pts = space.panel_points
    val = math.log(abs(pts[-1] - pole)) - math.log(abs(pts[0] - pole))
    darg = 0.0
    for a, b in zip(pts, pts[1:]):
        turn = cmath.phase((b - pole) / (a - pole))
        if abs(turn) > math.pi - 0.3:
            if pass_side == "left" and turn > 0:
                turn -= 2 * math.pi
            elif pass_side == "right" and turn < 0:
                turn += 2 * math.pi
        darg += turn
    return val + 1j * darg


def _derivative_weights(space, i, width=5):
    lo = max(0, i - width // 2)
    hi = min(len(space.nodes), lo + width)
    lo = max(0, hi - width)
    idx = np.arange(lo, hi)
    dz = space.nodes[idx] - space.nodes[i]
    scale = max(np.max(np.abs(dz)), 1e-300)
    V = np.vander(dz / scale, N=len(idx), increasing=True).T
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[1] = 1.0 / scale
    return idx, np.linalg.solve(V.astype(complex), rhs)


def _apply_kernel(space, ctx, coefA, coefB, f_values, f_at, z, diagonal_regular):
    """int over the curve of (1/2ih)[A W_1 - W_0 B]/(W_0,W_1) theta_0 f.

    ``f_values`` holds f at the quadrature nodes; ``f_at`` evaluates f
    anywhere (needed at subtracted poles).  ``diagonal_regular`` marks
    the R_0 case whose numerator vanishes on the diagonal.
    """
    h = ctx.h
    z = complex(z)
    nodes, weights = space.nodes, space.weights
    u0, u1 = space.tables(ctx)
    pref = 1.0 / (2j * h)
    c_nodes = pref * (coefA * u1 - coefB * u0) * np.asarray(f_values)
    t_all = (nodes - z) / h
    near_int = np.abs(t_all - np.round(t_all.real)) < _ON_NODE
    t_safe = np.where(near_int, 0.25, t_all)  # masked entries are rebuilt below

    # poles needing subtraction
    lo, hi = space.y_range()
    sub = []
    if lo - 0.01 * h < z.imag < hi + 0.01 * h:
        k_lo = int(math.floor((space._xs_sorted.min() - z.real) / h)) - 1
        k_hi = int(math.ceil((space._xs_sorted.max() - z.real) / h)) + 1
        for k in range(k_lo, k_hi + 1):
            p = z + k * h
            if diagonal_regular and k == 0:
                continue
            if space.pole_distance_proxy(p) < _POLE_NEAR * h:
                dmin = float(np.min(np.abs(nodes - p)))
                if dmin < 1e-6 * h and dmin > _ON_NODE * h:
                    raise DeformationError(
                        "kernel pole within 1e-6 h of the quadrature path"
                    )
                sub.append((k, p))

    vals = c_nodes * _theta_array(t_safe)
    pole_info = []
    for k, p in sub:
        cp = pref * (coefA * _w1_over_wron(ctx, p) - coefB * _w0_over_wron(ctx, p)) * f_at(p)
        pole_info.append((p, cp))
        den = nodes - p
        den = np.where(np.abs(den) < _ON_NODE * h, h, den)  # on-pole node rebuilt below
        vals = vals - cp * (h / math.pi) / den

    # every masked node must be covered by a rebuild, else the pole is
    # genuinely on the quadrature path
    if np.any(near_int):
        covered_k = {round(((p - z) / h).real) for _, p in sub}
        if diagonal_regular:
            covered_k.add(0)
        for q in np.nonzero(near_int)[0]:
            if round(t_all[q].real) not in covered_k:
                raise DeformationError("kernel pole on the quadrature path")

    # node-on-pole entries: replace by the removable limit
    for p, cp in pole_info:
        iq = int(np.argmin(np.abs(nodes - p)))
        if abs(nodes[iq] - p) <= _ON_NODE * h:
            idx, wts = _derivative_weights(space, iq)
            dcdz = np.dot(wts, c_nodes[idx])
            limit = (h / math.pi) * dcdz - 1j * c_nodes[iq]
            for p2, cp2 in pole_info:
                if p2 != p:
                    limit -= cp2 * (h / math.pi) / (nodes[iq] - p2)
            vals[iq] = limit

    # the diagonal of r_0 is analytic: a node exactly at z carries the limit
    # (minus the polar tails already subtracted from every entry)
    if diagonal_regular:
        iq = int(np.argmin(np.abs(nodes - z)))
        if abs(nodes[iq] - z) <= _ON_NODE * h:
            val = kernel_r0(ctx, z, z) * f_values[iq]
            for p2, cp2 in pole_info:
                val -= cp2 * (h / math.pi) / (nodes[iq] - p2)
            vals[iq] = val

    total = complex(np.dot(weights, vals))
    for p, cp in pole_info:
        off = (p.real - space.curve_x(p.imag)) + 1e-12 * h  # +0 displacement
        side = "left" if off > 0 else "right"
        total += cp * (h / math.pi) * _log_integral(space, p, side)
    return total


def _w0_over_wron(ctx, p):
    return ctx.W(0, p) / ctx.wronskian(p)


def _w1_over_wron(ctx, p):
    return ctx.W(1, p) / ctx.wronskian(p)


def _crossing_correction(space, ctx, coefA, coefB, f_at, z):
    """Residues of poles strictly between the curve and the line through z."""
    h = ctx.h
    z = complex(z)
    dx0 = z.real - space.curve_x(z.imag)
    if abs(dx0) < 1e-12:
        return 0j
    lo, hi = space.y_range()
    corr = 0j
    kmax = int(abs(dx0) / h) + 1
    for k in range(-kmax, kmax + 1):
        p = z + k * h
        if not lo < p.imag < hi:
            continue
        off = (p.real - space.curve_x(p.imag)) + 1e-12 * h  # +0 displacement
        between = (0.0 < off < dx0) if dx0 > 0 else (dx0 < off < 0.0)
        if not between:
            continue
        res = (coefA * ctx.W(1, p) - ctx.W(0, p) * coefB) * f_at(p) / ctx.wronskian(p)
        corr += res if dx0 > 0 else -res
    return corr


def _wrap_f(space, f):
    """Nodal values plus an interpolating evaluator for off-node points."""
    if callable(f):
        values = np.array([f(z) for z in space.nodes])
        return values, f
    values = np.asarray(f, dtype=complex)

    def f_at(z, _v=values):
        i = int(np.argmin(np.abs(space.nodes - z)))
        if abs(space.nodes[i] - z) <= _ON_NODE * space.h:
            return _v[i]
        lo = max(0, i - 3)
        hi = min(len(space.nodes), lo + 6)
        lo = max(0, hi - 6)
        idx = np.arange(lo, hi)
        dz = space.nodes[idx] - z
        scale = max(np.max(np.abs(dz)), 1e-300)
        V = np.vander(dz / scale, N=len(idx), increasing=True)
        coef = np.linalg.lstsq(V.astype(complex), _v[idx], rcond=None)[0]
        return complex(coef[0])

    return values, f_at


def apply_D0(space: WeightedCurveSpace, ctx: KernelContext, f, z):
    """D_0 f(z) for z in the strip; f as nodal values or a callable."""
    z = complex(z)
    f_values, f_at = _wrap_f(space, f)
    val = _apply_kernel(
        space, ctx, ctx.delta(0, z), ctx.delta(1, z), f_values, f_at, z,
        diagonal_regular=False,
    )
    return val + _crossing_correction(space, ctx, ctx.delta(0, z), ctx.delta(1, z), f_at, z)


def apply_R0(space: WeightedCurveSpace, ctx: KernelContext, f, z):
    """R_0 f(z); the diagonal of r_0 is analytic so no +0 shift at k = 0."""
    z = complex(z)
    f_values, f_at = _wrap_f(space, f)
    val = _apply_kernel(
        space, ctx, ctx.W(0, z), ctx.W(1, z), f_values, f_at, z,
        diagonal_regular=True,
    )
    return val + _crossing_correction(space, ctx, ctx.W(0, z), ctx.W(1, z), f_at, z)


# ---------------------------------------------------------------------------
# Operator norm, Neumann solve, correction
# ---------------------------------------------------------------------------


def make_probes(space: WeightedCurveSpace, ctx: KernelContext, n_probes, seed=0):
    """Analytic probe functions with unit-scale weighted norm.

    Low-order polynomials times the analytic weight rho_0 and the
    endpoint factors ((z-z1)(z-z2))^(-beta); their norm reduces to the
    sup of |poly| because |rho_0| = 1 on the Stokes curve.
    """
    rng = np.random.default_rng(seed)
    zmap, h = space.zmap, space.h
    z0 = zmap.z0
    probes = []
    for _ in range(n_probes):
        co = rng.normal(size=4) + 1j * rng.normal(size=4)

        def f(z, co=co):
            z = complex(z)
            u = z - z0
            poly = co[0] + u * (co[1] + u * (co[2] + u * co[3]))
            rho = cmath.exp(1j * zmap.action(0, z, side="-") / h)
            return poly * rho / ((z - space.z1) * (z - space.z2)) ** space.beta

        probes.append(f)
    return probes


def operator_norm_estimate(space: WeightedCurveSpace, ctx: KernelContext,
                           n_probes=8, seed=0, rail_stride=8):
    """Empirical norm of D_0: max over probes of ||D_0 f|| / ||f||.

    The sup runs over the quadrature nodes and two rails at +- alpha h/2.
    """
    probes = make_probes(space, ctx, n_probes, seed)
    rails = []
    for sgn in (+1, -1):
        rails.extend(space.nodes[::rail_stride] + sgn * 0.5 * space.alpha * space.h)
    best = 0.0
    for f in probes:
        f_values, f_at = _wrap_f(space, f)
        norm_f = space.norm(f_values)
        out_nodes = _apply_matrix_like(space, ctx, f_values, f_at)
        norm_df = space.norm(out_nodes)
        rail_vals = [apply_D0(space, ctx, f, z) for z in rails]
        norm_df = max(norm_df, space.norm(rail_vals, points=rails))
        best = max(best, norm_df / norm_f)
    return best


def build_d0_matrix(space: WeightedCurveSpace, ctx: KernelContext):
    """Nystrom matrix of D_0 over the quadrature nodes.

    On-curve collocation only ever subtracts the k = 0 pole (the
    neighbours at z +- h sit a full step off the curve, within plain
    Gauss reach), so every f-dependence stays nodal and the operator is
    an explicit matrix.  Cached on the space per context.
    """
    key = ("d0_matrix", id(ctx))
    if key in space._tables:
        return space._tables[key]
    nodes, weights = space.nodes, space.weights
    n = len(nodes)
    h = ctx.h
    u0, u1 = space.tables(ctx)
    d0 = np.array([ctx.delta(0, z) for z in nodes])
    d1 = np.array([ctx.delta(1, z) for z in nodes])
    pref = 1.0 / (2j * h)
    coef = pref * (d0[:, None] * u1[None, :] - d1[:, None] * u0[None, :])

    diff = nodes[None, :] - nodes[:, None]  # [i, q] = zeta_q - z_i
    t = diff / h
    np.fill_diagonal(t, 0.25)  # dummy; the diagonal is rebuilt below
    if np.any(np.abs(t - np.round(t.real)) < 1e-6):
        raise DeformationError("a quadrature node sits on another node's pole lattice")
    M = coef * _theta_array(t) * weights[None, :]

    inv = 1.0 / t  # h/(zeta_q - z_i); diagonal dummy
    np.fill_diagonal(inv, 0.0)
    row_tail = (inv * weights[None, :]).sum(axis=1) / math.pi  # sum w_q (h/pi)/(zeta_q-z_i)
    for i in range(n):
        L = _log_integral(space, nodes[i], "left")
        M[i, i] = coef[i, i] * ((h / math.pi) * L - row_tail[i] - 1j * weights[i])
        idx, wts = _derivative_weights(space, i)
        M[i, idx] += weights[i] * (h / math.pi) * wts * coef[i, idx]
    space._tables[key] = M
    return M


def _apply_matrix_like(space, ctx, f_values, f_at=None):
    """D_0 f at every quadrature node through the Nystrom matrix."""
    M = build_d0_matrix(space, ctx)
    return M.dot(np.asarray(f_values, dtype=complex))


@dataclass
class NeumannSolveReport:
    iterations: int
    update_norms: list
    g0_norm: float
    delta0_norm: float
    residual_rel: float
    operator_norm: Optional[float] = None

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "update_norms": self.update_norms,
            "g0_norm": self.g0_norm,
            "delta0_norm": self.delta0_norm,
            "residual_rel": self.residual_rel,
            "operator_norm": self.operator_norm,
        }


def solve_g0(space: WeightedCurveSpace, ctx: KernelContext, tol=1e-12,
             max_iter=50, check_contraction=True):
    """Neumann iteration g <- delta_0 - D_0 g for g_0 + D_0 g_0 = delta_0.

    Starts from g = delta_0; stops when the weighted-norm update falls
    below tol * ||delta_0|| or after ``max_iter`` sweeps; growing
    updates raise ``ContractionError`` with the measured ratio.
    """
    delta_vals = np.array([ctx.delta(0, z) for z in space.nodes])
    norm_d = space.norm(delta_vals)
    _, f_at0 = _wrap_f(space, delta_vals)
    g = delta_vals.copy()
    updates = []
    prev_update = None
    for it in range(1, max_iter + 1):
        _, f_at = _wrap_f(space, g)
        Dg = _apply_matrix_like(space, ctx, g, f_at)
        g_new = delta_vals - Dg
        upd = space.norm(g_new - g)
        updates.append(upd)
        g = g_new
        if prev_update is not None and upd > prev_update * 1.05 and upd > tol * norm_d:
            if check_contraction:
                raise ContractionError(
                    "Neumann update grew by factor %.3f" % (upd / prev_update),
                    ratio=upd / prev_update,
                )
        prev_update = upd
        if upd < tol * norm_d:
            break
    _, f_at = _wrap_f(space, g)
    resid = space.norm(g + _apply_matrix_like(space, ctx, g, f_at) - delta_vals)
    report = NeumannSolveReport(
        iterations=it,
        update_norms=[float(u) for u in updates],
        g0_norm=float(space.norm(g)),
        delta0_norm=float(norm_d),
        residual_rel=float(resid / max(norm_d, 1e-300)),
    )
    return g, report


def build_correction(space: WeightedCurveSpace, ctx: KernelContext, g0_values):
    """Delta_0 = R_0 g_0 as an evaluator, and the corrected psi_0 = W_0 - Delta_0.

    The residual identity H(Delta_0) = g_0 + D_0 g_0 = delta_0 makes
    H(psi_0) vanish up to quadrature and Neumann-tail errors.
    """
    g0_values = np.asarray(g0_values, dtype=complex)

    def delta0_evaluator(z):
        return apply_R0(space, ctx, g0_values, z)

    def psi0(z):
        return ctx.W(0, z) - delta0_evaluator(z)

    return delta0_evaluator, psi0


def correction_residual_check(space, ctx, psi0, points):
    """|H(psi_0)| / |delta_0| at interior points (two orders down is a pass)."""
    out = []
    h = ctx.h
    pot = ctx.zmap.potential
    for z in points:
        z = complex(z)
        res = psi0(z + h) + psi0(z - h) + pot(z) * psi0(z)
        out.append(abs(res) / max(abs(ctx.delta(0, z)), 1e-300))
    return out
