"""Coefficient recursion for Airy-carried asymptotic solutions.

The object built here is

    W(z) = h^(1/3) w_h(z) sum_{l=0}^{L} h^l A_l(z)
         + h^(2/3) w_h'(z) sum_{l=1}^{L} h^l B_l(z),

with w_h(z) = w_j(zeta(z)/h^(2/3)), whose three-point residual
H(W) = W(z+h) + W(z-h) + v(z) W(z) is O(h^(L+2+1/3) w_h)
+ O(h^(L+2+2/3) w_h').

The engine expands H(A h^(1/3) w_h) and H(B h^(2/3) w_h') in two
formal small quantities at once: the step h, and an auxiliary variable
t in which the integrand of the Airy representation is entire.  Each
expansion step divides by (t^2 - zeta) after subtracting the value and
slope at t = +-sqrt(zeta), then differentiates in t:

    F_l = a_l + b_l t + (t^2 - zeta) f_l,      F_{l+1} = d f_l / dt.

The t-jets are truncated Taylor rows, so the division is a stable
top-down synthetic recurrence and the derivative is a shift, both
exact.  Evaluations at +-sqrt(zeta) are taken as even/odd Horner sums
in zeta itself, which keeps the whole pipeline free of square-root
branch choices.

The pipeline is generic over its coefficient ring.  Run over plain
complex numbers it expands around one anchor z (that is the public,
testable surface).  Run over tau-Taylor series anchored at the turning
point it produces the coefficient functions A_l, B_l in closed series
form in a single pass; the required solution of

    A g (log(A^2 g))' = -b,    zeta B g (log(zeta B^2 g))' = -a

is then an exact antiderivative in series space, analytic at z0
because the 1/sqrt singularities integrate away.

Structural zeros (a_0 = b_0 = a_1 = 0 for A-terms, c_0 = d_0 = d_1 = 0
for B-terms) are enforced, not assumed: they are the pipeline's primary
self-diagnostic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .airy_kernel import scaled_pair
from .analytic_core import (
    AnalyticFunction,
    ComplexPath,
    QuadratureConfig,
    cauchy_derivatives,
    integrate_from_turning_point,
    path_integral,
)
from .errors import AccuracyError, DomainValidityError
from .momentum_map import Potential, ZetaMap
from .series import Series

MAX_ORDER = 3


# ---------------------------------------------------------------------------
# The difference operator
# ---------------------------------------------------------------------------


def apply_H(f, z, h, pot: Potential):
    """[H(f)](z) = f(z+h) + f(z-h) + v(z) f(z); all three points must be in U."""
    z = complex(z)
    for w in (z - h, z, z + h):
        if abs(w - pot.u_center) > pot.u_radius * (1 + 1e-12):
            raise DomainValidityError(f"point {w} outside U")
    return f(z + h) + f(z - h) + pot(z) * f(z)


# ---------------------------------------------------------------------------
# Truncated jets in the auxiliary variable t
# ---------------------------------------------------------------------------


def _mag(x):
    if isinstance(x, Series):
        return float(np.max(np.abs(x.c)))
    return abs(x)


class TJet:
    """Truncated Taylor row of an entire function of t.

    Entries live in a coefficient ring: plain complex numbers for a
    point anchor, or ``Series`` for the turning-point Taylor model.
    """

    __slots__ = ("coeffs", "zero")

    def __init__(self, coeffs, zero=0j):
        self.coeffs = list(coeffs)
        self.zero = zero

    @classmethod
    def zeros(cls, n, zero=0j):
        return cls([zero] * n, zero)

    @property
    def order(self):
        return len(self.coeffs)

    def copy(self):
        return TJet(list(self.coeffs), self.zero)

    def __add__(self, other):
        n = max(self.order, other.order)
        out = [self.zero] * n
        for k, c in enumerate(self.coeffs):
            out[k] = out[k] + c
        for k, c in enumerate(other.coeffs):
            out[k] = out[k] + c
        return TJet(out, self.zero)

    def scale(self, s):
        return TJet([c * s for c in self.coeffs], self.zero)

    def shift_up(self):
        """Multiply by t (drops the top coefficient)."""
        return TJet([self.zero] + self.coeffs[:-1], self.zero)

    def deriv(self):
        out = [self.coeffs[k] * float(k) for k in range(1, self.order)]
        out.append(self.zero)
        return TJet(out, self.zero)

    def mul(self, other):
        n = self.order
        out = [self.zero] * n
        for i, a in enumerate(self.coeffs):
            if _mag(a) == 0.0:
                continue
            for jj, b in enumerate(other.coeffs):
                k = i + jj
                if k >= n:
                    break
                out[k] = out[k] + a * b
        return TJet(out, self.zero)

    def eval_even_odd(self, zeta):
        """(even part at t^2 = zeta, odd part / t at t^2 = zeta).

        These are exactly (F(s)+F(-s))/2 and (F(s)-F(-s))/(2s) for
        either determination s of sqrt(zeta).
        """
        even = self.coeffs[0::2]
        odd = self.coeffs[1::2]
        a = self.zero
        for c in reversed(even):
            a = a * zeta + c
        b = self.zero
        for c in reversed(odd):
            b = b * zeta + c
        return a, b

    def divide_by_t2_minus(self, zeta):
        """Synthetic division by (t^2 - zeta): returns (quotient, remainder pair).

        Top-down recurrence f_k = n_{k+2} + zeta f_{k+2}; only multiplies
        by zeta, so it is stable for the bounded zeta of a turning-point
        disk.  The remainder (r0, r1) must vanish when the value and
        slope at +-sqrt(zeta) were subtracted first.
        """
        n = self.order
        f = [self.zero] * n
        for k in range(n - 3, -1, -1):
            f[k] = self.coeffs[k + 2] + zeta * f[k + 2] if k + 2 < n else self.coeffs[k + 2]
        r0 = self.coeffs[0] + zeta * f[0]
        r1 = self.coeffs[1] + zeta * f[1]
        return TJet(f, self.zero), (r0, r1)

    def tail_magnitude(self, count=2):
        mags = [_mag(c) for c in self.coeffs]
        top = max(mags[-count:], default=0.0)
        return top, max(mags, default=0.0)


def split_step(F: TJet, zeta_value):
    """One division step: F = a + b t + (t^2 - zeta) f,  next F = df/dt.

    Returns (a, b, next_F).  The removable singularities at +-sqrt(zeta)
    cancel because a, b are chosen to kill the numerator there; a
    remainder above 1e-8 of the jet's scale signals accuracy loss.
    """
    a, b = F.eval_even_odd(zeta_value)
    num = F.copy()
    num.coeffs[0] = num.coeffs[0] - a
    num.coeffs[1] = num.coeffs[1] - b
    quot, (r0, r1) = num.divide_by_t2_minus(zeta_value)
    scale = max((_mag(c) for c in F.coeffs), default=0.0)
    scale = max(scale, 1e-300)
    if max(_mag(r0), _mag(r1)) > 1e-8 * scale:
        raise AccuracyError(
            "division remainder %.3e exceeds 1e-8 of jet scale %.3e"
            % (max(_mag(r0), _mag(r1)), scale)
        )
    return a, b, quot.deriv()


# ---------------------------------------------------------------------------
# Building F_0 and G_0
# ---------------------------------------------------------------------------


def _ring_one(zero):
    return zero + 1.0


def _exp_tjet(c, n_t, zero):
    """Row of exp(c t): c^k / k!."""
    out = [_ring_one(zero)]
    acc = out[0]
    for k in range(1, n_t):
        acc = acc * c * (1.0 / k)
        out.append(acc)
    return TJet(out, zero)


def _exp_h_series(cs, n_h, n_t, zero):
    """HJet rows of exp(t * sum_{m>=1} c_m h^m) via l Y_l = sum m X_m Y_{l-m}."""
    one = TJet.zeros(n_t, zero)
    one.coeffs[0] = _ring_one(zero)
    rows = [one]
    for l in range(1, n_h + 1):
        acc = TJet.zeros(n_t, zero)
        for m in range(1, l + 1):
            term = rows[l - m].shift_up().scale(cs[m] * float(m))
            acc = acc + term
        rows.append(acc.scale(1.0 / l))
    return rows


def build_F0(a_jets, zeta_jets, v_value, n_h, n_t=64, zero=0j):
    """h-jet of t-jets of F_0 = A(z+h) e^{t(zeta(z+h)-zeta(z))/h}
    + A(z-h) e^{t(zeta(z-h)-zeta(z))/h} + v(z) A(z).

    ``a_jets[k]`` are Taylor coefficients A^(k)(z)/k!; ``zeta_jets[k]``
    the same for zeta, needed to order n_h+1.  The dominant factors
    e^{+- t zeta'} are folded in analytically as known entire rows.
    """
    if len(zeta_jets) < n_h + 2:
        raise ValueError("zeta jets needed to order n_h + 1")
    if len(a_jets) < n_h + 1:
        raise ValueError("A jets needed to order n_h")
    zp = zeta_jets[1]
    dense_p = _exp_tjet(zp, n_t, zero)
    dense_m = _exp_tjet(zp * (-1.0), n_t, zero)
    cs_p = [zero] + [zeta_jets[m + 1] for m in range(1, n_h + 1)]
    cs_m = [zero] + [zeta_jets[m + 1] * ((-1.0) ** (m + 1)) for m in range(1, n_h + 1)]
    rows_p = _exp_h_series(cs_p, n_h, n_t, zero)
    rows_m = _exp_h_series(cs_m, n_h, n_t, zero)
    rows_p = [dense_p.mul(r) for r in rows_p]
    rows_m = [dense_m.mul(r) for r in rows_m]

    out = [TJet.zeros(n_t, zero) for _ in range(n_h + 1)]
    for l in range(n_h + 1):
        acc = out[l]
        for k in range(l + 1):
            acc = acc + rows_p[l - k].scale(a_jets[k])
            acc = acc + rows_m[l - k].scale(a_jets[k] * ((-1.0) ** k))
        out[l] = acc
    const = TJet.zeros(n_t, zero)
    const.coeffs[0] = v_value * a_jets[0]
    out[0] = out[0] + const
    return out


def build_G0(b_jets, zeta_jets, v_value, n_h, n_t=64, zero=0j):
    """G_0 = t * (B(z+h) e^{...} + B(z-h) e^{...} + v(z) B(z))."""
    rows = build_F0(b_jets, zeta_jets, v_value, n_h, n_t, zero)
    return [r.shift_up() for r in rows]


# ---------------------------------------------------------------------------
# The expansion pipeline
# ---------------------------------------------------------------------------


def _run_pipeline(rows, zeta_value, n_orders):
    """Iterate split_step over an HJet; collect scalar h-jets (a_l, b_l)."""
    a_tabs, b_tabs = [], []
    cur = rows
    for _ in range(n_orders + 1):
        a_row, b_row, nxt = [], [], []
        for tj in cur:
            a, b, nf = split_step(tj, zeta_value)
            a_row.append(a)
            b_row.append(b)
            nxt.append(nf)
        a_tabs.append(a_row)
        b_tabs.append(b_row)
        cur = nxt
    return a_tabs, b_tabs


def _collapse(tabs, n_orders):
    """Taylor-in-h collapse: out_m = sum_{l<=m} (d^{m-l} tab_l / dh^{m-l})(0)."""
    out = []
    for m in range(n_orders + 1):
        acc = None
        for l in range(m + 1):
            entry = tabs[l][m - l]
            acc = entry if acc is None else acc + entry
        out.append(acc)
    return out


def _check_structural_zeros(kind, col_a, col_b, tol=1e-8):
    scale = max(max(_mag(x) for x in col_a), max(_mag(x) for x in col_b), 1e-300)
    if kind == "A":
        bad = max(_mag(col_a[0]), _mag(col_b[0]), _mag(col_a[1]) if len(col_a) > 1 else 0.0)
    else:
        bad = max(_mag(col_a[0]), _mag(col_b[0]), _mag(col_b[1]) if len(col_b) > 1 else 0.0)
    if bad > tol * scale:
        raise AccuracyError(
            "structural zeros violated (kind %s): %.3e vs scale %.3e" % (kind, bad, scale)
        )
    return scale


def expand_H_of_term(kind, coeff, zmap: ZetaMap, z, n_orders, n_t=64):
    """Expansion tables of H(coeff h^(1/3) w_h) or H(coeff h^(2/3) w_h').

    Returns collapsed h-free coefficient values at the anchor z:
    {'a': [...], 'b': [...]} for kind 'A' (w_h carrier) or
    {'c': [...], 'd': [...]} for kind 'B' (w_h' carrier).  Structural
    zeros (a_0 = b_0 = a_1 = 0, resp. c_0 = d_0 = d_1 = 0) are asserted
    to 1e-8 of the table scale.  The result is independent of the Airy
    index by construction: no Airy data enters the pipeline.
    """
    if kind not in ("A", "B"):
        raise ValueError("kind must be 'A' or 'B'")
    z = complex(z)
    dist = zmap.certified_radius - abs(z - zmap.z0)
    if dist <= 0:
        raise DomainValidityError("anchor outside the certified disk")
    if not isinstance(coeff, AnalyticFunction):
        coeff = AnalyticFunction(coeff, zmap.z0, zmap.certified_radius)
    a_jets = list(cauchy_derivatives(coeff, z, min(0.25 * dist, 0.25), n_orders).coeffs)
    tau = zmap.tau(z)
    zeta_jets = [zmap.zeta_deriv_series(k)(tau) * (1.0 / math.factorial(k)) for k in range(n_orders + 2)]
    v_value = complex(zmap.potential(z))
    zeta_value = zeta_jets[0]

    for attempt in range(2):
        try:
            if kind == "A":
                rows = build_F0(a_jets, zeta_jets, v_value, n_orders, n_t, 0j)
            else:
                rows = build_G0(a_jets, zeta_jets, v_value, n_orders, n_t, 0j)
            top, scale = rows[0].tail_magnitude()
            if top > 1e-12 * scale:
                raise AccuracyError("t-jet tail did not decay at order %d" % n_t)
            a_tabs, b_tabs = _run_pipeline(rows, zeta_value, n_orders)
            break
        except AccuracyError:
            if attempt == 1:
                raise
            n_t *= 2
    col_a = _collapse(a_tabs, n_orders)
    col_b = _collapse(b_tabs, n_orders)
    _check_structural_zeros(kind, col_a, col_b)
    if kind == "A":
        return {"a": col_a, "b": col_b}
    return {"c": col_a, "d": col_b}


def _expand_term_series(kind, coeff_series, zmap: ZetaMap, n_orders, n_t=64):
    """Series-ring variant anchored at the turning point.

    Identical pipeline, but every scalar is a tau-Taylor series, so the
    collapsed tables come out as coefficient functions on all of U.
    """
    D = zmap.tau_degree
    zero = Series.constant(0.0, D)
    a_jets = [coeff_series]
    cur = coeff_series
    for k in range(1, n_orders + 1):
        cur = zmap._zderiv(cur)
        a_jets.append(cur * (1.0 / math.factorial(k)))
    zeta_jets = [
        zmap.zeta_deriv_series(k) * (1.0 / math.factorial(k)) for k in range(n_orders + 2)
    ]
    v_value = zmap.v_series
    if kind == "A":
        rows = build_F0(a_jets, zeta_jets, v_value, n_orders, n_t, zero)
    else:
        rows = build_G0(a_jets, zeta_jets, v_value, n_orders, n_t, zero)
    a_tabs, b_tabs = _run_pipeline(rows, zmap.zeta_series, n_orders)
    col_a = _collapse(a_tabs, n_orders)
    col_b = _collapse(b_tabs, n_orders)
    _check_structural_zeros(kind, col_a, col_b)
    for s in col_a + col_b:
        if not s.is_even(tol=1e-16):
            raise AccuracyError("collapsed coefficient function is not analytic in z")
    if kind == "A":
        return {"a": col_a, "b": col_b}
    return {"c": col_a, "d": col_b}


# ---------------------------------------------------------------------------
# Closed-form first-order functionals
# ---------------------------------------------------------------------------


def b1_functional(A, zmap, z):
    """b_1[A] = A g (log(A^2 g))' = 2 A' g + A g', evaluated through jets."""
    z = complex(z)
    Ap, Av = _coeff_deriv(A, zmap, z)
    return 2.0 * Ap * zmap.g(z) + Av * zmap.g_deriv(z)


def c1_functional(B, zmap, z):
    """c_1[B] = zeta B g (log(zeta B^2 g))' = zeta (2 B' g + B g') + B g zeta'."""
    z = complex(z)
    Bp, Bv = _coeff_deriv(B, zmap, z)
    zeta = zmap.zeta(z)
    return zeta * (2.0 * Bp * zmap.g(z) + Bv * zmap.g_deriv(z)) + Bv * zmap.g(z) * zmap.zeta_deriv(z)


def _coeff_deriv(fn, zmap, z):
    """(f'(z), f(z)) through a Cauchy jet (or an exact series when available)."""
    if isinstance(fn, SeriesCoefficient):
        return fn.deriv_value(z), fn(z)
    f = fn if isinstance(fn, AnalyticFunction) else AnalyticFunction(fn, zmap.z0, zmap.certified_radius)
    dist = max(zmap.certified_radius - abs(z - zmap.z0), 1e-3)
    jet = cauchy_derivatives(f, z, min(0.2 * dist, 0.2), 1)
    return jet[1], jet[0]


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------


class SeriesCoefficient:
    """A coefficient function backed by a tau-Taylor series (analytic in z)."""

    def __init__(self, series: Series, zmap: ZetaMap, label=""):
        self.series = series
        self.zmap = zmap
        self.label = label
        self._deriv = None

    def __call__(self, z):
        return self.series(self.zmap.tau(z))

    def deriv_value(self, z):
        if self._deriv is None:
            self._deriv = self.zmap._zderiv(self.series)
        return self._deriv(self.zmap.tau(z))

    def as_analytic(self):
        return AnalyticFunction(
            self.__call__, self.zmap.z0, self.zmap.certified_radius, self.label
        )


def next_coefficients(a, b, zmap: ZetaMap, cfg: QuadratureConfig = None, verify=True):
    """Solve the order-raising equations for the next coefficient pair.

        A_next(z) = -(1 / 2 sqrt g) int_{z0}^{z} b / sqrt g dz
        B_next(z) = -(1 / 2 sqrt(zeta g)) int_{z0}^{z} a / sqrt(zeta g) dz

    ``a`` and ``b`` are analytic on U; the 1/sqrt(zeta) singularity of
    the B integrand is removed by the tau substitution.  B_next is the
    unique analytic solution; the integration constant of A_next is
    fixed to 0 at z0.  When ``verify`` is set, the defining first-order
    equations are spot-checked to 1e-7 relative at sample points.
    """
    cfg = cfg or QuadratureConfig()
    a_fn = a if callable(a) else (lambda z, _a=complex(a): _a)
    b_fn = b if callable(b) else (lambda z, _b=complex(b): _b)
    z0 = zmap.z0
    cache_A, cache_B = {}, {}

    def A_next(z):
        z = complex(z)
        if z in cache_A:
            return cache_A[z]
        if z == z0:
            val = 0j
        else:
            integrand = lambda tau: b_fn(z0 + tau * tau) / zmap.sqrt_g_series(tau)
            integral = integrate_from_turning_point(None, z0, z, cfg, tau_fn=integrand)
            val = -integral / (2.0 * zmap.sqrt_g(z))
        cache_A[z] = val
        return val

    def B_next(z):
        z = complex(z)
        if z in cache_B:
            return cache_B[z]
        tau_end = zmap.tau(z)
        if tau_end == 0:
            # removable: the defining equation forces B(z0) = -a(z0)/(zeta'(z0) g(z0))
            val = -a_fn(z0) / (zmap.zeta_deriv(z0) * zmap.g(z0))
        else:
            # int a/(s sqrt g) dz = int 2 a/(w13 sqrt g) d tau  (tau/s = 1/w13)
            integrand = lambda tau: 2.0 * a_fn(z0 + tau * tau) / (
                zmap.w13_series(tau) * zmap.sqrt_g_series(tau)
            )
            integral = path_integral(integrand, ComplexPath.segment(0j, tau_end), cfg)
            s_z = tau_end * zmap.w13_series(tau_end)
            val = -integral / (2.0 * s_z * zmap.sqrt_g(z))
        cache_B[z] = val
        return val

    A_wrap = AnalyticFunction(A_next, z0, zmap.certified_radius, "A_next")
    B_wrap = AnalyticFunction(B_next, z0, zmap.certified_radius, "B_next")
    if verify:
        for frac in (0.35, 0.55):
            zs = z0 + frac * zmap.certified_radius * cmath.exp(0.7j)
            ra = abs(c1_functional(B_wrap, zmap, zs) + a_fn(zs))
            rb = abs(b1_functional(A_wrap, zmap, zs) + b_fn(zs))
            scale = max(abs(a_fn(zs)), abs(b_fn(zs)), 1e-30)
            if max(ra, rb) > 1e-7 * scale:
                raise AccuracyError(
                    "defining ODE residual %.3e exceeds 1e-7 of scale %.3e"
                    % (max(ra, rb), scale)
                )
    return A_wrap, B_wrap


@dataclass
class CoefficientSet:
    """Coefficient functions A_0..A_L, B_1..B_L with provenance notes."""

    order: int
    A: list
    B: list          # B[0] is unused (kept None); entries 1..L
    zmap: ZetaMap
    provenance: dict = field(default_factory=dict)

    def a_values(self, z, L=None):
        L = self.order if L is None else L
        return [self.A[l](z) for l in range(L + 1)]

    def b_values(self, z, L=None):
        L = self.order if L is None else L
        return [0j] + [self.B[l](z) for l in range(1, L + 1)]


def build_coefficient_set(pot: Potential, zmap: ZetaMap, L, n_t=64):
    """Construct A_0 = 1/sqrt(g) and the higher coefficient pairs.

    Order l needs the residual tables of every already-built term at
    collapsed order l+1; each term's tables are computed once, in the
    series ring, to the maximal order needed.
    """
    if L > MAX_ORDER:
        raise ValueError("order L exceeds the configured maximum %d" % MAX_ORDER)
    D = zmap.tau_degree
    inv_sqrt_g = zmap.sqrt_g_series.reciprocal()
    A_series = [inv_sqrt_g]
    B_series = [None]
    n_orders = L + 1
    tables = {}

    def term_tables(kind, idx):
        key = (kind, idx)
        if key not in tables:
            series = A_series[idx] if kind == "A" else B_series[idx]
            tables[key] = _expand_term_series(kind, series, zmap, n_orders, n_t)
        return tables[key]

    w13 = zmap.s_series.divide_by_x(1)
    two_tau = Series([0.0, 2.0], D)
    provenance = {0: "A_0 = 1/sqrt(g)"}
    for l in range(1, L + 1):
        total_a = Series.constant(0.0, D)
        total_b = Series.constant(0.0, D)
        used = []
        for lp in range(0, l):
            tab = term_tables("A", lp)
            total_a = total_a + tab["a"][l + 1 - lp]
            total_b = total_b + tab["b"][l + 1 - lp]
            used.append(f"A_{lp}")
        for lp in range(1, l):
            tab = term_tables("B", lp)
            total_a = total_a + tab["c"][l + 1 - lp]
            total_b = total_b + tab["d"][l + 1 - lp]
            used.append(f"B_{lp}")
        # A_l kills the w_h' residual (-total_b), B_l the w_h residual (-total_a)
        integrand_A = total_b * inv_sqrt_g * two_tau
        A_l = (integrand_A.integ() * inv_sqrt_g) * (-0.5)
        integrand_B = (total_a * 2.0) * (w13 * zmap.sqrt_g_series).reciprocal()
        B_l = (
            integrand_B.integ().divide_by_x(1)
            * (w13 * zmap.sqrt_g_series).reciprocal()
            * (-0.5)
        )
        A_series.append(A_l)
        B_series.append(B_l)
        provenance[l] = "order-%d residual of [%s]" % (l + 1, ", ".join(used))

    A = [SeriesCoefficient(s, zmap, f"A_{i}") for i, s in enumerate(A_series)]
    B = [None] + [SeriesCoefficient(s, zmap, f"B_{i+1}") for i, s in enumerate(B_series[1:])]
    return CoefficientSet(order=L, A=A, B=B, zmap=zmap, provenance=provenance)


# ---------------------------------------------------------------------------
# The asymptotic solution W and its residual
# ---------------------------------------------------------------------------


@dataclass
class AsymptoticSolution:
    """W = h^(1/3) w_h sum h^l A_l + h^(2/3) w_h' sum h^l B_l for one Airy index."""

    coeffs: CoefficientSet
    j: int
    zmap: ZetaMap
    order: int

    def __post_init__(self):
        if self.order > self.coeffs.order:
            raise ValueError("solution order exceeds the coefficient set order")


def evaluate_W_scaled(sol: AsymptoticSolution, z, h):
    """(mantissa, log_scale) of W(z); actual value = mantissa * exp(log_scale)."""
    pair = scaled_pair(sol.zmap, sol.j, z, h)
    sa = 0j
    for l in range(sol.order, -1, -1):
        sa = sa * h + complex(sol.coeffs.A[l](z))
    sb = 0j
    for l in range(sol.order, 0, -1):
        sb = sb * h + complex(sol.coeffs.B[l](z))
    sb = sb * h  # the B sum starts at l = 1
    mant = h ** (1.0 / 3.0) * pair.w * sa + h ** (2.0 / 3.0) * pair.w_prime * sb
    return mant, pair.log_scale


def evaluate_W(sol: AsymptoticSolution, z, h):
    mant, scale = evaluate_W_scaled(sol, z, h)
    if abs(scale) > 700:
        raise OverflowError("W exceeds double range; use evaluate_W_scaled")
    return mant * math.exp(scale)


def airy_weight(sol: AsymptoticSolution, z, h):
    """(h^(1/3)|w_h| + h^(2/3)|w_h'|, log_scale) at z."""
    pair = scaled_pair(sol.zmap, sol.j, z, h)
    return pair.weights(h)[0] + pair.weights(h)[1], pair.log_scale


def residual_at(sol: AsymptoticSolution, z, h):
    """delta(z) = H(W)(z) in scaled form plus the Airy-normalized residual.

    ``noise_floor`` estimates the roundoff level of the three-term
    cancellation: machine epsilon times the summand magnitudes, grown by
    the Airy phase |xi| = (2/3)|zeta|^(3/2)/h whose rounding feeds the
    oscillatory factors.  Residuals below it carry no information.
    """
    z = complex(z)
    vals = [evaluate_W_scaled(sol, z + dh, h) for dh in (h, -h, 0.0)]
    v = complex(sol.zmap.potential(z))
    smax = max(s for _, s in vals)
    terms = [
        vals[0][0] * math.exp(vals[0][1] - smax),
        vals[1][0] * math.exp(vals[1][1] - smax),
        v * vals[2][0] * math.exp(vals[2][1] - smax),
    ]
    mant = terms[0] + terms[1] + terms[2]
    weight, wscale = airy_weight(sol, z, h)
    normalized = abs(mant) * math.exp(smax - wscale) / weight
    xi = (2.0 / 3.0) * abs(sol.zmap.zeta(z)) ** 1.5 / h
    sum_hat = sum(abs(t) for t in terms) * math.exp(smax - wscale) / weight
    floor = 2.3e-16 * (4.0 + xi) * sum_hat
    return {
        "delta_mantissa": mant,
        "delta_scale": smax,
        "normalized": normalized,
        "noise_floor": floor,
    }


@dataclass
class ResidualReport:
    points: list
    h_values: list
    raw: np.ndarray          # |delta| (float; inf if the scale overflows)
    normalized: np.ndarray   # |delta| / (h^(1/3)|w_h| + h^(2/3)|w_h'|)
    slopes: Optional[np.ndarray]
    expected_slope: float
    pass_flags: Optional[np.ndarray]
    slope_window: tuple = (None, None)

    def to_csv_rows(self):
        rows = [("re_z", "im_z", "h", "abs_delta", "normalized", "slope")]
        for i, z in enumerate(self.points):
            sl = float(self.slopes[i]) if self.slopes is not None else float("nan")
            for k, h in enumerate(self.h_values):
                rows.append(
                    (z.real, z.imag, h, float(self.raw[i, k]), float(self.normalized[i, k]), sl)
                )
        return rows

    def summary(self):
        out = {
            "expected_slope": self.expected_slope,
            "h_min": min(self.h_values),
            "h_max": max(self.h_values),
            "n_points": len(self.points),
        }
        if self.slopes is not None:
            out["slope_median"] = float(np.median(self.slopes))
            out["slope_min"] = float(np.min(self.slopes))
            out["slope_max"] = float(np.max(self.slopes))
            if self.pass_flags is not None:
                out["all_pass"] = bool(np.all(self.pass_flags))
        return out


def residual_sweep(sol: AsymptoticSolution, grid, h_list, slope_tol=0.3,
                   floor_factor=10.0):
    """Normalized residuals over (z, h) with per-point log-log slope fits.

    Slopes are only fitted when the sweep spans at least a decade with
    five or more h values; the expected slope is L + 2.  Per point, the
    fit uses the h values whose residual exceeds ``floor_factor`` times
    the roundoff floor estimate (at high orders the smallest h values
    sink below double-precision cancellation noise); a point whose
    above-floor range shrinks under four values or 0.8 decades gets no
    slope.
    """
    grid = [complex(z) for z in grid]
    h_list = sorted(float(h) for h in h_list)
    raw = np.zeros((len(grid), len(h_list)))
    nor = np.zeros_like(raw)
    floors = np.zeros_like(raw)
    for i, z in enumerate(grid):
        for k, h in enumerate(h_list):
            r = residual_at(sol, z, h)
            mag = abs(r["delta_mantissa"])
            s = r["delta_scale"]
            raw[i, k] = mag * math.exp(s) if abs(s) < 700 and mag > 0 else (
                float("inf") if s > 0 else 0.0
            )
            nor[i, k] = r["normalized"]
            floors[i, k] = r["noise_floor"]
    expected = sol.order + 2.0
    decade = max(h_list) / min(h_list) >= 10.0 * (1 - 1e-9)
    slopes = None
    flags = None
    if decade and len(h_list) >= 5:
        lg_h = np.log(h_list)
        slopes = np.empty(len(grid))
        for i in range(len(grid)):
            keep = nor[i] >= floor_factor * floors[i]
            hs = lg_h[keep]
            if keep.sum() < 4 or (hs.max() - hs.min()) < 0.8 * math.log(10.0):
                slopes[i] = float("nan")
                continue
            slopes[i] = np.polyfit(hs, np.log(np.maximum(nor[i][keep], 1e-300)), 1)[0]
        flags = np.abs(slopes - expected) <= slope_tol
    return ResidualReport(
        points=grid,
        h_values=h_list,
        raw=raw,
        normalized=nor,
        slopes=slopes,
        expected_slope=expected,
        pass_flags=flags,
        slope_window=(expected - slope_tol, expected + slope_tol),
    )
