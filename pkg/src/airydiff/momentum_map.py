"""Turning point, complex momentum branches, and the conformal zeta map.

The complex momentum p solves 2 cos p + v(z) = 0.  Near a simple
turning point z0 (v(z0) = -2, v'(z0) != 0) every branch behaves like
p = k1 tau + O(tau^2) with tau = sqrt(z - z0).  The map

    zeta(z) = ((3/(2i)) * int_{z0}^{z} p dz)^(2/3)

straightens the equation onto the Airy model: zeta is analytic on the
disk U, zeta(z0) = 0, zeta'(z0) != 0.

Everything here is built from one Taylor model in the variable
tau = sqrt(z - z0):

    q(tau)^2 = v(z0 + tau^2) + 2          (even, nonvanishing/tau^2)
    p(tau)   = 2 arcsin(q(tau)/2)         (odd; fixes k1 = sqrt(v'(z0)))
    S(tau)   = (3/(2i)) int p d z         (odd, = zeta^(3/2))
    zeta     = tau^2 * (S/tau^3)^(2/3)    (even, analytic in z)

The series is the single source of truth for zeta, its z-derivatives,
the matched square root s = zeta^(1/2) (s^3 = S), the function
g = sinh(s zeta')/s and the momentum branches

    p_j(z) = i w^j sqrt(w^j zeta(z)) zeta'(z),    w = exp(2 pi i/3),

whose actions have the closed form int_{z0}^{z} p_j dz
= (2i/3) (w^j zeta)^(3/2) with principal powers.  These branches
satisfy p_j(z0) = 0, are analytic off the Stokes line sigma_j, and
carry the sign pattern Im int p_j > 0 exactly in the sector S_j.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .analytic_core import AnalyticFunction, QuadratureConfig, cauchy_derivatives
from .errors import AccuracyError, BranchError, DomainValidityError, TurningPointError
from .series import Series, cosh_outer_coeffs, sinhc_outer_coeffs

OMEGA = cmath.exp(2j * cmath.pi / 3)

_CDT = np.clongdouble


class CertifiedRadiusWarning(UserWarning):
    """Evaluation outside the certified injectivity radius of a ZetaMap."""


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Analytic potential v on a disk U, with optional exact Taylor data.

    ``taylor_provider(center, order)`` returns exact Taylor coefficients
    in extended precision; built-ins supply one so the turning-point
    series is not limited by double-precision jet extraction.
    """

    fn: Callable[[complex], complex]
    u_center: complex
    u_radius: float
    label: str = ""
    gauge_transformed: bool = False
    taylor_provider: Optional[Callable[[complex, int], np.ndarray]] = None

    def __call__(self, z):
        return self.fn(complex(z))

    def as_analytic(self):
        return AnalyticFunction(self.fn, self.u_center, self.u_radius, self.label or "v")

    def taylor(self, center, order):
        """Taylor coefficients of v at ``center`` as a clongdouble array."""
        if self.taylor_provider is not None:
            return np.asarray(self.taylor_provider(complex(center), order), dtype=_CDT)
        dist = self.u_radius - abs(complex(center) - self.u_center)
        if dist <= 0:
            raise DomainValidityError("Taylor center outside U")
        jet = cauchy_derivatives(self.as_analytic(), center, 0.5 * dist, order)
        return np.asarray(jet.coeffs, dtype=_CDT)

    def flipped(self):
        """Gauge transform v -> -v (an involution; toggles the flag).

        Solutions map via psi(z) <-> exp(i pi z / h) phi(z).
        """
        fn = self.fn
        provider = self.taylor_provider
        new_provider = None
        if provider is not None:
            new_provider = lambda c, n: -np.asarray(provider(c, n), dtype=_CDT)
        return Potential(
            fn=lambda z, fn=fn: -fn(z),
            u_center=self.u_center,
            u_radius=self.u_radius,
            label=("-(" + self.label + ")") if self.label else "-v",
            gauge_transformed=not self.gauge_transformed,
            taylor_provider=new_provider,
        )


def _poly_taylor_provider(coeffs):
    coeffs = np.asarray(coeffs, dtype=_CDT)

    def provider(center, order):
        # Horner in u = z - center: multiply by (u + center), add next coefficient
        shifted = np.zeros(order + 1, dtype=_CDT)
        c = _CDT(center)
        for a in coeffs[::-1]:
            prev = shifted.copy()
            shifted[:] = prev * c
            shifted[1:] += prev[:-1]
            shifted[0] += a
        return shifted

    return provider


def linear_potential(u_radius=1.2):
    """v(z) = -2 - z: turning point at 0, v'(0) = -1."""
    return Potential(
        fn=lambda z: -2.0 - z,
        u_center=0j,
        u_radius=u_radius,
        label="linear",
        taylor_provider=_poly_taylor_provider([-2.0, -1.0]),
    )


def quadratic_potential(c=0.2, u_radius=1.2):
    """v(z) = -2 - z + c z^2."""
    return Potential(
        fn=lambda z: -2.0 - z + c * z * z,
        u_center=0j,
        u_radius=u_radius,
        label="quadratic",
        taylor_provider=_poly_taylor_provider([-2.0, -1.0, c]),
    )


def sine_potential(u_radius=1.2):
    """v(z) = -2 - sin z."""

    def provider(center, order):
        out = np.zeros(order + 1, dtype=_CDT)
        s, c = np.sin(_CDT(center)), np.cos(_CDT(center))
        fact = _CDT(1.0)
        cycle = [s, c, -s, -c]
        for k in range(order + 1):
            if k > 0:
                fact *= k
            out[k] = -cycle[k % 4] / fact
        out[0] -= 2.0
        return out

    return Potential(
        fn=lambda z: -2.0 - cmath.sin(z),
        u_center=0j,
        u_radius=u_radius,
        label="sine",
        taylor_provider=provider,
    )


_BUILTINS = {
    "linear": linear_potential,
    "quadratic": quadratic_potential,
    "sine": sine_potential,
}


def potential_from_spec(spec, u_center=0j, u_radius=1.2):
    """Build a potential from a name or a list of (re, im) coefficient pairs."""
    if isinstance(spec, str):
        name = spec.strip().lower()
        if name in _BUILTINS:
            return _BUILTINS[name](u_radius=u_radius)
        raise ValueError(f"unknown built-in potential {spec!r}")
    coeffs = [complex(re, im) for re, im in spec]
    arr = np.asarray(coeffs, dtype=complex)

    def fn(z, arr=arr):
        acc = 0j
        for a in arr[::-1]:
            acc = acc * z + a
        return acc

    return Potential(
        fn=fn,
        u_center=complex(u_center),
        u_radius=float(u_radius),
        label="poly",
        taylor_provider=_poly_taylor_provider(coeffs),
    )


# ---------------------------------------------------------------------------
# Turning point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TurningPoint:
    """Simple turning point: v(z0) = -2, v'(z0) != 0.

    ``k1`` is the local momentum slope p ~ k1 tau, fixed to the principal
    square root of v'(z0); it satisfies k1^2 = v'(z0), which is the
    expansion of 2 cos p + v = 0 at a point normalized to v(z0) = -2.
    """

    z0: complex
    v_prime: complex
    k1: complex


def find_turning_point(pot: Potential, guess, tol=1e-13, max_steps=50):
    """Newton iteration on v(z) + 2 = 0 starting from ``guess``."""
    z = complex(guess)
    if abs(z - pot.u_center) > pot.u_radius:
        raise DomainValidityError("guess outside U")
    for _ in range(max_steps):
        t = pot.taylor(z, 1)
        val = complex(t[0]) + 2.0
        dv = complex(t[1])
        if abs(val) <= tol:
            break
        if dv == 0:
            raise TurningPointError("Newton stalled: v'(z) = 0 at iterate")
        z = z - val / dv
    else:
        raise TurningPointError("Newton did not converge in %d steps" % max_steps)
    t = pot.taylor(z, 1)
    if abs(complex(t[0]) + 2.0) > 1e-12:
        raise TurningPointError("converged point fails |v(z0)+2| <= 1e-12")
    v_prime = complex(t[1])
    if abs(v_prime) <= 1e-8:
        raise TurningPointError("turning point is not simple: |v'(z0)| <= 1e-8")
    k1 = complex(np.sqrt(_CDT(v_prime)))
    return TurningPoint(z0=z, v_prime=v_prime, k1=k1)


def normalize_potential(pot: Potential):
    """Reduce the v(z0) = +2 case to v(z0) = -2 by the gauge flip.

    No-op when the potential is already normalized.  The turning point is
    taken at the disk center, as the model assumes.
    """
    val = complex(pot(pot.u_center))
    if abs(val + 2.0) <= 1e-10:
        return pot
    if abs(val - 2.0) <= 1e-10:
        return pot.flipped()
    raise ValueError("v at the disk center is neither +2 nor -2")


# ---------------------------------------------------------------------------
# Momentum branches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentumBranch:
    """Branch p = sign * p_j + 2 pi offset, cut along the Stokes line sigma_j."""

    j: int = 0
    sign: int = 1
    offset: int = 0

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +-1")


# ---------------------------------------------------------------------------
# The zeta map
# ---------------------------------------------------------------------------


class ZetaMap:
    """Conformal turning-point map with its Taylor model and caches.

    ``branch_selector`` picks one of the three analytic branches of the
    (2/3) power; they differ by factors exp(4 pi i l / 3).
    """

    def __init__(self, pot: Potential, tp: TurningPoint = None, branch_selector=0,
                 tau_degree=128, quad_cfg=None, certify=True):
        self.potential = pot
        if tp is None:
            tp = find_turning_point(pot, pot.u_center)
        self.turning_point = tp
        self.branch_selector = int(branch_selector) % 3
        self.tau_degree = int(tau_degree)
        self.quad_cfg = quad_cfg or QuadratureConfig()
        self.certified_radius = pot.u_radius
        self.realized_ode_sign = None
        self._zeta_cache = {}
        self._build_series()
        if certify:
            self.certify()

    # -- series construction -------------------------------------------
    def _build_series(self):
        D = self.tau_degree
        z0 = self.turning_point.z0
        vz = self.potential.taylor(z0, D // 2)
        # v(z0 + tau^2) as an even tau-series
        vc = np.zeros(D + 1, dtype=_CDT)
        vc[0 : 2 * len(vz) : 2] = vz[: D // 2 + 1]
        v_series = Series(vc[: D + 1])
        self.v_series = v_series

        q2_over = (v_series + 2.0).divide_by_x(2, tol=1e-10)
        r = q2_over.sqrt()  # principal root of v'(z0): the k1 convention
        q = r.shift_up(1)
        self.p_series = 2.0 * (q * 0.5).arcsin()  # odd; p ~ k1 tau

        action = (self.p_series * Series([0.0, 2.0], D)).integ()  # int p dz along the ray
        S = action * (3.0 / 2.0) * (-1j)  # (3/(2i)) * action
        W = S.divide_by_x(3)
        w13 = W.power(1.0 / 3.0) * cmath.exp(2j * cmath.pi * self.branch_selector / 3)
        w23 = w13 * w13
        self.w13_series = w13                       # even: s / tau
        self.zeta_series = w23.shift_up(2)          # even: analytic in z
        self.s_series = w13.shift_up(1)             # odd: s^2 = zeta, s^3 = S (rotated)
        self._dz_zeta = [self.zeta_series]

        zp = self._zderiv(self.zeta_series)
        self.zeta_prime_series = zp
        x2 = self.zeta_series * zp * zp             # (sqrt(zeta) zeta')^2, even
        nterms = D // 2 + 2
        self.g_series = zp * x2.compose_zero(sinhc_outer_coeffs(nterms))
        self.cosh_series = x2.compose_zero(cosh_outer_coeffs(nterms))
        self.sqrt_g_series = self.g_series.sqrt()   # principal at z0; analytic (g != 0)
        self._g_derivs = [self.g_series]

    def _zderiv(self, series):
        """d/dz acting on even tau-series: (1/(2 tau)) d/d tau."""
        return series.deriv().divide_by_x(1) * 0.5

    def zeta_deriv_series(self, k):
        while len(self._dz_zeta) <= k:
            self._dz_zeta.append(self._zderiv(self._dz_zeta[-1]))
        return self._dz_zeta[k]

    def g_deriv_series(self, k):
        while len(self._g_derivs) <= k:
            self._g_derivs.append(self._zderiv(self._g_derivs[-1]))
        return self._g_derivs[k]

    # -- pointwise evaluation -------------------------------------------
    @property
    def z0(self):
        return self.turning_point.z0

    def tau(self, z):
        return cmath.sqrt(complex(z) - self.z0)

    def zeta(self, z):
        z = complex(z)
        hit = self._zeta_cache.get(z)
        if hit is not None:
            return hit
        if z == self.z0:
            val = 0j
        else:
            if abs(z - self.z0) > self.certified_radius * (1 + 1e-12):
                warnings.warn(
                    "zeta evaluated outside the certified radius",
                    CertifiedRadiusWarning,
                    stacklevel=2,
                )
            val = self.zeta_series(self.tau(z))
        self._zeta_cache[z] = val
        return val

    def zeta_deriv(self, z, k=1):
        return self.zeta_deriv_series(k)(self.tau(z))

    def sqrt_zeta_matched(self, z):
        """The determination of sqrt(zeta) carried by the tau ray (s^2 = zeta)."""
        return self.s_series(self.tau(z))

    def g(self, z):
        return self.g_series(self.tau(z))

    def g_deriv(self, z, k=1):
        return self.g_deriv_series(k)(self.tau(z))

    def sqrt_g(self, z):
        return self.sqrt_g_series(self.tau(z))

    def cosh_x(self, z):
        """cosh(sqrt(zeta) zeta'), determination-free."""
        return self.cosh_series(self.tau(z))

    def as_analytic(self):
        return AnalyticFunction(self.zeta, self.z0, self.certified_radius, "zeta")

    # -- momentum branches ------------------------------------------------
    def p_branch(self, j, z, side=None):
        """Branch p_j(z) = i w^j sqrt(w^j zeta) zeta', cut along sigma_j.

        ``side`` resolves boundary values on the cut: '+' approaches with
        arg(w^j zeta) -> +pi, '-' with -> -pi.
        """
        j = int(j) % 3
        zeta = self.zeta(z)
        rot = OMEGA**j * zeta
        if rot != 0 and abs(abs(cmath.phase(rot)) - math.pi) < 1e-9:
            if side is None:
                raise BranchError(
                    "point lies on the Stokes cut sigma_%d; specify side='+'/'-'" % j
                )
            rot = abs(rot) * cmath.exp(1j * (math.pi if side == "+" else -math.pi) * (1 - 1e-15))
        return 1j * OMEGA**j * cmath.sqrt(rot) * self.zeta_deriv(z)

    def action(self, j, z, side=None):
        """int_{z0}^{z} p_j dz = (2i/3) (w^j zeta)^(3/2), principal power."""
        j = int(j) % 3
        rot = OMEGA**j * self.zeta(z)
        if rot != 0 and abs(abs(cmath.phase(rot)) - math.pi) < 1e-9:
            if side is None:
                raise BranchError(
                    "point lies on the Stokes cut sigma_%d; specify side='+'/'-'" % j
                )
            rot = abs(rot) * cmath.exp(1j * (math.pi if side == "+" else -math.pi) * (1 - 1e-15))
        return (2j / 3) * rot * cmath.sqrt(rot)

    def log_abs_rho(self, j, z, h):
        """log |rho_j(z)| = -Im int p_j / h; continuous across sigma_j."""
        rot = OMEGA ** (int(j) % 3) * self.zeta(z)
        # Im[(2i/3) rot^(3/2)] = (2/3) Re rot^(3/2); both boundary values agree
        val = (2.0 / 3.0) * (rot * cmath.sqrt(rot)).real
        return -val / h

    def branch_value(self, branch: MomentumBranch, z, side=None):
        return branch.sign * self.p_branch(branch.j, z, side=side) + 2 * math.pi * branch.offset

    # -- certification ------------------------------------------------------
    def certify(self, n_radial=8, n_angular=48, shrink=0.85, max_shrink=6):
        """Grid certification: single simple turning point, g nonvanishing,
        zeta injective on a grid.  Shrinks the certified radius if needed."""
        pot = self.potential
        for _ in range(max_shrink):
            R = self.certified_radius
            pts = [
                self.z0 + r * cmath.exp(2j * cmath.pi * k / n_angular)
                for r in np.linspace(R / n_radial, R * 0.98, n_radial)
                for k in range(n_angular)
            ]
            ok = True
            vvals = np.array([pot(z) for z in pts])
            if np.min(np.abs(vvals - 2.0)) < 1e-6:
                ok = False
            inner = [abs(complex(v) + 2.0) for z, v in zip(pts, vvals) if abs(z - self.z0) > 0.25 * R]
            if inner and min(inner) < 1e-6:
                ok = False
            gv = np.array([self.g_series(self.tau(z)) for z in pts])
            self.min_abs_g = float(np.min(np.abs(gv)))
            if self.min_abs_g <= 1e-8:
                ok = False
            zv = np.array([self.zeta_series(self.tau(z)) for z in pts])
            zpts = np.array(pts)
            dz = np.abs(zv[:, None] - zv[None, :]) + np.eye(len(pts))
            dp = np.abs(zpts[:, None] - zpts[None, :]) + np.eye(len(pts))
            if np.any((dz < 1e-10) & (dp > 1e-9)):
                ok = False
            tail = self.zeta_series.tail_bound(math.sqrt(R))
            if tail > 1e-10:
                ok = False
            if ok:
                return {
                    "certified_radius": R,
                    "min_abs_g": self.min_abs_g,
                    "series_tail": tail,
                }
            self.certified_radius *= shrink
        raise AccuracyError("could not certify the zeta map on any sub-disk")


# ---------------------------------------------------------------------------
# Module-level operations (the public surface)
# ---------------------------------------------------------------------------


def zeta(zmap: ZetaMap, z):
    return zmap.zeta(z)


def momentum(zmap: ZetaMap, z, branch: MomentumBranch = MomentumBranch(0), side=None):
    """Momentum on the given branch; |2 cos p + v| <= 1e-10 where defined."""
    return zmap.branch_value(branch, z, side=side)


def check_zeta_ode(zmap: ZetaMap, z, jet_radius=None):
    """Residual of sqrt(zeta) zeta' = +- i p with zeta' from Cauchy jets.

    The realized sign is recorded on the map the first time and must stay
    consistent afterwards.
    """
    z = complex(z)
    if z == zmap.z0:
        raise ValueError("z must be a regular point")
    dist = zmap.certified_radius - abs(z - zmap.z0)
    radius = jet_radius or 0.25 * max(dist, 1e-3)
    jet = cauchy_derivatives(zmap.as_analytic(), z, radius, 1)
    zp = jet[1]
    sq = cmath.sqrt(zmap.zeta(z))
    p = zmap.p_branch(0, z, side="-") if _on_cut(zmap, 0, z) else zmap.p_branch(0, z)
    res_plus = abs(sq * zp - 1j * p)
    res_minus = abs(sq * zp + 1j * p)
    sign = 1 if res_plus <= res_minus else -1
    if zmap.realized_ode_sign is None:
        zmap.realized_ode_sign = sign
    elif zmap.realized_ode_sign != sign:
        raise AccuracyError("zeta ODE sign flipped between evaluations")
    return min(res_plus, res_minus)


def _on_cut(zmap, j, z):
    rot = OMEGA ** (int(j) % 3) * zmap.zeta(z)
    return rot != 0 and abs(abs(cmath.phase(rot)) - math.pi) < 1e-9


def g_function(zmap: ZetaMap, z):
    """g(z) = sinh(sqrt(zeta) zeta') / sqrt(zeta); value is determination-free."""
    val = zmap.g(z)
    if abs(val) <= 1e-8:
        raise AccuracyError("g vanishes numerically; shrink U")
    return val


def weight_rho(zmap: ZetaMap, j, z, h):
    """|rho_j(z)| = exp(-Im int_{z0}^{z} p_j / h), continuous on all of U."""
    return math.exp(zmap.log_abs_rho(j, z, h))


def wkb_leading(zmap: ZetaMap, z, sign, h, base, side=None):
    """Leading WKB value (1/sqrt(sin p)) exp(+- (i/h) int_base^z p dz).

    Diagnostic only; requires |sin p| > 1e-3 (away from the turning point).
    """
    p = zmap.p_branch(0, z, side=side)
    sp = cmath.sin(p)
    if abs(sp) <= 1e-3:
        raise DomainValidityError("too close to the turning point: |sin p| <= 1e-3")
    act = zmap.action(0, z, side=side) - zmap.action(0, base, side=side)
    return cmath.exp(sign * 1j * act / h) / cmath.sqrt(sp)
