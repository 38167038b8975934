"""Complex Airy functions Ai, Ai' and the rotated family w_j.

Three evaluation regimes, switched on |zeta|:

* Maclaurin series in extended precision (clongdouble) on the inner
  disk.  The two standard generators are combined with c1 = Ai(0) and
  c2 = -Ai'(0); extended precision absorbs the cancellation between
  them on the recessive ray.

* For mid-range arguments the same series is summed by mpmath at 40
  digits.  Plain double (even extended) precision loses too many digits
  to cancellation there, while the asymptotic series has not yet
  bottomed out below the accuracy the residual tests downstream need.

* Asymptotic expansion with optimal truncation beyond |zeta| = 8 inside
  the sector |arg zeta| <= 2 pi/3 - 0.1, and the rotation identity
  w_0 + w_1 + w_2 = 0 outside it (both rotated points then carry a
  subdominant Stokes companion, so their plain expansions are safe).

Values are returned in scaled form: (mantissa, log_scale) with
Ai = mantissa * exp(log_scale), because h-sweeps push arguments to
sizes where exp((2/3)|zeta|^(3/2)) overflows a double.

w_j(zeta) = 2 pi i w^j Ai(w^j zeta), w = exp(2 pi i/3); the three sum
to zero identically, and w_j is recessive in the rotated sector S_j.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import AiryDiffError

OMEGA = cmath.exp(2j * cmath.pi / 3)

_CDT = np.clongdouble

SERIES_RADIUS = 4.5
MP_RADIUS = 8.0
SECTOR_GUARD = 2 * math.pi / 3 - 0.1
_MP_DPS = 40

def _mp_to_longdouble(x):
    # two-part split: the string route would round through double
    hi = float(x)
    lo = float(x - mpmath.mpf(hi))
    return _CDT(hi) + _CDT(lo)


# Ai(0), -Ai'(0) at clongdouble precision (via mpmath, once)
with mpmath.workdps(40):
    _C1 = _mp_to_longdouble(mpmath.airyai(0))
    _C2 = _mp_to_longdouble(-mpmath.airyai(0, 1))


@dataclass(frozen=True)
class AiryValue:
    """Scaled Airy data: actual Ai = value * exp(log_scale), same for derivative."""

    value: complex
    derivative: complex
    argument: complex
    method: str
    log_scale: float = 0.0

    def unscaled(self):
        """Plain (Ai, Ai'); raises on exponent overflow."""
        if abs(self.log_scale) > 700:
            raise AiryDiffError(
                "scaled Airy value overflows double precision (log scale %.1f)"
                % self.log_scale
            )
        s = math.exp(self.log_scale)
        return self.value * s, self.derivative * s

    @property
    def ai(self):
        return self.unscaled()[0]

    @property
    def ai_prime(self):
        return self.unscaled()[1]


@dataclass(frozen=True)
class ScaledAiryPair:
    """w_h = w_j(zeta(z)/h^(2/3)) and its derivative, in scaled form."""

    w: complex
    w_prime: complex
    log_scale: float
    point: complex
    h: float
    j: int

    def weights(self, h):
        """(h^(1/3)|w_h|, h^(2/3)|w_h'|) mantissas at this pair's scale."""
        return h ** (1.0 / 3.0) * abs(self.w), h ** (2.0 / 3.0) * abs(self.w_prime)


def _series_longdouble(zeta):
    """Maclaurin sum of the two Airy generators and their derivatives.

    Term recurrences (k is the term index):
        f:  t *= z^3 / ((3k-1)(3k))        g:  t *= z^3 / ((3k)(3k+1))
        f': t *= z^3 / ((3k-3)(3k-1))      g': t *= z^3 / ((3k-2)(3k))
    """
    z = _CDT(complex(zeta))
    z3 = z * z * z
    tf = _CDT(1.0)
    tg = z
    tfp = 0.5 * z * z
    tgp = _CDT(1.0)
    f, g, fp, gp = tf, tg, tfp, tgp
    for k in range(1, 400):
        tf = tf * z3 / ((3 * k - 1) * (3 * k))
        tg = tg * z3 / ((3 * k) * (3 * k + 1))
        tgp = tgp * z3 / ((3 * k - 2) * (3 * k))
        if k >= 2:
            tfp = tfp * z3 / ((3 * k - 3) * (3 * k - 1))
        f += tf
        g += tg
        fp += tfp if k >= 2 else 0.0
        gp += tgp
        if abs(tf) < 1e-20 * abs(f) and abs(tgp) < 1e-20 * abs(gp):
            break
    ai = _C1 * f - _C2 * g
    aip = _C1 * fp - _C2 * gp
    return complex(ai), complex(aip)


def _series_mp(zeta):
    with mpmath.workdps(_MP_DPS):
        z = mpmath.mpc(complex(zeta))
        return complex(mpmath.airyai(z)), complex(mpmath.airyai(z, 1))


def _asymptotic(zeta):
    """One-exponential expansion; valid away from the recessive ray's
    anti-Stokes boundary (callers keep |arg zeta| <= 2 pi/3 + 0.15)."""
    z = complex(zeta)
    sq = cmath.sqrt(z)
    xi = (2.0 / 3.0) * z * sq
    quarter = cmath.sqrt(sq)
    inv = 1.0 / xi
    # u-series and v-series with optimal truncation
    su = 1 + 0j
    sv = 1 + 0j
    tu = 1 + 0j
    u = 1.0
    kmax = int(2 * abs(xi)) + 12
    prev_mag = float("inf")
    k = 0
    while k < kmax:
        k += 1
        ratio = (6 * k - 5) * (6 * k - 1) / (72.0 * k)
        u *= ratio
        tu = tu * (-inv) * ratio
        mag = abs(tu)
        if mag >= prev_mag:
            break
        prev_mag = mag
        su += tu
        sv += tu * (6 * k + 1) / (1.0 - 6 * k)
        if mag < 1e-18 * abs(su):
            break
    pref = 1.0 / (2.0 * math.sqrt(math.pi))
    phase = cmath.exp(-1j * xi.imag)
    mant = pref * phase * su / quarter
    mant_p = -pref * phase * sv * quarter
    return mant, mant_p, -xi.real


def _eval_scaled(zeta, method="auto"):
    """Return (ai_mantissa, aip_mantissa, log_scale, method_tag)."""
    z = complex(zeta)
    r = abs(z)
    if method == "series" or (method == "auto" and r <= SERIES_RADIUS):
        ai, aip = _series_longdouble(z)
        return ai, aip, 0.0, "series"
    if method == "auto" and r < MP_RADIUS:
        ai, aip = _series_mp(z)
        return ai, aip, 0.0, "series"
    if method == "asymptotic" or abs(cmath.phase(z)) <= SECTOR_GUARD:
        m, mp_, s = _asymptotic(z)
        return m, mp_, s, "asymptotic"
    # rotation identity: Ai(z) = -w Ai(w z) - w^2 Ai(w^2 z)
    za = OMEGA * z
    zb = OMEGA * OMEGA * z
    ma, mpa, sa = _asymptotic(za)
    mb, mpb, sb = _asymptotic(zb)
    s = max(sa, sb)
    ai = -OMEGA * ma * math.exp(sa - s) - OMEGA**2 * mb * math.exp(sb - s)
    aip = -(OMEGA**2) * mpa * math.exp(sa - s) - OMEGA * mpb * math.exp(sb - s)
    return ai, aip, s, "connection"


@lru_cache(maxsize=400000)
def _eval_cached(z, method):
    return _eval_scaled(z, method)


def airy_ai(zeta, method="auto"):
    """Ai and Ai' at a complex argument, in scaled representation.

    ``method`` forces 'series' or 'asymptotic' (used by the overlap
    diagnostics); 'auto' switches on |zeta| and the sector guard.
    """
    ai, aip, s, tag = _eval_cached(complex(zeta), method)
    return AiryValue(value=ai, derivative=aip, argument=complex(zeta), method=tag, log_scale=s)


def w_j(j, zeta):
    """w_j(zeta) = 2 pi i w^j Ai(w^j zeta); derivative carries the chain factor w^j."""
    j = int(j) % 3
    rot = OMEGA**j
    base = airy_ai(rot * complex(zeta))
    return AiryValue(
        value=2j * math.pi * rot * base.value,
        derivative=2j * math.pi * rot * rot * base.derivative,
        argument=complex(zeta),
        method=base.method,
        log_scale=base.log_scale,
    )


def scaled_pair(zmap, j, z, h):
    """w_h(z) = w_j(zeta(z)/h^(2/3)) and w_h'(z), for step h > 0."""
    if h <= 0:
        raise ValueError("h must be positive")
    Z = zmap.zeta(z) / h ** (2.0 / 3.0)
    val = w_j(j, Z)
    return ScaledAiryPair(
        w=val.value,
        w_prime=val.derivative,
        log_scale=val.log_scale,
        point=complex(z),
        h=float(h),
        j=int(j) % 3,
    )
