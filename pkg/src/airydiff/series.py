"""Truncated Taylor series arithmetic in one complex variable.

This is the coefficient ring used by the turning-point machinery.  A
``Series`` holds coefficients c_0..c_n of a polynomial in an abstract
variable (in practice tau = sqrt(z - z0)) and supports the ring
operations plus the analytic-function compositions needed downstream:
reciprocal, sqrt, log-free fractional powers, arcsin of a series with
zero constant term, integration and differentiation.

Coefficients are stored as numpy ``clongdouble`` so that the long
cancellation chains in the coefficient pipeline stay well below double
precision roundoff.  All operations truncate at a fixed degree; they
are exact on the retained coefficients.
"""

from __future__ import annotations

import numpy as np

from .errors import AccuracyError

_CDT = np.clongdouble


def _as_coeffs(data, n):
    out = np.zeros(n + 1, dtype=_CDT)
    data = np.asarray(data, dtype=_CDT)
    m = min(len(data), n + 1)
    out[:m] = data[:m]
    return out


class Series:
    """Taylor polynomial sum c_k x^k, truncated at a fixed degree."""

    __slots__ = ("c",)

    def __init__(self, coeffs, degree=None):
        if degree is None:
            self.c = np.asarray(coeffs, dtype=_CDT).copy()
        else:
            self.c = _as_coeffs(coeffs, degree)

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, value, degree):
        return cls([value], degree)

    @classmethod
    def identity(cls, degree):
        return cls([0.0, 1.0], degree)

    @property
    def degree(self):
        return len(self.c) - 1

    def copy(self):
        return Series(self.c)

    # -- ring operations ----------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Series):
            return other
        return Series.constant(other, self.degree)

    def __add__(self, other):
        other = self._coerce(other)
        n = min(self.degree, other.degree)
        return Series(self.c[: n + 1] + other.c[: n + 1])

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series(self.c * _CDT(other))
        n = min(self.degree, other.degree)
        full = np.convolve(self.c[: n + 1], other.c[: n + 1])
        return Series(full[: n + 1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Series):
            return Series(self.c / _CDT(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    # -- calculus ------------------------------------------------------
    def deriv(self):
        n = self.degree
        if n == 0:
            return Series([0.0])
        k = np.arange(1, n + 1, dtype=_CDT)
        return Series(self.c[1:] * k)

    def integ(self):
        """Antiderivative with zero constant term, same truncation degree."""
        k = np.arange(1, self.degree + 1, dtype=_CDT)
        out = np.zeros(self.degree + 1, dtype=_CDT)
        out[1:] = self.c[:-1] / k
        return Series(out)

    def shift_up(self, m=1):
        """Multiply by x^m."""
        out = np.zeros(self.degree + 1, dtype=_CDT)
        out[m:] = self.c[: self.degree + 1 - m]
        return Series(out)

    def divide_by_x(self, m=1, tol=1e-25):
        """Divide by x^m; the leading m coefficients must vanish."""
        scale = max(1.0, float(np.max(np.abs(self.c))))
        if np.max(np.abs(self.c[:m])) > tol * scale:
            raise AccuracyError(
                "series not divisible by x^%d (leading residue %.3e)"
                % (m, float(np.max(np.abs(self.c[:m]))))
            )
        out = np.zeros(self.degree + 1, dtype=_CDT)
        out[: self.degree + 1 - m] = self.c[m:]
        return Series(out)

    # -- function composition ------------------------------------------
    def reciprocal(self):
        c0 = self.c[0]
        if c0 == 0:
            raise ZeroDivisionError("reciprocal of a series with zero constant term")
        n = self.degree
        out = np.zeros(n + 1, dtype=_CDT)
        out[0] = 1.0 / c0
        # Newton would also work; the direct recurrence is exact and O(n^2).
        for k in range(1, n + 1):
            out[k] = -np.dot(self.c[1 : k + 1], out[k - 1 :: -1][: k]) / c0
        return Series(out)

    def sqrt(self, branch_value=None):
        """Series square root; constant term must be nonzero.

        ``branch_value`` fixes the root of the constant term (defaults to
        the principal root).
        """
        c0 = complex(self.c[0])
        if c0 == 0:
            raise ZeroDivisionError("sqrt of a series with vanishing constant term")
        s0 = np.sqrt(_CDT(c0)) if branch_value is None else _CDT(branch_value)
        n = self.degree
        out = np.zeros(n + 1, dtype=_CDT)
        out[0] = s0
        for k in range(1, n + 1):
            acc = self.c[k] - np.dot(out[1:k], out[k - 1 : 0 : -1])
            out[k] = acc / (2 * s0)
        return Series(out)

    def power(self, alpha, branch_value=None):
        """Fractional power with nonzero constant term.

        Uses the ODE (x f')^.. recurrence  f = c^alpha:  c f' = alpha c' f,
        which avoids logs entirely.  ``branch_value`` fixes c_0^alpha.
        """
        c0 = self.c[0]
        if c0 == 0:
            raise ZeroDivisionError("fractional power of series with zero constant term")
        f0 = _CDT(complex(c0) ** alpha) if branch_value is None else _CDT(branch_value)
        n = self.degree
        out = np.zeros(n + 1, dtype=_CDT)
        out[0] = f0
        a = _CDT(alpha)
        # k c_0 f_k = sum_{j=1..k} (alpha j - (k - j)) c_j f_{k-j}
        for k in range(1, n + 1):
            j = np.arange(1, k + 1, dtype=_CDT)
            coef = a * j - (k - j)
            out[k] = np.dot(coef * self.c[1 : k + 1], out[k - 1 :: -1][: k]) / (k * c0)
        return Series(out)

    def compose_zero(self, outer_coeffs):
        """Compose sum a_m u^m with u = self, requiring u(0) = 0."""
        if abs(complex(self.c[0])) > 0:
            raise ValueError("composition requires zero constant term")
        n = self.degree
        acc = Series.constant(0.0, n)
        for a in reversed(list(outer_coeffs)):
            acc = acc * self + a
        return acc

    def arcsin(self):
        """arcsin of a series with zero constant term: integral of q'/sqrt(1-q^2)."""
        one_minus = 1.0 - self * self
        return (self.deriv() * one_minus.power(-0.5)).integ()

    # -- evaluation ------------------------------------------------------
    def __call__(self, x, dtype=complex):
        acc = _CDT(0.0)
        xl = _CDT(x)
        for ck in self.c[::-1]:
            acc = acc * xl + ck
        return dtype(acc)

    def tail_bound(self, radius, count=8):
        """Magnitude of the last ``count`` terms at |x| = radius."""
        k = np.arange(self.degree + 1)
        mags = np.abs(self.c) * np.longdouble(radius) ** k
        return float(np.max(mags[-count:]))

    def even_part_coeffs(self):
        return self.c[0::2].copy()

    def odd_part_coeffs(self):
        return self.c[1::2].copy()

    def is_even(self, tol=1e-22):
        scale = max(1.0, float(np.max(np.abs(self.c))))
        return float(np.max(np.abs(self.c[1::2]), initial=0.0)) <= tol * scale

    def is_odd(self, tol=1e-22):
        scale = max(1.0, float(np.max(np.abs(self.c))))
        return float(np.max(np.abs(self.c[0::2]), initial=0.0)) <= tol * scale

    def __repr__(self):
        head = ", ".join("%.3g%+.3gj" % (c.real, c.imag) for c in self.c[:4].astype(complex))
        return f"Series(deg={self.degree}, [{head}, ...])"


def sinhc_outer_coeffs(nterms):
    """Coefficients of Phi(u) = sinh(sqrt u)/sqrt u = sum u^k/(2k+1)!."""
    out = [np.clongdouble(1.0)]
    fact = np.clongdouble(1.0)
    for k in range(1, nterms):
        fact *= (2 * k) * (2 * k + 1)
        out.append(1.0 / fact)
    return out


def cosh_outer_coeffs(nterms):
    """Coefficients of Psi(u) = cosh(sqrt u) = sum u^k/(2k)!."""
    out = [np.clongdouble(1.0)]
    fact = np.clongdouble(1.0)
    for k in range(1, nterms):
        fact *= (2 * k - 1) * (2 * k)
        out.append(1.0 / fact)
    return out
