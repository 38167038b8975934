"""Complex-analysis numerics: analytic functions, jets, path quadrature.

The three workhorses here are

* ``cauchy_derivatives`` -- Taylor coefficients of an analytic function
  from trapezoidal sampling of the Cauchy integral on a circle.  The
  trapezoid rule on circles is spectrally accurate for analytic
  integrands, so the sample count is doubled until two successive
  estimates agree.

* ``path_integral`` -- adaptive composite Gauss-Legendre quadrature
  along a segment, polyline or parametric path.

* ``integrate_from_turning_point`` -- integral of a function with a
  square-root branch point at z0, computed after the substitution
  tau = sqrt(z - z0) which removes the branch point.

Everything is pure; instances can be shared between threads freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BranchError, DomainValidityError, QuadratureConvergenceError


@dataclass(frozen=True)
class AnalyticFunction:
    """An analytic map on a stated disk of validity.

    ``evaluator`` must be deterministic: repeated evaluation at the same
    point returns bit-identical values.
    """

    evaluator: Callable[[complex], complex]
    validity_center: complex = 0j
    validity_radius: float = math.inf
    label: str = ""

    def __call__(self, z):
        return self.evaluator(complex(z))

    def contains_disk(self, center, radius):
        return (
            abs(complex(center) - self.validity_center) + radius
            <= self.validity_radius * (1 + 1e-13)
        )

    def contains_point(self, z):
        return abs(complex(z) - self.validity_center) <= self.validity_radius * (1 + 1e-13)


@dataclass
class QuadratureConfig:
    nodes_per_panel: int = 32
    max_panels: int = 256
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.nodes_per_panel < 4:
            raise ValueError("nodes_per_panel must be >= 4")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be positive")


class ComplexPath:
    """Piecewise continuously differentiable path in the plane."""

    def __init__(self, kind, data, reverse=False):
        self.kind = kind
        self.data = data
        self.reverse = reverse

    @classmethod
    def segment(cls, a, b):
        return cls("segment", (complex(a), complex(b)))

    @classmethod
    def polyline(cls, nodes):
        nodes = [complex(z) for z in nodes]
        if len(nodes) < 2:
            raise ValueError("polyline needs at least two nodes")
        for u, v in zip(nodes, nodes[1:]):
            if u == v:
                raise ValueError("consecutive polyline nodes must be distinct")
        return cls("polyline", nodes)

    @classmethod
    def parametric(cls, fn, dfn, t0, t1):
        return cls("parametric", (fn, dfn, float(t0), float(t1)))

    def reversed(self):
        return ComplexPath(self.kind, self.data, reverse=not self.reverse)

    def pieces(self):
        """Smooth pieces as (map t->z, map t->dz/dt, t_lo, t_hi) tuples."""
        if self.kind == "segment":
            a, b = self.data
            out = [(lambda t, a=a, b=b: a + (b - a) * t, lambda t, a=a, b=b: b - a, 0.0, 1.0)]
        elif self.kind == "polyline":
            out = []
            for u, v in zip(self.data, self.data[1:]):
                out.append(
                    (lambda t, u=u, v=v: u + (v - u) * t, lambda t, u=u, v=v: v - u, 0.0, 1.0)
                )
        else:
            fn, dfn, t0, t1 = self.data
            out = [(fn, dfn, t0, t1)]
        if self.reverse:
            rev = []
            for fn, dfn, t0, t1 in reversed(out):
                rev.append(
                    (
                        lambda t, fn=fn, t0=t0, t1=t1: fn(t0 + t1 - t),
                        lambda t, dfn=dfn, t0=t0, t1=t1: -dfn(t0 + t1 - t),
                        t0,
                        t1,
                    )
                )
            out = rev
        return out

    def nodes(self, per_piece=8):
        pts = []
        for fn, _dfn, t0, t1 in self.pieces():
            ts = np.linspace(t0, t1, per_piece)
            pts.extend(fn(t) for t in ts)
        return pts


@dataclass
class JetResult:
    """Taylor coefficients c_k ~ f^(k)(center)/k! with per-coefficient error estimates."""

    coeffs: list
    errors: list
    center: complex
    radius: float
    tail_warning: bool = False

    def __iter__(self):
        return iter(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def resum(self, z):
        acc = 0j
        dz = complex(z) - self.center
        for c in reversed(self.coeffs):
            acc = acc * dz + c
        return acc


def _circle_fft_coeffs(f, center, radius, n):
    theta = 2 * np.pi * np.arange(n) / n
    pts = center + radius * np.exp(1j * theta)
    vals = np.array([f(complex(z)) for z in pts], dtype=complex)
    return np.fft.fft(vals) / n


def cauchy_derivatives(f, center, radius, order, rel_tol=1e-13, min_samples=64):
    """Taylor coefficients of ``f`` at ``center`` via the Cauchy integral.

    The closed disk of the given radius must lie inside the validity disk
    of ``f``.  Sampling starts at max(4*(order+1), 64) points and doubles
    until two successive estimates of every requested coefficient agree
    to ``rel_tol`` (relative to the largest coefficient magnitude).
    """
    center = complex(center)
    radius = float(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if isinstance(f, AnalyticFunction) and not f.contains_disk(center, radius):
        raise DomainValidityError(
            f"jet disk |z-{center}| <= {radius} exceeds validity disk of {f.label!r}"
        )
    n = max(4 * (order + 1), min_samples)
    prev = _circle_fft_coeffs(f, center, radius, n)[: order + 1]
    scale_pow = radius ** np.arange(order + 1)
    for _ in range(6):
        n *= 2
        cur = _circle_fft_coeffs(f, center, radius, n)[: order + 1]
        diff = np.abs(cur - prev)
        scale = max(np.max(np.abs(cur)), 1e-300)
        if np.max(diff) <= rel_tol * scale:
            prev = cur
            errors = diff / scale_pow
            break
        prev = cur
    else:
        errors = np.abs(cur - prev) / scale_pow
    coeffs = prev / scale_pow

    # |c_k| r^k should decay for k near the top; if not, warn (aliasing).
    mags = np.abs(coeffs) * scale_pow
    tail_warning = False
    if order >= 4:
        top = np.max(mags[-2:])
        if top > 1e-6 * max(np.max(mags), 1e-300) and top >= 0.5 * np.max(mags):
            tail_warning = True
    return JetResult(
        coeffs=[complex(c) for c in coeffs],
        errors=[float(e) for e in errors],
        center=center,
        radius=radius,
        tail_warning=tail_warning,
    )


_GL_CACHE = {}


def gauss_legendre(n):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


def _panel_value(f, fn, dfn, a, b, n):
    x, w = gauss_legendre(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    acc = 0j
    for xi, wi in zip(x, w):
        t = mid + half * xi
        acc += wi * f(fn(t)) * dfn(t)
    return acc * half


def path_integral(f, path, cfg=None):
    """Adaptive composite Gauss-Legendre integral of ``f`` along ``path``.

    Each panel is bisected until the two-half refinement agrees with the
    single-panel value; the accumulated error estimate stays below
    max(abs_tol, rel_tol * |value|).  Exhausting the panel budget raises
    ``QuadratureConvergenceError`` carrying the best value and estimate.
    """
    cfg = cfg or QuadratureConfig()
    if isinstance(f, AnalyticFunction):
        for z in path.nodes() if isinstance(path, ComplexPath) else []:
            if not f.contains_point(z):
                raise DomainValidityError("path leaves the validity disk")
    n = cfg.nodes_per_panel
    total = 0j
    total_err = 0.0
    panels_used = 0
    for fn, dfn, t0, t1 in path.pieces():
        stack = [(t0, t1, _panel_value(f, fn, dfn, t0, t1, n))]
        while stack:
            a, b, coarse = stack.pop()
            mid = 0.5 * (a + b)
            left = _panel_value(f, fn, dfn, a, mid, n)
            right = _panel_value(f, fn, dfn, mid, b, n)
            fine = left + right
            err = abs(fine - coarse)
            tol_here = max(cfg.abs_tol, cfg.rel_tol * abs(total + fine)) * (b - a) / (t1 - t0)
            panels_used += 1
            if err <= tol_here or panels_used >= cfg.max_panels:
                if err > tol_here:
                    raise QuadratureConvergenceError(
                        "panel budget exhausted before tolerance",
                        value=total + fine,
                        estimate=total_err + err,
                    )
                total += fine
                total_err += err
            else:
                stack.append((a, mid, left))
                stack.append((mid, b, right))
    return total


def integrate_from_turning_point(f, z0, z, cfg=None, ref_direction=None, tau_fn=None):
    """Integral of ``f`` from a square-root branch point z0 to z.

    The substitution tau = sqrt(z - z0) maps the straight segment
    [z0, z] to [0, tau_end] and removes the branch point:

        integral = int_0^{tau_end} f(z0 + tau^2) * 2 tau  d tau.

    ``tau_fn``, when given, replaces f(z0 + tau^2) by an explicit
    function of tau (used for integrands given directly in the tau
    variable, where f's own evaluator would be branch-ambiguous).
    The branch of tau_end is fixed by ``ref_direction`` (default: the
    segment direction itself), with arg tau within (-pi/2, pi/2] of the
    half-angle of that direction.
    """
    cfg = cfg or QuadratureConfig()
    z0 = complex(z0)
    z = complex(z)
    d = z - z0
    if ref_direction is not None and ref_direction == 0:
        raise BranchError("branch reference direction must be a nonzero vector")
    if d == 0:
        return 0j
    tau_end = math.sqrt(abs(d)) * np.exp(0.5j * np.angle(d))
    if ref_direction is not None:
        rho = np.exp(0.5j * np.angle(complex(ref_direction)))
        if (tau_end * np.conj(rho)).real < 0:
            tau_end = -tau_end

    if tau_fn is None:
        integrand = lambda tau: f(z0 + tau * tau) * 2 * tau
    else:
        integrand = lambda tau: tau_fn(tau) * 2 * tau
    path = ComplexPath.segment(0j, tau_end)
    return path_integral(integrand, path, cfg)
