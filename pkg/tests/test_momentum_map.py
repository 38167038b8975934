"""Turning points, momentum branches, and the zeta map."""

import cmath
import math

import numpy as np
import pytest
import sympy

from airydiff import (
    MomentumBranch,
    Potential,
    TurningPointError,
    ZetaMap,
    check_zeta_ode,
    find_turning_point,
    g_function,
    linear_potential,
    momentum,
    normalize_potential,
    potential_from_spec,
    quadratic_potential,
    sine_potential,
    weight_rho,
    wkb_leading,
    zeta,
)


def _invert_zeta(zmap, target, guess=None):
    z = target if guess is None else guess
    for _ in range(60):
        z = z - (zmap.zeta(z) - target) / zmap.zeta_deriv(z)
    assert abs(zmap.zeta(z) - target) < 1e-12
    return z


class TestTurningPoint:
    def test_linear(self):
        tp = find_turning_point(linear_potential(), 0.1)
        assert abs(tp.z0) < 1e-13
        assert abs(tp.v_prime + 1.0) < 1e-13
        assert abs(tp.k1**2 - tp.v_prime) < 1e-12

    def test_sine(self):
        tp = find_turning_point(sine_potential(), 0.2)
        assert abs(tp.z0) < 1e-12

    def test_quadratic_with_two_roots_finds_nearest(self):
        # v + 2 = -z + z^2 = z(z - 1): roots 0 and 1 by the quadratic formula
        pot = potential_from_spec([(-2, 0), (-1, 0), (1, 0)], u_radius=2.0)
        tp = find_turning_point(pot, 0.3)
        assert abs(tp.z0) < 1e-12

    def test_not_simple_rejected(self):
        pot = potential_from_spec([(-2, 0), (0, 0), (-1, 0)], u_radius=1.0)  # v = -2 - z^2
        with pytest.raises(TurningPointError):
            find_turning_point(pot, 0.05, tol=1e-17)


class TestNormalization:
    def test_plus_two_case_flips(self):
        pot = potential_from_spec([(2, 0), (-1, 0)])  # v = 2 - z
        out = normalize_potential(pot)
        assert out.gauge_transformed
        assert abs(out(0.3) - (-2 + 0.3)) < 1e-14

    def test_minus_two_case_is_noop(self):
        pot = linear_potential()
        assert normalize_potential(pot) is pot

    def test_flip_is_involution(self):
        pot = linear_potential()
        twice = pot.flipped().flipped()
        for z in (0.1, -0.4 + 0.2j):
            assert abs(twice(z) - pot(z)) < 1e-14
        assert not twice.gauge_transformed

    def test_other_values_rejected(self):
        pot = potential_from_spec([(1, 0)])
        with pytest.raises(ValueError):
            normalize_potential(pot)


class TestMomentum:
    def test_value_at_cut_boundary(self):
        zmap = ZetaMap(linear_potential(u_radius=2.5))
        p = zmap.p_branch(0, -2.0, side="-")
        assert abs(p - math.pi / 2) < 1e-10

    def test_turning_point_value(self, linear_map):
        _, zmap = linear_map
        assert zmap.p_branch(0, zmap.z0) == 0

    def test_arccosh_oracle(self):
        zmap = ZetaMap(linear_potential(u_radius=2.5))
        expected = 1j * cmath.acosh(1.5)
        assert abs(zmap.p_branch(0, 1.0) - expected) < 1e-11

    def test_defining_identity_everywhere(self, linear_map, rng):
        pot, zmap = linear_map
        worst = 0.0
        n = 0
        while n < 40:
            z = complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8))
            if abs(z) < 0.03 or abs(z) > 1.1:
                continue
            for j in range(3):
                try:
                    p = zmap.p_branch(j, z)
                except Exception:
                    continue
                worst = max(worst, abs(2 * cmath.cos(p) + pot(z)))
            n += 1
        assert worst < 1e-10

    def test_branch_algebra(self, linear_map, rng):
        _, zmap = linear_map
        b1 = MomentumBranch(0, 1, 0)
        b2 = MomentumBranch(0, -1, 2)
        ints = []
        for _ in range(20):
            target = rng.uniform(0.05, 0.5) * cmath.exp(1j * rng.uniform(-1.0, 1.0))
            z = _invert_zeta(zmap, target)
            p1 = momentum(zmap, z, b1)
            p2 = momentum(zmap, z, b2)
            ints.append((p1 - (-1) * p2) / (2 * math.pi))
        ints = np.array(ints)
        assert np.allclose(ints, 2.0, atol=1e-11)


class TestZeta:
    def test_zero_at_turning_point(self, linear_map):
        _, zmap = linear_map
        assert zeta(zmap, zmap.z0) == 0j

    def test_taylor_oracle_sympy(self, linear_map):
        # independent route: invert 2 cos p = 2 + z symbolically, integrate,
        # and take the 2/3 power as a series
        _, zmap = linear_map
        zs, ps = sympy.symbols("z p")
        p_series = sympy.series(sympy.acos(1 + zs / 2), zs, 0, 4).removeO()
        # acos branch gives +- i sqrt(z)(...); normalize to k1 = +i via p^2
        p2 = sympy.expand(sympy.series(p_series**2, zs, 0, 4).removeO())
        u = sympy.sqrt(p2.subs(zs, zs) / (-zs))  # (1 - z/12 + ...)^(1/2) style factor
        u = sympy.series(u, zs, 0, 3).removeO()
        # p = i sqrt(z) u; S = (3/(2i)) int p = z^(3/2) * s(z); zeta = z * s^(2/3)
        integral = sympy.integrate(sympy.sqrt(zs) * u, zs)
        s_factor = sympy.series(integral * sympy.Rational(3, 2) / zs ** sympy.Rational(3, 2), zs, 0, 3).removeO()
        zeta_series = sympy.series(zs * s_factor ** sympy.Rational(2, 3), zs, 0, 4).removeO()
        poly = sympy.Poly(zeta_series, zs)
        coeffs = {m: complex(poly.coeff_monomial(zs**m)) for m in (1, 2, 3)}
        assert abs(coeffs[1] - 1.0) < 1e-12
        assert abs(coeffs[2] + 1.0 / 60.0) < 1e-12
        z = 0.01
        oracle = coeffs[1] * z + coeffs[2] * z**2 + coeffs[3] * z**3
        assert abs(zeta(zmap, z) - oracle) < 1e-9

    def test_slope_at_origin(self, linear_map):
        _, zmap = linear_map
        assert abs(zeta(zmap, 1e-3) / 1e-3 - 1.0) <= 1e-3

    def test_branch_set_rotation(self):
        pot = linear_potential()
        maps = [ZetaMap(pot, branch_selector=l, certify=False) for l in range(3)]
        z = 0.3 - 0.2j
        base = maps[0].zeta(z)
        for l in (1, 2):
            rot = cmath.exp(4j * cmath.pi * l / 3)
            assert abs(maps[l].zeta(z) - rot * base) < 1e-10

    def test_local_model_convergence(self, linear_map):
        _, zmap = linear_map
        zp0 = zmap.zeta_deriv(zmap.z0)
        errs = []
        for r in (1e-1, 1e-2, 1e-3):
            z = zmap.z0 + r * cmath.exp(0.4j)
            errs.append(abs(zmap.zeta(z) / (z - zmap.z0) - zp0))
        order = np.polyfit(np.log([1e-1, 1e-2, 1e-3]), np.log(errs), 1)[0]
        assert order >= 1.0 - 0.1

    def test_continuous_across_momentum_cut(self, linear_map):
        # the principal arccos branch cut lies along the positive axis here;
        # zeta must not feel it
        _, zmap = linear_map
        up = zeta(zmap, 0.5 + 1e-9j)
        dn = zeta(zmap, 0.5 - 1e-9j)
        assert abs(up - dn) < 1e-7


class TestZetaOde:
    def test_residual_small(self, linear_map):
        _, zmap = linear_map
        assert check_zeta_ode(zmap, 0.3) <= 1e-8

    def test_near_turning_point(self, linear_map):
        _, zmap = linear_map
        assert check_zeta_ode(zmap, zmap.z0 + 1e-4 * cmath.exp(0.3j)) <= 1e-6

    def test_sign_consistency(self, rng):
        zmap = ZetaMap(linear_potential())
        for _ in range(20):
            z = complex(rng.uniform(0.05, 0.6), rng.uniform(-0.5, 0.5))
            check_zeta_ode(zmap, z)
        assert zmap.realized_ode_sign in (-1, 1)


class TestGFunction:
    def test_removable_limit_linear(self, linear_map):
        _, zmap = linear_map
        assert abs(g_function(zmap, zmap.z0) - 1.0) < 1e-12

    def test_determination_independence(self, linear_map, rng):
        _, zmap = linear_map
        for _ in range(20):
            z = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
            if abs(z) < 0.05:
                continue
            sq = cmath.sqrt(zmap.zeta(z))
            zp = zmap.zeta_deriv(z)
            for s in (sq, -sq):
                direct = cmath.sinh(s * zp) / s
                assert abs(direct - zmap.g(z)) < 1e-11

    def test_a0_value(self, linear_map):
        _, zmap = linear_map
        assert abs(1.0 / cmath.sqrt(g_function(zmap, zmap.z0)) - 1.0) < 1e-12


class TestWeightRho:
    def test_one_on_stokes_lines(self, linear_map):
        _, zmap = linear_map
        for j in range(3):
            target = 0.3 * cmath.exp(1j * (math.pi - 2 * math.pi * j / 3))
            z = _invert_zeta(zmap, target)
            assert abs(weight_rho(zmap, j, z, 0.05) - 1.0) < 1e-9

    def test_one_at_turning_point(self, linear_map):
        _, zmap = linear_map
        assert weight_rho(zmap, 1, zmap.z0, 0.01) == 1.0

    def test_decays_inside_own_sector(self, linear_map):
        _, zmap = linear_map
        for j in range(3):
            target = 0.3 * cmath.exp(1j * (-2 * math.pi * j / 3))
            z = _invert_zeta(zmap, target)
            assert weight_rho(zmap, j, z, 0.05) < 1.0

    def test_continuity_across_cut(self, linear_map):
        _, zmap = linear_map
        for j in range(3):
            ang = math.pi - 2 * math.pi * j / 3
            zp = _invert_zeta(zmap, 0.3 * cmath.exp(1j * (ang + 1e-7)))
            zm = _invert_zeta(zmap, 0.3 * cmath.exp(1j * (ang - 1e-7)))
            assert abs(weight_rho(zmap, j, zp, 0.03) - weight_rho(zmap, j, zm, 0.03)) < 1e-6


class TestWkbLeading:
    def test_product_identity(self, linear_map):
        _, zmap = linear_map
        z, h = 0.4 - 0.3j, 0.02
        plus = wkb_leading(zmap, z, +1, h, base=0.3)
        minus = wkb_leading(zmap, z, -1, h, base=0.3)
        sinp = cmath.sin(zmap.p_branch(0, z))
        assert abs(plus * minus - 1.0 / sinp) < 1e-10 * abs(1 / sinp)

    def test_modulus_matches_rho(self, linear_map):
        _, zmap = linear_map
        z, h = 0.35 - 0.25j, 0.03
        sinp = cmath.sin(zmap.p_branch(0, z))
        rho = weight_rho(zmap, 0, z, h)
        for sign in (+1, -1):
            val = wkb_leading(zmap, z, sign, h, base=zmap.z0)
            assert abs(abs(val) - rho**sign / abs(sinp) ** 0.5) < 1e-9 * abs(val)

    def test_empty_action_unit_value(self):
        zmap = ZetaMap(linear_potential(u_radius=2.5))
        for sign in (+1, -1):
            val = wkb_leading(zmap, -2.0, sign, 0.05, base=-2.0, side="-")
            assert abs(val - 1.0) < 1e-9

    def test_too_close_to_turning_point(self, linear_map):
        _, zmap = linear_map
        from airydiff import DomainValidityError

        with pytest.raises(DomainValidityError):
            wkb_leading(zmap, zmap.z0 + 1e-8, +1, 0.01, base=0.3)


class TestCertification:
    def test_builtin_potentials_certify(self):
        for make in (linear_potential, quadratic_potential, sine_potential):
            zmap = ZetaMap(make())
            assert zmap.certified_radius > 0.5
            assert zmap.min_abs_g > 1e-8

    def test_injectivity_grid(self, linear_map, rng):
        _, zmap = linear_map
        pts = [
            complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)) for _ in range(120)
        ]
        pts = [z for z in pts if abs(z) < zmap.certified_radius]
        vals = [zmap.zeta(z) for z in pts]
        for i in range(len(pts)):
            for k in range(i + 1, len(pts)):
                if abs(vals[i] - vals[k]) < 1e-10:
                    assert abs(pts[i] - pts[k]) < 1e-9
