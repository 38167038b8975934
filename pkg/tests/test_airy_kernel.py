"""Complex Airy functions: series oracle, asymptotics, rotation family."""

import cmath
import math

import pytest
import scipy.special

from airydiff import airy_ai, scaled_pair, w_j, weight_rho

OMEGA = cmath.exp(2j * cmath.pi / 3)


def series_oracle(z, terms=140):
    """Independent Maclaurin evaluation with gamma-function constants."""
    c1 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
    c2 = 3.0 ** (-1.0 / 3.0) / math.gamma(1.0 / 3.0)
    z = complex(z)
    z3 = z**3
    tf, tg, tgp, tfp = 1 + 0j, z, 1 + 0j, 0.5 * z * z
    f, g, fp, gp = tf, tg, tfp, tgp
    for k in range(1, terms):
        tf *= z3 / ((3 * k - 1) * (3 * k))
        tg *= z3 / ((3 * k) * (3 * k + 1))
        tgp *= z3 / ((3 * k - 2) * (3 * k))
        if k >= 2:
            tfp *= z3 / ((3 * k - 3) * (3 * k - 1))
            fp += tfp
        f += tf
        g += tg
        gp += tgp
    return c1 * f - c2 * g, c1 * fp - c2 * gp


class TestValues:
    def test_origin_constants(self):
        val = airy_ai(0.0)
        c1 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
        c2 = 3.0 ** (-1.0 / 3.0) / math.gamma(1.0 / 3.0)
        assert abs(val.value - c1) < 1e-12
        assert abs(val.derivative + c2) < 1e-12
        assert abs(val.value - 0.3550280538878172) < 1e-12
        assert abs(val.derivative + 0.2588194037928068) < 1e-12

    def test_unit_argument_series_oracle(self):
        ref, _ = series_oracle(1.0)
        val = airy_ai(1.0)
        assert abs(val.value - ref) < 1e-10
        assert abs(val.value - 0.1352924163128814) < 1e-10

    def test_against_scipy_across_regimes(self, rng):
        worst = 0.0
        for _ in range(150):
            z = rng.uniform(0.1, 25.0) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
            mine = airy_ai(z)
            s = math.exp(mine.log_scale)
            ref_ai, ref_aip, _, _ = scipy.special.airy(z)
            env = max(abs(ref_ai), abs(ref_aip))
            worst = max(
                worst,
                abs(mine.value * s - ref_ai) / env,
                abs(mine.derivative * s - ref_aip) / env,
            )
        assert worst < 1e-10

    def test_large_argument_leading_form(self):
        # exp(-(2/3) z^(3/2)) / (2 sqrt(pi) z^(1/4)) within 2 percent at z = 25
        val = airy_ai(25.0)
        lead = (
            abs(val.value)
            * math.exp(val.log_scale + (2.0 / 3.0) * 125.0)
            * 2
            * math.sqrt(math.pi)
            * 25**0.25
        )
        assert abs(lead - 1.0) < 1e-2

    def test_oscillatory_leading_form(self):
        # cos((2/3) x^(3/2) - pi/4) envelope on the negative ray (classical
        # phase; the opposite sign in circulation is a known misprint)
        val = airy_ai(-25.0)
        bare = math.cos((2.0 / 3.0) * 125.0 - math.pi / 4) / (math.sqrt(math.pi) * 25**0.25)
        envelope = 1.0 / (math.sqrt(math.pi) * 25**0.25)
        assert abs(val.value * math.exp(val.log_scale) - bare) < 0.02 * envelope

    def test_scaled_representation_beyond_overflow(self):
        val = airy_ai(120.0)
        assert val.log_scale < -700
        with pytest.raises(Exception):
            val.unscaled()
        # log magnitude agrees with an independent route
        import mpmath

        ref = float(mpmath.log(abs(mpmath.airyai(120))))
        assert abs(val.log_scale + math.log(abs(val.value)) - ref) < 1e-8

    def test_method_overlap_agreement(self):
        # both regimes agree near the switch radius
        for r, ang in ((8.2, 0.3), (8.2, -1.0), (4.4, 0.5)):
            z = r * cmath.exp(1j * ang)
            auto = airy_ai(z)
            if r > 8:
                forced = airy_ai(z, method="asymptotic")
            else:
                forced = airy_ai(z, method="series")
            a = auto.value * math.exp(auto.log_scale)
            b = forced.value * math.exp(forced.log_scale)
            assert abs(a - b) <= 1e-8 * max(abs(a), 1e-300)


class TestRotationFamily:
    def test_sum_identity_at_origin(self):
        tot = sum(w_j(j, 0.0).value for j in range(3))
        assert abs(tot) < 1e-12

    def test_sum_identity_wide(self, rng):
        worst = 0.0
        for _ in range(100):
            z = rng.uniform(0.05, 20.0) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
            vals = [w_j(j, z) for j in range(3)]
            smax = max(v.log_scale for v in vals)
            tot = sum(v.value * math.exp(v.log_scale - smax) for v in vals)
            totp = sum(v.derivative * math.exp(v.log_scale - smax) for v in vals)
            mx = max(abs(v.value * math.exp(v.log_scale - smax)) for v in vals)
            mxp = max(abs(v.derivative * math.exp(v.log_scale - smax)) for v in vals)
            worst = max(worst, abs(tot) / mx, abs(totp) / mxp)
        assert worst < 1e-9

    def test_w0_is_scaled_ai(self):
        z = 1.3 - 0.4j
        a = airy_ai(z)
        v = w_j(0, z)
        assert abs(v.value - 2j * math.pi * a.value) < 1e-14 * abs(v.value)
        assert v.log_scale == a.log_scale

    def test_airy_equation_central_difference(self):
        # w'' = zeta w through a second difference of step 1e-3 at zeta = 0.7
        h = 1e-3
        z = 0.7
        vals = [w_j(1, z + k * h).value for k in (-1, 0, 1)]
        second = (vals[0] - 2 * vals[1] + vals[2]) / h**2
        assert abs(second - z * vals[1]) < 1e-6

    def test_wronskian_constant(self, rng):
        # sampled where the two products stay under ~1e7: beyond that the
        # twelve-order cancellation to the constant exceeds double precision
        ref0 = w_j(0, 0.0)
        ref1 = w_j(1, 0.0)
        const = ref0.value * ref1.derivative - ref0.derivative * ref1.value
        spread = 0.0
        for _ in range(10):
            z = rng.uniform(0.1, 4.5) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
            a, b = w_j(0, z), w_j(1, z)
            s = math.exp(a.log_scale + b.log_scale)
            w = (a.value * b.derivative - a.derivative * b.value) * s
            spread = max(spread, abs(w - const) / abs(const))
        assert spread < 1e-9
        # fixed by the series values at the origin
        a0, ap0 = series_oracle(0.0)
        a1, ap1 = series_oracle(OMEGA * 0.0)
        expect = (2j * math.pi) ** 2 * OMEGA * (a0 * OMEGA * ap1 - ap0 * a1)
        assert abs(const - expect) < 1e-12 * abs(const)

    def test_series_reexpansion_consistency(self, rng):
        # Ai at shifted points through the Airy recurrence from a base jet
        for _ in range(5):
            a = rng.uniform(0.3, 2.0) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
            base = airy_ai(a)
            c = [base.value, base.derivative]
            for k in range(2, 40):
                nxt = (a * c[k - 2] + (c[k - 3] if k >= 3 else 0)) / (k * (k - 1))
                c.append(nxt)
            dz = 0.4 * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
            val = sum(ck * dz**k for k, ck in enumerate(c))
            ref = airy_ai(a + dz)
            assert abs(val - ref.value * math.exp(ref.log_scale)) < 1e-10


class TestScaledPair:
    def test_turning_point_value(self, linear_map):
        _, zmap = linear_map
        ref = w_j(1, 0.0)
        for h in (0.3, 0.05, 0.004):
            pair = scaled_pair(zmap, 1, zmap.z0, h)
            assert abs(pair.w * math.exp(pair.log_scale) - ref.value) < 1e-12

    def test_argument_power_law(self, linear_map):
        _, zmap = linear_map
        z = 0.4
        h = 0.02
        z1 = abs(zmap.zeta(z)) / h ** (2.0 / 3.0)
        z2 = abs(zmap.zeta(z)) / (h / (2 * math.sqrt(2))) ** (2.0 / 3.0)
        assert abs(z2 / z1 - 2.0) < 1e-12

    def test_recessive_dominant_bound(self, linear_map):
        # h^(1/2)|rho_0| <= C (|h^(1/3) w_h| + |h^(1/3) w_h'|) with one fitted C
        _, zmap = linear_map
        grid = [0.3, -0.2 + 0.25j, -0.3 - 0.2j, 0.15 + 0.3j, 0.45]
        hs = [0.1, 0.03, 0.01]
        ratios = []
        for z in grid:
            for h in hs:
                pair = scaled_pair(zmap, 0, z, h)
                rho = weight_rho(zmap, 0, z, h)
                lhs = math.sqrt(h) * rho
                rhs = (abs(pair.w) + abs(pair.w_prime)) * h ** (1.0 / 3.0) * math.exp(
                    pair.log_scale
                )
                ratios.append(lhs / rhs)
        fitted_c = max(ratios[: len(ratios) // 2])
        assert max(ratios[len(ratios) // 2 :]) <= 2.0 * fitted_c
