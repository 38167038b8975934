"""Stokes-line tracing, sector labels, level curves, precanonical reports."""

import cmath
import math

import pytest

from airydiff import (
    CurveSpec,
    MomentumBranch,
    SectorLabel,
    StokesDiagram,
    classify_sector,
    horizontal_neighborhood,
    is_precanonical,
    trace_antistokes,
    trace_level_curve,
    trace_stokes,
)
from airydiff.stokes_geometry import stokes_ray_angle


@pytest.fixture(scope="module")
def diagram(linear_map):
    _, zmap = linear_map
    return StokesDiagram.build(zmap, arc_budget=0.9)


def _polyline_distance(p, nodes):
    best = math.inf
    for a, b in zip(nodes, nodes[1:]):
        d = b - a
        t = ((p - a) * d.conjugate()).real / abs(d) ** 2
        t = min(max(t, 0.0), 1.0)
        best = min(best, abs(p - (a + t * d)))
    return best


class TestStokesTraces:
    def test_ray_condition(self, linear_map, diagram):
        _, zmap = linear_map
        for j in range(3):
            for z in diagram.sigma[j][1:]:
                ang = cmath.phase(zmap.zeta(z)) - stokes_ray_angle(j)
                ang = (ang + math.pi) % (2 * math.pi) - math.pi
                assert abs(ang) <= 1e-8

    def test_zero_action_along_sigma(self, linear_map, diagram):
        _, zmap = linear_map
        for j in range(3):
            for z in diagram.sigma[j][1:]:
                assert abs(zmap.action(j, z, side="-").imag) <= 1e-8

    def test_quadrature_cross_check_of_action(self, linear_map, diagram):
        # independent route: Gauss quadrature of p_j along the polyline
        from airydiff.analytic_core import ComplexPath, path_integral

        _, zmap = linear_map
        j = 1
        curve = diagram.sigma[j]
        path = ComplexPath.polyline(list(curve[1::6]))
        val = path_integral(lambda w: zmap.p_branch(j, w), path)
        closed = zmap.action(j, curve[-3], side="-") - zmap.action(j, curve[1], side="-")
        # endpoints of the decimated polyline differ slightly from curve ends
        closed = zmap.action(j, list(curve[1::6])[-1], side="-") - zmap.action(
            j, curve[1], side="-"
        )
        assert abs(val - closed) < 1e-9

    def test_initial_direction_linear(self, diagram):
        ang = diagram.initial_angle("sigma", 0)
        assert abs(abs(ang) - math.pi) <= 0.05

    def test_angles_two_thirds_pi(self, diagram):
        for gap in diagram.angles_between_stokes():
            assert abs(gap - 2 * math.pi / 3) <= 0.05


class TestAntiStokes:
    def test_re_action_zero(self, linear_map, diagram):
        _, zmap = linear_map
        for j in range(3):
            for z in diagram.alpha[j][1:]:
                assert abs(zmap.action(j, z).real) <= 1e-8

    def test_smooth_through_turning_point(self, diagram):
        for j in range(3):
            a1 = diagram.initial_angle("sigma", j)
            a2 = diagram.initial_angle("alpha", j)
            diff = (a1 - a2 + math.pi) % (2 * math.pi) - math.pi
            assert abs(abs(diff) - math.pi) <= 0.05

    def test_monotone_action_on_alpha2(self, linear_map, diagram):
        _, zmap = linear_map
        acts = [zmap.action(2, z).imag for z in diagram.alpha[2][1:]]
        assert all(b > a for a, b in zip(acts, acts[1:]))


class TestClassify:
    def test_positive_axis_is_s0(self, linear_map):
        _, zmap = linear_map
        assert classify_sector(zmap, 0.3) is SectorLabel.S0

    def test_negative_axis_on_sigma0(self, linear_map):
        _, zmap = linear_map
        assert classify_sector(zmap, -0.3) is SectorLabel.ON_SIGMA0

    def test_turning_point(self, linear_map):
        _, zmap = linear_map
        assert classify_sector(zmap, zmap.z0) is SectorLabel.TURNING_POINT

    def test_sector_bands(self, linear_map, diagram):
        _, zmap = linear_map
        for j in range(3):
            target = 0.3 * cmath.exp(1j * (-2 * math.pi * j / 3 + 0.2))
            z = target
            for _ in range(40):
                z = z - (zmap.zeta(z) - target) / zmap.zeta_deriv(z)
            assert classify_sector(zmap, z) is SectorLabel[f"S{j}"]


class TestLevelCurves:
    def test_conservation_along_im_p_curve(self, linear_map, diagram):
        _, zmap = linear_map
        start = diagram.sigma[1][40]
        curve = trace_level_curve(zmap, "Im-p", start, MomentumBranch(2), arc_budget=0.3)
        ref = zmap.action(2, start).imag
        drift = max(abs(zmap.action(2, z).imag - ref) for z in curve[::10])
        assert drift <= 1e-6

    def test_reproduces_sigma1(self, linear_map, diagram):
        _, zmap = linear_map
        start = diagram.sigma[1][40]
        curve = trace_level_curve(
            zmap, "Im-p", start, MomentumBranch(2), arc_budget=0.35, step=1e-3
        )
        worst = max(_polyline_distance(p, diagram.sigma[1]) for p in curve[::20])
        assert worst <= 1e-5

    def test_re_p_curve_stays_on_alpha2(self, linear_map, diagram):
        _, zmap = linear_map
        start = diagram.alpha[2][30]
        curve = trace_level_curve(zmap, "Re-p", start, MomentumBranch(2), arc_budget=0.25)
        worst = max(abs(zmap.action(2, z).real) for z in curve[::10])
        assert worst <= 1e-6

    def test_im_p_minus_pi_curve_enters_upward(self, linear_map, diagram):
        # the level curve through a sigma_1 point near z0 crosses into the
        # neighbouring sector going up, staying vertical until AntiStokes
        _, zmap = linear_map
        a = diagram.sigma[1][12]
        curve = trace_level_curve(
            zmap, "Im-p-minus-pi", a, MomentumBranch(2), arc_budget=0.2, orientation=+1
        )
        assert curve[-1].imag > curve[0].imag
        ref = (zmap.action(2, a) - math.pi * (a - zmap.z0)).imag
        for z in curve[::10]:
            val = (zmap.action(2, z) - math.pi * (z - zmap.z0)).imag
            assert abs(val - ref) <= 1e-6


class TestPrecanonical:
    def test_stokes_polyline_is_precanonical(self, linear_map, diagram):
        _, zmap = linear_map
        nodes = list(diagram.sigma[2][::-1]) + list(diagram.sigma[1][1:])
        spec = CurveSpec.from_nodes(zmap, nodes, MomentumBranch(0), resample=False)
        rep = is_precanonical(spec)
        assert rep["vertical"] and rep["precanonical"]
        assert rep["margin_down"] > 3.0

    def test_horizontal_segment_fails_verticality(self, linear_map):
        _, zmap = linear_map
        spec = CurveSpec.from_nodes(zmap, [0.1 - 0.3j, 0.4 - 0.3j], MomentumBranch(0))
        rep = is_precanonical(spec)
        assert not rep["vertical"] and not rep["precanonical"]

    def test_level_curve_portion_is_precanonical(self, linear_map, diagram):
        _, zmap = linear_map
        a = diagram.sigma[1][12]
        curve = trace_level_curve(
            zmap, "Im-p-minus-pi", a, MomentumBranch(2), arc_budget=0.15, orientation=+1
        )
        spec = CurveSpec.from_nodes(zmap, list(curve), MomentumBranch(2), resample=False)
        rep = is_precanonical(spec)
        assert rep["precanonical"]

    def test_sampling_floor(self, linear_map):
        _, zmap = linear_map
        spec = CurveSpec.from_nodes(zmap, [-0.2j, 0.3j], MomentumBranch(0))
        assert len(spec.nodes) >= CurveSpec.MIN_SAMPLES


class TestSignPatterns:
    def test_action_signs_in_sectors(self, linear_map, rng):
        _, zmap = linear_map
        for j in range(3):
            for _ in range(10):
                phi = rng.uniform(-math.pi / 3 + 0.05, math.pi / 3 - 0.05)
                target = rng.uniform(0.05, 0.5) * cmath.exp(1j * (phi - 2 * math.pi * j / 3))
                z = target
                for _ in range(40):
                    z = z - (zmap.zeta(z) - target) / zmap.zeta_deriv(z)
                acts = [zmap.action(k, z).imag for k in range(3)]
                assert acts[j] > 0
                assert all(acts[k] < 0 for k in range(3) if k != j)

    def test_antisymmetry_relations(self, linear_map, rng):
        _, zmap = linear_map
        worst = 0.0
        for _ in range(30):
            phi = rng.uniform(-math.pi + 0.03, math.pi / 3 - 0.03)
            target = rng.uniform(0.05, 0.5) * cmath.exp(1j * phi)
            z = target
            for _ in range(40):
                z = z - (zmap.zeta(z) - target) / zmap.zeta_deriv(z)
            worst = max(worst, abs(zmap.p_branch(1, z) + zmap.p_branch(0, z)))
        assert worst <= 1e-9

    def test_im_p2_negative_between_alpha2_and_sigma1(self, linear_map, rng):
        _, zmap = linear_map
        for _ in range(20):
            phi = rng.uniform(math.pi / 3 + 0.02, 2 * math.pi / 3 - 0.02)
            target = rng.uniform(0.01, 0.1) * cmath.exp(1j * phi)
            z = target
            for _ in range(50):
                z = z - (zmap.zeta(z) - target) / zmap.zeta_deriv(z)
            assert zmap.p_branch(2, z).imag < 0

    def test_rho_unit_and_continuous_on_sigma(self, linear_map):
        from airydiff import weight_rho

        _, zmap = linear_map
        for j in range(3):
            ang = stokes_ray_angle(j)
            for eps in (+1e-7, -1e-7):
                target = 0.25 * cmath.exp(1j * (ang + eps))
                z = target
                for _ in range(40):
                    z = z - (zmap.zeta(z) - target) / zmap.zeta_deriv(z)
                assert abs(weight_rho(zmap, j, z, 0.04) - 1.0) <= 1e-6


class TestHorizontalNeighborhood:
    def test_path_point_inside(self):
        region = horizontal_neighborhood([0.1 - 0.3j, 0.15, 0.1 + 0.3j], 0.0)
        assert region.contains(0.15)

    def test_half_shift_inside(self):
        d = 0.08
        region = horizontal_neighborhood([0.1 - 0.3j, 0.15, 0.1 + 0.3j], d)
        assert region.contains(0.15 + d / 2)
        assert not region.contains(0.15 + 2 * d)

    def test_contraction_implies_membership(self):
        nodes = [0.1 - 0.3j, 0.15, 0.1 + 0.3j]
        inner = horizontal_neighborhood(nodes, -0.05)
        base = horizontal_neighborhood(nodes, 0.0)
        for z in (0.15, 0.125 - 0.15j):
            if inner.contains(z):
                assert base.contains(z)
