import math

import pytest

from canonexp.graphs import LabeledGraph, enumerate_trees
from canonexp.integrals import (
    ZetaEvaluator,
    b_n_connected,
    beta_n,
    tree_graph_bound,
    tree_weight_closed_form,
    zeta_vertex,
)
from canonexp.potentials import (
    BoxGeometry,
    GaussianPotential,
    HardCorePotential,
    SquareWellPotential,
    ZeroPotential,
    c_beta,
)

BOX = BoxGeometry(1, 10.0)
ROD = HardCorePotential(0.1)


def evaluator(**kw):
    return ZetaEvaluator(BOX, ROD, 1.0, **kw)


class TestSingleEdge:
    def test_hard_rod_value(self):
        # two-vertex activity is (1/|box|) * integral of f = -2 sigma / L
        z = evaluator()
        K2 = LabeledGraph.of([1, 2], [(1, 2)])
        r = z.zeta_tilde(K2)
        assert r.value == pytest.approx(-0.02, rel=1e-12)
        assert r.method == "quadrature"

    def test_zero_potential(self):
        z = ZetaEvaluator(BOX, ZeroPotential(), 1.0)
        K2 = LabeledGraph.of([1, 2], [(1, 2)])
        assert z.zeta_tilde(K2).value == 0.0

    def test_square_well_value(self):
        pot = SquareWellPotential(0.1, 0.3, 2.0)
        z = ZetaEvaluator(BOX, pot, 1.5)
        K2 = LabeledGraph.of([1, 2], [(1, 2)])
        expected = (-2 * 0.1 + math.expm1(1.5 * 0.3) * 2 * 0.1) / BOX.volume
        assert z.zeta_tilde(K2).value == pytest.approx(expected, rel=1e-9)


class TestZetaTilde:
    def test_isomorphism_invariance(self):
        z = evaluator()
        path_a = LabeledGraph.of([1, 2, 3], [(1, 2), (2, 3)])
        path_b = LabeledGraph.of([1, 2, 3], [(1, 3), (3, 2)])
        ra = z.zeta_tilde(path_a)
        rb = z.zeta_tilde(path_b)
        assert ra.value == rb.value

    def test_tree_factorization(self):
        z = evaluator()
        for n in (2, 3, 4):
            for T in enumerate_trees(n):
                got = z.zeta_tilde(T).value
                want = tree_weight_closed_form(T, z)
                assert got == pytest.approx(want, rel=1e-8, abs=1e-14)

    def test_disconnected_rejected(self):
        z = evaluator()
        with pytest.raises(ValueError):
            z.zeta_tilde(LabeledGraph.of([1, 2, 3], [(1, 2)]))

    def test_cache_hit_returns_same_object(self):
        z = evaluator()
        K2 = LabeledGraph.of([1, 2], [(1, 2)])
        assert z.zeta_tilde(K2) is z.zeta_tilde(K2)

    def test_mc_deterministic_and_error_scaling(self):
        K3 = LabeledGraph.of([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
        za = evaluator(method="mc", mc_samples=40_000, seed=7)
        zb = evaluator(method="mc", mc_samples=40_000, seed=7)
        ra, rb = za.zeta_tilde(K3), zb.zeta_tilde(K3)
        assert ra.value == rb.value
        assert ra.statistical_error == rb.statistical_error
        z4 = evaluator(method="mc", mc_samples=160_000, seed=7)
        r4 = z4.zeta_tilde(K3)
        ratio = ra.statistical_error / r4.statistical_error
        assert 1.3 < ratio < 3.0  # expect about 2x from 4x the samples

    def test_mc_agrees_with_quadrature(self):
        K3 = LabeledGraph.of([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
        quad = evaluator().zeta_tilde(K3)
        mc = evaluator(method="mc").zeta_tilde(K3)
        assert abs(mc.value - quad.value) < 5 * mc.statistical_error + 1e-12

    def test_tree_importance_variant_agrees(self):
        K3 = LabeledGraph.of([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
        quad = evaluator().zeta_tilde(K3)
        mct = evaluator(method="mc-tree", mc_samples=100_000).zeta_tilde(K3)
        assert abs(mct.value - quad.value) < 5 * mct.statistical_error + 1e-12


class TestVertexActivity:
    def test_routes_agree(self):
        z = evaluator()
        for n in (2, 3):
            a = zeta_vertex(n, z, route="graph-sum")
            b = zeta_vertex(n, z, route="inclusion-exclusion")
            assert a.value == pytest.approx(b.value, abs=1e-10)

    def test_trivial_order(self):
        assert zeta_vertex(1, evaluator()).value == 1.0


class TestTreeBound:
    def test_holds_for_vertex_activity(self):
        z = evaluator()
        a = 1.0
        slack = 1.0 + 1e-12  # the two-vertex case meets the bound exactly
        for n in range(2, 6):
            val = abs(zeta_vertex(n, z).value) * math.exp(a * n)
            bound = tree_graph_bound(n, BOX, ROD, 1.0, a)
            assert val <= bound * slack

    def test_two_vertex_saturation(self):
        z = evaluator()
        val = abs(zeta_vertex(2, z).value) * math.exp(2.0)
        bound = tree_graph_bound(2, BOX, ROD, 1.0, 1.0)
        assert val == pytest.approx(bound, rel=1e-10)


class TestIrreducibleCoefficients:
    def test_hard_rod_first_two(self):
        assert beta_n(1, ROD, 1.0, 1).value == pytest.approx(-0.2, rel=1e-10)
        assert beta_n(2, ROD, 1.0, 1).value == pytest.approx(-0.015, rel=1e-8)

    def test_hard_rod_virial_recursion(self):
        # B_{m+1} = -(m/(m+1)) beta_m, and hard rods have B_m = sigma^(m-1)
        sigma = 0.1
        for m in (1, 2):
            bm = beta_n(m, ROD, 1.0, 1).value
            assert -m / (m + 1) * bm == pytest.approx(sigma ** m, rel=5e-3)
        # the m = 3 integrals run on a midpoint grid; tolerance reflects that
        b3 = beta_n(3, ROD, 1.0, 1, grid_nodes=192).value
        assert -0.75 * b3 == pytest.approx(sigma ** 3, rel=2e-2)

    def test_hard_sphere_second_virial(self):
        sigma = 0.5
        pot = HardCorePotential(sigma)
        b1 = beta_n(1, pot, 1.0, 3).value
        assert -0.5 * b1 == pytest.approx(2.0 * math.pi / 3.0 * sigma ** 3, rel=1e-10)

    def test_infinite_range_needs_domain_radius(self):
        with pytest.raises(ValueError):
            beta_n(2, GaussianPotential(0.5), 1.0, 1)

    def test_domain_radius_independence(self):
        pot = GaussianPotential(0.5)
        a = beta_n(2, pot, 1.0, 1, domain_radius=8.0)
        b = beta_n(2, pot, 1.0, 1, domain_radius=12.0)
        assert a.value == pytest.approx(b.value, abs=1e-7)

    def test_gaussian_first_coefficient(self):
        # beta_1 = integral of expm1(-beta*eps*exp(-r^2)) over the line
        from scipy import integrate

        pot = GaussianPotential(0.5)
        want, _ = integrate.quad(
            lambda r: math.expm1(-0.5 * math.exp(-r * r)), -12.0, 12.0
        )
        got = beta_n(1, pot, 1.0, 1, domain_radius=12.0)
        assert got.value == pytest.approx(want, rel=1e-8)


class TestConnectedCoefficients:
    def test_first_is_one(self):
        assert b_n_connected(1, evaluator()).value == 1.0

    def test_second_hard_rod(self):
        # b_2 = (V/2) zeta(K2) = -sigma
        r = b_n_connected(2, evaluator())
        assert r.value == pytest.approx(-0.1, rel=1e-10)

    def test_zero_potential_vanishes(self):
        z = ZetaEvaluator(BOX, ZeroPotential(), 1.0)
        for n in (2, 3):
            assert b_n_connected(n, z).value == 0.0
