import math
from fractions import Fraction

import pytest

from canonexp.expansion import (
    ExpansionParams,
    activity_inversion,
    b_factor,
    block_cancellation_residuals,
    convergence_certificate,
    f_via_graph_route_exact,
    f_via_vertex_route,
    free_energy_density,
    log_Z_canonical,
    p_factor,
    pressure_activity_series,
    thermo_limit_sweep,
    virial_pressure,
)
from canonexp.graphs import LabeledGraph, is_two_connected
from canonexp.integrals import ZetaEvaluator, beta_n
from canonexp.potentials import BoxGeometry, HardCorePotential, ZeroPotential

BOX = BoxGeometry(1, 10.0)
ROD = HardCorePotential(0.1)


def evaluator():
    return ZetaEvaluator(BOX, ROD, 1.0)


class TestDensityFactor:
    def test_values(self):
        assert p_factor(5, 10.0, 1) == pytest.approx(0.4)
        assert p_factor(5, 10.0, 2) == pytest.approx(0.12)
        assert p_factor(10, 5.0, 2) == pytest.approx(0.72 * 4.0)
        assert p_factor(10, 10.0, 2) == pytest.approx(0.72)

    def test_vanishes_at_particle_number(self):
        for n in range(5, 9):
            assert p_factor(5, 10.0, n) == 0.0

    def test_order_must_be_positive(self):
        with pytest.raises(ValueError):
            p_factor(5, 10.0, 0)


class TestCertificate:
    def test_contraction_number(self):
        params = ExpansionParams(N=5, box=BOX, beta=1.0, n_max=3, M=8)
        cert = convergence_certificate(params, ROD)
        want = 0.5 * math.exp(1.0 + 0.25 + 1.0) * 0.2
        assert cert.delta_prime == pytest.approx(want, rel=1e-12)
        assert cert.holds
        assert cert.rate_L == pytest.approx(-math.log1p(-want) / want)

    def test_tails_decay(self):
        params = ExpansionParams(N=5, box=BOX, beta=1.0, n_max=3, M=8)
        cert = convergence_certificate(params, ROD)
        tails = [cert.order_tail(n) for n in range(1, 6)]
        assert all(b > a for a, b in zip(tails[1:], tails))
        assert cert.truncation_tail(2, 8) < cert.truncation_tail(2, 6)

    def test_zero_potential_is_trivially_contractive(self):
        params = ExpansionParams(N=5, box=BOX, beta=1.0, n_max=3, M=8)
        cert = convergence_certificate(params, ZeroPotential())
        assert cert.holds
        assert cert.delta_prime == 0.0
        assert cert.rate_L == 1.0

    def test_dense_system_fails(self):
        box = BoxGeometry(1, 2.0)
        params = ExpansionParams(N=18, box=box, beta=1.0, n_max=3, M=8)
        cert = convergence_certificate(params, ROD)
        assert not cert.holds
        assert math.isinf(cert.rate_L)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            ExpansionParams(N=5, box=BOX, beta=1.0, n_max=3, M=3)
        with pytest.raises(ValueError):
            ExpansionParams(N=0, box=BOX, beta=1.0, n_max=3, M=8)


class TestClusterCoefficient:
    def test_first_order_closed_form(self):
        # at M = 8 the order-1 coefficient is the truncated log series of the
        # single-edge activity, with copy counts up to 4 contributing
        z = evaluator()
        B, _, _ = b_factor(1, 8, z)
        zeta = z.zeta_tilde(LabeledGraph.of([1, 2], [(1, 2)])).value
        want = BOX.volume * sum(
            (-1) ** (k - 1) * zeta ** k / k for k in range(1, 5)
        )
        assert B.value == pytest.approx(want, rel=1e-12)

    def test_volume_powers_never_positive(self):
        z = evaluator()
        for n in (1, 2):
            _, _, terms = b_factor(n, 6, z, collect_terms=True)
            assert terms
            assert all(t.volume_power <= 0 for t in terms)

    def test_exact_route_agreement(self):
        # rational single-edge weight on every graph: the vertex-polymer and
        # graph-polymer routes must coincide exactly at equal truncation
        w = Fraction(-1, 50)

        def weight(g):
            return w ** g.n_edges

        for n in (1, 2, 3):
            M = n + 3
            a = f_via_graph_route_exact(n, 5, Fraction(10), M, weight)
            b = f_via_vertex_route(n, 5, Fraction(10), M, weight)
            assert a == b

    def test_zero_potential_vanishes(self):
        z = ZetaEvaluator(BOX, ZeroPotential(), 1.0)
        for n in (1, 2):
            B, _, _ = b_factor(n, 6, z)
            assert B.value == 0.0


class TestSeriesReport:
    def test_zero_potential_gives_ideal_exactly(self):
        params = ExpansionParams(N=5, box=BOX, beta=1.0, n_max=3, M=8)
        report = log_Z_canonical(params, ZeroPotential())
        ideal = (5 * math.log(10.0) - math.lgamma(6.0)) / 10.0
        assert report.series_sum == 0.0
        assert report.log_z_per_volume == ideal

    def test_orders_at_and_beyond_N_vanish(self):
        params = ExpansionParams(N=3, box=BOX, beta=1.0, n_max=4, M=8)
        report = log_Z_canonical(params, ROD)
        flags = {r.n: r.vanished for r in report.rows}
        assert not flags[1] and not flags[2]
        assert flags[3] and flags[4]

    def test_csv_round_trip_fields(self):
        params = ExpansionParams(N=4, box=BOX, beta=1.0, n_max=2, M=6)
        report = log_Z_canonical(params, ROD)
        text = report.to_csv()
        assert "# log_z_per_volume" in text
        assert "n,P_factor,B_factor" in text
        head, rows = report.to_records()
        assert head["N"] == 4
        assert len(rows) == 2


class TestBlockCancellation:
    def test_path_graph_residuals_vanish(self):
        g = LabeledGraph.of([1, 2, 3], [(1, 2), (2, 3)])
        res = block_cancellation_residuals(g, 6)
        assert res
        assert all(v == 0 for v in res.values())

    def test_all_non_two_connected_on_four_vertices(self):
        from canonexp.graphs import enumerate_connected

        for g in enumerate_connected(4):
            if g.n_edges == 0 or is_two_connected(g):
                continue
            res = block_cancellation_residuals(g, 6)
            assert all(v == 0 for v in res.values()), g

    def test_two_connected_graph_survives(self):
        tri = LabeledGraph.of([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
        res = block_cancellation_residuals(tri, 6)
        single = tuple([(frozenset(tri.edges), 1)])
        double = tuple([(frozenset(tri.edges), 2)])
        assert res[single] == 1
        assert res[double] == Fraction(-1, 2)


class TestVirialIdentities:
    def test_hard_rod_virial_matches_exact_pressure(self):
        # beta p = rho / (1 - rho sigma) for hard rods; Taylor in rho
        sigma = 0.1
        coeffs = {m: beta_n(m, ROD, 1.0, 1).value for m in (1, 2)}
        for rho in (0.1, 0.3, 0.5):
            got = virial_pressure(rho, coeffs, 2)
            want = rho + sigma * rho ** 2 + sigma ** 2 * rho ** 3
            assert got == pytest.approx(want, rel=1e-8)

    def test_pressure_from_free_energy(self):
        # thermodynamic identity beta p = rho d(beta f)/d rho - beta f
        coeffs = {m: beta_n(m, ROD, 1.0, 1).value for m in (1, 2)}
        rho = 0.4
        h = 1e-6
        df = (free_energy_density(rho + h, coeffs, 2) - free_energy_density(rho - h, coeffs, 2)) / (2 * h)
        p_direct = virial_pressure(rho, coeffs, 2)
        assert rho * df - free_energy_density(rho, coeffs, 2) == pytest.approx(
            p_direct, rel=1e-6
        )

    def test_activity_round_trip(self):
        coeffs = [0.0, beta_n(1, ROD, 1.0, 1).value, beta_n(2, ROD, 1.0, 1).value]
        rho = 0.2
        z = activity_inversion(rho, coeffs, 3)
        # at low density z is close to rho with the first correction
        assert z == pytest.approx(rho * math.exp(-coeffs[1] * rho), rel=1e-3)

    def test_activity_series_low_density(self):
        z_eval = evaluator()
        z = 0.01
        p1 = pressure_activity_series(z, 3, z_eval)
        assert p1 == pytest.approx(z - 0.1 * z ** 2, abs=1e-5)


class TestThermodynamicLimit:
    def test_first_order_error_halves_with_volume(self):
        sweep = thermo_limit_sweep(1, [5.0, 10.0, 20.0, 40.0], ROD, 1.0, 8)
        assert sweep["limit"] == pytest.approx(-0.2, rel=1e-8)
        ratios = [row["error_ratio"] for row in sweep["rows"][1:]]
        assert all(1.5 < r < 2.5 for r in ratios)
