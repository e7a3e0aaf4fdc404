import math

import pytest

from canonexp.expansion import ExpansionParams
from canonexp.oracles import (
    OracleResult,
    brute_force_Xi,
    brute_force_Z,
    compare_expansion_vs_oracle,
    simpson_with_breakpoints,
    tonks_exact_Z,
)
from canonexp.potentials import (
    BoxGeometry,
    GaussianPotential,
    HardCorePotential,
    ZeroPotential,
)

BOX = BoxGeometry(1, 10.0)
ROD = HardCorePotential(0.1)


class TestResultType:
    def test_exact_requires_zero_error(self):
        with pytest.raises(ValueError):
            OracleResult(1.0, "exact-formula", 0.1)
        with pytest.raises(ValueError):
            OracleResult(1.0, "quadrature", -1.0)
        with pytest.raises(ValueError):
            OracleResult(1.0, "bisection", 0.0)


class TestSimpson:
    def test_polynomial_is_exact(self):
        val, err = simpson_with_breakpoints(lambda x: x ** 3 - x, 0.0, 2.0, (), 1e-12)
        assert val == pytest.approx(2.0, abs=1e-10)

    def test_breakpoints_handle_jumps(self):
        f = lambda x: (x > 1.0).astype(float)
        val, _ = simpson_with_breakpoints(f, 0.0, 3.0, (1.0,), 1e-12)
        assert val == pytest.approx(2.0, abs=1e-8)


class TestHardRodFormula:
    def test_small_cases(self):
        assert tonks_exact_Z(1, 10.0, 0.1).value == 10.0
        assert tonks_exact_Z(2, 10.0, 0.1).value == pytest.approx(10.0 * 9.8 / 2.0)

    def test_jammed_box_rejected(self):
        with pytest.raises(ValueError):
            tonks_exact_Z(5, 1.0, 0.25)


class TestDirectZ:
    def test_one_particle(self):
        r = brute_force_Z(1, BOX, ROD, 1.0)
        assert r.value == BOX.volume
        assert r.method == "exact-formula"

    def test_zero_potential_is_ideal(self):
        for N in (2, 3):
            r = brute_force_Z(N, BOX, ZeroPotential(), 1.0)
            assert r.value == pytest.approx(BOX.volume ** N / math.factorial(N), rel=1e-10)

    def test_two_rods_excluded_volume(self):
        # Z = L (L - 2 sigma) / 2 = 49 at L = 10, sigma = 0.1
        r = brute_force_Z(2, BOX, ROD, 1.0)
        assert r.value == pytest.approx(49.0, rel=1e-10)

    def test_matches_exact_rod_formula(self):
        for N in (2, 3, 4):
            quad = brute_force_Z(N, BOX, ROD, 1.0)
            exact = tonks_exact_Z(N, 10.0, 0.1)
            assert quad.value == pytest.approx(exact.value, rel=1e-8)
            assert abs(quad.value - exact.value) <= max(10 * quad.error_estimate, 1e-8 * exact.value)

    def test_mc_agrees_with_quadrature(self):
        mc = brute_force_Z(3, BOX, ROD, 1.0, method="mc", samples=200_000, seed=1)
        exact = tonks_exact_Z(3, 10.0, 0.1)
        assert abs(mc.value - exact.value) <= 5 * mc.error_estimate

    def test_mc_deterministic(self):
        a = brute_force_Z(2, BOX, ROD, 1.0, method="mc", samples=50_000, seed=9)
        b = brute_force_Z(2, BOX, ROD, 1.0, method="mc", samples=50_000, seed=9)
        assert a.value == b.value

    def test_size_caps(self):
        with pytest.raises(ValueError):
            brute_force_Z(6, BOX, ROD, 1.0)
        with pytest.raises(ValueError):
            brute_force_Z(5, BOX, ROD, 1.0, method="mc")


class TestGrandCanonical:
    def test_zero_potential_approaches_exponential(self):
        # Xi = exp(z |box|) for an ideal system; N_max = 5 at z|box| = 1
        z = 0.1
        out = brute_force_Xi(z, 5, BOX, ZeroPotential(), 1.0)
        partial = sum((z * BOX.volume) ** k / math.factorial(k) for k in range(6))
        assert out["result"].value == pytest.approx(partial, rel=1e-10)
        gap = abs(out["result"].value - math.exp(z * BOX.volume))
        # the crude remainder bound covers the first omitted term only
        assert gap < 2.0 * out["remainder_bound"]

    def test_hard_rod_truncated_sum(self):
        z = 0.05
        out = brute_force_Xi(z, 4, BOX, ROD, 1.0)
        direct = 1.0 + sum(
            z ** N * tonks_exact_Z(N, 10.0, 0.1).value for N in range(1, 5)
        )
        assert out["result"].value == pytest.approx(direct, rel=1e-8)
        assert out["remainder_bound"] < 1e-3

    def test_remainder_flagging(self):
        out = brute_force_Xi(0.5, 2, BOX, ROD, 1.0, flag_tol=1e-6)
        assert out["flagged"]


class TestAudit:
    def params(self, N=4, n_max=3, M=8):
        return ExpansionParams(N=N, box=BOX, beta=1.0, n_max=n_max, M=M)

    def test_hard_rod_passes_with_itemized_budget(self):
        rep = compare_expansion_vs_oracle(self.params(), ROD, budget=1e-3)
        assert rep.passed
        assert rep.discrepancy <= rep.declared_budget
        assert set(rep.budget_items) == {
            "integrator",
            "truncation",
            "orders_beyond_n_max",
            "oracle",
            "roundoff",
        }
        assert rep.budget_items["orders_beyond_n_max"] == 0.0

    def test_zero_potential_matches_to_roundoff(self):
        rep = compare_expansion_vs_oracle(self.params(), ZeroPotential())
        assert rep.passed
        assert rep.discrepancy <= 1e-11

    def test_discrepancy_shrinks_with_truncation(self):
        loose = compare_expansion_vs_oracle(self.params(N=4, n_max=1, M=2), ROD)
        tight = compare_expansion_vs_oracle(self.params(N=4, n_max=3, M=8), ROD)
        assert tight.discrepancy < loose.discrepancy
        assert loose.passed  # still consistent within its larger declared budget

    def test_records_expose_status(self):
        rep = compare_expansion_vs_oracle(self.params(), ROD, budget=1e-3)
        rec = rep.to_records()
        assert rec["status"] == "PASS"
        assert "budget_integrator" in rec
