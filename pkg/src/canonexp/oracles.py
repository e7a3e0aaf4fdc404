"""Ground-truth references for the expansion machinery.

Direct evaluation of partition functions by nested quadrature or Monte
Carlo, the exact hard-rod formulas on the circle, and audit harnesses that
compare the series output against these references with itemized error
budgets.

The integration code here is deliberately written from scratch (composite
Simpson panels with geometric breakpoints, its own sampling loops) and
shares nothing with the graph-activity integrators, so agreement between
the two is evidence rather than tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_METHODS = ("exact-formula", "quadrature", "monte-carlo")


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str
    error_estimate: float

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError("unknown oracle method %r" % (self.method,))
        if self.method == "exact-formula" and self.error_estimate != 0.0:
            raise ValueError("exact results carry zero error estimate")
        if self.error_estimate < 0:
            raise ValueError("error estimate must be nonnegative")


# ---------------------------------------------------------------------------
# composite Simpson with panel doubling (vectorised integrands)

def _simpson_pass(fvec, lows, highs, panels):
    """One composite Simpson evaluation over several intervals at once."""
    m = 2 * panels + 1
    t = np.linspace(0.0, 1.0, m)
    xs = lows[:, None] + (highs - lows)[:, None] * t[None, :]
    ys = np.asarray(fvec(xs.ravel())).reshape(xs.shape)
    w = np.full(m, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    h = (highs - lows) / (2 * panels)
    return float(np.sum(h / 3.0 * (ys * w[None, :]).sum(axis=1)))


def simpson_with_breakpoints(fvec, a, b, breakpoints, tol, max_doublings=10):
    """Composite Simpson on the smooth pieces between sorted breakpoints,
    refined jointly until the total stabilizes.

    Piece endpoints are nudged inward by a sliver so that samples never land
    exactly on a jump of the integrand.
    """
    pts = sorted({a, b} | {p for p in breakpoints if a < p < b})
    eps = 1e-12 * max(abs(a), abs(b), 1.0)
    lows, highs = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo > 2 * eps:
            lows.append(lo + eps)
            highs.append(hi - eps)
    if not lows:
        return 0.0, 0.0
    lows = np.asarray(lows)
    highs = np.asarray(highs)
    panels = 2
    prev = _simpson_pass(fvec, lows, highs, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = _simpson_pass(fvec, lows, highs, panels)
        if abs(cur - prev) <= tol:
            return cur, abs(cur - prev)
        prev = cur
    return prev, abs(cur - prev)


def _wrap(x, L):
    return x - L * np.round(x / L)


def _pair_energy_periodic(potential, beta, coords, L):
    """Boltzmann weight of a 1D periodic configuration (coords fixed floats)."""
    e = 0.0
    n = len(coords)
    for i in range(n):
        for j in range(i + 1, n):
            v = float(potential.evaluate(abs(float(_wrap(coords[i] - coords[j], L)))))
            if not math.isfinite(v):
                return 0.0
            e += v
    return math.exp(-beta * e)


def _config_breakpoints(potential, fixed, L, depth=1):
    """Candidate jump and kink locations of the partially integrated weight.

    After integrating ``depth`` further coordinates, kinks appear at sums of
    up to ``depth`` interaction radii away from each fixed coordinate.
    """
    import itertools

    radii = set(potential.discontinuity_radii)
    if math.isfinite(potential.interaction_range) and potential.interaction_range > 0:
        radii.add(potential.interaction_range)
    offsets = set()
    for m in range(1, depth + 1):
        for combo in itertools.combinations_with_replacement(sorted(radii), m):
            offsets.add(sum(combo))
    pts = set()
    for c in fixed:
        for off in offsets:
            for shift in (-L, 0.0, L):
                pts.add(c + off + shift)
                pts.add(c - off + shift)
    return pts


def brute_force_Z(N, box, potential, beta, method="quadrature", samples=400_000, batches=32, seed=0, tol=1e-10):
    """Configuration integral (1/N!) int over the box of exp(-beta H), with
    one coordinate pinned by translation invariance."""
    L = box.side
    d = box.dimension
    if N < 1:
        raise ValueError("need at least one particle")
    if N == 1:
        return OracleResult(box.volume, "exact-formula", 0.0)
    if method == "quadrature":
        if d != 1 or N > 5:
            raise ValueError("quadrature oracle limited to one dimension, N <= 5")
        coords = [0.0] * N

        def level(j):
            fixed = coords[:j]
            if j > 1 and _pair_energy_periodic(potential, beta, fixed, L) == 0.0:
                return 0.0, 0.0
            bps = _config_breakpoints(potential, fixed, L, depth=N - j)
            if j == N - 1:

                def fvec(xs):
                    w = np.ones_like(xs)
                    for c in fixed:
                        v = potential.evaluate(np.abs(_wrap(xs - c, L)))
                        w = w * np.where(np.isfinite(v), np.exp(-beta * np.where(np.isfinite(v), v, 0.0)), 0.0)
                    return w

                base = _pair_energy_periodic(potential, beta, fixed, L)
                v, e = simpson_with_breakpoints(fvec, -L / 2, L / 2, bps, tol)
                return base * v, base * e

            def fvec(xs):
                out = np.empty(len(xs))
                for idx, x in enumerate(xs):
                    coords[j] = float(x)
                    out[idx], _ = level(j + 1)
                return out

            return simpson_with_breakpoints(fvec, -L / 2, L / 2, bps, tol * L)

        val, err = level(1)
        scale = box.volume / math.factorial(N)
        return OracleResult(val * scale, "quadrature", err * scale)
    if method == "mc":
        if N > 4 or d > 3:
            raise ValueError("sampling oracle limited to N <= 4, d <= 3")
        means = []
        for b in range(batches):
            rng = np.random.default_rng([int(seed), 7919, b])
            pts = rng.uniform(-L / 2, L / 2, size=(samples // batches, N - 1, d))
            energy = np.zeros(samples // batches)
            dead = np.zeros(samples // batches, dtype=bool)
            # pairwise energies including the pinned particle at the origin
            for i in range(N):
                for j in range(i + 1, N):
                    pi = pts[:, i - 1, :] if i > 0 else 0.0
                    pj = pts[:, j - 1, :]
                    diff = _wrap(pi - pj, L)
                    r = np.sqrt(np.sum(np.atleast_2d(diff) ** 2, axis=-1))
                    v = potential.evaluate(r)
                    dead |= ~np.isfinite(v)
                    energy += np.where(np.isfinite(v), v, 0.0)
            w = np.where(dead, 0.0, np.exp(-beta * energy))
            means.append(float(np.mean(w)))
        vol = box.volume ** (N - 1)
        value = vol * float(np.mean(means)) * box.volume / math.factorial(N)
        stderr = vol * float(np.std(means, ddof=1) / math.sqrt(batches)) * box.volume / math.factorial(N)
        return OracleResult(value, "monte-carlo", stderr)
    raise ValueError("unknown oracle method %r" % (method,))


def tonks_exact_Z(N, L, sigma) -> OracleResult:
    """Hard rods of diameter sigma on the circle of circumference L.

    Z = L (L - N sigma)^(N-1) / N!.  For N = 2 the excluded displacement
    covers both arcs of the circle (the rods exclude each other going either
    way around), leaving L - 2 sigma of free displacement, hence
    Z = L (L - 2 sigma) / 2; the general formula continues this geometry.
    """
    if N < 1:
        raise ValueError("need at least one particle")
    if N * sigma >= L:
        raise ValueError("jammed: N*sigma >= L leaves no free volume")
    return OracleResult(L * (L - N * sigma) ** (N - 1) / math.factorial(N), "exact-formula", 0.0)


def brute_force_Xi(z, N_max, box, potential, beta, method="quadrature", tol=1e-10, flag_tol=None):
    """Truncated grand-canonical sum with a crude stability remainder bound."""
    if N_max > 5:
        raise ValueError("grand-canonical oracle capped at N_max = 5")
    if z < 0:
        raise ValueError("activity must be nonnegative")
    total = 1.0
    err = 0.0
    for N in range(1, N_max + 1):
        r = brute_force_Z(N, box, potential, beta, method=method, tol=tol)
        total += z ** N * r.value
        err += z ** N * r.error_estimate
    B = potential.stability_b
    k = N_max + 1
    remainder = z ** k * box.volume ** k * math.exp(beta * B * k ** 2) / math.factorial(k)
    flagged = flag_tol is not None and remainder > flag_tol
    return {
        "result": OracleResult(total, "quadrature" if method == "quadrature" else "monte-carlo", err),
        "remainder_bound": remainder,
        "flagged": flagged,
    }


# ---------------------------------------------------------------------------
# audits

@dataclass
class AuditReport:
    expansion_value: float
    oracle: OracleResult
    discrepancy: float
    budget_items: dict
    declared_budget: float
    requested_budget: float
    passed: bool

    def to_records(self):
        rec = {
            "expansion_log_z_per_volume": self.expansion_value,
            "oracle_log_z_per_volume": self.oracle.value,
            "oracle_method": self.oracle.method,
            "discrepancy": self.discrepancy,
            "declared_budget": self.declared_budget,
            "requested_budget": self.requested_budget,
            "status": "PASS" if self.passed else "FAIL",
        }
        for k, v in self.budget_items.items():
            rec["budget_" + k] = v
        return rec


def compare_expansion_vs_oracle(params, potential, budget=None, zeta_eval=None) -> AuditReport:
    """Side-by-side per-volume log Z: truncated series versus direct oracle.

    The declared budget itemizes propagated integrator error (tripled for
    safety), a truncation estimate from the outermost two multiplicity
    shells (doubled), and the certified bound on orders beyond n_max (zero
    when the density factor kills them exactly).  PASS requires the
    discrepancy to sit inside the declared budget and, when given, inside
    the requested one.
    """
    from .expansion import ZetaEvaluator, b_factor, log_Z_canonical, p_factor

    if zeta_eval is None:
        zeta_eval = ZetaEvaluator(params.box, potential, params.beta)
    report = log_Z_canonical(params, potential, zeta_eval)
    oracle = brute_force_Z(params.N, params.box, potential, params.beta)
    oracle_log = math.log(oracle.value) / params.box.volume if oracle.value > 0 else -math.inf
    oracle_log_err = (
        oracle.error_estimate / oracle.value / params.box.volume if oracle.value > 0 else math.inf
    )
    disc = abs(report.log_z_per_volume - oracle_log)

    rho = params.rho
    integ = 0.0
    trunc = 0.0
    for n in range(1, params.n_max + 1):
        P = p_factor(params.N, params.box.volume, n)
        if P == 0.0:
            continue
        _, stats, _ = b_factor(n, params.M, zeta_eval)
        scale = params.box.volume ** n / math.factorial(n)
        integ += rho * P / (n + 1) * stats["error"] * scale
        trunc += rho * P / (n + 1) * stats["top_shell_abs"] * scale
    if params.n_max >= params.N - 1:
        beyond = 0.0  # the density factor vanishes at all higher orders
    else:
        beyond = rho * report.order_tail
    items = {
        "integrator": 3.0 * integ,
        "truncation": 2.0 * trunc,
        "orders_beyond_n_max": beyond,
        "oracle": oracle_log_err,
        "roundoff": 1e4 * np.finfo(float).eps * max(1.0, abs(oracle_log)),
    }
    items = {k: float(v) for k, v in items.items()}
    declared = sum(items.values())
    passed = disc <= declared and (budget is None or disc <= budget)
    return AuditReport(
        report.log_z_per_volume, oracle, disc, items, declared, budget if budget is not None else math.nan, passed
    )
