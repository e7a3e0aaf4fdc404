"""Free-energy series for the fixed-density ensemble.

Assembles the per-order coefficients of log Z on the periodic box from graph
activities: the falling-factorial density factor, the truncated
connected-graph cluster sums, their product, and explicit geometric tail
bounds from the convergence certificate.  Also provides the companion
activity and virial series and their standard inversions.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import (
    LabeledGraph,
    SizeLimitError,
    block_decomposition,
    canonical_form,
    enumerate_graphs,
    is_connected,
    is_two_connected,
    signed_sum_adjacency,
)
from .integrals import IntegralResult, ZetaEvaluator, b_n_connected, beta_n
from .polymers import convergence_rate_factor
from .potentials import BoxGeometry, c_beta

MAX_B_ORDER = 4
MAX_B_NORM = 8


@dataclass(frozen=True)
class ExpansionParams:
    """Inputs of one series evaluation at fixed particle number and box."""

    N: int
    box: BoxGeometry
    beta: float
    n_max: int
    M: int
    a: float = 1.0
    c: float = 0.25

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("particle number must be at least 1")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.M < self.n_max + 1:
            raise ValueError("truncation M must be at least n_max + 1")
        if self.a <= 0 or self.c <= 0:
            raise ValueError("convergence parameters a, c must be positive")

    @property
    def rho(self) -> float:
        return self.N / self.box.volume

    @property
    def alpha(self) -> float:
        return self.a + self.c


@dataclass(frozen=True)
class ConvergenceCertificate:
    """Smallness condition for the coefficient series.

    ``delta_prime`` is the contraction number rho * e^(2 beta B + alpha + 1)
    * C(beta); the tail bounds are certified when it is below one.
    ``rate_L`` is -log(1 - delta') / delta', and ``tail_constant`` =
    rate_L * e^alpha multiplies the geometric decay e^(-c n).
    """

    holds: bool
    delta_prime: float
    delta: float
    rate_L: float
    a: float
    c: float
    rho: float
    c_beta_value: float

    @property
    def alpha(self) -> float:
        return self.a + self.c

    @property
    def tail_constant(self) -> float:
        return self.rate_L * math.exp(self.alpha)

    def order_tail(self, n: int) -> float:
        """Bound on the sum of all orders beyond n."""
        q = math.exp(-self.c)
        return self.tail_constant * q ** (n + 1) / (1.0 - q)

    def truncation_tail(self, n: int, M: int) -> float:
        """Bound on the multiplicity-truncation error at order n."""
        return math.exp(-self.c * (n + M) / 2.0) * self.tail_constant


def convergence_certificate(params: ExpansionParams, potential) -> ConvergenceCertificate:
    cb = c_beta(potential, params.beta, params.box.dimension)
    B = potential.stability_b
    rho = params.rho
    dp = rho * math.exp(2 * params.beta * B + params.alpha + 1.0) * cb
    delta = 0.5 * rho * cb * math.exp(2 * (2 * params.beta * B + params.a))
    holds = dp < 1.0
    if not holds:
        rate = math.inf
    elif dp == 0.0:
        rate = 1.0  # limit of -log(1 - x)/x at zero
    else:
        rate = convergence_rate_factor(dp)
    return ConvergenceCertificate(holds, dp, delta, rate, params.a, params.c, rho, cb)


def p_factor(N: int, volume: float, n: int) -> float:
    """Falling-factorial density factor (N-1)...(N-n) / volume^n.

    Vanishes for n >= N since the factor N - n appears.
    """
    if n < 1:
        raise ValueError("order must be at least 1")
    if n >= N:
        return 0.0
    value = 1.0
    for j in range(1, n + 1):
        value *= (N - j) / volume
    return value


# ---------------------------------------------------------------------------
# covering cluster sums over connected graphs on n + 1 labels

def connected_graph_polymers(k: int):
    """Connected labeled graphs with at least one edge on subsets of {1..k},
    sorted by (vertex count, serialized form) for deterministic traversal."""
    out = []
    labels = list(range(1, k + 1))
    for size in range(2, k + 1):
        for subset in itertools.combinations(labels, size):
            mapping = dict(zip(range(1, size + 1), subset))
            for g in enumerate_graphs(size):
                if g.n_edges == 0 or not is_connected(g):
                    continue
                out.append(
                    LabeledGraph.of(
                        [mapping[v] for v in g.vertices],
                        [(mapping[a], mapping[b]) for (a, b) in g.edges],
                    )
                )
    out.sort(key=lambda g: (g.n_vertices, g.sorted_vertices(), g.sorted_edges()))
    return out


def _support_mask(g: LabeledGraph) -> int:
    m = 0
    for v in g.vertices:
        m |= 1 << (v - 1)
    return m


def _overlap_connected(expanded_masks) -> bool:
    n = len(expanded_masks)
    if n <= 1:
        return True
    seen = 1
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in range(n):
            if not (seen >> j) & 1 and (expanded_masks[i] & expanded_masks[j]):
                seen |= 1 << j
                frontier.append(j)
    return seen == (1 << n) - 1


class _UrsellCache:
    """Cluster coefficients keyed by the copy-overlap adjacency pattern."""

    def __init__(self):
        self._cache = {}

    def coefficient(self, masks, mults) -> Fraction:
        expanded = []
        for m, r in zip(masks, mults):
            expanded.extend([m] * r)
        k = len(expanded)
        adj = []
        for i in range(k):
            row = 0
            for j in range(k):
                if i != j and (expanded[i] & expanded[j]):
                    row |= 1 << j
            adj.append(row)
        key = tuple(adj)
        if key not in self._cache:
            self._cache[key] = signed_sum_adjacency(adj)
        denom = 1
        for r in mults:
            denom *= math.factorial(r)
        return Fraction(self._cache[key], denom)


@dataclass
class ClusterTerm:
    """One multi-index contribution, with its volume-power diagnostic."""

    graphs: tuple
    multiplicities: tuple
    coefficient: Fraction
    weight: object
    norm: int
    volume_power: int


def covering_cluster_sum(
    k: int,
    M: int,
    weight_fn,
    err_fn=None,
    collect_terms: bool = False,
):
    """Sum of c_I * zeta^I over multi-indices I of connected graphs on subsets
    of {1..k} whose supports jointly cover {1..k} and overlap connectedly,
    restricted to size norm(I) = sum of |g| * I(g) at most M.

    ``weight_fn(graph)`` supplies the per-graph activity (float or Fraction);
    ``err_fn(graph)`` its absolute error, propagated linearly.  Returns
    (total, stats, terms) where stats carries the propagated error, the
    absolute mass of the outermost norm shell, and the term count.
    """
    polymers = connected_graph_polymers(k)
    masks = [_support_mask(g) for g in polymers]
    weights = [weight_fn(g) for g in polymers]
    errs = [err_fn(g) for g in polymers] if err_fn else None
    sizes = [g.n_vertices for g in polymers]
    full = (1 << k) - 1
    ucache = _UrsellCache()
    exact = all(isinstance(w, (Fraction, int)) for w in weights)
    total = Fraction(0) if exact else 0.0
    stats = {"error": 0.0, "top_shell_abs": 0.0, "terms": 0}
    terms = []
    chosen = []

    def emit(norm):
        nonlocal total
        expanded = []
        for (i, r) in chosen:
            expanded.extend([masks[i]] * r)
        if not _overlap_connected(expanded):
            return
        coeff = ucache.coefficient([masks[i] for (i, _) in chosen], [r for (_, r) in chosen])
        w = Fraction(1) if exact else 1.0
        vpow = k - 1
        rel_err = 0.0
        for (i, r) in chosen:
            w = w * weights[i] ** r
            vpow -= (sizes[i] - 1) * r
            if errs is not None and weights[i] != 0:
                rel_err += r * errs[i] / abs(weights[i])
        contrib = coeff * w if exact else float(coeff) * w
        total = total + contrib
        stats["terms"] += 1
        if not exact:
            stats["error"] += abs(contrib) * rel_err
            if norm >= M - 1:
                stats["top_shell_abs"] += abs(contrib)
        if collect_terms:
            terms.append(
                ClusterTerm(
                    tuple(polymers[i] for (i, _) in chosen),
                    tuple(r for (_, r) in chosen),
                    coeff,
                    w,
                    norm,
                    vpow,
                )
            )

    def rec(start, covered, budget):
        if covered == full and chosen:
            emit(M - budget)
        if covered != full:
            missing = k - bin(covered).count("1")
            need = missing + (1 if covered else 0)
            if budget < need:
                return
        for i in range(start, len(polymers)):
            size = sizes[i]
            if size > budget:
                break  # sorted by size
            for r in range(1, budget // size + 1):
                chosen.append((i, r))
                rec(i + 1, covered | masks[i], budget - size * r)
                chosen.pop()

    rec(0, 0, M)
    return total, stats, terms


def b_factor(
    n: int,
    M: int,
    zeta_eval: ZetaEvaluator = None,
    weight_fn=None,
    volume=None,
    collect_terms: bool = False,
):
    """Truncated cluster coefficient (volume^n / n!) * covering cluster sum
    on {1..n+1}.  Returns (IntegralResult or Fraction, stats, terms)."""
    if not 1 <= n <= MAX_B_ORDER:
        raise SizeLimitError("cluster coefficient capped at order %d" % MAX_B_ORDER)
    if M > MAX_B_NORM:
        raise SizeLimitError("size norm capped at %d" % MAX_B_NORM)
    err_fn = None
    if weight_fn is None:
        if zeta_eval is None:
            raise ValueError("either an evaluator or an explicit weight function is required")
        volume = zeta_eval.box.volume

        def weight_fn(g):
            return zeta_eval.zeta_tilde(g).value

        def err_fn(g):
            return zeta_eval.zeta_tilde(g).statistical_error

    if volume is None:
        raise ValueError("volume is required with an explicit weight function")
    total, stats, terms = covering_cluster_sum(n + 1, M, weight_fn, err_fn, collect_terms)
    fact = math.factorial(n)
    if isinstance(total, Fraction):
        return total * Fraction(volume) ** n / fact, stats, terms
    scale = volume ** n / fact
    result = IntegralResult(total * scale, stats["error"] * scale, "cluster-sum", stats["terms"])
    return result, stats, terms


@dataclass(frozen=True)
class FCoefficient:
    n: int
    p_value: float
    b_value: float
    b_error: float
    value: float
    truncation_tail: float
    vanished: bool = False


def f_coefficient(
    params: ExpansionParams, n: int, zeta_eval: ZetaEvaluator, cert: ConvergenceCertificate = None
) -> FCoefficient:
    """Per-order series coefficient (1/(n+1)) * P * B with its truncation tail."""
    if n > params.n_max:
        raise ValueError("order beyond n_max")
    P = p_factor(params.N, params.box.volume, n)
    if P == 0.0:
        return FCoefficient(n, 0.0, 0.0, 0.0, 0.0, 0.0, vanished=True)
    B, _, _ = b_factor(n, params.M, zeta_eval)
    tail = cert.truncation_tail(n, params.M) if (cert is not None and cert.holds) else math.inf
    return FCoefficient(n, P, B.value, B.statistical_error, P * B.value / (n + 1), tail)


@dataclass
class SeriesReport:
    """Per-order table for one evaluation of the free-energy series."""

    params: ExpansionParams
    certificate: ConvergenceCertificate
    rows: list
    ideal_term: float
    order_tail: float
    provenance: dict = field(default_factory=dict)

    @property
    def series_sum(self) -> float:
        return sum(r.value for r in self.rows)

    @property
    def log_z_per_volume(self) -> float:
        return self.ideal_term + self.params.rho * self.series_sum

    def to_records(self):
        head = {
            "N": self.params.N,
            "dimension": self.params.box.dimension,
            "side": self.params.box.side,
            "beta": self.params.beta,
            "n_max": self.params.n_max,
            "M": self.params.M,
            "a": self.params.a,
            "c": self.params.c,
            "certificate_holds": self.certificate.holds,
            "delta_prime": self.certificate.delta_prime,
            "ideal_term": self.ideal_term,
            "order_tail": self.order_tail,
            "log_z_per_volume": self.log_z_per_volume,
        }
        head.update(self.provenance)
        rows = [
            {
                "n": r.n,
                "P_factor": r.p_value,
                "B_factor": r.b_value,
                "B_error": r.b_error,
                "F_value": r.value,
                "tail_bound": r.truncation_tail,
                "vanished": r.vanished,
            }
            for r in self.rows
        ]
        return head, rows

    def to_csv(self) -> str:
        head, rows = self.to_records()
        buf = io.StringIO()
        for key, v in head.items():
            buf.write("# %s = %s\n" % (key, v))
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return buf.getvalue()


def log_Z_canonical(
    params: ExpansionParams, potential, zeta_eval: ZetaEvaluator = None
) -> SeriesReport:
    """Per-volume log of the partition function on the periodic box, as the
    ideal term plus rho times the truncated coefficient series."""
    if zeta_eval is None:
        zeta_eval = ZetaEvaluator(params.box, potential, params.beta)
    cert = convergence_certificate(params, potential)
    rows = [f_coefficient(params, n, zeta_eval, cert) for n in range(1, params.n_max + 1)]
    V = params.box.volume
    ideal = (params.N * math.log(V) - math.lgamma(params.N + 1)) / V
    tail = cert.order_tail(params.n_max) if cert.holds else math.inf
    prov = {"seed": zeta_eval.seed, "integration_method": zeta_eval.method}
    return SeriesReport(params, cert, rows, ideal, tail, prov)


# ---------------------------------------------------------------------------
# vertex-polymer cross-check route

def _exact_p_factor(N, volume, n):
    if n >= N:
        return Fraction(0)
    P = Fraction(1)
    for j in range(1, n + 1):
        P *= Fraction(N - j) / Fraction(volume)
    return P


def f_via_graph_route_exact(n: int, N: int, volume, M: int, graph_weight_fn) -> Fraction:
    """Graph-polymer route with exact rational weights, for route comparison."""
    total, _, _ = covering_cluster_sum(n + 1, M, graph_weight_fn)
    B = total * Fraction(volume) ** n / math.factorial(n)
    return _exact_p_factor(N, volume, n) * B / (n + 1)


def f_via_vertex_route(n: int, N: int, volume, M: int, graph_weight_fn) -> Fraction:
    """Order-n coefficient computed on vertex-subset polymers instead of graphs.

    A subset polymer carries the summed weight of all connected graphs
    spanning it; cluster coefficients are taken on the subset-overlap
    relation.  With exact rational weights this reproduces the graph route
    exactly at equal truncation, since replacing each subset by its graphs
    preserves the size norm.
    """
    k = n + 1
    labels = list(range(1, k + 1))
    supports = []
    for size in range(2, k + 1):
        supports.extend(frozenset(s) for s in itertools.combinations(labels, size))

    weight_of = {}
    for sub in supports:
        acc = Fraction(0)
        size = len(sub)
        mapping = dict(zip(range(1, size + 1), sorted(sub)))
        for g in enumerate_graphs(size):
            if g.n_edges == 0 or not is_connected(g):
                continue
            gg = LabeledGraph.of(
                [mapping[v] for v in g.vertices],
                [(mapping[a], mapping[b]) for (a, b) in g.edges],
            )
            acc += graph_weight_fn(gg)
        weight_of[sub] = acc

    masks = [sum(1 << (v - 1) for v in s) for s in supports]
    sizes = [len(s) for s in supports]
    full = (1 << k) - 1
    ucache = _UrsellCache()
    total = Fraction(0)
    chosen = []

    def rec(start, covered, budget):
        nonlocal total
        if covered == full and chosen:
            expanded = []
            for (i, r) in chosen:
                expanded.extend([masks[i]] * r)
            if _overlap_connected(expanded):
                coeff = ucache.coefficient(
                    [masks[i] for (i, _) in chosen], [r for (_, r) in chosen]
                )
                w = Fraction(1)
                for (i, r) in chosen:
                    w *= weight_of[supports[i]] ** r
                total += coeff * w
        for i in range(start, len(supports)):
            if sizes[i] > budget:
                continue
            for r in range(1, budget // sizes[i] + 1):
                chosen.append((i, r))
                rec(i + 1, covered | masks[i], budget - sizes[i] * r)
                chosen.pop()

    rec(0, 0, M)
    B = total * Fraction(volume) ** n / math.factorial(n)
    return _exact_p_factor(N, volume, n) * B / (n + 1)


# ---------------------------------------------------------------------------
# cancellation of non-2-connected graphs under block-factorized weights

def connected_subgraphs(g: LabeledGraph):
    """Connected subgraphs of g with at least one edge, spanning their support."""
    edges = sorted(g.edges)
    out = []
    for r in range(1, len(edges) + 1):
        for combo in itertools.combinations(edges, r):
            verts = set()
            for (a, b) in combo:
                verts.add(a)
                verts.add(b)
            sub = LabeledGraph.of(sorted(verts), combo)
            if is_connected(sub):
                out.append(sub)
    out.sort(key=lambda s: (s.n_vertices, s.sorted_vertices(), s.sorted_edges()))
    return out


def _blocks_of(sub: LabeledGraph):
    if is_two_connected(sub):
        return (frozenset(sub.edges),)
    return tuple(frozenset(b.edges) for b in block_decomposition(sub).blocks)


def block_cancellation_residuals(g: LabeledGraph, M: int = 6):
    """Coefficients of the complete block monomials in the cluster sum
    restricted to connected subgraphs of g, with weights factorized over
    2-connected blocks.

    Each block is a formal variable; a multi-index contributes its cluster
    coefficient to the monomial collecting all blocks of all its subgraph
    copies.  Monomials containing every block of g cancel exactly when g has
    two or more blocks, and the single-copy monomial equals 1 when g is
    2-connected.  Returns dict monomial -> rational coefficient; a monomial
    is a sorted tuple of (block edge frozenset, power) covering all of g.
    """
    if not is_connected(g) or g.n_edges == 0:
        raise ValueError("a connected graph with edges is required")
    subs = connected_subgraphs(g)
    masks = [_support_mask(s) for s in subs]
    sizes = [s.n_vertices for s in subs]
    sub_blocks = [_blocks_of(s) for s in subs]
    g_edges = frozenset(g.edges)
    ucache = _UrsellCache()
    residuals = {}
    chosen = []

    def block_size(bl):
        verts = set()
        for (a, b) in bl:
            verts.add(a)
            verts.add(b)
        return len(verts)

    def rec(start, budget):
        if chosen:
            union_edges = set()
            for (i, _) in chosen:
                union_edges |= set(subs[i].edges)
            if union_edges == set(g_edges):
                expanded = []
                for (i, r) in chosen:
                    expanded.extend([masks[i]] * r)
                if _overlap_connected(expanded):
                    mono = {}
                    deg = 0
                    for (i, r) in chosen:
                        for bl in sub_blocks[i]:
                            mono[bl] = mono.get(bl, 0) + r
                            deg += block_size(bl) * r
                    if deg <= M:
                        key = tuple(
                            sorted(mono.items(), key=lambda kv: sorted(map(sorted, kv[0])))
                        )
                        coeff = ucache.coefficient(
                            [masks[i] for (i, _) in chosen], [r for (_, r) in chosen]
                        )
                        residuals[key] = residuals.get(key, Fraction(0)) + coeff
        for i in range(start, len(subs)):
            if sizes[i] > budget:
                continue
            for r in range(1, budget // sizes[i] + 1):
                chosen.append((i, r))
                rec(i + 1, budget - sizes[i] * r)
                chosen.pop()

    rec(0, M)
    return residuals


# ---------------------------------------------------------------------------
# activity and virial series

def pressure_activity_series(z: float, orders: int, zeta_eval: ZetaEvaluator) -> float:
    """Truncated pressure series beta*p = sum over n of b_n z^n."""
    if orders > 5:
        raise SizeLimitError("activity series capped at order 5")
    return sum(b_n_connected(n, zeta_eval).value * z ** n for n in range(1, orders + 1))


def activity_inversion(rho: float, beta_coeffs, orders: int) -> float:
    """Closed-form activity z(rho) = rho * exp(-sum beta_(m-1) rho^(m-1))."""
    expo = sum(beta_coeffs[m - 1] * rho ** (m - 1) for m in range(2, orders + 1))
    return rho * math.exp(-expo)


def virial_pressure(rho: float, beta_coeffs, m_max: int) -> float:
    """Density series beta*p = rho - sum (m/(m+1)) beta_m rho^(m+1)."""
    total = rho
    for m in range(1, m_max + 1):
        total -= (m / (m + 1)) * beta_coeffs[m] * rho ** (m + 1)
    return total


def free_energy_density(rho: float, beta_coeffs, m_max: int) -> float:
    """Helmholtz density beta*f = rho(log rho - 1) - sum beta_m rho^(m+1)/(m+1)."""
    total = rho * (math.log(rho) - 1.0)
    for m in range(1, m_max + 1):
        total -= beta_coeffs[m] * rho ** (m + 1) / (m + 1)
    return total


def thermo_limit_sweep(n: int, L_list, potential, beta: float, M: int, dimension: int = 1):
    """Finite-volume cluster coefficient against its infinite-volume limit.

    Rows report (L, B value, absolute error, ratio of consecutive errors).
    """
    if n > 2:
        raise SizeLimitError("quantitative sweeps capped at order 2")
    limit = beta_n(n, potential, beta, dimension).value
    rows = []
    prev_err = None
    for L in L_list:
        box = BoxGeometry(dimension=dimension, side=float(L))
        ze = ZetaEvaluator(box, potential, beta)
        B, _, _ = b_factor(n, M, ze)
        err = abs(B.value - limit)
        ratio = (prev_err / err) if (prev_err is not None and err > 0) else float("nan")
        rows.append({"L": float(L), "B": B.value, "abs_error": err, "error_ratio": ratio})
        prev_err = err
    return {"n": n, "limit": limit, "rows": rows}
