"""Abstract polymer model: partition functions, cluster coefficients, and
the convergence certificate.

A polymer system is a finite set of opaque polymers with a symmetric
incompatibility relation (every polymer incompatible with itself) and a
weight per polymer.  Weights may be floats or exact ``Fraction`` values;
the cluster machinery is agnostic and simply propagates whichever type
the system carries.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import LabeledGraph, SizeLimitError, signed_sum_adjacency

MAX_CLUSTER_SIZE = 8
MAX_DIRECT_POLYMERS = 20


class FactorizationError(ValueError):
    """Product-structure factorization invariant violated."""

    def __init__(self, subset, message):
        super().__init__(message)
        self.subset = subset


class PolymerSystem:
    """Finite polymer set with incompatibility relation and weights.

    ``polymers`` fixes the enumeration order.  ``incompatible_pairs`` lists
    unordered pairs of distinct polymers; self-incompatibility is implicit.
    ``sizes`` optionally assigns each polymer a positive integer size used
    by the norm ||I|| = sum I(gamma) * size(gamma).
    """

    def __init__(self, polymers, incompatible_pairs=(), weights=None, sizes=None):
        self.polymers = tuple(polymers)
        if len(set(self.polymers)) != len(self.polymers):
            raise ValueError("duplicate polymers")
        self._index = {p: i for i, p in enumerate(self.polymers)}
        self._incomp = set()
        for (a, b) in incompatible_pairs:
            ia, ib = self._index[a], self._index[b]
            if ia != ib:
                self._incomp.add((min(ia, ib), max(ia, ib)))
        self.weights = dict(weights or {})
        for p in self.polymers:
            if p not in self.weights:
                raise ValueError("missing weight for polymer %r" % (p,))
            w = self.weights[p]
            if isinstance(w, float) and not math.isfinite(w):
                raise ValueError("non-finite weight for polymer %r" % (p,))
        self.sizes = dict(sizes) if sizes is not None else None

    @classmethod
    def from_supports(cls, polymers, supports, weights):
        """Incompatibility from intersecting supports (sets of labels)."""
        supports = {p: frozenset(supports[p]) for p in polymers}
        pairs = [
            (a, b)
            for a, b in itertools.combinations(polymers, 2)
            if supports[a] & supports[b]
        ]
        sizes = {p: len(supports[p]) for p in polymers}
        sys_ = cls(polymers, pairs, weights, sizes=sizes)
        sys_.supports = supports
        return sys_

    def index(self, p):
        return self._index[p]

    def incompatible(self, a, b) -> bool:
        ia, ib = self._index[a], self._index[b]
        if ia == ib:
            return True
        return (min(ia, ib), max(ia, ib)) in self._incomp

    def weight(self, p):
        return self.weights[p]

    def size(self, p) -> int:
        if self.sizes is None:
            raise ValueError("system carries no polymer sizes")
        return self.sizes[p]

    def incompatible_with(self, p):
        """All polymers incompatible with p, including p itself."""
        return [q for q in self.polymers if self.incompatible(p, q)]


@dataclass(frozen=True)
class MultiIndex:
    """Multiset of polymers: ordered (polymer, multiplicity) pairs, mult >= 1."""

    entries: tuple

    def __post_init__(self):
        for (_, m) in self.entries:
            if m < 1:
                raise ValueError("multiplicities must be >= 1")

    @classmethod
    def of(cls, mapping, system=None):
        items = list(mapping.items())
        if system is not None:
            items.sort(key=lambda kv: system.index(kv[0]))
        else:
            items.sort(key=lambda kv: repr(kv[0]))
        return cls(tuple((p, int(m)) for p, m in items))

    @property
    def support(self):
        return tuple(p for p, _ in self.entries)

    @property
    def total(self) -> int:
        return sum(m for _, m in self.entries)

    def factorial(self) -> int:
        out = 1
        for _, m in self.entries:
            out *= math.factorial(m)
        return out

    def norm(self, system) -> int:
        """||I|| = sum of multiplicity * polymer size."""
        return sum(m * system.size(p) for p, m in self.entries)

    def union_support_size(self, system) -> int:
        """|I| = size of the union of supports (needs support-carrying polymers)."""
        u = frozenset()
        for p, _ in self.entries:
            u |= system.supports[p]
        return len(u)

    def weight_power(self, system):
        out = 1
        for p, m in self.entries:
            out = out * system.weight(p) ** m
        return out


def expanded_incompatibility_graph(I: MultiIndex, system: PolymerSystem) -> LabeledGraph:
    """Graph G_I: each polymer blown up to a complete graph on its copies,
    all copies of incompatible polymers fully joined."""
    for p, _ in I.entries:
        if p not in system._index:
            raise ValueError("unknown polymer %r" % (p,))
    ranges = []
    start = 1
    for p, m in I.entries:
        ranges.append((p, list(range(start, start + m))))
        start += m
    verts = range(1, start)
    edges = []
    for (p, vs) in ranges:
        edges.extend(itertools.combinations(vs, 2))
    for (p, vs), (q, ws) in itertools.combinations(ranges, 2):
        if system.incompatible(p, q):
            edges.extend((a, b) for a in vs for b in ws)
    return LabeledGraph.of(verts, edges)


def _expanded_adjacency(I: MultiIndex, system: PolymerSystem):
    """Bitmask adjacency of G_I without building a LabeledGraph."""
    counts = [m for _, m in I.entries]
    offsets = [0]
    for m in counts:
        offsets.append(offsets[-1] + m)
    n = offsets[-1]
    adj = [0] * n
    supp = I.support
    k = len(supp)
    for a in range(k):
        for b in range(a, k):
            if a == b or system.incompatible(supp[a], supp[b]):
                for u in range(offsets[a], offsets[a + 1]):
                    for v in range(offsets[b], offsets[b + 1]):
                        if u != v:
                            adj[u] |= 1 << v
                            adj[v] |= 1 << u
    return adj


def ursell_coefficient(I: MultiIndex, system: PolymerSystem) -> Fraction:
    """c_I: signed connected-spanning-subgraph sum of G_I divided by I!."""
    if I.total > MAX_CLUSTER_SIZE:
        raise SizeLimitError("total multiplicity %d exceeds cap %d" % (I.total, MAX_CLUSTER_SIZE))
    s = signed_sum_adjacency(_expanded_adjacency(I, system))
    return Fraction(s, I.factorial())


def _poly_mul(p, q, max_deg):
    """Multiply sparse multivariate polynomials {exponent tuple: coeff},
    dropping terms of total degree beyond max_deg."""
    out = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if sum(e) > max_deg:
                continue
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def ursell_via_log_derivative(I: MultiIndex, system: PolymerSystem) -> Fraction:
    """c_I from the Taylor coefficient of log Z in the polymer weights.

    Builds Z symbolically as a multilinear polynomial over the weight
    variables, expands log Z = sum (-1)^{k-1} (Z-1)^k / k up to the needed
    total degree, and reads off the coefficient of w^I.  Exact rationals.
    """
    n = len(system.polymers)
    deg = I.total
    zero = tuple(0 for _ in range(n))
    # Z as polynomial: sum over compatible subsets, each variable to power 1
    Z = {zero: Fraction(1)}
    for r in range(1, n + 1):
        for combo in itertools.combinations(range(n), r):
            ok = all(
                not system.incompatible(system.polymers[i], system.polymers[j])
                for i, j in itertools.combinations(combo, 2)
            )
            if not ok:
                continue
            e = tuple(1 if i in combo else 0 for i in range(n))
            if sum(e) <= deg:
                Z[e] = Z.get(e, Fraction(0)) + 1
    U = dict(Z)
    U[zero] = U.get(zero, Fraction(0)) - 1  # U = Z - 1
    logZ = {}
    power = {zero: Fraction(1)}
    for k in range(1, deg + 1):
        power = _poly_mul(power, U, deg)
        coef = Fraction((-1) ** (k - 1), k)
        for e, c in power.items():
            logZ[e] = logZ.get(e, Fraction(0)) + coef * c
    target = [0] * n
    for p, m in I.entries:
        target[system.index(p)] = m
    return logZ.get(tuple(target), Fraction(0))


def _support_connected(I_support, system) -> bool:
    k = len(I_support)
    if k <= 1:
        return True
    seen = {0}
    stack = [0]
    while stack:
        a = stack.pop()
        for b in range(k):
            if b not in seen and system.incompatible(I_support[a], I_support[b]):
                seen.add(b)
                stack.append(b)
    return len(seen) == k


def partition_function_direct(system: PolymerSystem):
    """Sum over pairwise-compatible polymer collections of the weight product."""
    polys = system.polymers
    if len(polys) > MAX_DIRECT_POLYMERS:
        raise SizeLimitError("direct partition function capped at %d polymers" % MAX_DIRECT_POLYMERS)

    def rec(i, chosen):
        if i == len(polys):
            return 1
        total = rec(i + 1, chosen)
        p = polys[i]
        if all(not system.incompatible(p, polys[j]) for j in chosen):
            total = total + system.weight(p) * rec(i + 1, chosen + (i,))
        return total

    return rec(0, ())


def enumerate_multi_indices(
    system,
    max_total=None,
    max_norm=None,
    require_connected_support=True,
    pinned=None,
):
    """Yield MultiIndex values in deterministic order.

    ``max_total`` bounds sum of multiplicities, ``max_norm`` bounds ||I||
    (needs sizes).  With ``require_connected_support`` only supports that are
    connected in the incompatibility graph are yielded (the rest have c_I = 0).
    ``pinned`` restricts to indices with I(pinned) >= 1.
    """
    if max_total is None and max_norm is None:
        raise ValueError("need max_total or max_norm")
    polys = system.polymers
    n = len(polys)

    def fits(total, norm, p, m):
        if max_total is not None and total + m > max_total:
            return False
        if max_norm is not None and norm + m * system.size(p) > max_norm:
            return False
        return True

    def rec(start, entries, total, norm):
        for i in range(start, n):
            p = polys[i]
            m = 1
            while fits(total, norm, p, m):
                new_entries = entries + ((p, m),)
                I = MultiIndex(new_entries)
                ok = pinned is None or any(q == pinned for q, _ in new_entries)
                if ok and (not require_connected_support or _support_connected(I.support, system)):
                    yield I
                extra = m * (system.size(p) if max_norm is not None else 0)
                yield from rec(i + 1, new_entries, total + m, norm + extra)
                m += 1

    yield from rec(0, (), 0, 0)


@dataclass
class ClusterSum:
    total: object
    by_order: dict  # total multiplicity -> partial sum


def cluster_log_sum(system: PolymerSystem, max_total_multiplicity: int) -> ClusterSum:
    """Truncated cluster series sum_I c_I w^I over sum I(gamma) <= M."""
    M = int(max_total_multiplicity)
    if M > MAX_CLUSTER_SIZE:
        raise SizeLimitError("M=%d exceeds cap %d" % (M, MAX_CLUSTER_SIZE))
    by_order = {}
    total = 0
    for I in enumerate_multi_indices(system, max_total=M):
        c = ursell_coefficient(I, system)
        if c == 0:
            continue
        term = c * I.weight_power(system)
        order = I.total
        by_order[order] = by_order.get(order, 0) + term
        total = total + term
    return ClusterSum(total, dict(sorted(by_order.items())))


def convergence_rate_factor(delta: float) -> float:
    """L(delta) = -log(1 - delta)/delta, the rate constant of the cluster theorem."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1), got %r" % (delta,))
    return -math.log1p(-delta) / delta


def _as_fn(x, system):
    if callable(x):
        return {p: float(x(p)) for p in system.polymers}
    if isinstance(x, dict):
        return {p: float(x[p]) for p in system.polymers}
    return {p: float(x) for p in system.polymers}


@dataclass
class KPCertificate:
    """Outcome of checking the two hypotheses of the convergence theorem."""

    holds: bool
    delta: float
    rate_L: float
    a: dict
    c: dict
    weight_margins: dict  # gamma -> delta - |w| e^a  (hypothesis 1 slack)
    sum_margins: dict  # gamma' -> a/L - incompatible-neighbour sum (hypothesis 2 slack)
    worst_polymer: object
    failures: tuple  # ("weight"|"sum", polymer) pairs

    def margin(self):
        return min(min(self.weight_margins.values()), min(self.sum_margins.values()))


def kp_condition_check(system: PolymerSystem, a, c, delta: float) -> KPCertificate:
    """Check |w|e^a <= delta and the neighbour-sum condition for every polymer."""
    L = convergence_rate_factor(delta)
    a = _as_fn(a, system)
    c = _as_fn(c, system)
    wm, sm, failures = {}, {}, []
    for p in system.polymers:
        wm[p] = delta - abs(system.weight(p)) * math.exp(a[p])
        if wm[p] < 0:
            failures.append(("weight", p))
    for p in system.polymers:
        s = sum(
            abs(system.weight(q)) * math.exp(a[q] + c[q])
            for q in system.incompatible_with(p)
        )
        sm[p] = a[p] / L - s
        if sm[p] < 0:
            failures.append(("sum", p))
    margins = {p: min(wm[p], sm[p]) for p in system.polymers}
    worst = min(system.polymers, key=lambda p: margins[p])
    return KPCertificate(
        holds=not failures,
        delta=delta,
        rate_L=L,
        a=a,
        c=c,
        weight_margins=wm,
        sum_margins=sm,
        worst_polymer=worst,
        failures=tuple(failures),
    )


@dataclass
class PinnedBound:
    polymer: object
    truncated_sum: float
    bound: float
    within_bound: bool


def pinned_cluster_bound(
    system: PolymerSystem, gamma_prime, a, c, delta: float, max_total_multiplicity: int = 6
) -> PinnedBound:
    """Right-hand bound L|w|e^{a+c} for the pinned cluster sum, plus the
    truncated left-hand sum as a diagnostic."""
    cert = kp_condition_check(system, a, c, delta)
    if not cert.holds:
        raise ValueError("convergence condition does not hold: %r" % (cert.failures,))
    L = cert.rate_L
    aP = cert.a[gamma_prime]
    cP = cert.c[gamma_prime]
    bound = L * abs(system.weight(gamma_prime)) * math.exp(aP + cP)
    lhs = 0.0
    for I in enumerate_multi_indices(
        system, max_total=max_total_multiplicity, pinned=gamma_prime
    ):
        coef = ursell_coefficient(I, system)
        if coef == 0:
            continue
        boost = math.exp(sum(m * cert.c[p] for p, m in I.entries))
        lhs += abs(float(coef * I.weight_power(system))) * boost
    return PinnedBound(gamma_prime, lhs, bound, lhs <= bound + 1e-12)


def incompatible_connected_subsets(system: PolymerSystem, base):
    """All subsets of ``base`` that are connected in the incompatibility graph
    (singletons included), in deterministic order."""
    base = tuple(base)
    out = []
    for r in range(1, len(base) + 1):
        for combo in itertools.combinations(base, r):
            if _support_connected(combo, system):
                out.append(frozenset(combo))
    return out


@dataclass
class ProductStructure:
    """A base polymer set and the injective map phi from its incompatible
    (connected) subsets into the polymer space, identity on singletons."""

    base: tuple
    phi: dict  # frozenset of base polymers -> polymer

    def range_polymers(self):
        return sorted(set(self.phi.values()), key=repr)

    def validate(self, system: PolymerSystem, rel_tol: float = 1e-9):
        subsets = incompatible_connected_subsets(system, self.base)
        for A in subsets:
            if A not in self.phi:
                raise FactorizationError(A, "phi undefined on incompatible subset %r" % (set(A),))
        if len(set(self.phi.values())) != len(self.phi):
            raise FactorizationError(None, "phi is not one-to-one")
        for p in self.base:
            if self.phi[frozenset({p})] != p:
                raise FactorizationError(
                    frozenset({p}), "phi must be the identity on singletons"
                )
        for A, image in self.phi.items():
            prod = 1
            for p in A:
                prod = prod * system.weight(p)
            w = system.weight(image)
            if isinstance(w, Fraction) and isinstance(prod, Fraction):
                ok = w == prod
            else:
                ok = math.isclose(float(w), float(prod), rel_tol=rel_tol, abs_tol=1e-300)
            if not ok:
                raise FactorizationError(
                    A, "weight of phi(%r) does not factorize: %r vs %r" % (set(A), w, prod)
                )


def product_structure_cancellation(
    system: PolymerSystem, ps: ProductStructure, max_base_count: int = 6
) -> dict:
    """Residuals, per order in total base-polymer count, between the cluster
    sum restricted to the range of phi and the base-singleton sum.

    With exact rational weights every complete order must come out exactly 0.
    """
    ps.validate(system)
    range_polys = ps.range_polymers()
    base_count = {p: None for p in range_polys}
    for A, image in ps.phi.items():
        base_count[image] = len(A)
    sub = PolymerSystem(
        range_polys,
        [
            (p, q)
            for p, q in itertools.combinations(range_polys, 2)
            if system.incompatible(p, q)
        ],
        {p: system.weight(p) for p in range_polys},
        sizes={p: base_count[p] for p in range_polys},
    )
    M = int(max_base_count)
    lhs = {}
    for I in enumerate_multi_indices(sub, max_norm=M):
        coef = ursell_coefficient(I, sub)
        if coef == 0:
            continue
        order = I.norm(sub)
        lhs[order] = lhs.get(order, 0) + coef * I.weight_power(sub)
    residual = {}
    for order in range(1, M + 1):
        rhs = 0
        for p in ps.base:
            rhs = rhs + Fraction((-1) ** (order - 1), order) * system.weight(p) ** order
        residual[order] = lhs.get(order, 0) - rhs
    return residual
