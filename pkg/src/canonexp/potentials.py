"""Pair potentials, periodic boxes, Mayer bonds, and the integrals C(beta).

All built-in potentials are radial.  Hard cores are represented by an
infinite energy value; the Mayer bond maps that to exactly -1.  Each
potential declares its stability constant (it is never computed), a decay
envelope psi for temperedness, and the radii where its value jumps (used
as quadrature breakpoints downstream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class StabilityCounterexample(AssertionError):
    """A sampled configuration with energy below -B*N."""

    def __init__(self, configuration, energy, bound):
        super().__init__(
            "energy %.6g below stability bound %.6g for configuration %r"
            % (energy, bound, configuration.tolist())
        )
        self.configuration = configuration
        self.energy = energy
        self.bound = bound


class PairPotential:
    """Base radial pair potential.

    Subclasses set ``stability_b``, ``hard_core_radius``,
    ``interaction_range`` (math.inf if the tail never vanishes exactly),
    ``discontinuity_radii`` and implement ``evaluate`` (vectorised over
    distance arrays, returning np.inf inside a hard core) and ``envelope``.
    """

    name = "pair"
    stability_b = 0.0
    hard_core_radius = 0.0
    interaction_range = math.inf
    envelope_radius = 0.0
    discontinuity_radii = ()

    def evaluate(self, r):
        raise NotImplementedError

    def envelope(self, s):
        """Decreasing psi with |V(x)| <= psi(|x|) beyond envelope_radius."""
        raise NotImplementedError

    def params(self):
        return {}

    def cache_key(self):
        return (self.name,) + tuple(sorted(self.params().items()))


class ZeroPotential(PairPotential):
    name = "zero"
    interaction_range = 0.0

    def evaluate(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def envelope(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))


class HardCorePotential(PairPotential):
    """Hard rod (d=1) / hard disc (d=2) / hard sphere (d=3) of diameter sigma."""

    name = "hard_core"

    def __init__(self, sigma):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)
        self.hard_core_radius = self.sigma
        self.interaction_range = self.sigma
        self.envelope_radius = self.sigma
        self.discontinuity_radii = (self.sigma,)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.sigma, np.inf, 0.0)

    def envelope(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def params(self):
        return {"sigma": self.sigma}


class SquareWellPotential(PairPotential):
    """Hard core sigma, well depth -epsilon out to lambda*sigma."""

    name = "square_well"

    def __init__(self, sigma, epsilon, lam, stability_b=None):
        if sigma <= 0 or lam <= 1 or epsilon < 0:
            raise ValueError("need sigma > 0, lambda > 1, epsilon >= 0")
        self.sigma = float(sigma)
        self.epsilon = float(epsilon)
        self.lam = float(lam)
        self.hard_core_radius = self.sigma
        self.interaction_range = self.lam * self.sigma
        self.envelope_radius = self.lam * self.sigma
        self.discontinuity_radii = (self.sigma, self.lam * self.sigma)
        # declared constant; crude close-packing count of well neighbours
        self.stability_b = (
            float(stability_b)
            if stability_b is not None
            else 0.5 * self.epsilon * (2.0 * self.lam + 1.0) ** 3
        )

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.sigma, np.inf, np.where(r < self.lam * self.sigma, -self.epsilon, 0.0))

    def envelope(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < self.lam * self.sigma, self.epsilon, 0.0)

    def params(self):
        return {"sigma": self.sigma, "epsilon": self.epsilon, "lam": self.lam}


class GaussianPotential(PairPotential):
    """V(r) = epsilon * exp(-(r/length)^2); stable with B=0 when epsilon >= 0."""

    name = "gaussian"

    def __init__(self, epsilon, length=1.0, stability_b=None):
        self.epsilon = float(epsilon)
        self.length = float(length)
        self.stability_b = float(stability_b) if stability_b is not None else 0.0
        self.envelope_radius = 0.0

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return self.epsilon * np.exp(-((r / self.length) ** 2))

    def envelope(self, s):
        s = np.asarray(s, dtype=float)
        return abs(self.epsilon) * np.exp(-((s / self.length) ** 2))

    def params(self):
        return {"epsilon": self.epsilon, "length": self.length}


class TruncatedLennardJonesPotential(PairPotential):
    """12-6 potential shifted to zero at r_cut, hard floor below r_min."""

    name = "lj_truncated"

    def __init__(self, epsilon, sigma, r_cut, r_min, stability_b=None):
        if not 0 < r_min < r_cut:
            raise ValueError("need 0 < r_min < r_cut")
        self.epsilon = float(epsilon)
        self.sigma = float(sigma)
        self.r_cut = float(r_cut)
        self.r_min = float(r_min)
        self.hard_core_radius = self.r_min
        self.interaction_range = self.r_cut
        self.envelope_radius = self.r_cut
        self.discontinuity_radii = (self.r_min, self.r_cut)
        self.stability_b = float(stability_b) if stability_b is not None else self.epsilon

    def _lj(self, r):
        x6 = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (x6 * x6 - x6)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.clip(r, self.r_min, None)
        val = self._lj(safe) - self._lj(self.r_cut)
        return np.where(r < self.r_min, np.inf, np.where(r < self.r_cut, val, 0.0))

    def envelope(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < self.r_cut, abs(self._lj(np.clip(s, self.r_min, None))) + abs(self._lj(self.r_cut)), 0.0)

    def params(self):
        return {
            "epsilon": self.epsilon,
            "sigma": self.sigma,
            "r_cut": self.r_cut,
            "r_min": self.r_min,
        }


@dataclass(frozen=True)
class BoxGeometry:
    """Periodic box (-L/2, L/2]^d."""

    dimension: int
    side: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def volume(self) -> float:
        return self.side ** self.dimension

    def min_image(self, x):
        """Componentwise nearest-image displacement."""
        x = np.asarray(x, dtype=float)
        return x - self.side * np.round(x / self.side)


def mayer_from_distance(potential, beta, r):
    """f = exp(-beta V) - 1 on distances; exactly -1 inside a hard core."""
    v = potential.evaluate(r)
    v = np.asarray(v, dtype=float)
    finite = np.where(np.isinf(v), 0.0, v)
    out = np.where(np.isinf(v), -1.0, np.expm1(-beta * finite))
    return out if out.shape else float(out)


def mayer_f(potential, beta, displacement):
    """Mayer bond for a displacement (scalar in 1D or a length-d vector)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = np.asarray(displacement, dtype=float)
    r = abs(float(x)) if x.ndim == 0 else float(np.linalg.norm(x))
    return float(mayer_from_distance(potential, beta, r))


class PeriodizedPotential:
    """V^per(x) = sum over box translates of V, with a certified tail bound.

    When the interaction range is below L/2 the nearest-image value is exact
    and the tail bound is zero.
    """

    def __init__(self, potential, box, lattice_cutoff=1):
        if lattice_cutoff < 1:
            raise ValueError("lattice_cutoff must be >= 1")
        if potential.hard_core_radius > 0 and box.side <= 2 * potential.hard_core_radius:
            raise ValueError("box side must exceed twice the hard-core radius")
        self.potential = potential
        self.box = box
        self.cutoff = int(lattice_cutoff)
        self.nearest_image_exact = potential.interaction_range < box.side / 2
        self.tail_bound = 0.0 if self.nearest_image_exact else self._tail_bound()

    def _tail_bound(self):
        pot, box = self.potential, self.box
        L, d = box.side, box.dimension
        total = 0.0
        prev = math.inf
        for k in range(self.cutoff + 1, self.cutoff + 501):
            arg = k * L - L * math.sqrt(d) / 2.0
            if arg <= pot.envelope_radius:
                raise ValueError("box too small for the envelope-based tail bound")
            psi = float(pot.envelope(arg))
            if psi > prev + 1e-300:
                raise ValueError("envelope is not decreasing; tail bound unavailable")
            prev = psi
            count = (2 * k + 1) ** d - (2 * k - 1) ** d
            term = count * psi
            total += term
            if term <= 1e-18 * max(total, 1e-300):
                return total
        raise ValueError("envelope tail does not certify a finite periodization bound")

    def evaluate_displacement(self, x):
        """Periodized energy for displacement(s) x: scalar/array in 1D, or
        (..., d) arrays of vectors."""
        box = self.box
        x = np.asarray(x, dtype=float)
        if box.dimension == 1 and (x.ndim == 0 or x.shape[-1:] != (1,)):
            vec = x[..., None]
        else:
            vec = x
        vec = box.min_image(vec)
        if self.nearest_image_exact:
            r = np.sqrt(np.sum(vec * vec, axis=-1))
            out = self.potential.evaluate(r)
            return float(out) if np.ndim(out) == 0 else out
        total = None
        rng = range(-self.cutoff, self.cutoff + 1)
        for shift in np.ndindex(*(len(rng),) * box.dimension):
            n = np.array([rng[s] for s in shift], dtype=float)
            img = vec + n * box.side
            r = np.sqrt(np.sum(img * img, axis=-1))
            v = self.potential.evaluate(r)
            total = v if total is None else total + v
        return float(total) if np.ndim(total) == 0 else total

    def mayer(self, beta, x):
        v = self.evaluate_displacement(x)
        v = np.asarray(v, dtype=float)
        finite = np.where(np.isinf(v), 0.0, v)
        out = np.where(np.isinf(v), -1.0, np.expm1(-beta * finite))
        return float(out) if out.shape == () else out


def periodize(potential, box, lattice_cutoff=1) -> PeriodizedPotential:
    return PeriodizedPotential(potential, box, lattice_cutoff)


_SPHERE_SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _radial_breakpoints(potential, upper):
    pts = [r for r in potential.discontinuity_radii if 0 < r < upper]
    if math.isfinite(potential.interaction_range) and 0 < potential.interaction_range < upper:
        pts.append(potential.interaction_range)
    return sorted(set(pts))


def c_beta(potential, beta, dimension) -> float:
    """C(beta) = integral over R^d of |exp(-beta V) - 1|, radially."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    surf = _SPHERE_SURFACE[dimension]

    def integrand(r):
        return abs(mayer_from_distance(potential, beta, r)) * r ** (dimension - 1)

    rng = potential.interaction_range
    if math.isfinite(rng):
        if rng == 0:
            return 0.0
        pts = _radial_breakpoints(potential, rng)
        val, _ = integrate.quad(integrand, 0.0, rng, points=pts, limit=200)
        return surf * val
    # unbounded support: check temperedness via the envelope, then integrate
    R = max(potential.envelope_radius, 1.0)
    tail_env, _ = integrate.quad(
        lambda s: float(potential.envelope(s)) * s ** (dimension - 1), R, np.inf, limit=200
    )
    if not math.isfinite(tail_env):
        raise ValueError("envelope integral diverges; C(beta) not certifiable")
    pts = _radial_breakpoints(potential, R)
    head, _ = integrate.quad(integrand, 0.0, R, points=pts, limit=200)
    tail, _ = integrate.quad(integrand, R, np.inf, limit=200)
    return surf * (head + tail)


def c_beta_box(potential, beta, box) -> float:
    """C_Lambda(beta) = integral over the box of |exp(-beta V^per) - 1|."""
    per = periodize(potential, box)
    L, d = box.side, box.dimension
    if per.nearest_image_exact and math.isfinite(potential.interaction_range):
        # |f| is supported inside the box; the box integral equals C(beta)
        return c_beta(potential, beta, d)
    if d == 1:
        def integrand(x):
            return abs(per.mayer(beta, x))

        pts = sorted(
            {r for r in potential.discontinuity_radii if r < L / 2}
            | {-r for r in potential.discontinuity_radii if r < L / 2}
        )
        val, _ = integrate.quad(integrand, -L / 2, L / 2, points=pts, limit=400)
        return val
    # midpoint tensor grid for d = 2, 3 (smooth periodized tails)
    n = 96 if d == 2 else 48
    axis = (np.arange(n) + 0.5) / n * L - L / 2
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    disp = np.stack(grids, axis=-1)
    f = per.mayer(beta, disp)
    return float(np.sum(np.abs(f)) * (L / n) ** d)


def pair_energy(potential, config):
    """Free-space energy sum over pairs of a (N, d) configuration."""
    q = np.asarray(config, dtype=float)
    n = q.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(q[i] - q[j]))
            v = float(potential.evaluate(r))
            if math.isinf(v):
                return math.inf
            total += v
    return total


def stability_check(potential, n_particles, trials, seed, box) -> dict:
    """Sample random configurations and assert energy >= -B*N for each."""
    if n_particles > 10:
        raise ValueError("stability spot-check capped at N = 10")
    rng = np.random.default_rng(seed)
    bound = -potential.stability_b * n_particles
    min_energy = math.inf
    for _ in range(trials):
        q = rng.uniform(-box.side / 2, box.side / 2, size=(n_particles, box.dimension))
        e = pair_energy(potential, q)
        if e < bound - 1e-12:
            raise StabilityCounterexample(q, e, bound)
        if e < min_energy:
            min_energy = e
    return {
        "passed": True,
        "trials": trials,
        "n_particles": n_particles,
        "min_energy": min_energy,
        "bound": bound,
        "seed": seed,
    }


_POTENTIAL_KINDS = {
    "zero": lambda p: ZeroPotential(),
    "hard_core": lambda p: HardCorePotential(p["sigma"]),
    "hard_rod": lambda p: HardCorePotential(p["sigma"]),
    "hard_sphere": lambda p: HardCorePotential(p["sigma"]),
    "square_well": lambda p: SquareWellPotential(
        p["sigma"], p["epsilon"], p.get("lambda", p.get("lam", 1.5)),
        stability_b=p.get("stability_b"),
    ),
    "gaussian": lambda p: GaussianPotential(
        p["epsilon"], p.get("length", 1.0), stability_b=p.get("stability_b")
    ),
    "lj_truncated": lambda p: TruncatedLennardJonesPotential(
        p["epsilon"], p["sigma"], p["r_cut"], p["r_min"], stability_b=p.get("stability_b")
    ),
}


def make_potential(kind, params) -> PairPotential:
    """Build a potential from a declarative name + parameter map."""
    try:
        factory = _POTENTIAL_KINDS[kind]
    except KeyError:
        raise ValueError("unknown potential kind %r (known: %s)" % (kind, sorted(_POTENTIAL_KINDS)))
    return factory(params)
