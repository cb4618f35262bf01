"""Hardy operator, its dual, T_mu, the maximal function and operator norms."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .measures import Exponent, TreeMeasure, as_weight
from .tree import RootedTree

log = logging.getLogger(__name__)


def hardy_apply(tree: RootedTree, phi) -> np.ndarray:
    """I phi(x): sum of phi over [o*, x]."""
    return tree.prefix(np.asarray(phi, dtype=float))


def hardy_dual_apply(tree: RootedTree, mu: TreeMeasure, psi) -> np.ndarray:
    """I*_mu psi(alpha): integral of psi over the tent S(alpha)."""
    return tree.suffix(np.asarray(psi, dtype=float) * mu.mass)


def t_mu_apply(tree: RootedTree, mu: TreeMeasure, pi=None, p=2.0, psi=None) -> np.ndarray:
    """T_mu psi(x) = sum over [o*, x] of sigma(alpha) I*_mu psi(alpha)."""
    sigma = as_weight(tree, pi) ** (1.0 - Exponent(p).conj)
    psi = np.ones(tree.n_edges) if psi is None else psi
    return tree.prefix(sigma * hardy_dual_apply(tree, mu, psi))


def maximal(tree: RootedTree, mu: TreeMeasure, sigma: TreeMeasure, f,
            return_flags: bool = False):
    """M_mu(f dsigma)(x): largest tent average of |f| dsigma along [o*, x].

    Tents with zero mu-mass are skipped; a vertex whose whole geodesic has
    zero mu-tents gets 0 and is flagged.
    """
    num = hardy_dual_apply(tree, sigma, np.abs(np.asarray(f, dtype=float)))
    avg = np.full(tree.n_edges, -np.inf)
    pos = mu.tent > 0
    avg[pos] = num[pos] / mu.tent[pos]
    best = tree.prefix_max(avg)
    flags = ~np.isfinite(best)
    best[flags] = 0.0
    return (best, flags) if return_flags else best


@dataclass
class MaximalReport:
    weak_ratio: float     # sup_t t sigma(M psi > t) over the right side of the weak bound
    strong_ratio: float   # int (M psi)^p dsigma over int psi^p M(dsigma) dmu
    levels: int

    def ok(self, p: float, rtol: float = 1e-12) -> bool:
        return self.weak_ratio <= 1 + rtol and self.strong_ratio <= Exponent(p).conj ** p * (1 + rtol)


def maximal_inequalities(tree: RootedTree, mu: TreeMeasure, sigma: TreeMeasure, psi,
                         p: float = 2.0) -> MaximalReport:
    """Weak (1,1) and strong (p) ratios for M_mu(psi dmu) against sigma.

    The weak supremum is scanned at every distinct value v of M psi,
    where t -> v from below gives v * sigma(M psi >= v).
    """
    psi = np.abs(np.asarray(psi, dtype=float))
    M = maximal(tree, mu, mu, psi)
    Ms = maximal(tree, mu, sigma, np.ones(tree.n_edges))
    weak_rhs = float(np.sum(psi * Ms * mu.mass))
    strong_rhs = float(np.sum(psi ** p * Ms * mu.mass))
    order = np.argsort(-M, kind="stable")
    vals, cum = M[order], np.cumsum(sigma.mass[order])
    last = np.r_[vals[1:] != vals[:-1], True]
    best = float(np.max(vals[last] * cum[last], initial=0.0))
    weak = best / weak_rhs if weak_rhs > 0 else (0.0 if best == 0 else np.inf)
    lhs = float(np.sum(M ** p * sigma.mass))
    strong = lhs / strong_rhs if strong_rhs > 0 else (0.0 if lhs == 0 else np.inf)
    return MaximalReport(weak, strong, int(last.sum()))


@dataclass
class NormBracket:
    lower: float
    upper: float
    lower_method: str = ""
    upper_method: str = ""
    witness: np.ndarray | None = None
    iterations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.upper < self.lower * (1 - 1e-12) - 1e-300:
            raise ValueError(f"bracket inverted: {self.lower} > {self.upper}")

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: float, rtol: float = 1e-9) -> bool:
        slack = rtol * max(abs(x), self.upper, 1e-300)
        return self.lower - slack <= x <= self.upper + slack


def norm_exact_p2(tree: RootedTree, mu: TreeMeasure, pi=None, tol: float = 1e-10,
                  max_iter: int = 100_000) -> NormBracket:
    """[mu] at p = 2 as the top eigenvalue of T_mu on L^2(mu), by power iteration.

    T_mu has a strictly positive kernel on supp(mu), so besides the Rayleigh
    quotient the Collatz-Wielandt ratios min/max (T psi)/psi bracket the
    eigenvalue; iteration stops once that bracket is narrower than ``tol``.
    """
    if mu.total <= 0:
        return NormBracket(0.0, 0.0, "zero measure", "zero measure", np.zeros(tree.n_edges))
    supp = mu.mass > 0
    psi = supp.astype(float)
    rq = prev = 0.0
    lo = hi = 0.0
    for it in range(1, max_iter + 1):
        tpsi = t_mu_apply(tree, mu, pi, 2.0, psi)
        rq = float(np.sum(mu.mass * tpsi * psi) / np.sum(mu.mass * psi * psi))
        ratios = tpsi[supp] / psi[supp]
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * rq or (abs(rq - prev) <= 1e-3 * tol * rq and hi - lo <= 1e3 * tol * rq):
            return NormBracket(rq, rq, "power iteration", "power iteration",
                               psi / np.sqrt(np.sum(mu.mass * psi * psi)), it, True,
                               {"collatz_wielandt": (lo, hi)})
        prev = rq
        psi = np.where(supp, tpsi, 0.0)
        psi /= np.sqrt(np.sum(mu.mass * psi * psi))
    log.warning("power iteration hit the cap of %d iterations", max_iter)
    return NormBracket(max(rq, lo), hi, "Rayleigh/Collatz-Wielandt", "Collatz-Wielandt",
                       psi, max_iter, False)


def rayleigh_p(tree: RootedTree, mu: TreeMeasure, pi, p: float, phi) -> float:
    """||I phi||^p_{L^p(mu)} / ||phi||^p_{l^p(pi)} for phi >= 0."""
    pi = as_weight(tree, pi)
    phi = np.asarray(phi, dtype=float)
    den = float(np.sum(tree.length * pi * phi ** p))
    if den <= 0:
        return 0.0
    return float(np.sum(mu.mass * hardy_apply(tree, phi) ** p)) / den


def ascent(tree: RootedTree, mu: TreeMeasure, pi, p: float, phi0, steps: int = 200,
           rtol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Nonlinear power iteration phi <- (I*_mu (I phi)^(p-1) / pi)^(1/(p-1)).

    Stationary points satisfy the Euler-Lagrange equation of the Rayleigh
    ratio; the best ratio seen is returned, so the result is a lower bound.
    """
    pi = as_weight(tree, pi)
    phi = np.asarray(phi0, dtype=float)
    best, best_phi = rayleigh_p(tree, mu, pi, p, phi), phi
    for _ in range(steps):
        g = hardy_dual_apply(tree, mu, hardy_apply(tree, phi) ** (p - 1.0))
        new = (g / pi) ** (1.0 / (p - 1.0))
        scale = new.max()
        if not scale > 0:
            break
        phi = new / scale
        r = rayleigh_p(tree, mu, pi, p, phi)
        if r > best:
            done = r - best <= rtol * r
            best, best_phi = r, phi
            if done:
                break
        else:
            break
    return best, best_phi


def norm_bracket(tree: RootedTree, mu: TreeMeasure, pi=None, p: float = 2.0,
                 effort: int = 1, rng=None, iso_budget: int = 2000) -> NormBracket:
    """Two-sided bracket for [mu] = ||I||^p at general p."""
    from . import conditions, potential

    pe = Exponent(p)
    if mu.total <= 0:
        return NormBracket(0.0, 0.0, "zero measure", "zero measure", np.zeros(tree.n_edges))
    pi = as_weight(tree, pi)
    rng = np.random.default_rng(0) if rng is None else rng
    sigma = pi ** (1.0 - pe.conj)
    lows: list[tuple[float, str, np.ndarray | None]] = []

    # (a) dual test functions chi_S(alpha): ME sum below plus the prefix term above
    me, _ = conditions.me_sb_constants(tree, mu, pi, p)
    above = tree.prefix(sigma) - tree.length * sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        dual = (me.table["inner"] + mu.tent ** pe.conj * above) / mu.tent
    dual = np.where(mu.tent > 0, dual, 0.0) ** (p - 1.0)
    k = int(np.argmax(dual))
    lows.append((float(dual[k]), f"dual tent test at edge {k}", None))

    # (b) equilibrium functions of the best antichains found (plain trees only)
    iso = None
    if not tree.is_compressed:
        iso = conditions.iso_bracket(tree, mu, pi, p, budget=iso_budget)
        cap = potential.capacity(tree, iso.witness, pi, p)
        lows.append((rayleigh_p(tree, mu, pi, p, cap.equilibrium), "antichain equilibrium",
                     cap.equilibrium))

    # (c) multiplicative ascent with restarts
    starts = [np.ones(tree.n_edges)]
    starts += [rng.random(tree.n_edges) ** 3 for _ in range(32 * effort - 1)]
    for phi0 in starts:
        r, phi = ascent(tree, mu, pi, p, phi0)
        lows.append((r, "projected ascent", phi))

    lower, lower_method, witness = max(lows, key=lambda t: t[0])

    ups = [(p ** p * me.value, "p^p * ME constant")]
    d_pi = tree.prefix(sigma)
    ups.append((float(np.sum(mu.mass * d_pi ** (p - 1.0))), "pointwise Hoelder"))
    if iso is not None and iso.extra.get("exact"):
        ups.append((2.0 ** p * iso.lower, "2^p * ISO constant (exact)"))
    if p == 2.0:
        ex = norm_exact_p2(tree, mu, pi)
        ups.append((ex.upper, "exact p=2"))
        if ex.lower > lower:
            lower, lower_method = ex.lower, "exact p=2"
            witness = hardy_dual_apply(tree, mu, ex.witness) / pi
    upper, upper_method = min(ups, key=lambda t: t[0])
    return NormBracket(lower, upper, lower_method, upper_method, witness,
                       extra={"candidates_upper": ups, "me_constant": me.value})
