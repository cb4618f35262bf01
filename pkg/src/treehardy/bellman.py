"""The Bellman function for the Carleson imbedding theorem on trees.

B(F, f, A, v) = (p*)^p (F - ((p-1)/(A + (p-1) v))^(p-1) f^p)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measures import Exponent, TreeMeasure, as_weight, canonical_weight, cumulate
from .tree import RootedTree


@dataclass(frozen=True)
class BellmanPoint:
    F: float
    f: float
    A: float
    v: float
    p: float = 2.0

    def as_array(self) -> np.ndarray:
        return np.array([self.F, self.f, self.A, self.v])

    def in_domain(self, rtol: float = 1e-12) -> bool:
        """f^p <= F v^(p-1) and A <= v, all coordinates nonnegative."""
        if min(self.F, self.f, self.A, self.v) < 0:
            return False
        lhs, rhs = self.f ** self.p, self.F * self.v ** (self.p - 1.0)
        return lhs <= rhs * (1 + rtol) + 1e-300 and self.A <= self.v * (1 + rtol)


def bellman_value(F, f, A, v, p: float):
    """Vectorised closed form; at A + (p-1) v = 0 the f-term is taken as 0."""
    pe = Exponent(p)
    F, f, A, v = (np.asarray(a, dtype=float) for a in (F, f, A, v))
    den = A + (p - 1.0) * v
    if np.any((den <= 0) & (f != 0)):
        raise ValueError("A + (p-1) v = 0 with f > 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(den > 0, ((p - 1.0) / den) ** (p - 1.0) * np.abs(f) ** p, 0.0)
    return pe.conj ** p * (F - term)


def bellman_eval(x: BellmanPoint) -> tuple[float, bool]:
    """B(x) together with the check B(x) <= (p*)^p F on D."""
    b = float(bellman_value(x.F, x.f, x.A, x.v, x.p))
    bound = Exponent(x.p).conj ** x.p * x.F
    return b, bool((not x.in_domain()) or b <= bound * (1 + 1e-15))


# --------------------------------------------------------------- concavity
@dataclass
class ConcavityReport:
    samples: int
    max_rel_eigenvalue: float      # largest Hessian eigenvalue / ||H||
    max_a_second_difference: float
    midpoint_violations: int
    homogeneity_error: float

    @property
    def ok(self) -> bool:
        return (self.max_rel_eigenvalue <= 1e-6 and self.max_a_second_difference <= 1e-9
                and self.midpoint_violations == 0 and self.homogeneity_error <= 1e-12)


def sample_domain(p: float, n: int, rng) -> np.ndarray:
    """Random interior points of D as rows (F, f, A, v)."""
    v = rng.uniform(0.2, 2.0, n)
    A = v * rng.uniform(0.0, 0.95, n)
    F = rng.uniform(0.2, 2.0, n)
    f = (F * v ** (p - 1.0)) ** (1.0 / p) * rng.uniform(0.05, 0.95, n)
    return np.column_stack([F, f, A, v])


def hessian(p: float, x: np.ndarray, h: float) -> np.ndarray:
    B = lambda y: float(bellman_value(*y, p))
    H = np.empty((4, 4))
    E = np.eye(4) * h
    for i in range(4):
        for j in range(i, 4):
            H[i, j] = H[j, i] = (B(x + E[i] + E[j]) - B(x + E[i] - E[j])
                                 - B(x - E[i] + E[j]) + B(x - E[i] - E[j])) / (4 * h * h)
    return H


def concavity_probe(p: float, samples: int = 200, rng=None, pairs: int = 10_000) -> ConcavityReport:
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(0) if rng is None else rng
    pts = sample_domain(p, samples, rng)
    worst_eig = -np.inf
    worst_a = -np.inf
    for x in pts:
        h = 1e-4 * np.max(np.abs(x))
        H = hessian(p, x, h)
        worst_eig = max(worst_eig, np.linalg.eigvalsh(H).max() / np.linalg.norm(H, 2))
        ha = np.array([0.0, 0.0, h, 0.0])
        bA = [float(bellman_value(*(x + k * ha), p)) for k in (-1, 0, 1)]
        worst_a = max(worst_a, (bA[0] - 2 * bA[1] + bA[2]) / max(abs(bA[1]), 1.0))
    X, Y = sample_domain(p, pairs, rng), sample_domain(p, pairs, rng)
    mid = bellman_value(*((X + Y) / 2).T, p)
    avg = 0.5 * (bellman_value(*X.T, p) + bellman_value(*Y.T, p))
    viol = int(np.sum(mid < avg - 1e-12 * np.maximum(1.0, np.abs(avg))))
    t = rng.uniform(0.1, 10.0, samples)
    base = bellman_value(*pts.T, p)
    scaled = bellman_value(*(pts * t[:, None]).T, p)
    hom = float(np.max(np.abs(scaled - t * base) / np.maximum(np.abs(t * base), 1e-300)))
    return ConcavityReport(samples, float(worst_eig), float(worst_a), viol, hom)


# ------------------------------------------------------------ the family
@dataclass
class BellmanFamily:
    F: np.ndarray
    f: np.ndarray
    A: np.ndarray
    v: np.ndarray
    y: np.ndarray       # (n, 4) local parts, x_alpha = y_alpha + sum k_beta x_beta
    size: np.ndarray    # canonical |alpha|

    def point(self, i: int, p: float) -> BellmanPoint:
        return BellmanPoint(float(self.F[i]), float(self.f[i]), float(self.A[i]),
                            float(self.v[i]), p)

    @property
    def x(self) -> np.ndarray:
        return np.column_stack([self.F, self.f, self.A, self.v])


def _lam_mass(tree, lam) -> np.ndarray:
    return lam.mass if isinstance(lam, TreeMeasure) else np.asarray(lam, dtype=float)


def tent_condition(tree: RootedTree, sigma, lam, p: float):
    """Worst ratio sum_{beta in S(alpha)} sigma I*(beta)^p/|beta|^p over I*(alpha), and its edge."""
    w = canonical_weight(tree).values
    Il = tree.suffix(_lam_mass(tree, lam))
    term = as_weight(tree, sigma) * Il ** p / w ** p
    acc = tree.suffix(term)
    ratio = np.zeros(tree.n_edges)
    np.divide(acc, Il, out=ratio, where=Il > 0)
    k = int(np.argmax(ratio))
    return float(ratio[k]), k


def bellman_family(tree: RootedTree, sigma, lam, phi, p: float) -> BellmanFamily:
    w = canonical_weight(tree).values
    lm = _lam_mass(tree, lam)
    phi = np.asarray(phi, dtype=float)
    Il = tree.suffix(lm)
    term = as_weight(tree, sigma) * Il ** p / w ** p
    y = np.column_stack([phi ** p * lm, phi * lm, term, lm]) / w[:, None]
    F = tree.suffix(phi ** p * lm) / w
    f = tree.suffix(phi * lm) / w
    A = tree.suffix(term) / w
    v = Il / w
    return BellmanFamily(F, f, A, v, y, w)


@dataclass
class StepReport:
    ok: bool
    min_slack: float            # smallest normalised slack in the step inequality
    worst_edge: int
    domain_ok: bool
    recursion_residual: float
    lhs: float                  # sum sigma f_alpha^p
    telescoped: float           # |omega| B(x_omega)
    rhs: float                  # |omega| (p*)^p F_omega
    details: dict = field(default_factory=dict)


def step_check(tree: RootedTree, sigma, lam, phi, p: float, tol: float = 1e-10) -> StepReport:
    """Edgewise |a|B(x_a) - sum |b|B(x_b) >= sigma(a) f_a^p and the telescoped bound."""
    pe = Exponent(p)
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise ValueError("phi must be nonnegative")
    worst, k = tent_condition(tree, sigma, lam, p)
    if worst > 1 + 1e-12:
        raise ValueError(f"tent condition fails at edge {k} (ratio {worst:.6g})")
    sig = as_weight(tree, sigma)
    fam = bellman_family(tree, sig, lam, phi, p)
    X = fam.x
    w = fam.size
    # x_alpha = y_alpha + sum_beta k_beta x_beta with k_beta = |beta|/|alpha|
    child_part = np.zeros_like(X)
    np.add.at(child_part, tree.parent[1:], X[1:] * w[1:, None])
    recon = fam.y + child_part / w[:, None]
    scale = np.maximum(np.abs(X), 1e-300)
    resid = float(np.max(np.abs(recon - X) / scale))
    dom = all(fam.point(i, p).in_domain(1e-9) for i in range(tree.n_edges))

    Bx = bellman_value(fam.F, fam.f, fam.A, fam.v, p)
    wB = w * Bx
    kids_sum = np.zeros(tree.n_edges)
    np.add.at(kids_sum, tree.parent[1:], wB[1:])
    gain = sig * fam.f ** p
    slack = wB - kids_sum - gain
    norm = np.maximum.reduce([np.abs(wB), np.abs(kids_sum), gain, np.full_like(gain, 1e-300)])
    rel = slack / norm
    j = int(np.argmin(rel))
    lhs = float(np.sum(gain))
    tel = float(w[0] * Bx[0])
    rhs = float(w[0] * pe.conj ** p * fam.F[0])
    ok = bool(rel[j] >= -tol and dom and lhs <= tel * (1 + tol) + 1e-300
              and tel <= rhs * (1 + tol) + 1e-300)
    return StepReport(ok, float(rel[j]), j, dom, resid, lhs, tel, rhs,
                      {"telescoping_sum": float(np.sum(wB - kids_sum))})


# ----------------------------------------------------- Carleson imbedding
@dataclass
class CETReport:
    max_ratio: float     # max LHS / ((p*)^p ||phi||^p)
    trials: int
    condition_ratio: float

    @property
    def ok(self) -> bool:
        return self.max_ratio <= 1 + 1e-12


def cet_sides(tree: RootedTree, sigma, lam, phi, p: float) -> tuple[float, float]:
    w = canonical_weight(tree).values
    lm = _lam_mass(tree, lam)
    phi = np.asarray(phi, dtype=float)
    lhs = float(np.sum(as_weight(tree, sigma) * tree.suffix(phi * lm) ** p / w ** p))
    return lhs, float(np.sum(phi ** p * lm))


def random_test_functions(tree: RootedTree, trials: int, rng):
    n = tree.n_edges
    for t in range(trials):
        kind = t % 4
        if kind == 0:
            yield rng.random(n)
        elif kind == 1:
            yield rng.random(n) * (rng.random(n) < 0.3)
        elif kind == 2:
            phi = np.zeros(n)
            phi[tree.descendants(int(rng.integers(n)))] = 1.0
            yield phi
        else:
            yield rng.pareto(1.5, n)


def cet_verify(tree: RootedTree, sigma, lam, p: float, trials: int = 1000, rng=None) -> CETReport:
    pe = Exponent(p)
    worst, k = tent_condition(tree, sigma, lam, p)
    if worst > 1 + 1e-12:
        raise ValueError(f"tent condition fails at edge {k} (ratio {worst:.6g})")
    rng = np.random.default_rng(0) if rng is None else rng
    best = 0.0
    for phi in random_test_functions(tree, trials, rng):
        lhs, nrm = cet_sides(tree, sigma, lam, phi, p)
        if nrm > 0:
            best = max(best, lhs / (pe.conj ** p * nrm))
    return CETReport(best, trials, worst)


def admissible_instance(tree: RootedTree, p: float, rng, interior: float = 0.3):
    """Random (sigma, lambda) satisfying the tent condition with slack.

    sigma(alpha) = theta |alpha|^p I*(alpha)^(1-p) turns the condition into
    sum theta I* <= I*, enforced by rescaling theta.
    """
    w = canonical_weight(tree).values
    lm = np.zeros(tree.n_edges)
    lm[tree.leaves] = rng.random(tree.leaves.size)
    lm += rng.random(tree.n_edges) * (rng.random(tree.n_edges) < interior)
    lam = cumulate(tree, lm)
    Il = lam.tent
    theta = rng.uniform(1e-3, 1.0, tree.n_edges)
    with np.errstate(divide="ignore"):
        base = np.where(Il > 0, w ** p * Il ** (1.0 - p), w ** p)
    acc = tree.suffix(theta * Il)
    ratio = np.zeros(tree.n_edges)
    np.divide(acc, Il, out=ratio, where=Il > 0)
    theta *= rng.uniform(0.5, 1.0) / ratio.max()
    return theta * base, lam


def cet_to_hardy(tree: RootedTree, sigma, lam, p: float):
    """Hardy data equivalent to the imbedding: (mu, pi, P) with P* = p.

    mu is lambda itself and pi^(1-p) = sigma/|alpha|^p, so the mass-energy
    sum of (mu, pi, P) is the left side of the tent condition.
    """
    Exponent(p)
    w = canonical_weight(tree).values
    lm = _lam_mass(tree, lam)
    pi = (as_weight(tree, sigma) / w ** p) ** (1.0 / (1.0 - p))
    return cumulate(tree, lm), pi, p / (p - 1.0)
