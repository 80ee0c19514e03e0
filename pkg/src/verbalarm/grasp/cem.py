"""Cross-entropy refinement of grasp candidates.

Each round samples a population from a Gaussian mixture over grasp
parameters, keeps the highest-scoring elite fraction, and refits the
mixture to them with EM; the best sample ever seen is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import planner
from .planner import GraspCandidate
from .segmentation import Cluster

COV_FLOOR = 1e-6
EM_STEPS = 10


@dataclass(frozen=True)
class CEMParams:
    population: int = 64
    elite_fraction: float = 0.25
    gmm_components: int = 2
    iterations: int = 5
    init_cov_scale: float = 0.25

    def __post_init__(self):
        if not 0 < self.elite_fraction < 1:
            raise ValueError("elite_fraction must be in (0, 1)")
        if self.gmm_components < 1:
            raise ValueError("need at least one mixture component")
        if self.population * self.elite_fraction < self.gmm_components:
            raise ValueError("elite set smaller than the mixture size")


@dataclass
class GMM:
    weights: np.ndarray     # (m,)
    means: np.ndarray       # (m, d)
    covs: np.ndarray        # (m, d, d)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        counts = rng.multinomial(n, self.weights)
        rows = []
        for mean, cov, count in zip(self.means, self.covs, counts):
            if count:
                rows.append(rng.multivariate_normal(mean, cov, size=count,
                                                    method="cholesky"))
        X = np.vstack(rows)
        return X[rng.permutation(n)]


def _log_gauss(X: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    L = np.linalg.cholesky(cov)
    y = np.linalg.solve(L, (X - mean).T).T
    maha = np.sum(y * y, axis=1)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (maha + logdet + d * math.log(2 * math.pi))


def _init_means(X: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++-style spread: subsequent means drawn far from earlier ones."""
    n = len(X)
    picks = [int(rng.integers(n))]
    for _ in range(m - 1):
        d2 = np.min(
            [np.sum((X - X[p]) ** 2, axis=1) for p in picks], axis=0)
        total = d2.sum()
        if total <= 0:
            picks.append(int(rng.integers(n)))
            continue
        picks.append(int(rng.choice(n, p=d2 / total)))
    return X[picks].copy()


def fit_gmm(X: np.ndarray, components: int, rng: np.random.Generator,
            steps: int = EM_STEPS, floor: float = COV_FLOOR) -> GMM:
    """EM fit with a diagonal covariance floor to keep components full rank."""
    n, d = X.shape
    m = min(components, n)
    means = _init_means(X, m, rng)
    # covariance init from a nearest-mean assignment, so separated blobs
    # start as separated components rather than one global ellipsoid
    d2 = np.stack([np.sum((X - mu) ** 2, axis=1) for mu in means], axis=1)
    assign = np.argmin(d2, axis=1)
    eye = np.eye(d)
    covs = np.empty((m, d, d))
    for j in range(m):
        members = X[assign == j]
        if len(members) > 1:
            covs[j] = np.cov(members.T).reshape(d, d) + floor * eye
        else:
            covs[j] = np.var(X, axis=0).mean() * eye + floor * eye
    weights = np.full(m, 1.0 / m)
    for _ in range(steps):
        log_p = np.stack([
            math.log(max(w, 1e-300)) + _log_gauss(X, means[j], covs[j])
            for j, w in enumerate(weights)
        ], axis=1)
        log_norm = np.logaddexp.reduce(log_p, axis=1, keepdims=True)
        resp = np.exp(log_p - log_norm)
        nk = resp.sum(axis=0) + 1e-12
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        for j in range(m):
            diff = X - means[j]
            covs[j] = (resp[:, j, None] * diff).T @ diff / nk[j] + floor * eye
    return GMM(weights / weights.sum(), means, covs)


@dataclass
class CemResult:
    best: np.ndarray
    best_score: float
    per_iteration_best: list[float] = field(default_factory=list)
    gmm: GMM | None = None
    empty_elite: bool = False


def cem_optimize(score_fn, lo, hi, params: CEMParams, seed: int | None = 0,
                 init_means: np.ndarray | None = None) -> CemResult:
    """Maximize score_fn (vectorized over an (n, d) array of rows) inside the
    box [lo, hi]. Samples round 0 from a wide initial mixture (optionally
    centered on caller-provided seeds), then refits a GMM to the elites for
    each of params.iterations rounds."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = len(lo)
    span = hi - lo
    n_elite = math.ceil(params.elite_fraction * params.population)
    result = CemResult(best=lo.copy(), best_score=-np.inf)

    def score_round(X: np.ndarray) -> np.ndarray:
        s = np.asarray(score_fn(X), dtype=float)
        top = int(np.argmax(s))
        if s[top] > result.best_score:
            result.best = X[top].copy()
            result.best_score = float(s[top])
        result.per_iteration_best.append(result.best_score)
        return s

    if init_means is None:
        # round 0 is plain random search over the box
        X = rng.uniform(lo, hi, size=(params.population, d))
    else:
        seeds = np.atleast_2d(np.asarray(init_means, dtype=float))
        init_cov = np.diag((params.init_cov_scale * span) ** 2) + COV_FLOOR * np.eye(d)
        gmm0 = GMM(np.full(len(seeds), 1.0 / len(seeds)), seeds,
                   np.repeat(init_cov[None], len(seeds), axis=0))
        X = np.clip(gmm0.sample(params.population, rng), lo, hi)
    s = score_round(X)

    gmm = None
    for _ in range(params.iterations):
        if result.best_score <= 0.0:
            result.empty_elite = True
            break
        elite_idx = np.argsort(-s, kind="stable")[:n_elite]
        elites = X[elite_idx]
        # keep the best-ever sample in the refit so progress is never lost
        elites = np.vstack([elites, result.best[None, :]])
        gmm = fit_gmm(elites, params.gmm_components, rng)
        X = np.clip(gmm.sample(params.population, rng), lo, hi)
        s = score_round(X)
    result.gmm = gmm
    if result.best_score <= 0.0:
        result.empty_elite = True
        result.best_score = 0.0
    return result


def cem_refine(cluster: Cluster, params: CEMParams, seed: int | None = 0,
               max_width: float = planner.MAX_GRIPPER_WIDTH,
               friction_cone_deg: float = planner.FRICTION_CONE_DEG) -> GraspCandidate:
    """CEM search over (x, y, angle, width) for the best grasp on a cluster.

    If every sampled candidate scores zero the best sample is returned with
    q = 0 so the caller can tell planning found nothing graspable."""
    ctx = planner._context(cluster)
    pad = 0.02
    lo = np.array([ctx.pts2d[:, 0].min() - pad, ctx.pts2d[:, 1].min() - pad,
                   0.0, 0.005])
    hi = np.array([ctx.pts2d[:, 0].max() + pad, ctx.pts2d[:, 1].max() + pad,
                   math.pi, max_width])
    depth = planner._grasp_depth(ctx)

    def score_rows(X: np.ndarray) -> np.ndarray:
        return np.array([
            planner.score(
                GraspCandidate((row[0], row[1]), depth, row[2], row[3]),
                cluster, friction_cone_deg, max_width)
            for row in X
        ])

    # seed the initial mixture with the best heuristic candidates
    warm = planner.sample_candidates(cluster, max(params.population, 32), seed=seed,
                                     max_width=max_width,
                                     friction_cone_deg=friction_cone_deg)
    warm.sort(key=lambda c: -c.q)
    seeds = np.array([
        [c.center[0], c.center[1], c.angle, c.width]
        for c in warm[:params.gmm_components]
    ]) if warm else None

    res = cem_optimize(score_rows, lo, hi, params, seed, init_means=seeds)
    x, y, angle, width = res.best
    return GraspCandidate((float(x), float(y)), depth, float(angle) % math.pi,
                          float(width), q=float(max(res.best_score, 0.0)))
