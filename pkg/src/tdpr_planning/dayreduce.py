"""Representative-day selection by k-medoids (PAM) on daily net-load features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import HOURS, PlanningProblem, ValidationError


@dataclass(frozen=True)
class DayFeature:
    day: int  # 0-based
    vector: np.ndarray


@dataclass(frozen=True)
class DayClustering:
    medoids: tuple[int, ...]  # 0-based day indices, ascending
    weights: tuple[int, ...]  # days represented by each medoid; sums to D
    assignment: tuple[int, ...]  # day -> cluster position in ``medoids``
    objective: float = 0.0

    @property
    def K(self) -> int:
        return len(self.medoids)

    @property
    def D(self) -> int:
        return len(self.assignment)

    @classmethod
    def identity(cls, D: int) -> "DayClustering":
        return cls(tuple(range(D)), (1,) * D, tuple(range(D)), 0.0)


def expected_vre_by_region(problem: PlanningProblem) -> np.ndarray:
    """(region, day, hour) scenario-mean VRE output of every plant at full capacity."""
    out = np.zeros((len(problem.regions), problem.D, HOURS))
    p = problem.scenarios.prob
    for v in problem.vre_plants:
        out[problem.region_index(v.region)] += np.einsum("s,sdh->dh", p, problem.vre_profile(v))
    return out


def extract_day_features(problem: PlanningProblem) -> list[DayFeature]:
    """Per-region hourly net load plus total VRE, min-max scaled per dimension across days."""
    vre = expected_vre_by_region(problem)
    net = problem.demand - vre  # (R, D, H)
    raw = np.concatenate(
        [net.transpose(1, 0, 2).reshape(problem.D, -1), vre.sum(axis=0)], axis=1
    )
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = hi - lo
    scaled = np.where(span > 0, (raw - lo) / np.where(span > 0, span, 1.0), 0.0)
    return [DayFeature(d, scaled[d]) for d in range(problem.D)]


def _sqdist(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _assign(dist: np.ndarray, medoids: list[int]) -> np.ndarray:
    """Cluster position per day; a medoid always owns itself, ties go to the lowest medoid day."""
    med = sorted(medoids)
    lab = np.argmin(dist[:, med], axis=1)  # argmin: first (lowest day) on ties
    for k, m in enumerate(med):
        lab[m] = k
    return lab


def _cost(dist: np.ndarray, medoids: list[int]) -> float:
    med = sorted(medoids)
    lab = _assign(dist, med)
    return float(dist[np.arange(len(dist)), np.asarray(med)[lab]].sum())


def _build(dist: np.ndarray, K: int) -> list[int]:
    n = len(dist)
    first = int(np.argmin(dist.sum(axis=1)))
    medoids = [first]
    nearest = dist[:, first].copy()
    while len(medoids) < K:
        best_gain, best_j = -1.0, -1
        for j in range(n):
            if j in medoids:
                continue
            gain = float(np.maximum(nearest - dist[:, j], 0.0).sum())
            if gain > best_gain:
                best_gain, best_j = gain, j
        medoids.append(best_j)
        nearest = np.minimum(nearest, dist[:, best_j])
    return sorted(medoids)


def _swap(dist: np.ndarray, medoids: list[int], history: list[float] | None = None) -> list[int]:
    cur = _cost(dist, medoids)
    if history is not None:
        history.append(cur)
    n = len(dist)
    while True:
        best = (cur, None, None)
        for mi, m in enumerate(medoids):
            for j in range(n):
                if j in medoids:
                    continue
                trial = medoids[:mi] + [j] + medoids[mi + 1:]
                c = _cost(dist, trial)
                if c < best[0] - 1e-12 * max(1.0, abs(cur)):
                    best = (c, mi, j)
        if best[1] is None:
            return sorted(medoids)
        medoids = sorted(medoids[: best[1]] + [best[2]] + medoids[best[1] + 1:])
        cur = best[0]
        if history is not None:
            history.append(cur)


def cluster_days(features: list[DayFeature], K: int, seed: int = 0, restarts: int = 0,
                 history: list[float] | None = None) -> DayClustering:
    """PAM (BUILD + best-improvement SWAP) under squared Euclidean distance.

    Fully deterministic when ``restarts == 0``; extra restarts draw random
    initial medoids from ``seed`` and keep a strictly better result only.
    """
    D = len(features)
    if K < 1 or K > D:
        raise ValidationError(f"K must lie in [1, {D}], got {K}")
    X = np.stack([f.vector for f in features])
    if not np.all(np.isfinite(X)):
        raise ValidationError("day features must be finite")
    dist = _sqdist(X)
    medoids = _swap(dist, _build(dist, K), history)
    best_cost = _cost(dist, medoids)
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        start = sorted(int(i) for i in rng.choice(D, size=K, replace=False))
        cand = _swap(dist, start)
        c = _cost(dist, cand)
        if c < best_cost - 1e-12 * max(1.0, best_cost):
            medoids, best_cost = cand, c
    lab = _assign(dist, medoids)
    weights = tuple(int(np.sum(lab == k)) for k in range(K))
    return DayClustering(tuple(int(m) for m in medoids), weights, tuple(int(v) for v in lab), best_cost)


def reduce_days(problem: PlanningProblem, K: int | None = None, seed: int | None = None) -> DayClustering:
    K = K if K is not None else (problem.clustering.K or problem.D)
    seed = problem.clustering.seed if seed is None else seed
    if K == problem.D:
        return DayClustering.identity(problem.D)
    return cluster_days(extract_day_features(problem), K, seed, problem.clustering.restarts)
