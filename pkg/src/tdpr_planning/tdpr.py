"""Stand-alone (exogenous) reserve requirement from VRE scenarios.

Pipeline per month-block:

1. hourly forecast of each plant = probability-weighted mean over (scenario, day);
2. system forecast error = sum over plants of weighted deviations from forecast;
3. error variation between consecutive hours, taken in absolute value;
4. requirement per hour = (1 - lam) * mean + lam * CVaR_beta of the variations.

Hour ``h`` of the profile covers the transition h -> h+1 (hour 24 wraps to
hour 1 of the same sample day, or is zero under ``truncate``).  CVaR is the
mean of the worst ``beta`` probability mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import HOURS, ReserveConfig, ScenarioSet, ValidationError


@dataclass(frozen=True)
class ForecastProfile:
    plant: str
    values: np.ndarray  # (24,)


@dataclass(frozen=True)
class ErrorSamples:
    values: np.ndarray  # (S, n_days, 24) MW
    prob: np.ndarray  # (S, n_days) sample probability p_s * w_d / D


@dataclass(frozen=True)
class VariationSamples:
    values: np.ndarray  # (S, n_days, 24) |variation| MW
    prob: np.ndarray
    truncated: bool = False


@dataclass(frozen=True)
class TdprProfile:
    tdpr: np.ndarray
    mean_component: np.ndarray
    cvar_component: np.ndarray
    lam: float
    beta: float


def hourly_forecast(scenarios: ScenarioSet, plant: str) -> ForecastProfile:
    """Probability-weighted average of every (scenario, day) sample per hour."""
    block = scenarios.of(plant)  # raises KeyError for unknown ids
    q = scenarios.sample_prob()
    return ForecastProfile(plant, np.einsum("sd,sdh->h", q, block))


def _select_days(scenarios: ScenarioSet, days, day_weights):
    if days is None:
        days = np.arange(scenarios.D)
        w = np.ones(scenarios.D) if day_weights is None else np.asarray(day_weights, float)
    else:
        days = np.asarray(days, dtype=np.int64)
        w = np.ones(len(days)) if day_weights is None else np.asarray(day_weights, float)
    if len(w) != len(days):
        raise ValidationError("day_weights must align with days")
    return days, np.outer(scenarios.prob, w) / scenarios.D


def aggregate_error(scenarios: ScenarioSet, plants: Sequence[str],
                    weights: Sequence[float] | Mapping[str, float] | None = None,
                    days: Sequence[int] | None = None,
                    day_weights: Sequence[float] | None = None) -> ErrorSamples:
    """System forecast error ``sum_r w_r (g_r - forecast_r)`` per (scenario, day, hour).

    ``weights`` are fixed investment levels in [0, 1] (default 1 for every
    plant).  ``days`` (0-based) restricts the samples to a subset such as
    representative days, each carrying ``day_weights`` days of mass; the
    forecast itself always uses the full set.
    """
    plants = list(plants)
    if weights is None:
        w = np.ones(len(plants))
    elif isinstance(weights, Mapping):
        w = np.array([float(weights[p]) for p in plants])
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (len(plants),):
        raise ValidationError("one weight per plant is required")
    if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
        raise ValidationError(f"plant weights must lie in [0, 1], got {w.tolist()}")
    sel, prob = _select_days(scenarios, days, day_weights)
    err = np.zeros((scenarios.S, len(sel), HOURS))
    for p, wp in zip(plants, w):
        block = scenarios.of(p)
        fc = hourly_forecast(scenarios, p).values
        if wp != 0.0:
            err += wp * (block[:, sel, :] - fc[None, None, :])
    return ErrorSamples(err, prob)


def error_variation(errors: ErrorSamples, boundary: str = "wrap") -> VariationSamples:
    """``|delta_h - delta_{h+1}|`` within each (scenario, day) sample."""
    e = errors.values
    if boundary == "wrap":
        nxt = np.roll(e, -1, axis=2)
        return VariationSamples(np.abs(e - nxt), errors.prob, False)
    if boundary == "truncate":
        out = np.zeros_like(e)
        out[:, :, :-1] = np.abs(e[:, :, :-1] - e[:, :, 1:])
        return VariationSamples(out, errors.prob, True)
    raise ValidationError(f"boundary must be wrap|truncate, got {boundary!r}")


def cvar_empirical(samples, probs, beta: float) -> float:
    """Expected value of the worst ``beta`` probability mass of a discrete distribution.

    Samples are sorted in descending order and mass is accumulated until it
    reaches ``beta``; the sample straddling the boundary contributes only the
    fraction of its mass that fits.
    """
    x = np.asarray(samples, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("cvar_empirical needs at least one sample")
    if p.shape != x.shape:
        raise ValidationError("one probability per sample is required")
    if not 0.0 < beta <= 1.0:
        raise ValidationError(f"beta must lie in (0, 1], got {beta}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError(f"probability mass {p.sum():.12g} ≠ 1")
    order = np.argsort(-x, kind="stable")
    xs, ps = x[order], p[order]
    before = np.concatenate([[0.0], np.cumsum(ps)[:-1]])
    take = np.clip(beta - before, 0.0, ps)
    return float(np.dot(take, xs) / beta)


def tdpr_profile(variations: VariationSamples, cfg: ReserveConfig) -> TdprProfile:
    """Hourly requirement ``(1 - lam) * mean + lam * CVaR_beta`` of the variations."""
    v = variations.values
    q = variations.prob
    mass = q.sum()
    mean = np.einsum("sd,sdh->h", q, v)
    qn = (q / mass).ravel()  # renormalise only to absorb round-off
    cvar = np.array([cvar_empirical(v[:, :, h].ravel(), qn, cfg.beta) for h in range(HOURS)]) * mass
    # CVaR >= mean always; guard the last ulp so the documented invariant holds exactly
    cvar = np.maximum(cvar, mean)
    tdpr = (1.0 - cfg.lam) * mean + cfg.lam * cvar
    return TdprProfile(tdpr, mean, cvar, cfg.lam, cfg.beta)


def compute_tdpr(scenarios: ScenarioSet, plants: Sequence[str], cfg: ReserveConfig,
                 weights=None, days=None, day_weights=None) -> TdprProfile:
    """Full pipeline for a plant portfolio with fixed investment levels."""
    if not plants:
        z = np.zeros(HOURS)
        return TdprProfile(z, z.copy(), z.copy(), cfg.lam, cfg.beta)
    err = aggregate_error(scenarios, plants, weights, days, day_weights)
    return tdpr_profile(error_variation(err, cfg.boundary), cfg)
