"""Domain types for planning problems and VRE scenario sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HOURS = 24


class ValidationError(ValueError):
    """Input violates a documented schema or invariant."""


def uniform_probabilities(S: int) -> np.ndarray:
    """Equal scenario weights ``1/S``."""
    if S < 1:
        raise ValidationError(f"scenario count must be >= 1, got {S}")
    return np.full(S, 1.0 / S)


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Hourly VRE samples in MW indexed (plant, scenario, day, hour)."""

    plants: tuple[str, ...]
    values: np.ndarray
    prob: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.prob, dtype=float)
        if v.ndim != 4 or v.shape[3] != HOURS:
            raise ValidationError(f"scenario values must be (plant, scenario, day, {HOURS}); got {v.shape}")
        if v.shape[0] != len(self.plants):
            raise ValidationError("scenario array plant axis does not match plant list")
        if len(set(self.plants)) != len(self.plants):
            raise ValidationError("duplicate plant ids in scenario set")
        if not np.all(np.isfinite(v)):
            raise ValidationError("scenario values contain NaN or inf")
        if np.any(v < 0):
            i = tuple(int(k) for k in np.argwhere(v < 0)[0])
            raise ValidationError(
                f"negative VRE value for plant {self.plants[i[0]]} at scenario {i[1] + 1}, "
                f"day {i[2] + 1}, hour {i[3] + 1}"
            )
        if p.shape != (v.shape[1],):
            raise ValidationError(f"expected {v.shape[1]} scenario probabilities, got {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("scenario probabilities must be finite and non-negative")
        mass = float(np.sum(p))
        if abs(mass - 1.0) > 1e-9:
            raise ValidationError(f"probability mass {mass:.12g} ≠ 1")
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "prob", p)
        object.__setattr__(self, "plants", tuple(self.plants))

    @property
    def S(self) -> int:
        return self.values.shape[1]

    @property
    def D(self) -> int:
        return self.values.shape[2]

    @property
    def H(self) -> int:
        return HOURS

    def plant_index(self, plant: str) -> int:
        try:
            return self.plants.index(plant)
        except ValueError:
            raise KeyError(f"unknown VRE plant {plant!r}") from None

    def of(self, plant: str) -> np.ndarray:
        """(S, D, H) block for one plant."""
        return self.values[self.plant_index(plant)]

    def sample_prob(self, day_weights: np.ndarray | None = None) -> np.ndarray:
        """(S, D) sample probabilities ``p_s * w_d / D`` (``w_d`` defaults to 1)."""
        w = np.ones(self.D) if day_weights is None else np.asarray(day_weights, dtype=float)
        return np.outer(self.prob, w) / self.D

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return (
            self.plants == other.plants
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.prob, other.prob)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class DispatchablePlant:
    id: str
    region: str
    gmax: float
    var_cost: float
    inv_cost: float = 0.0
    existing: bool = True
    investable_binary: bool = False
    gmin_stable: float = 0.0
    ramp: float | None = None
    must_run: bool = False
    tech: str = "thermal"

    def __post_init__(self) -> None:
        if not self.gmax >= 0:
            raise ValidationError(f"dispatchable {self.id}: gmax must be >= 0")
        if not 0 <= self.gmin_stable <= self.gmax:
            raise ValidationError(f"dispatchable {self.id}: need 0 <= gmin_stable <= gmax")
        if self.ramp is not None and not self.ramp >= 0:
            raise ValidationError(f"dispatchable {self.id}: ramp must be >= 0")
        if not (self.var_cost >= 0 and self.inv_cost >= 0):
            raise ValidationError(f"dispatchable {self.id}: costs must be >= 0")


@dataclass(frozen=True)
class VrePlant:
    id: str
    region: str
    capacity: float
    inv_cost: float = 0.0
    existing: bool = True
    investable_binary: bool = False
    curtailable: bool = True
    profile_ref: str | None = None
    tech: str = "vre"

    def __post_init__(self) -> None:
        if not self.capacity > 0:
            raise ValidationError(f"VRE plant {self.id}: capacity must be > 0")
        if not self.inv_cost >= 0:
            raise ValidationError(f"VRE plant {self.id}: inv_cost must be >= 0")

    @property
    def profile(self) -> str:
        return self.profile_ref or self.id


@dataclass(frozen=True)
class NetworkLine:
    id: str
    from_region: str
    to_region: str
    fmax: float
    inv_cost: float = 0.0
    existing: bool = True

    def __post_init__(self) -> None:
        if not self.fmax > 0:
            raise ValidationError(f"line {self.id}: fmax must be > 0")
        if self.from_region == self.to_region:
            raise ValidationError(f"line {self.id}: from_region equals to_region")
        if not self.inv_cost >= 0:
            raise ValidationError(f"line {self.id}: inv_cost must be >= 0")


@dataclass(frozen=True)
class ReserveConfig:
    """Risk aversion ``lam`` in [0, 1] and tail probability ``beta`` in (0, 1].

    ``boundary`` selects how the hour-24 variation is formed (``wrap`` to hour
    1 of the same day, or ``truncate`` to zero).  ``tdpr_days`` chooses
    whether the reserve statistics use every scenario day (``all``) or only
    the representative days with their cluster weights.  ``tdpr_cost`` is a
    small $/MW price on each hourly requirement so that the solved
    requirement is the smallest one consistent with the investment plan.
    """

    lam: float = 0.5
    beta: float = 0.1
    enabled: bool = True
    boundary: str = "wrap"
    tdpr_days: str = "all"
    tdpr_cost: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"reserve.lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 < self.beta <= 1.0:
            raise ValidationError(f"reserve.beta must lie in (0, 1], got {self.beta}")
        if self.boundary not in ("wrap", "truncate"):
            raise ValidationError(f"reserve.boundary must be wrap|truncate, got {self.boundary!r}")
        if self.tdpr_days not in ("all", "representative"):
            raise ValidationError(f"reserve.tdpr_days must be all|representative, got {self.tdpr_days!r}")
        if not (np.isfinite(self.tdpr_cost) and self.tdpr_cost >= 0):
            raise ValidationError("reserve.tdpr_cost must be finite and >= 0")


@dataclass(frozen=True)
class ClusteringConfig:
    K: int | None = None
    seed: int = 0
    restarts: int = 0


@dataclass(frozen=True)
class InvestmentConfig:
    budget: float | None = None
    capacity_margin: float | None = None
    vre_capacity_credit: float = 0.0


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tol: float = 1e-6
    optimality_tol: float = 1e-7
    mip_gap: float = 1e-4
    node_limit: int = 100_000


@dataclass(frozen=True, eq=False)
class PlanningProblem:
    regions: tuple[str, ...]
    dispatchables: tuple[DispatchablePlant, ...]
    vre_plants: tuple[VrePlant, ...]
    lines: tuple[NetworkLine, ...]
    demand: np.ndarray  # (region, day, hour) MW
    scenarios: ScenarioSet
    reserve: ReserveConfig = field(default_factory=ReserveConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    investment: InvestmentConfig = field(default_factory=InvestmentConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    operating_cost_scale: float = 1.0
    name: str = "system"

    def __post_init__(self) -> None:
        d = np.asarray(self.demand, dtype=float)
        for attr in ("regions", "dispatchables", "vre_plants", "lines"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        if not self.regions:
            raise ValidationError("at least one region is required")
        if len(set(self.regions)) != len(self.regions):
            raise ValidationError("duplicate region ids")
        ids = [p.id for p in self.dispatchables] + [p.id for p in self.vre_plants]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise ValidationError(f"duplicate plant ids: {sorted(dup)}")
        line_ids = [l.id for l in self.lines]
        if len(set(line_ids)) != len(line_ids):
            raise ValidationError("duplicate line ids")
        for p in (*self.dispatchables, *self.vre_plants):
            if p.region not in self.regions:
                raise ValidationError(f"plant {p.id} references unknown region {p.region!r}")
        for l in self.lines:
            for r in (l.from_region, l.to_region):
                if r not in self.regions:
                    raise ValidationError(f"line {l.id} references unknown region {r!r}")
        if d.shape != (len(self.regions), self.scenarios.D, HOURS):
            raise ValidationError(
                f"demand must be (regions={len(self.regions)}, days={self.scenarios.D}, {HOURS}); got {d.shape}"
            )
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValidationError("demand must be finite and >= 0")
        d.setflags(write=False)
        object.__setattr__(self, "demand", d)
        for v in self.vre_plants:
            if v.profile not in self.scenarios.plants:
                raise ValidationError(f"scenario set has no profile for VRE plant {v.id} (ref {v.profile!r})")
            block = self.scenarios.of(v.profile)
            over = block > v.capacity * (1 + 1e-12)
            if over.any():
                s, dd, h = (int(k) for k in np.argwhere(over)[0])
                raise ValidationError(
                    f"VRE value {block[s, dd, h]:g} MW exceeds capacity {v.capacity:g} MW for plant "
                    f"{v.id} at scenario {s + 1}, day {dd + 1}, hour {h + 1}"
                )
        if self.clustering.K is not None and not 1 <= self.clustering.K <= self.scenarios.D:
            raise ValidationError(f"clustering.K must lie in [1, {self.scenarios.D}], got {self.clustering.K}")
        if not (np.isfinite(self.operating_cost_scale) and self.operating_cost_scale > 0):
            raise ValidationError("operating_cost_scale must be finite and > 0")

    @property
    def D(self) -> int:
        return self.scenarios.D

    @property
    def S(self) -> int:
        return self.scenarios.S

    def region_index(self, region: str) -> int:
        return self.regions.index(region)

    def vre_profile(self, plant: VrePlant) -> np.ndarray:
        return self.scenarios.of(plant.profile)

    def vre(self, plant_id: str) -> VrePlant:
        for v in self.vre_plants:
            if v.id == plant_id:
                return v
        raise KeyError(f"unknown VRE plant {plant_id!r}")

    def replace(self, **changes) -> "PlanningProblem":
        from dataclasses import replace

        return replace(self, **changes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlanningProblem):
            return NotImplemented
        return (
            self.regions == other.regions
            and self.dispatchables == other.dispatchables
            and self.vre_plants == other.vre_plants
            and self.lines == other.lines
            and np.array_equal(self.demand, other.demand)
            and self.scenarios == other.scenarios
            and self.reserve == other.reserve
            and self.clustering == other.clustering
            and self.investment == other.investment
            and self.solver == other.solver
            and self.operating_cost_scale == other.operating_cost_scale
            and self.name == other.name
        )

    __hash__ = None  # type: ignore[assignment]
