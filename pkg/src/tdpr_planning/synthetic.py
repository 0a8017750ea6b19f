"""Seeded synthetic systems for demos, tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .data import (
    HOURS,
    ClusteringConfig,
    DispatchablePlant,
    NetworkLine,
    PlanningProblem,
    ReserveConfig,
    ScenarioSet,
    VrePlant,
    uniform_probabilities,
)

_HOUR = np.arange(HOURS)


def _wind(rng: np.random.Generator, S: int, D: int, cap: float) -> np.ndarray:
    """AR(1)-style capacity factors around a diurnal mean."""
    base = 0.45 + 0.1 * np.cos(2 * np.pi * (_HOUR - 3) / HOURS)
    out = np.empty((S, D, HOURS))
    for s in range(S):
        for d in range(D):
            e = np.empty(HOURS)
            e[0] = rng.normal(0, 0.15)
            for h in range(1, HOURS):
                e[h] = 0.8 * e[h - 1] + rng.normal(0, 0.08)
            out[s, d] = np.clip(base + e, 0.0, 1.0)
    return cap * out


def _solar(rng: np.random.Generator, S: int, D: int, cap: float) -> np.ndarray:
    bell = np.clip(np.sin(np.pi * (_HOUR - 6) / 12), 0.0, None)
    cloud = np.clip(rng.normal(0.8, 0.15, size=(S, D, 1)) + rng.normal(0, 0.05, size=(S, D, HOURS)), 0.0, 1.0)
    return cap * bell[None, None, :] * cloud


def random_system(seed: int = 0, S: int = 4, D: int = 4, K: int | None = 2, n_vre: int = 3,
                  n_candidates_disp: int = 2, binary_candidates: int = 1, lam: float = 0.5,
                  beta: float = 0.25, candidate_line: bool = True) -> PlanningProblem:
    """Two-region system with existing thermal fleet, candidate VRE/dispatchables and lines.

    The first ``binary_candidates`` candidates (dispatchables first, then the
    line) are 0/1 decisions; the rest are continuous in [0, 1].
    """
    rng = np.random.default_rng(seed)
    regions = ("north", "south")
    shape = 0.75 + 0.25 * np.sin(np.pi * (_HOUR - 8) / 14).clip(-0.6, None)
    demand = np.stack([
        lvl * shape[None, :] * rng.uniform(0.9, 1.1, size=(D, 1)) for lvl in (300.0, 220.0)
    ])

    disp = [
        DispatchablePlant("coal_n", "north", 260.0, 25.0, ramp=120.0),
        DispatchablePlant("gas_s", "south", 160.0, 45.0, ramp=80.0),
    ]
    n_bin = binary_candidates
    for i in range(n_candidates_disp):
        region = regions[i % 2]
        is_ocgt = i % 2 == 1
        disp.append(DispatchablePlant(
            f"{'ocgt' if is_ocgt else 'ccgt'}_{i + 1}", region,
            gmax=float(rng.uniform(60, 120)),
            var_cost=float(rng.uniform(70, 95) if is_ocgt else rng.uniform(35, 50)),
            inv_cost=float(rng.uniform(6e4, 1.4e5) * (0.6 if is_ocgt else 1.0)),
            existing=False,
            investable_binary=n_bin > 0,
            tech="ocgt" if is_ocgt else "ccgt",
        ))
        n_bin -= 1

    profiles, names, vre = [], [], []
    for i in range(n_vre):
        region = regions[i % 2]
        cap = float(rng.uniform(80, 160))
        solar = i % 3 == 2
        profiles.append(_solar(rng, S, D, cap) if solar else _wind(rng, S, D, cap))
        pid = f"{'pv' if solar else 'wind'}_{i + 1}"
        names.append(pid)
        vre.append(VrePlant(pid, region, cap, inv_cost=float(rng.uniform(1.2e5, 2.4e5)),
                            existing=False, tech="solar" if solar else "wind"))

    lines = [NetworkLine("n_s", "north", "south", 80.0)]
    if candidate_line:
        lines.append(NetworkLine("n_s_2", "north", "south", 60.0, inv_cost=float(rng.uniform(2e4, 6e4)),
                                 existing=False))
    scen = ScenarioSet(tuple(names), np.stack(profiles), uniform_probabilities(S))
    return PlanningProblem(
        regions=regions,
        dispatchables=tuple(disp),
        vre_plants=tuple(vre),
        lines=tuple(lines),
        demand=demand,
        scenarios=scen,
        reserve=ReserveConfig(lam=lam, beta=beta),
        clustering=ClusteringConfig(K=K, seed=seed),
        operating_cost_scale=1.0,
        name=f"synthetic-{seed}",
    )


def main(argv: list[str] | None = None) -> int:
    import argparse

    from .io import save_problem

    ap = argparse.ArgumentParser(description="write a seeded synthetic system (config + CSVs)")
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-S", type=int, default=4)
    ap.add_argument("-D", type=int, default=4)
    ap.add_argument("-K", type=int, default=2)
    ap.add_argument("--vre", type=int, default=3)
    args = ap.parse_args(argv)
    cfg, scen = save_problem(random_system(args.seed, S=args.S, D=args.D, K=args.K, n_vre=args.vre), args.out_dir)
    print(f"wrote {cfg} and {scen}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
