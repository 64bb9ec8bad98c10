"""Monte Carlo study across candidate placement buses.

Each realization draws one wind-speed path and replays it at every placement
bus (common random numbers: the per-realization stream depends on the base
seed and realization index only, so placements are compared on identical
draws and adding a placement bus never perturbs the others).  Results are
deterministic for a given base seed regardless of how many workers run the
realizations.

Frequency samples are recorded as deviations in pu; the nominal frequency f0
is carried in the summary metadata rather than added onto the series.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .case_model import NetworkCase, bus_positions
from .dynamics import (
    OuParams,
    SwingModel,
    Trajectory,
    TurbineParams,
    build_swing_model,
    simulate,
    simulate_ou,
    wind_to_power,
)
from .errors import GridGfvError
from .powerflow import internal_emfs, solve_powerflow

DEFAULT_BINS = 50


@dataclass(frozen=True)
class McConfig:
    case: NetworkCase
    placement_buses: tuple[int, ...]
    n_realizations: int = 1000
    horizon: float = 200.0  # s
    dt: float = 0.01  # s
    ou: OuParams = field(default_factory=OuParams)
    turbine: TurbineParams = field(default_factory=TurbineParams)
    base_seed: int = 0
    default_damping: float = 1.0
    f0: float = 1.0  # pu

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not self.placement_buses:
            raise ValueError("at least one placement bus is required")
        known = {b.id for b in self.case.buses}
        missing = [b for b in self.placement_buses if b not in known]
        if missing:
            raise GridGfvError(f"placement buses not in case: {missing}")


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class BoxStats:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float


@dataclass(frozen=True)
class PlacementSamples:
    """Raw per-bus collections, one entry per successful realization."""

    ifd_values: tuple[float, ...]
    coi: tuple[np.ndarray, ...]
    poi: tuple[np.ndarray, ...]
    failures: tuple[str, ...]


@dataclass(frozen=True)
class PlacementStats:
    coi_histogram: Histogram
    poi_histogram: Histogram
    ifd_samples: np.ndarray
    ifd_quartiles: BoxStats
    coi_std: float
    poi_std: float
    failures: tuple[str, ...]


@dataclass(frozen=True)
class McSummary:
    order: tuple[int, ...]
    placements: dict[int, PlacementStats]
    n_realizations: int
    partial: bool
    f0: float
    meta: dict


def ifd(traj: Trajectory, f0: float = 1.0) -> float:
    """Integral frequency deviation: sum over buses and samples of the
    absolute gap between bus frequency and nominal.  Since the trajectory
    stores deviations, f0 cancels and the value is the plain absolute sum."""
    return float(np.abs(traj.bus_freq).sum())


def _histogram(samples: np.ndarray, bins: int) -> Histogram:
    lo = float(samples.min())
    hi = float(samples.max())
    if lo == hi:
        return Histogram(edges=np.array([lo, hi]), counts=np.array([samples.size]))
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    return Histogram(edges=edges, counts=counts)


def _box_stats(values: np.ndarray) -> BoxStats:
    q1, median, q3 = (float(v) for v in np.percentile(values, [25.0, 50.0, 75.0]))
    iqr = q3 - q1
    return BoxStats(
        q1=q1,
        median=median,
        q3=q3,
        whisker_low=max(q1 - 1.5 * iqr, float(values.min())),
        whisker_high=min(q3 + 1.5 * iqr, float(values.max())),
    )


def summarize(
    samples: dict[int, PlacementSamples],
    bins: int = DEFAULT_BINS,
    order: tuple[int, ...] | None = None,
    n_realizations: int | None = None,
    f0: float = 1.0,
) -> McSummary:
    """Aggregate raw collections into histograms and boxplot quartiles.

    Histograms are equal-width over the pooled min/max per metric (a single
    degenerate bin when every sample coincides); whiskers sit at 1.5 IQR
    clamped to the data range, with all samples retained in ifd_samples.
    """
    if not samples:
        raise ValueError("no realizations to summarize")
    order = tuple(order) if order is not None else tuple(samples)
    placements = {}
    any_failures = False
    for bus in order:
        group = samples[bus]
        if not group.ifd_values:
            raise ValueError(f"placement bus {bus} has no successful realizations")
        any_failures = any_failures or bool(group.failures)
        coi_pool = np.concatenate(group.coi)
        poi_pool = np.concatenate(group.poi)
        ifd_arr = np.asarray(group.ifd_values)
        placements[bus] = PlacementStats(
            coi_histogram=_histogram(coi_pool, bins),
            poi_histogram=_histogram(poi_pool, bins),
            ifd_samples=ifd_arr,
            ifd_quartiles=_box_stats(ifd_arr),
            coi_std=float(coi_pool.std()),
            poi_std=float(poi_pool.std()),
            failures=group.failures,
        )
    n_real = n_realizations if n_realizations is not None else max(
        len(samples[bus].ifd_values) + len(samples[bus].failures) for bus in order
    )
    return McSummary(
        order=order,
        placements=placements,
        n_realizations=n_real,
        partial=any_failures,
        f0=f0,
        meta={"frequency_values": "deviation_pu", "f0_pu": f0},
    )


# ---------------------------------------------------------------------------
# Realization execution (serial or process pool)
# ---------------------------------------------------------------------------

_WORKER_PAYLOAD = None


def _init_worker(payload):
    global _WORKER_PAYLOAD
    _WORKER_PAYLOAD = payload


def _realization_seed(base_seed: int, realization: int):
    # Shared across placement buses: common random numbers for rank tests.
    return (base_seed, realization)


def _one_realization(payload, realization: int):
    model, buses, bus_rows, ou, turbine, dt, n_steps, base_seed, f0 = payload
    params = replace(ou, dt=dt, seed=_realization_seed(base_seed, realization))
    wind = simulate_ou(params, n_steps)
    dp = wind_to_power(wind, turbine.rated_power, turbine.v_rated, turbine.v_ref)
    results = []
    for bus in buses:
        try:
            traj = simulate(model, bus, dp, dt)
            results.append(
                (ifd(traj, f0), traj.coi_freq, traj.bus_freq[bus_rows[bus]], None)
            )
        except GridGfvError as exc:
            results.append((None, None, None, f"realization {realization}: {exc}"))
    return results


def _pool_realization(realization: int):
    return _one_realization(_WORKER_PAYLOAD, realization)


def resolve_workers(workers: int | None, n_tasks: int) -> int:
    if workers is None:
        env = os.environ.get("GRID_GFV_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(workers, n_tasks))


def run_monte_carlo(
    cfg: McConfig,
    workers: int | None = None,
    model: SwingModel | None = None,
    bins: int = DEFAULT_BINS,
) -> McSummary:
    """Run the full placement study and aggregate the statistics.

    workers=None honors GRID_GFV_THREADS, else uses all available cores.
    Passing a prebuilt SwingModel skips the power-flow/reduction pipeline
    (the model must come from the same case).
    """
    if model is None:
        sol = solve_powerflow(cfg.case)
        emfs = internal_emfs(cfg.case, sol)
        model = build_swing_model(cfg.case, sol, emfs, cfg.default_damping)
    n_steps = int(round(cfg.horizon / cfg.dt))
    if n_steps < 1:
        raise ValueError("horizon must cover at least one step")
    bus_rows = bus_positions(cfg.case)
    payload = (
        model,
        cfg.placement_buses,
        bus_rows,
        cfg.ou,
        cfg.turbine,
        cfg.dt,
        n_steps,
        cfg.base_seed,
        cfg.f0,
    )

    n_workers = resolve_workers(workers, cfg.n_realizations)
    if n_workers == 1:
        rows = [_one_realization(payload, r) for r in range(cfg.n_realizations)]
    else:
        chunk = max(1, cfg.n_realizations // (4 * n_workers))
        with ProcessPoolExecutor(
            max_workers=n_workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            rows = list(
                pool.map(_pool_realization, range(cfg.n_realizations), chunksize=chunk)
            )

    collected: dict[int, PlacementSamples] = {}
    for b_idx, bus in enumerate(cfg.placement_buses):
        ifd_values, coi, poi, failures = [], [], [], []
        for row in rows:
            value, coi_series, poi_series, failure = row[b_idx]
            if failure is None:
                ifd_values.append(value)
                coi.append(coi_series)
                poi.append(poi_series)
            else:
                failures.append(failure)
        collected[bus] = PlacementSamples(
            ifd_values=tuple(ifd_values),
            coi=tuple(coi),
            poi=tuple(poi),
            failures=tuple(failures),
        )

    return summarize(
        collected,
        bins=bins,
        order=cfg.placement_buses,
        n_realizations=cfg.n_realizations,
        f0=cfg.f0,
    )
