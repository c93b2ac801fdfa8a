"""Seeded Monte-Carlo runner for original-vs-amended tracker comparisons."""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model
from .metrics import (
    AggregateSeries,
    RunMetrics,
    SparkEvent,
    aggregate,
    detect_sparks,
    orthonormality_error,
    projection_error_ref,
    reference_basis,
)
from .model import ScenarioConfig
from .tracker import ClampPolicy, TrackerConfig, step_batch

# Fixed chunking keeps results independent of the worker count.
CHUNK = 100


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    n_runs: int = 100
    burn_in: int = 1000
    spark_window: int = 500
    spark_threshold_db: float = 10.0
    output_path: Path | None = None

    def __post_init__(self):
        if self.n_runs < 1:
            raise model.ConfigError("n_runs must be >= 1")

    def with_policy(self, policy: ClampPolicy) -> "ExperimentSpec":
        return dataclasses.replace(self, tracker=dataclasses.replace(self.tracker, clamp_policy=policy))


@dataclass(frozen=True)
class ComparisonReport:
    series_original: AggregateSeries
    series_amended: AggregateSeries
    sparks_original: list[SparkEvent]
    sparks_amended: list[SparkEvent]
    steady_state_db: dict[str, float]
    runs_original: list[RunMetrics] = field(repr=False, compare=False, default_factory=list)
    runs_amended: list[RunMetrics] = field(repr=False, compare=False, default_factory=list)
    break_step: int | None = None


def worker_count() -> int:
    env = os.environ.get("SUBTRACE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_inputs(scenario: ScenarioConfig, run_index: int, n_cols: int):
    seed = scenario.seed
    truth = model.generate_true_bases(scenario, model.stream(seed, run_index, model.STREAM_TRUTH))
    x = model.snapshots(
        truth, scenario, model.stream(seed, run_index, model.STREAM_SNAPSHOTS), scenario.n_steps
    )
    w0 = model.random_orthonormal(
        model.stream(seed, run_index, model.STREAM_INIT), scenario.n_sensors, n_cols
    )
    brk = model.complex_normal(
        model.stream(seed, run_index, model.STREAM_BREAK),
        (scenario.n_sensors, n_cols),
        scenario.break_variance,
    )
    return truth, x, w0, brk


def snapshot_stream(scenario: ScenarioConfig, run_index: int) -> np.ndarray:
    """All snapshots of run ``run_index``; depends on the scenario only."""
    truth = model.generate_true_bases(scenario, model.stream(scenario.seed, run_index, model.STREAM_TRUTH))
    rng = model.stream(scenario.seed, run_index, model.STREAM_SNAPSHOTS)
    return model.snapshots(truth, scenario, rng, scenario.n_steps)


def _simulate(spec: ExperimentSpec, tracker: TrackerConfig, run_indices) -> list[RunMetrics]:
    """Advance a batch of runs in lockstep."""
    sc = spec.scenario
    n_cols = sc.subspace_rank
    inputs = [_run_inputs(sc, r, n_cols) for r in run_indices]
    refs = np.stack([reference_basis(t, tracker.mode) for t, *_ in inputs])
    xs = np.ascontiguousarray(np.stack([x for _, x, _, _ in inputs]).transpose(1, 0, 2))
    w = np.stack([w0 for *_, w0, _ in inputs])
    brk = np.stack([b for *_, b in inputs])

    n_runs, n_steps = len(run_indices), sc.n_steps
    ep = np.empty((n_steps, n_runs))
    eta = np.empty((n_steps, n_runs))
    coord = np.empty((n_steps, n_runs))
    resid = np.empty((n_steps, n_runs))
    beta = np.empty((n_steps, n_runs))
    skipped = np.zeros((n_steps, n_runs), dtype=bool)
    for k in range(n_steps):
        step_no = k + 1
        x = xs[k]
        if step_no == sc.break_step:
            if sc.break_variance > 0:
                w = w + brk
            ep[k] = projection_error_ref(w, refs)
            eta[k] = orthonormality_error(w)
            out = step_batch(w, x, tracker)
        else:
            out = step_batch(w, x, tracker)
            ep[k] = projection_error_ref(out.basis, refs)
            eta[k] = orthonormality_error(out.basis)
        w = out.basis
        coord[k] = (out.q.real**2 + out.q.imag**2).sum(axis=-1)
        resid[k] = (out.p.real**2 + out.p.imag**2).sum(axis=-1)
        beta[k] = out.beta_eff
        skipped[k] = out.skipped

    steps = np.arange(1, n_steps + 1)
    return [
        RunMetrics(
            steps=steps, ep=ep[:, i].copy(), eta=eta[:, i].copy(),
            coord_power=coord[:, i].copy(), resid_power=resid[:, i].copy(),
            beta_eff=beta[:, i].copy(), skipped=skipped[:, i].copy(),
        )
        for i in range(n_runs)
    ]


def run_trial(spec: ExperimentSpec, run_index: int) -> RunMetrics:
    return _simulate(spec, spec.tracker, [run_index])[0]


def run_arm(spec: ExperimentSpec, tracker: TrackerConfig | None = None) -> list[RunMetrics]:
    """All ``spec.n_runs`` trials for one tracker configuration, ordered by run index."""
    tracker = tracker or spec.tracker
    chunks = [list(range(s, min(s + CHUNK, spec.n_runs))) for s in range(0, spec.n_runs, CHUNK)]
    workers = min(worker_count(), len(chunks))
    if workers == 1:
        parts = [_simulate(spec, tracker, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _simulate(spec, tracker, c), chunks))
    return [r for part in parts for r in part]


def steady_window(n_steps: int, break_step: int | None, exempt: int, length: int = 1000) -> np.ndarray:
    """Indices of the last ``length`` steps that are outside the break transient."""
    steps = np.arange(1, n_steps + 1)
    ok = np.ones(n_steps, dtype=bool)
    if break_step is not None:
        ok &= ~((steps >= break_step) & (steps <= break_step + exempt))
    return np.flatnonzero(ok)[-length:]


def steady_state_db(series: AggregateSeries, break_step: int | None, exempt: int) -> float:
    idx = steady_window(len(series), break_step, exempt)
    return float(10.0 * np.log10(series.ep_avg[idx].mean()))


def find_sparks(spec: ExperimentSpec, runs: list[RunMetrics]) -> list[SparkEvent]:
    events = []
    for i, run in enumerate(runs):
        events.extend(
            detect_sparks(
                run.ep, spec.burn_in, spec.spark_window, spec.spark_threshold_db,
                break_step=spec.scenario.break_step, run_index=i,
            )
        )
    return events


def run_comparison(
    spec: ExperimentSpec,
    original: ClampPolicy = ClampPolicy.OFF,
    amended: ClampPolicy = ClampPolicy.GENERIC,
) -> ComparisonReport:
    """Run both arms on identical per-run input streams and summarize."""
    runs_o = run_arm(spec, dataclasses.replace(spec.tracker, clamp_policy=original))
    runs_a = run_arm(spec, dataclasses.replace(spec.tracker, clamp_policy=amended))
    ser_o, ser_a = aggregate(runs_o), aggregate(runs_a)
    brk = spec.scenario.break_step
    return ComparisonReport(
        series_original=ser_o,
        series_amended=ser_a,
        sparks_original=find_sparks(spec, runs_o),
        sparks_amended=find_sparks(spec, runs_a),
        steady_state_db={
            "original": steady_state_db(ser_o, brk, spec.spark_window),
            "amended": steady_state_db(ser_a, brk, spec.spark_window),
        },
        runs_original=runs_o,
        runs_amended=runs_a,
        break_step=brk,
    )
