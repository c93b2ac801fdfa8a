"""Projection error, orthonormality error, spark detection and run aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import TrueBases
from .numkit import DimensionError
from .tracker import Mode


@dataclass(frozen=True)
class MetricSample:
    step: int
    ep: float
    eta: float
    coord_power: float
    resid_power: float


@dataclass(frozen=True)
class RunMetrics:
    """Per-step metric arrays of one run; ``steps[i]`` is the step number."""

    steps: np.ndarray
    ep: np.ndarray
    eta: np.ndarray
    coord_power: np.ndarray
    resid_power: np.ndarray
    beta_eff: np.ndarray
    skipped: np.ndarray

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i) -> MetricSample:
        return MetricSample(
            int(self.steps[i]), float(self.ep[i]), float(self.eta[i]),
            float(self.coord_power[i]), float(self.resid_power[i]),
        )

    def __eq__(self, other):
        if not isinstance(other, RunMetrics):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("steps", "ep", "eta", "coord_power", "resid_power", "beta_eff", "skipped")
        )


@dataclass(frozen=True)
class AggregateSeries:
    steps: np.ndarray
    ep_avg: np.ndarray
    ep_max: np.ndarray
    eta_avg: np.ndarray
    eta_max: np.ndarray
    n_runs: int

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class SparkEvent:
    run_index: int
    step: int
    magnitude_db: float


def reference_basis(truth: TrueBases, mode: Mode) -> np.ndarray:
    return truth.signal_basis if Mode(mode) is Mode.SIGNAL else truth.noise_basis


def _sq_frob(m: np.ndarray) -> np.ndarray:
    return (m.real**2 + m.imag**2).sum(axis=(-2, -1))


def projection_error_ref(w: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """``||R R^H - W W^H||_F^2`` for orthonormal ``R``; batched over W and R.

    Uses ``rank(R) + ||W^H W||_F^2 - 2 ||R^H W||_F^2`` so no N x N matrix is
    formed. W need not be orthonormal.
    """
    if w.shape[-2] != ref.shape[-2]:
        raise DimensionError("rows of W vs reference basis", ref.shape[-2], w.shape[-2])
    wh = np.swapaxes(w.conj(), -1, -2)
    rh = np.swapaxes(ref.conj(), -1, -2)
    e = ref.shape[-1] + _sq_frob(wh @ w) - 2.0 * _sq_frob(rh @ w)
    return np.maximum(e, 0.0)


def projection_error(w, truth: TrueBases, mode: Mode = Mode.SIGNAL) -> float:
    w = np.asarray(w, dtype=np.complex128)
    return float(projection_error_ref(w, reference_basis(truth, mode)))


def orthonormality_error(w) -> np.ndarray | float:
    """``||W^H W - I_L||_F^2``; batched."""
    w = np.asarray(w, dtype=np.complex128)
    g = np.swapaxes(w.conj(), -1, -2) @ w
    g = g - np.eye(w.shape[-1])
    out = _sq_frob(g)
    return float(out) if np.ndim(out) == 0 else out


def coordinate_power(w, x):
    """``||W^H x||^2``, the quantity a DPM-type update maximizes on average."""
    q = np.swapaxes(np.asarray(w).conj(), -1, -2) @ np.asarray(x)[..., None]
    return (np.abs(q[..., 0]) ** 2).sum(axis=-1)


def residual_power(w, x):
    """``||x - W W^H x||^2``, the quantity an Oja-type update minimizes on average."""
    w = np.asarray(w)
    x = np.asarray(x)
    q = np.swapaxes(w.conj(), -1, -2) @ x[..., None]
    r = x - (w @ q)[..., 0]
    return (np.abs(r) ** 2).sum(axis=-1)


def detect_sparks(
    series,
    burn_in: int = 1000,
    window: int = 500,
    threshold_db: float = 10.0,
    break_step: int | None = None,
    run_index: int = 0,
) -> list[SparkEvent]:
    """Steps whose ep exceeds the trailing-window median by ``threshold_db``.

    ``series[i]`` is the ep at step ``i + 1``. Only steps ``k > burn_in`` with a
    full trailing window are examined; steps in ``[break_step, break_step + window]``
    are exempt.
    """
    ep = np.asarray(series, dtype=float)
    if window < 16:
        raise ValueError("window must be >= 16")
    if not 0 <= burn_in < len(ep):
        raise ValueError("burn_in must lie in [0, len(series))")
    if len(ep) <= window:
        return []
    # baseline[j] is the median of ep[j : j + window], used for index j + window
    baseline = np.median(sliding_window_view(ep, window)[:-1], axis=1)
    idx = np.arange(window, len(ep))
    steps = idx + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = 10.0 * np.log10(ep[idx] / baseline)
    keep = (steps > burn_in) & (excess >= threshold_db)
    if break_step is not None:
        keep &= ~((steps >= break_step) & (steps <= break_step + window))
    return [
        SparkEvent(run_index, int(k), float(m)) for k, m in zip(steps[keep], excess[keep])
    ]


def aggregate(runs) -> AggregateSeries:
    """Per-step mean and max across runs, in the linear domain."""
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to aggregate")
    lengths = {len(r) for r in runs}
    if len(lengths) != 1:
        raise ValueError(f"ragged run lengths: {sorted(lengths)}")
    ep = np.stack([r.ep for r in runs])
    eta = np.stack([r.eta for r in runs])
    return AggregateSeries(
        steps=np.asarray(runs[0].steps).copy(),
        ep_avg=ep.mean(axis=0),
        ep_max=ep.max(axis=0),
        eta_avg=eta.mean(axis=0),
        eta_max=eta.max(axis=0),
        n_runs=len(runs),
    )


def to_db(values, floor: float = 1e-300, floor_db: float = -3000.0):
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 10.0 * np.log10(values)
    return np.where(values < floor, floor_db, out)
