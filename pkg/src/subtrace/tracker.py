"""DPM- and OJA-class subspace trackers with a per-step stepsize limiter.

One step of either class is

    q = W^H x,   y = W q,   p = x - y
    T = W + sign * beta * d q^H        (d = x for DPM, d = p for OJA)
    W <- orthonormalize(T)

with sign = +1 for principal (signal) and -1 for minor (noise) subspace
tracking. The limiter caps beta at 1/||x||^2 (or at the class-specific bound)
for the step at hand, which keeps the rotated basis vector from overshooting
its geometric boundary in span(x, y).

``step_batch`` is the workhorse and runs on stacks of states; ``update`` is the
single-state wrapper around it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .numkit import NORM_TOL, complete_basis, complex_normal, mgs, norm, real_angle


class AlgoClass(enum.Enum):
    DPM = "dpm"
    OJA = "oja"


class Mode(enum.Enum):
    SIGNAL = "signal"
    NOISE = "noise"


class ClampPolicy(enum.Enum):
    OFF = "off"
    GENERIC = "generic"
    CLASS_SPECIFIC = "class"


@dataclass(frozen=True)
class TrackerConfig:
    algo_class: AlgoClass = AlgoClass.OJA
    mode: Mode = Mode.NOISE
    beta_nominal: float = 0.08
    clamp_policy: ClampPolicy = ClampPolicy.GENERIC

    def __post_init__(self):
        for name, kind in (("algo_class", AlgoClass), ("mode", Mode), ("clamp_policy", ClampPolicy)):
            value = getattr(self, name)
            if not isinstance(value, kind):
                object.__setattr__(self, name, kind(value))
        if not self.beta_nominal > 0:
            raise ValueError("beta_nominal must be > 0")

    @property
    def sign(self) -> float:
        return 1.0 if self.mode is Mode.SIGNAL else -1.0


@dataclass(frozen=True)
class TrackerState:
    basis: np.ndarray
    step: int = 0


@dataclass(frozen=True)
class StepRecord:
    x: np.ndarray
    q: np.ndarray
    y: np.ndarray
    p: np.ndarray
    beta_eff: float
    t_pre: np.ndarray
    skipped: bool = False
    reason: str = field(default="", compare=False)


def init_tracker(cfg: TrackerConfig, n: int, l: int, rng: np.random.Generator) -> TrackerState:
    if not 1 <= l <= n:
        raise ValueError("need 1 <= l <= n")
    return TrackerState(basis=numkit.orthonormalize(complex_normal(rng, (n, l))), step=0)


def _bound_norm_sq(cfg: TrackerConfig, xx, yy, pp):
    """Squared norm whose reciprocal bounds beta, or None for no bound."""
    if cfg.clamp_policy is ClampPolicy.OFF:
        return None
    if cfg.clamp_policy is ClampPolicy.GENERIC:
        return xx
    if cfg.algo_class is AlgoClass.DPM:
        return None if cfg.mode is Mode.SIGNAL else xx
    return pp if cfg.mode is Mode.NOISE else yy


def _beta_batch(cfg: TrackerConfig, xx, yy, pp):
    """Effective stepsizes and the degenerate mask for squared norms."""
    bound = _bound_norm_sq(cfg, xx, yy, pp)
    degenerate = xx <= NORM_TOL**2
    beta = np.full(np.shape(xx), cfg.beta_nominal)
    if bound is not None:
        degenerate = degenerate | (bound <= NORM_TOL**2)
        safe = np.where(degenerate, 1.0, bound)
        beta = np.minimum(beta, 1.0 / safe)
    return beta, degenerate


def clamp_beta(cfg: TrackerConfig, x, y, p) -> float | None:
    """Per-step stepsize. ``None`` means the step must be skipped."""
    sq = [float(norm(np.asarray(v, dtype=np.complex128)) ** 2) for v in (x, y, p)]
    beta, degenerate = _beta_batch(cfg, *(np.float64(s) for s in sq))
    return None if degenerate else float(beta)


@dataclass
class BatchStep:
    basis: np.ndarray
    q: np.ndarray
    y: np.ndarray
    p: np.ndarray
    beta_eff: np.ndarray
    t_pre: np.ndarray
    skipped: np.ndarray
    rank_failed: np.ndarray


def step_batch(w: np.ndarray, x: np.ndarray, cfg: TrackerConfig) -> BatchStep:
    """Advance a ``(..., N, L)`` stack of bases by one snapshot each."""
    q = numkit.hermitian_apply(w, x)
    y = numkit.apply(w, q)
    p = x - y
    sq = lambda v: (v.real**2 + v.imag**2).sum(axis=-1)
    beta, degenerate = _beta_batch(cfg, sq(x), sq(y), sq(p))
    d = x if cfg.algo_class is AlgoClass.DPM else p
    coef = (cfg.sign * beta)[..., None, None]
    t = w + coef * (d[..., :, None] * q.conj()[..., None, :])
    new, deficient = mgs(t)
    rank_failed = deficient >= 0
    skipped = degenerate | rank_failed
    new = np.where(skipped[..., None, None], w, new)
    return BatchStep(new, q, y, p, beta, t, skipped, rank_failed)


def update(state: TrackerState, cfg: TrackerConfig, x) -> tuple[TrackerState, StepRecord]:
    w = state.basis
    x = numkit.as_cvector(x)
    if x.shape[0] != w.shape[0]:
        raise numkit.DimensionError("snapshot length", w.shape[0], x.shape[0])
    out = step_batch(w, x, cfg)
    skipped = bool(out.skipped)
    reason = ""
    if skipped:
        reason = "rank deficiency" if bool(out.rank_failed) else "degenerate norm"
    record = StepRecord(
        x=x, q=out.q, y=out.y, p=out.p, beta_eff=float(out.beta_eff), t_pre=out.t_pre,
        skipped=skipped, reason=reason,
    )
    return TrackerState(basis=out.basis, step=state.step + 1), record


def companion_t(x, y) -> np.ndarray:
    """Component of y orthogonal to x."""
    x = numkit.as_cvector(x)
    y = numkit.as_cvector(y)
    xx = float(norm(x)) ** 2
    if xx <= NORM_TOL**2:
        raise numkit.DegenerateVectorError("x is numerically zero")
    return y - x * (np.vdot(x, y) / xx)


class OverturnError(ArithmeticError):
    """The rotated vector has turned past the companion vector t."""


def gamma_from(a: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotation angle from ``a = beta ||x|| ||y||`` and ``theta = angle(x, y)``.

    ``tan(gamma) = a sin(theta) / (1 - a cos(theta))``; batched, no checks.
    """
    return np.arctan2(a * np.sin(theta), 1.0 - a * np.cos(theta))


def gamma_angle(x, y, beta: float) -> float:
    """Angle between y and the DPM minor-subspace rotated vector, in radians."""
    x = numkit.as_cvector(x)
    y = numkit.as_cvector(y)
    theta = float(real_angle(x, y))
    a = beta * float(norm(x)) * float(norm(y))
    if 1.0 - a * np.cos(theta) <= 0:
        raise OverturnError(f"beta*||x||*||y||*cos(theta) = {a * np.cos(theta):.6g} >= 1")
    return float(gamma_from(a, theta))


def rotated_vector(y: np.ndarray, d: np.ndarray, q_norm, beta, sign: float) -> np.ndarray:
    """``h = y/||y|| + sign * beta * ||q|| * d``; batched."""
    beta = np.asarray(beta)
    return y / norm(y)[..., None] + (sign * beta * q_norm)[..., None] * d


def rotated_update_basis(state_prev: TrackerState, rec: StepRecord, cfg: TrackerConfig) -> np.ndarray:
    """The ``(h, COM)`` basis of the updated span, COM taken from the old basis."""
    if float(norm(rec.y)) <= NORM_TOL:
        raise numkit.DegenerateVectorError("y is numerically zero")
    base = complete_basis(state_prev.basis, rec.y)
    d = rec.x if cfg.algo_class is AlgoClass.DPM else rec.p
    h = rotated_vector(rec.y, d, norm(rec.q), rec.beta_eff, cfg.sign)
    base[:, 0] = h
    return base
