"""Synthetic sensor-array scenario: manifolds, snapshots and the basis break."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numkit import complex_normal, mgs, orthonormalize

# Named sub-streams of one run's generator family.
STREAM_TRUTH = 0
STREAM_INIT = 1
STREAM_SNAPSHOTS = 2
STREAM_BREAK = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_sensors: int = 8
    subspace_rank: int = 4
    signal_powers: tuple[float, ...] = (10.0, 1.0, 0.1, 0.1)
    noise_variance: float = 1e-3
    n_steps: int = 6000
    break_step: int | None = 3000
    break_variance: float = 0.1
    seed: int = 0
    manifold: str = "random"

    def __post_init__(self):
        object.__setattr__(self, "signal_powers", tuple(float(p) for p in self.signal_powers))
        if self.n_sensors < 1 or self.subspace_rank < 1:
            raise ConfigError("n_sensors and subspace_rank must be positive")
        if self.subspace_rank > self.n_sensors:
            raise ConfigError("subspace_rank must not exceed n_sensors")
        if len(self.signal_powers) != self.subspace_rank:
            raise ConfigError(
                f"signal_powers has {len(self.signal_powers)} entries, expected {self.subspace_rank}"
            )
        if any(p <= 0 for p in self.signal_powers):
            raise ConfigError("signal_powers must be > 0")
        if self.noise_variance <= 0:
            raise ConfigError("noise_variance must be > 0")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be positive")
        if self.break_step is not None and not 1 <= self.break_step <= self.n_steps:
            raise ConfigError("break_step must lie in [1, n_steps]")
        if self.break_variance < 0:
            raise ConfigError("break_variance must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.manifold not in ("random", "canonical"):
            raise ConfigError("manifold must be 'random' or 'canonical'")

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        return parse_config(Path(path).read_text(encoding="utf-8"))

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed)


_INT_KEYS = {"n_sensors", "subspace_rank", "n_steps", "seed"}
_FLOAT_KEYS = {"noise_variance", "break_variance"}


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                values[key] = int(value, 0)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "signal_powers":
                values[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key == "break_step":
                values[key] = None if value.lower() in ("", "none") else int(value)
            elif key == "manifold":
                values[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return ScenarioConfig(**values)


def stream(seed: int, run_index: int, name: int) -> np.random.Generator:
    """Counter-based generator for one named stream of run ``run_index``."""
    ss = np.random.SeedSequence([seed ^ run_index, name])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TrueBases:
    manifold: np.ndarray
    signal_basis: np.ndarray
    noise_basis: np.ndarray


def generate_true_bases(cfg: ScenarioConfig, rng: np.random.Generator) -> TrueBases:
    n, l = cfg.n_sensors, cfg.subspace_rank
    if cfg.manifold == "canonical":
        frame = np.eye(n, dtype=np.complex128)
    else:
        # Completing the random L columns with N-L more random columns gives
        # the complement in the same MGS pass.
        frame = orthonormalize(complex_normal(rng, (n, n)))
    return TrueBases(manifold=frame[:, :l], signal_basis=frame[:, :l], noise_basis=frame[:, l:])


def snapshots(bases: TrueBases, cfg: ScenarioConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` snapshots ``x = A s + n`` as a ``(count, N)`` array."""
    powers = np.asarray(cfg.signal_powers)
    s = complex_normal(rng, (count, cfg.subspace_rank), powers)
    noise = complex_normal(rng, (count, cfg.n_sensors), cfg.noise_variance)
    return s @ bases.manifold.T + noise


def snapshot(bases: TrueBases, cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    return snapshots(bases, cfg, rng, 1)[0]


def perturb_basis(w: np.ndarray, break_variance: float, rng: np.random.Generator) -> np.ndarray:
    """``W + E`` with complex Gaussian ``E``; deliberately not re-orthonormalized."""
    if break_variance == 0:
        return np.array(w, dtype=np.complex128, copy=True)
    return w + complex_normal(rng, w.shape, break_variance)


def random_orthonormal(rng: np.random.Generator, n: int, l: int, batch: tuple[int, ...] = ()) -> np.ndarray:
    q, deficient = mgs(complex_normal(rng, (*batch, n, l)))
    if np.any(deficient >= 0):
        raise np.linalg.LinAlgError("random draw was rank deficient")
    return q
