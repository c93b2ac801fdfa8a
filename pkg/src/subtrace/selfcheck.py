"""Randomized checks of the update geometry in span(x, y).

Every check draws a batch of random (W, x, beta) instances across several
(N, L) shapes and reports the worst violation against a fixed tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit
from .numkit import complete_basis_batch, complex_normal, mgs, norm, real_angle, span_distance_batch, vdot
from .tracker import AlgoClass, ClampPolicy, Mode, TrackerConfig, gamma_from, rotated_vector, step_batch

SHAPES = ((8, 4), (6, 1), (5, 3), (16, 2), (4, 3))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    n_instances: int
    worst: float
    tol: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} n={self.n_instances:<6} worst={self.worst:.3e} tol={self.tol:.1e}"


@dataclass
class Instances:
    w: np.ndarray
    x: np.ndarray
    beta: np.ndarray


def draw(rng: np.random.Generator, n_total: int, beta_range=(1e-3, 1.0)) -> list[Instances]:
    """Random instances, split evenly over ``SHAPES``.

    Snapshots are scaled log-uniformly over two decades so that both binding
    and non-binding clamps occur.
    """
    per = -(-n_total // len(SHAPES))
    out = []
    for n, l in SHAPES:
        w, _ = mgs(complex_normal(rng, (per, n, l)))
        x = complex_normal(rng, (per, n)) * 10.0 ** rng.uniform(-1, 1, (per, 1))
        lo, hi = np.log10(beta_range[0]), np.log10(beta_range[1])
        beta = 10.0 ** rng.uniform(lo, hi, per)
        out.append(Instances(w, x, beta))
    return out


def _result(name, values, tol, n) -> CheckResult:
    worst = float(np.max(values))
    return CheckResult(name, bool(worst <= tol), n, worst, tol)


def check_com_invariance(rng, n: int = 10_000, tol: float = 1e-14) -> list[CheckResult]:
    """span(T) equals span(h, COM): the update only turns y inside span(x, y)."""
    results = []
    for algo in AlgoClass:
        worst = []
        count = 0
        for mode in Mode:
            cfg = TrackerConfig(algo, mode, 1.0, ClampPolicy.GENERIC)
            for inst in draw(rng, n // 2):
                out = step_batch(inst.w, inst.x, cfg)
                base = complete_basis_batch(inst.w, out.y)
                d = inst.x if algo is AlgoClass.DPM else out.p
                h = rotated_vector(out.y, d, norm(out.q), out.beta_eff, cfg.sign)
                base[..., :, 0] = h
                worst.append(span_distance_batch(out.t_pre, base))
                count += len(inst.x)
        results.append(_result(f"com_invariance[{algo.value}]", np.concatenate(worst), tol, count))
    return results


def check_companion_orthogonality(rng, n: int = 10_000, tol: float = 1e-10) -> CheckResult:
    vals, count = [], 0
    for inst in draw(rng, n):
        y = numkit.apply(inst.w, numkit.hermitian_apply(inst.w, inst.x))
        t = y - inst.x * (vdot(inst.x, y) / norm(inst.x) ** 2)[..., None]
        vals.append(np.abs(vdot(inst.x, t)) / (norm(inst.x) * norm(y)))
        count += len(inst.x)
    return _result("companion_t_orthogonal_to_x", np.concatenate(vals), tol, count)


def check_residual_orthogonality(rng, n: int = 10_000) -> list[CheckResult]:
    p_vals, com_vals, count = [], [], 0
    for inst in draw(rng, n):
        q = numkit.hermitian_apply(inst.w, inst.x)
        y = numkit.apply(inst.w, q)
        p = inst.x - y
        p_vals.append(norm(numkit.hermitian_apply(inst.w, p)) / norm(inst.x))
        com = complete_basis_batch(inst.w, y)[..., :, 1:]
        if com.shape[-1]:
            com_vals.append(np.abs(numkit.hermitian_apply(com, inst.x)).max(axis=-1) / norm(inst.x))
        count += len(inst.x)
    return [
        _result("residual_p_orthogonal_to_W", np.concatenate(p_vals), 1e-9, count),
        _result("x_orthogonal_to_COM", np.concatenate(com_vals), 1e-8, count),
    ]


def check_clamp_bound(rng, n: int = 10_000, tol: float = 1e-12) -> CheckResult:
    vals, count = [], 0
    for algo in AlgoClass:
        for mode in Mode:
            cfg = TrackerConfig(algo, mode, 1e3, ClampPolicy.GENERIC)
            for inst in draw(rng, n // 4):
                out = step_batch(inst.w, inst.x, cfg)
                vals.append(out.beta_eff * norm(inst.x) ** 2 - 1.0)
                count += len(inst.x)
    return _result("clamp_bound_beta_x2_le_1", np.concatenate(vals), tol, count)


def _turn_excess(algo: AlgoClass, mode: Mode, policy: ClampPolicy, rng, n: int) -> np.ndarray:
    """How far h turns past its boundary (x for signal, t for noise), in radians."""
    cfg = TrackerConfig(algo, mode, 1e3, policy)
    vals = []
    for inst in draw(rng, n, beta_range=(1e-3, 1e3)):
        out = step_batch(inst.w, inst.x, cfg)
        d = inst.x if algo is AlgoClass.DPM else out.p
        h = rotated_vector(out.y, d, norm(out.q), out.beta_eff, cfg.sign)
        theta = real_angle(inst.x, out.y)
        gamma = real_angle(out.y, h)
        bound = np.pi / 2 - theta if mode is Mode.NOISE else theta
        vals.append(gamma - bound)
    return np.concatenate(vals)


def check_no_overturn(rng, n: int = 10_000, tol: float = 1e-8) -> list[CheckResult]:
    cases = [
        ("no_overturn[dpm/noise,generic]", AlgoClass.DPM, Mode.NOISE, ClampPolicy.GENERIC),
        ("no_overturn[dpm/noise,class]", AlgoClass.DPM, Mode.NOISE, ClampPolicy.CLASS_SPECIFIC),
        ("no_overturn[oja/noise,class]", AlgoClass.OJA, Mode.NOISE, ClampPolicy.CLASS_SPECIFIC),
        ("no_overturn[oja/signal,class]", AlgoClass.OJA, Mode.SIGNAL, ClampPolicy.CLASS_SPECIFIC),
        ("no_overturn[oja/noise,generic]", AlgoClass.OJA, Mode.NOISE, ClampPolicy.GENERIC),
        ("no_overturn[oja/signal,generic]", AlgoClass.OJA, Mode.SIGNAL, ClampPolicy.GENERIC),
    ]
    out = []
    for name, algo, mode, policy in cases:
        vals = _turn_excess(algo, mode, policy, rng, n)
        out.append(_result(name, vals, tol, len(vals)))
    return out


def check_cone_containment(rng, n: int = 10_000, tol: float = 1e-10) -> CheckResult:
    """DPM signal tracking keeps h between y and x for any positive stepsize."""
    cfg = TrackerConfig(AlgoClass.DPM, Mode.SIGNAL, 1.0, ClampPolicy.OFF)
    vals, count = [], 0
    for inst in draw(rng, n, beta_range=(1e-4, 1e4)):
        q = numkit.hermitian_apply(inst.w, inst.x)
        y = numkit.apply(inst.w, q)
        h = rotated_vector(y, inst.x, norm(q), inst.beta, cfg.sign)
        theta = real_angle(y, inst.x)
        vals.append(np.maximum(real_angle(h, inst.x) - theta, real_angle(h, y) - theta))
        count += len(inst.x)
    return _result("cone_containment[dpm/signal]", np.concatenate(vals), tol, count)


def check_gamma_closed_form(rng, n: int = 10_000, tol: float = 1e-9) -> CheckResult:
    """Closed-form rotation angle vs the angle measured on the constructed h."""
    vals, count = [], 0
    for inst in draw(rng, n):
        q = numkit.hermitian_apply(inst.w, inst.x)
        y = numkit.apply(inst.w, q)
        nx = norm(inst.x)
        beta = rng.uniform(0.0, 1.0, len(nx)) / nx**2
        h = rotated_vector(y, inst.x, norm(q), beta, -1.0)
        theta = real_angle(inst.x, y)
        closed = gamma_from(beta * nx * norm(y), theta)
        vals.append(np.abs(closed - real_angle(y, h)))
        count += len(nx)
    return _result("gamma_closed_form_vs_measured", np.concatenate(vals), tol, count)


def run_all(seed: int = 0, n: int = 10_000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    results += check_com_invariance(rng, n)
    results.append(check_companion_orthogonality(rng, n))
    results += check_residual_orthogonality(rng, n)
    results.append(check_clamp_bound(rng, n))
    results += check_no_overturn(rng, n)
    results.append(check_cone_containment(rng, n))
    results.append(check_gamma_closed_form(rng, n))
    return results
