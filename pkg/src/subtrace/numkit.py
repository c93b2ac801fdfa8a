"""Small complex linear-algebra kit used by the trackers.

Vectors and matrices are plain ``complex128`` numpy arrays. Most routines
accept leading batch axes (``(..., n)`` vectors, ``(..., n, l)`` matrices)
so a whole Monte-Carlo ensemble can be advanced in one call. Reductions are
written as elementwise products summed along a fixed axis, which keeps each
batch member's result independent of the batch it is computed in.
"""

from __future__ import annotations

import numpy as np

ORTHO_TOL = 1e-10
RANK_TOL = 1e-12
SPAN_TOL = 1e-8
NORM_TOL = 1e-150


class DimensionError(ValueError):
    def __init__(self, what: str, expected, actual):
        super().__init__(f"{what}: expected {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class RankDeficiencyError(np.linalg.LinAlgError):
    """Raised when a column is (numerically) dependent on earlier columns."""

    def __init__(self, column: int):
        super().__init__(f"rank deficient at column {column}")
        self.column = column


class DegenerateVectorError(ValueError):
    pass


class NotInSpanError(ValueError):
    pass


def as_cvector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.shape[0] < 1:
        raise DimensionError("vector shape", "(n,) with n >= 1", v.shape)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_cmatrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or min(m.shape) < 1:
        raise DimensionError("matrix shape", "(n, l) with n, l >= 1", m.shape)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def vdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched ``a^H b`` over the last axis."""
    return (a.conj() * b).sum(axis=-1)


def norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt((v.real**2 + v.imag**2).sum(axis=-1))


def hermitian_apply(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Return ``M^H v``; batched over leading axes."""
    if m.shape[-2] != v.shape[-1]:
        raise DimensionError("rows of M vs length of v", m.shape[-2], v.shape[-1])
    return (m.conj() * v[..., :, None]).sum(axis=-2)


def apply(m: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Return ``M c``; batched over leading axes."""
    if m.shape[-1] != c.shape[-1]:
        raise DimensionError("columns of M vs length of c", m.shape[-1], c.shape[-1])
    return (m * c[..., None, :]).sum(axis=-1)


def gram(m: np.ndarray) -> np.ndarray:
    """Return ``M^H M``."""
    return (m.conj()[..., :, :, None] * m[..., :, None, :]).sum(axis=-3)


def mgs(t: np.ndarray, rank_tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Works on ``(..., n, l)`` stacks. Returns ``(Q, deficient)`` where
    ``deficient`` holds, per batch member, the index of the first column
    whose residual fell below ``rank_tol`` times the largest input column
    norm, or -1. Deficient columns are left as zeros in ``Q``.
    """
    t = np.asarray(t, dtype=np.complex128)
    n_cols = t.shape[-1]
    q = t.copy()
    scale = norm(np.swapaxes(t, -1, -2)).max(axis=-1)
    deficient = np.full(t.shape[:-2], -1, dtype=np.int64)
    for i in range(n_cols):
        v = q[..., :, i]
        for _ in range(2):
            for j in range(i):
                u = q[..., :, j]
                v = v - u * vdot(u, v)[..., None]
        r = norm(v)
        bad = r <= rank_tol * scale
        deficient = np.where(bad & (deficient < 0), i, deficient)
        safe = np.where(bad, 1.0, r)
        v = np.where(bad[..., None], 0.0, v / safe[..., None])
        q[..., :, i] = v
    return q, deficient


def orthonormalize(t, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis for span(T), column i built from columns 1..i.

    The implied triangular factor has a real positive diagonal.
    """
    t = as_cmatrix(t)
    q, deficient = mgs(t, rank_tol)
    if deficient >= 0:
        raise RankDeficiencyError(int(deficient))
    return q


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples of the given variance."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    z = rng.standard_normal((*shape, 2))
    return np.sqrt(np.asarray(variance) / 2.0) * (z[..., 0] + 1j * z[..., 1])


def projector(w: np.ndarray) -> np.ndarray:
    """``W W^H``."""
    return w @ np.swapaxes(w.conj(), -1, -2)


def span_distance_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unchecked, batched ``span_distance``.

    For equal ranks ``||P_A - P_B||_F^2 = 2 ||(I - P_A) Q_B||_F^2``; forming the
    residual directly avoids the cancellation in ``2 (L - ||Q_A^H Q_B||_F^2)``.
    The two one-sided residuals are averaged so the result is symmetric.
    """
    qa, _ = mgs(a)
    qb, _ = mgs(b)

    def resid(u, v):
        r = v - u @ (np.swapaxes(u.conj(), -1, -2) @ v)
        return (r.real**2 + r.imag**2).sum(axis=(-2, -1))

    return resid(qa, qb) + resid(qb, qa)


def span_distance(a, b) -> float:
    """``||P_A - P_B||_F^2`` after orthonormalizing both inputs."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape != b.shape:
        raise DimensionError("basis shapes", a.shape, b.shape)
    orthonormalize(a)
    orthonormalize(b)
    return float(span_distance_batch(a, b))


def principal_angles(a, b) -> np.ndarray:
    """Principal angles (radians, ascending) between span(A) and span(B)."""
    qa = orthonormalize(a)
    qb = orthonormalize(b)
    s = np.linalg.svd(qa.conj().T @ qb, compute_uv=False)
    return np.sort(np.arccos(np.clip(s, 0.0, 1.0)))


def complete_basis(w, y, span_tol: float = SPAN_TOL, norm_tol: float = NORM_TOL) -> np.ndarray:
    """Rebase span(W) as ``(y/||y||, COM)`` with COM orthogonal to y.

    COM is ``W @ Q_com`` where ``(q0, Q_com)`` is unitary and
    ``q0 = W^H y / ||y||``.
    """
    w = as_cmatrix(w)
    y = as_cvector(y)
    if w.shape[0] != y.shape[0]:
        raise DimensionError("length of y", w.shape[0], y.shape[0])
    ny = float(norm(y))
    if ny <= norm_tol:
        raise DegenerateVectorError("y is numerically zero")
    c = w.conj().T @ y
    resid = float(norm(y - w @ c))
    if resid > span_tol * ny:
        raise NotInSpanError(f"y has residual {resid:.3g} outside span(W)")
    return complete_basis_batch(w, y)


def complete_basis_batch(w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unchecked, batched ``complete_basis``."""
    c = hermitian_apply(w, y)
    q0 = c / norm(c)[..., None]
    l = w.shape[-1]
    proj = np.eye(l) - q0[..., :, None] * q0.conj()[..., None, :]
    u, _, _ = np.linalg.svd(proj)
    com = w @ u[..., :, : l - 1]
    return np.concatenate([(y / norm(y)[..., None])[..., None], com], axis=-1)


def real_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Angle between a and b in the realified space, via atan2 for accuracy.

    Batched over leading axes.
    """
    na = norm(a)
    re = vdot(a, b).real
    perp = b - a * (re / na**2)[..., None]
    return np.arctan2(norm(perp) * na, re)
