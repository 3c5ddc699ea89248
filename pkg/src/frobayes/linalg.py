"""Dense matrix kernel.

Matrices are plain ``numpy`` 2-D arrays. Composite indices are big-endian and
row-major: ``(i1, ..., ik)`` maps to ``sum(i_j * prod(d_l for l > j))``,
which is exactly what ``np.kron`` and ``reshape`` produce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, ShapeError

MAX_ENTRIES = 1 << 26


@dataclass(frozen=True)
class Tol:
    """Tolerances for approximate comparisons and support decisions.

    ``rank_eps`` is relative: eigenvalues at or below ``rank_eps * lambda_max``
    are treated as zero.
    """

    abs_eps: float = 1e-9
    rel_eps: float = 1e-9
    rank_eps: float = 1e-10

    def __post_init__(self):
        for name in ("abs_eps", "rel_eps", "rank_eps"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"tolerance {name} must be a finite nonnegative real, got {v}")

    def bound(self, scale: float = 1.0) -> float:
        return self.abs_eps + self.rel_eps * scale

    def close(self, a, b) -> bool:
        a = np.asarray(a)
        b = np.asarray(b)
        scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
        return float(np.max(np.abs(a - b), initial=0.0)) <= self.bound(scale)

    def cutoff(self, eigenvalues: np.ndarray) -> float:
        top = float(np.max(np.abs(eigenvalues), initial=0.0))
        return self.rank_eps * top

    def with_overrides(self, **kw) -> "Tol":
        return replace(self, **{k: float(v) for k, v in kw.items()})


DEFAULT_TOL = Tol()


def as_mat(a) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array of rank {m.ndim}")
    return m


def _finite(m: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise DomainError("non-finite entries produced")
    return m


def tensor(a, b) -> np.ndarray:
    a, b = as_mat(a), as_mat(b)
    size = a.shape[0] * b.shape[0] * a.shape[1] * b.shape[1]
    if size > MAX_ENTRIES:
        raise ShapeError(f"tensor product too large ({size} entries)")
    return np.kron(a, b)


def dagger(a) -> np.ndarray:
    return as_mat(a).conj().T


def is_hermitian(a, tol: Tol = DEFAULT_TOL) -> bool:
    a = as_mat(a)
    if a.shape[0] != a.shape[1]:
        return False
    scale = float(np.max(np.abs(a), initial=0.0))
    return float(np.max(np.abs(a - a.conj().T), initial=0.0)) <= tol.bound(scale)


def partial_trace(a, dims, traced) -> np.ndarray:
    """Trace out factor ``traced`` (an index or a collection of indices)."""
    a = as_mat(a)
    dims = [int(d) for d in dims]
    n = math.prod(dims)
    if a.shape != (n, n):
        raise ShapeError(f"matrix of shape {a.shape} does not match dims {dims}")
    idx = {traced} if isinstance(traced, (int, np.integer)) else set(traced)
    if any(not 0 <= i < len(dims) for i in idx):
        raise ShapeError(f"traced index {sorted(idx)} out of range for {len(dims)} factors")
    k = len(dims)
    t = a.reshape(dims + dims)
    row = list(range(k))
    col = [k + i if i not in idx else i for i in range(k)]
    keep = [i for i in range(k) if i not in idx]
    out = np.einsum(t, row + col, keep + [k + i for i in keep])
    m = math.prod(dims[i] for i in keep)
    return out.reshape(m, m)


def herm_eig(a, tol: Tol = DEFAULT_TOL):
    """Eigen-decomposition of a Hermitian matrix.

    Eigenvalues ascend. Each eigenvector is normalized so that its first
    nonzero component is real positive, which makes results reproducible.
    """
    a = as_mat(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"herm_eig needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    if not is_hermitian(a, tol):
        raise DomainError("matrix is not Hermitian within tolerance")
    h = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(h)
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, j] = col / ph
    if not np.iscomplexobj(a):
        v = v.real
    return w, v


def _psd_eig(a, tol: Tol):
    w, v = herm_eig(a, tol)
    cut = tol.cutoff(w)
    if w.size and w[0] < -max(cut, tol.abs_eps):
        raise DomainError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3g})")
    keep = w > cut
    return w, v, keep


def _spectral(v, f_vals) -> np.ndarray:
    return (v * f_vals) @ v.conj().T


def psd_sqrt(a, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    w, v, keep = _psd_eig(a, tol)
    return _finite(_spectral(v, np.where(keep, np.sqrt(np.clip(w, 0, None)), 0.0)))


def support_proj(a, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    w, v, keep = _psd_eig(a, tol)
    return _spectral(v, keep.astype(float))


def support_pinv(a, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    w, v, keep = _psd_eig(a, tol)
    safe = np.where(keep, w, 1.0)
    return _finite(_spectral(v, np.where(keep, 1.0 / safe, 0.0)))


def psd_inv_sqrt(a, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    """Square root of the support-relative inverse."""
    w, v, keep = _psd_eig(a, tol)
    safe = np.where(keep, w, 1.0)
    return _finite(_spectral(v, np.where(keep, 1.0 / np.sqrt(safe), 0.0)))


def is_psd(a, tol: Tol = DEFAULT_TOL) -> bool:
    try:
        _psd_eig(a, tol)
    except DomainError:
        return False
    return True
