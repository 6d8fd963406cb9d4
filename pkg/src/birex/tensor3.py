"""Dense rank-3 tensors: unfolding, mode products, per-mode SVD, HOSVD.

Layout convention (fixed throughout the package): a tensor with dims
(d0, d1, d2) stores entry (i, j, k) at flat position ``i + d0*j + d0*d1*k``,
i.e. index 0 varies fastest.  The mode-k unfolding puts mode k on the rows
and enumerates the remaining modes along the columns with the lower-numbered
mode varying fastest.  ``fold`` is the exact inverse of ``unfold``, so round
trips are bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import SINGULAR_VALUE_RTOL, complete_columns, sign_fix_columns
from .errors import DimensionError

# Largest matrix side decomposed directly; taller/wider unfoldings go through
# the eigendecomposition of the Gram matrix on their smaller side.
_DIRECT_SVD_MAX_SIDE = 512


class Tensor3:
    """Immutable dense order-3 tensor of float64 values."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 3:
            raise DimensionError(f"expected 3 modes, got {arr.ndim}")
        if not np.isfinite(arr).all():
            raise ValueError("tensor entries must all be finite")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def from_values(cls, values, dims) -> "Tensor3":
        """Build from a flat value array (index 0 fastest) and target dims."""
        values = np.asarray(values, dtype=np.float64).ravel()
        d0, d1, d2 = (int(d) for d in dims)
        if values.size != d0 * d1 * d2:
            raise DimensionError(
                f"{values.size} values cannot fill dims ({d0}, {d1}, {d2})"
            )
        return cls(values.reshape((d0, d1, d2), order="F"))

    @property
    def data(self) -> np.ndarray:
        """Read-only ndarray view of shape ``dims``."""
        return self._data

    @property
    def dims(self) -> tuple[int, int, int]:
        return self._data.shape

    @property
    def values(self) -> np.ndarray:
        """Flat value array, index 0 fastest."""
        return self._data.ravel(order="F")

    def norm(self) -> float:
        return float(np.linalg.norm(self._data))

    def __repr__(self) -> str:
        return f"Tensor3(dims={self._data.shape})"


@dataclass(frozen=True)
class ModeSvd:
    """SVD of one mode unfolding, truncated to the numerical rank.

    ``u`` has orthonormal columns (d_mode x r), ``s`` is non-increasing and
    positive, ``vt`` is (r x prod other dims).  Columns of ``u`` are oriented
    so their largest-magnitude entry is positive.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


@dataclass(frozen=True)
class HosvdResult:
    """Core tensor plus one orthonormal factor matrix per mode."""

    core: Tensor3
    factors: tuple[np.ndarray, np.ndarray, np.ndarray]


def _check_mode(mode: int) -> None:
    if mode not in (0, 1, 2):
        raise DimensionError(f"mode must be 0, 1 or 2, got {mode}")


def unfold(t: Tensor3, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding: (d_mode x prod of the other dims)."""
    _check_mode(mode)
    moved = np.moveaxis(t.data, mode, 0)
    return moved.reshape((t.dims[mode], -1), order="F").copy()


def fold(m, mode: int, dims) -> Tensor3:
    """Inverse of :func:`unfold` for the given mode and target dims."""
    _check_mode(mode)
    m = np.asarray(m, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise DimensionError(f"dims must be 3 positive integers, got {dims}")
    other = [d for k, d in enumerate(dims) if k != mode]
    if m.ndim != 2 or m.shape != (dims[mode], other[0] * other[1]):
        raise DimensionError(
            f"matrix shape {m.shape} does not fold to dims {dims} along mode {mode}"
        )
    cube = m.reshape((dims[mode], other[0], other[1]), order="F")
    return Tensor3(np.moveaxis(cube, 0, mode))


def mode_product(t: Tensor3, matrix, mode: int) -> Tensor3:
    """Multiply ``t`` along ``mode`` by ``matrix`` (shape r x d_mode)."""
    _check_mode(mode)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionError(f"mode product needs a matrix, got ndim {matrix.ndim}")
    if matrix.shape[1] != t.dims[mode]:
        raise DimensionError(
            f"matrix has {matrix.shape[1]} columns, mode {mode} has size {t.dims[mode]}"
        )
    new_dims = tuple(
        matrix.shape[0] if k == mode else d for k, d in enumerate(t.dims)
    )
    return fold(matrix @ unfold(t, mode), mode, new_dims)


def _svd_dispatch(m: np.ndarray):
    """SVD of ``m``, routed through the small-side Gram matrix when tall/wide."""
    rows, cols = m.shape
    if rows <= _DIRECT_SVD_MAX_SIDE and cols <= _DIRECT_SVD_MAX_SIDE:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        return u, s, vt
    if rows <= cols:
        # Rows are the small side: eigendecompose m m^T.
        w, q = np.linalg.eigh(m @ m.T)
        order = np.argsort(w)[::-1]
        s = np.sqrt(np.clip(w[order], 0.0, None))
        u = q[:, order]
        keep = _rank(s)
        u, s = u[:, :keep], s[:keep]
        vt = (u.T @ m) / s[:, None]
        return u, s, vt
    # Columns are the small side: eigendecompose m^T m.
    w, q = np.linalg.eigh(m.T @ m)
    order = np.argsort(w)[::-1]
    s = np.sqrt(np.clip(w[order], 0.0, None))
    v = q[:, order]
    keep = _rank(s)
    v, s = v[:, :keep], s[:keep]
    u = (m @ v) / s[None, :]
    # The division degrades orthonormality for small singular values;
    # re-orthonormalize without rotating the well-conditioned directions.
    uq, r = np.linalg.qr(u)
    u = uq * np.sign(np.diag(r))[None, :]
    return u, s, v.T


def _rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s >= SINGULAR_VALUE_RTOL * s[0]))


def mode_svd(t: Tensor3, mode: int) -> ModeSvd:
    """SVD of the mode unfolding, truncated to the numerical rank."""
    m = unfold(t, mode)
    u, s, vt = _svd_dispatch(m)
    keep = _rank(s)
    u, vt = sign_fix_columns(u[:, :keep], vt[:keep])
    return ModeSvd(u=u, s=s[:keep].copy(), vt=vt)


def hosvd(t: Tensor3, ranks) -> HosvdResult:
    """Truncated higher-order SVD with the requested per-mode ranks.

    Factor k holds the leading ``ranks[k]`` left singular vectors of the
    mode-k unfolding; the core is the input contracted with the transposed
    factors.  When the data is rank deficient the missing directions are
    filled with a deterministic orthonormal completion.
    """
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3:
        raise DimensionError(f"expected 3 ranks, got {len(ranks)}")
    dims = t.dims
    for k, r in enumerate(ranks):
        other = (dims[(k + 1) % 3] * dims[(k + 2) % 3])
        if not 1 <= r <= min(dims[k], other):
            raise DimensionError(
                f"rank {r} out of range [1, {min(dims[k], other)}] for mode {k}"
            )
    factors = []
    for k in range(3):
        u = mode_svd(t, k).u
        if u.shape[1] < ranks[k]:
            u = complete_columns(u, ranks[k])
        factors.append(np.ascontiguousarray(u[:, : ranks[k]]))
    core = t
    for k in range(3):
        core = mode_product(core, factors[k].T, k)
    return HosvdResult(core=core, factors=tuple(factors))


def compose(core: Tensor3, factors) -> Tensor3:
    """Contract a core tensor with one factor matrix per mode."""
    out = core
    for k, f in enumerate(factors):
        out = mode_product(out, f, k)
    return out
