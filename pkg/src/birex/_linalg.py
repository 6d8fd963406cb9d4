"""Small linear-algebra helpers shared by the decomposition modules."""

from __future__ import annotations

import numpy as np

# Relative cutoff below which singular values count as rank deficient.
SINGULAR_VALUE_RTOL = 1e-12


def sign_fix_columns(u: np.ndarray, vt: np.ndarray | None = None):
    """Orient each column of ``u`` so its largest-magnitude entry is positive.

    Makes otherwise sign-ambiguous bases reproducible across runs.  When the
    matching right factor ``vt`` is given, its rows are flipped alongside so
    products ``u @ diag(s) @ vt`` are unchanged.
    """
    u = np.array(u)
    vt = None if vt is None else np.array(vt)
    for j in range(u.shape[1]):
        col = u[:, j]
        if col.size and col[np.argmax(np.abs(col))] < 0:
            u[:, j] = -col
            if vt is not None:
                vt[j, :] = -vt[j, :]
    return u if vt is None else (u, vt)


def complete_columns(u: np.ndarray, target: int) -> np.ndarray:
    """Extend the orthonormal columns of ``u`` to ``target`` columns.

    Added columns come from orthogonalizing canonical basis vectors against
    what is already there (two Gram-Schmidt rounds), which is deterministic
    and stays cheap even when the rows number in the hundreds of thousands.
    ``u`` itself is kept bit-for-bit as the leading block.
    """
    rows, cols = u.shape
    if target <= cols:
        return u[:, :target]
    if target > rows:
        raise ValueError(f"cannot extend {rows}x{cols} basis to {target} columns")
    out = np.empty((rows, target))
    out[:, :cols] = u
    have = cols
    for idx in range(rows):
        if have == target:
            break
        cand = np.zeros(rows)
        cand[idx] = 1.0
        for _ in range(2):
            cand = cand - out[:, :have] @ (out[:, :have].T @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-8:
            out[:, have] = cand / norm
            have += 1
    if have < target:
        raise ValueError(f"could not extend basis to {target} columns")
    return out
