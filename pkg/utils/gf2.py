"""
GF(2) 线性代数
Binary linear algebra for symplectic Pauli vectors (rows are vectors, arithmetic mod 2)
"""
from typing import List, Tuple

import numpy as np


def as_bits(matrix) -> np.ndarray:
    """Coerce to a 2D uint8 array of 0/1 entries."""
    arr = np.asarray(matrix, dtype=np.uint8) % 2
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def row_reduce(matrix) -> Tuple[np.ndarray, List[int]]:
    """
    Reduced row echelon form over GF(2)

    Returns:
        (reduced matrix with zero rows dropped, pivot column list)
    """
    work = as_bits(matrix).copy()
    rows, cols = work.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hits = np.nonzero(work[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
        mask = work[:, c].astype(bool)
        mask[r] = False
        work[mask] ^= work[r]
        pivots.append(c)
        r += 1
    return work[:r], pivots


def rank(matrix) -> int:
    arr = as_bits(matrix)
    if arr.size == 0:
        return 0
    return len(row_reduce(arr)[1])


def nullspace(matrix) -> np.ndarray:
    """Basis (as rows) of {v : M v = 0 mod 2}."""
    arr = as_bits(matrix)
    cols = arr.shape[1]
    if arr.shape[0] == 0:
        return np.eye(cols, dtype=np.uint8)
    reduced, pivots = row_reduce(arr)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, p in enumerate(pivots):
            basis[i, p] = reduced[row, f]
    return basis


def in_span(rows, vector) -> bool:
    base = as_bits(rows)
    if base.shape[0] == 0:
        return not np.any(as_bits(vector))
    return rank(np.vstack([base, as_bits(vector)])) == rank(base)


def solve(matrix, target) -> np.ndarray:
    """
    Find x with x M = target (row combination), or None

    Args:
        matrix: rows to combine
        target: desired combination
    """
    base = as_bits(matrix)
    goal = as_bits(target)[0]
    m = base.shape[0]
    augmented = np.hstack([base.T, goal.reshape(-1, 1)])
    reduced, pivots = row_reduce(augmented)
    if m in pivots:
        return None
    x = np.zeros(m, dtype=np.uint8)
    for row, p in enumerate(pivots):
        x[p] = reduced[row, m]
    return x


def symplectic_swap(matrix) -> np.ndarray:
    """Swap X and Z halves, so that u · swap(v) is the symplectic product."""
    arr = as_bits(matrix)
    n = arr.shape[1] // 2
    return np.hstack([arr[:, n:], arr[:, :n]])


def symplectic_product(u, v) -> int:
    a = as_bits(u)[0]
    b = as_bits(v)[0]
    n = a.size // 2
    return int((a[:n] @ b[n:] + a[n:] @ b[:n]) % 2)


def symplectic_gram(rows_a, rows_b) -> np.ndarray:
    """Matrix of pairwise symplectic products."""
    a = as_bits(rows_a).astype(np.int64)
    b = symplectic_swap(rows_b).astype(np.int64)
    return ((a @ b.T) % 2).astype(np.uint8)
