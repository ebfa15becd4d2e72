"""Linear algebra over the prime field F_p on numpy integer arrays."""

from typing import List, Tuple

import numpy as np


def vec2de(digits, p: int) -> int:
    value = 0
    for d in digits:
        value = value * p + int(d) % p
    return value


def rref_mod_p(matrix: np.ndarray, p: int) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over F_p; zero rows dropped.

    Returns the reduced matrix and its pivot columns.
    """
    a = np.array(matrix, dtype=np.int64) % p
    rows, cols = a.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nonzero = np.nonzero(a[r:, c])[0]
        if nonzero.size == 0:
            continue
        k = r + int(nonzero[0])
        a[[r, k]] = a[[k, r]]
        a[r] = (a[r] * pow(int(a[r, c]), -1, p)) % p
        for other in range(rows):
            if other != r and a[other, c]:
                a[other] = (a[other] - a[other, c] * a[r]) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rank_mod_p(matrix: np.ndarray, p: int) -> int:
    if np.size(matrix) == 0:
        return 0
    return len(rref_mod_p(matrix, p)[1])


def nullspace_mod_p(matrix: np.ndarray, p: int, n: int) -> np.ndarray:
    """Basis (as rows) of ``{x in F_p^n : matrix @ x = 0}``."""
    if np.size(matrix) == 0:
        return np.eye(n, dtype=np.int64)
    reduced, pivots = rref_mod_p(np.asarray(matrix).reshape(-1, n), p)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for row, f in enumerate(free):
        basis[row, f] = 1
        for r, c in enumerate(pivots):
            basis[row, c] = (-reduced[r, f]) % p
    return basis
