"""Orthogonal binary codes for multiplexed measurements.

The matrix for k_codes sequences has length n = 2 ** (k_codes + 1).  Row 0
is all ones; row k (k >= 1) alternates blocks of +1 then -1 of length
2 ** (k - 1).  Distinct rows are exactly orthogonal in integer arithmetic,
and every row other than row 0 sums to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class CodeMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.int64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        if not np.all(np.abs(matrix) == 1):
            raise ValueError("matrix entries must be +-1")
        object.__setattr__(self, "matrix", matrix)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def length(self) -> int:
        """Code length n (number of repetitions in one code period)."""
        return self.matrix.shape[1]

    def row(self, index: int) -> np.ndarray:
        """Return code row `index` (0-based; row 0 is all ones)."""
        return self.matrix[index]


def build_code_matrix(k_codes: int) -> CodeMatrix:
    """Build the orthogonal code matrix for k_codes sequences."""
    if not 1 <= k_codes <= 16:
        raise ValueError(f"k_codes must be in 1..16, got {k_codes}")
    n = 2 ** (k_codes + 1)
    rows = [np.ones(n, dtype=np.int64)]
    for k in range(1, k_codes):
        block = 2 ** (k - 1)
        rows.append(np.tile(np.repeat([1, -1], block), n // (2 * block)))
    return CodeMatrix(np.vstack(rows))


def verify_orthogonality(codes: CodeMatrix) -> bool:
    """True when matrix @ matrix.T equals n * identity exactly."""
    b = codes.matrix
    expected = codes.length * np.eye(codes.rows, dtype=np.int64)
    return bool(np.array_equal(b @ b.T, expected))
