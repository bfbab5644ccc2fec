"""Thin SVD of the signed feature matrix and subspace bookkeeping."""
from dataclasses import dataclass, replace

import numpy as np

RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class SubspaceDecomposition:
    """Right singular vectors ``V`` (p x r) and singular values (descending).

    The first ``split_k`` columns of ``V`` span the trusted subspace S0, the
    remaining ones span its complement within the row space.
    """

    singular_vectors: np.ndarray
    singular_values: np.ndarray
    split_k: int = 0
    left_vectors: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    @property
    def dim(self) -> int:
        return self.singular_vectors.shape[0]

    @property
    def v_s0(self) -> np.ndarray:
        return self.singular_vectors[:, : self.split_k]

    @property
    def v_rest(self) -> np.ndarray:
        return self.singular_vectors[:, self.split_k :]

    @property
    def d_rest(self) -> np.ndarray:
        return self.singular_values[self.split_k :]

    def with_split(self, k: int) -> "SubspaceDecomposition":
        if not 0 <= k <= self.rank:
            raise ValueError(f"split k={k} outside [0, rank={self.rank}]")
        return replace(self, split_k=int(k))


def signed_matrix(features, labels) -> np.ndarray:
    """Rows ``y_i * x_i``."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: features {X.shape}, labels {y.shape}")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be -1 or +1")
    return X * y[:, None]


def thin_svd(Z, cutoff: float = RANK_CUTOFF) -> SubspaceDecomposition:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.all(np.isfinite(Z)):
        raise ValueError("matrix has non-finite entries")
    n, p = Z.shape
    if n == 0 or p == 0 or not np.any(Z):
        return SubspaceDecomposition(np.zeros((p, 0)), np.zeros(0), 0, np.zeros((n, 0)))

    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    r = int(np.count_nonzero(s >= cutoff * s[0]))
    U, s, V = U[:, :r], s[:r], Vt[:r].T

    # largest-magnitude entry of each right singular vector made positive
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivot, np.arange(r)])
    signs[signs == 0] = 1.0
    return SubspaceDecomposition(V * signs, s.copy(), 0, U * signs)


def project(v_block, x) -> np.ndarray:
    """Coordinates of ``x`` in the basis given by the columns of ``v_block``."""
    V = np.asarray(v_block, dtype=float)
    x = np.asarray(x, dtype=float)
    if V.ndim != 2 or x.shape[-1] != V.shape[0]:
        raise ValueError(f"dimension mismatch: basis {V.shape}, vector {x.shape}")
    return x @ V
