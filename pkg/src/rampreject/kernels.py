"""Kernel evaluation and Gram matrix construction (linear and RBF)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KernelSpec", "kernel_eval", "kernel_matrix", "gram_matrix"]

_KINDS = ("linear", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its width parameter.

    kind is "linear" or "rbf"; gamma parameterizes the RBF kernel as
    exp(-gamma * ||x - x'||^2) and must be > 0 (unused for linear).
    """

    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "rbf":
            if self.gamma is None or not np.isfinite(self.gamma) or self.gamma <= 0:
                raise ValueError(f"rbf kernel requires gamma > 0, got {self.gamma!r}")


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """Evaluate k(x, x2) for two feature vectors of equal dimension."""
    a = np.asarray(x, dtype=float).ravel()
    b = np.asarray(x2, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if spec.kind == "linear":
        return float(a @ b)
    diff = a - b
    return float(np.exp(-spec.gamma * (diff @ diff)))


def kernel_matrix(spec: KernelSpec, X, Z) -> np.ndarray:
    """Rectangular kernel matrix with entry (i, j) = k(X[i], Z[j])."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]} features")
    if spec.kind == "linear":
        return X @ Z.T
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(Z * Z, axis=1)[None, :]
        - 2.0 * (X @ Z.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


def gram_matrix(spec: KernelSpec, X) -> np.ndarray:
    """Symmetric Gram matrix over the rows of X.

    The upper triangle is computed once and mirrored, so the result is
    bit-exact symmetric; the RBF diagonal is exactly 1.
    """
    G = kernel_matrix(spec, X, X)
    upper = np.triu(G, 1)
    G = upper + upper.T + np.diag(np.diag(G))
    if spec.kind == "rbf":
        np.fill_diagonal(G, 1.0)
    return G
