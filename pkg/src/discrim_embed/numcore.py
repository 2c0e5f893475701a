"""Shared numerical substrate: datasets, norms, scatter matrices, reweighting
diagonals, PCA preprocessing, orthogonal Procrustes and shrinkage operators.

Samples are stored as columns, so a dataset with ``d`` features and ``N``
samples holds a ``(d, N)`` matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_finite(a):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite input")
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Column-oriented labeled sample matrix.

    Parameters
    ----------
    samples : array of shape (d, N)
        One sample per column.
    labels : int array of shape (N,)
        Class index of each column, in ``0..n_classes-1``.
    n_classes : int, optional
        Number of classes. Inferred as ``max(labels) + 1`` when omitted.
    name : str
        Free-form dataset name carried into reports.
    """

    samples: np.ndarray
    labels: np.ndarray
    n_classes: int | None = None
    name: str = "dataset"
    class_counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = _check_finite(self.samples)
        if x.ndim != 2:
            raise ValueError(f"samples must be 2-D (d, N), got shape {x.shape}")
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != x.shape[1]:
            raise ValueError(
                f"labels must have length N={x.shape[1]}, got shape {y.shape}")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise ValueError("labels must be integers")
        y = y.astype(np.int64)
        if y.size and y.min() < 0:
            raise ValueError("labels must be non-negative")
        c = self.n_classes
        if c is None:
            c = int(y.max()) + 1 if y.size else 0
        c = int(c)
        if y.size and y.max() >= c:
            raise ValueError(f"label {int(y.max())} out of range for {c} classes")
        counts = np.bincount(y, minlength=c)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValueError(f"empty class: {empty.tolist()}")
        y = y.copy()
        y.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "samples", _frozen(x))
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "n_classes", c)
        object.__setattr__(self, "class_counts", counts)

    @property
    def d(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def class_block(self, i: int) -> np.ndarray:
        """Columns belonging to class ``i``, in original order."""
        return self.samples[:, self.labels == i]

    def class_blocks(self) -> list[np.ndarray]:
        return [self.class_block(i) for i in range(self.n_classes)]

    def subset(self, idx) -> "LabeledDataset":
        """Dataset restricted to the given column indices.

        Keeps ``n_classes``; raises if the subset leaves a class empty.
        """
        idx = np.asarray(idx)
        return LabeledDataset(self.samples[:, idx], self.labels[idx],
                              self.n_classes, self.name)

    def with_samples(self, samples) -> "LabeledDataset":
        return LabeledDataset(samples, self.labels, self.n_classes, self.name)


@dataclass(frozen=True)
class ScatterSet:
    s_w: np.ndarray
    s_b: np.ndarray
    s: np.ndarray
    balance: float


@dataclass(frozen=True)
class RowWeightDiag:
    """Diagonal of ``D`` with ``D[j, j] = 1 / (||z_j|| + epsilon)``."""

    weights: np.ndarray
    epsilon: float

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.weights)


@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray
    basis: np.ndarray
    zero_variance: bool = False

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    def apply(self, x) -> np.ndarray:
        """Project column samples ``x`` (d_raw, k) onto the basis."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.mean.shape[0]:
            raise ValueError(
                f"feature dimension mismatch: expected {self.mean.shape[0]}, got {x.shape[0]}")
        return self.basis.T @ (x - self.mean[:, None])

    def back_project(self, z) -> np.ndarray:
        """Map basis coordinates back to centered raw coordinates."""
        return self.basis @ np.asarray(z, dtype=float)


def row_norms(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.sqrt(np.sum(z * z, axis=1))


def l21_norm(z) -> float:
    """Sum over rows of the Euclidean norm of each row."""
    z = _check_finite(z)
    if z.size == 0:
        raise ValueError("l21_norm of an empty matrix")
    if z.ndim == 1:
        z = z[:, None]
    return float(np.sum(row_norms(z)))


def compute_scatter(data: LabeledDataset, balance: float) -> ScatterSet:
    """Within-class, between-class and difference scatter matrices.

    Both scatters use ``1/N`` weighting; the difference matrix is
    ``s_w - balance * s_b``.
    """
    if balance <= 0:
        raise ValueError("balance must be positive")
    x = data.samples
    d, n = x.shape
    if n < 2:
        raise ValueError("compute_scatter needs at least 2 samples")
    if np.any(data.class_counts == 0):
        raise ValueError("empty class")
    mu = x.mean(axis=1)
    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    for xi in data.class_blocks():
        mu_i = xi.mean(axis=1)
        dev = xi - mu_i[:, None]
        s_w += dev @ dev.T
        dm = (mu_i - mu)[:, None]
        s_b += xi.shape[1] * (dm @ dm.T)
    s_w = 0.5 * (s_w + s_w.T) / n
    s_b = 0.5 * (s_b + s_b.T) / n
    return ScatterSet(_frozen(s_w), _frozen(s_b), _frozen(s_w - balance * s_b),
                      float(balance))


def row_weight_matrix(z, epsilon: float) -> RowWeightDiag:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    return RowWeightDiag(_frozen(1.0 / (row_norms(z) + epsilon)), float(epsilon))


def procrustes_orthogonal(m):
    """Closest column-orthonormal factor ``U @ Vt`` of ``m``.

    Maximizes ``trace(P.T @ m)`` over matrices with orthonormal columns.

    Parameters
    ----------
    m : array of shape (d, k), k <= d

    Returns
    -------
    p : ndarray of shape (d, k)
    rank_deficient : bool
        True when ``m`` has numerically zero singular values; the
        corresponding directions of ``p`` come from the SVD's own basis
        completion and are not unique.
    """
    m = _check_finite(m)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    d, k = m.shape
    if k > d:
        raise ValueError(f"procrustes needs k <= d, got {m.shape}")
    u, s, vt = linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    smax = s[0] if s.size else 0.0
    rank_deficient = bool(smax == 0.0 or s[-1] <= max(d, k) * np.finfo(float).eps * smax)
    return u @ vt, rank_deficient


def soft_threshold(z, tau: float) -> np.ndarray:
    """Elementwise ``sign(z) * max(|z| - tau, 0)``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def row_shrink(z, tau: float) -> np.ndarray:
    """Proximal map of ``tau * ||.||_{2,1}``: scale each row toward zero."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    z = np.asarray(z, dtype=float)
    norms = row_norms(z)
    scale = np.zeros_like(norms)
    nz = norms > tau
    scale[nz] = 1.0 - tau / norms[nz]
    return z * scale[:, None]


# relative to the largest singular value
PCA_RANK_RTOL = 1e-10


def pca_preprocess(data: LabeledDataset):
    """Center the data and keep every component above the numerical rank cutoff.

    Returns the fitted :class:`PcaBasis` and the projected dataset. A dataset
    with zero variance keeps a single (arbitrary) direction and sets
    ``zero_variance`` on the basis.
    """
    x = data.samples
    if x.shape[1] < 2:
        raise ValueError("pca_preprocess needs at least 2 samples")
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    u, s, _ = linalg.svd(xc, full_matrices=False, lapack_driver="gesvd")
    smax = s[0] if s.size else 0.0
    zero_var = not smax > 0.0
    r = 1 if zero_var else int(np.sum(s > PCA_RANK_RTOL * smax))
    basis = PcaBasis(_frozen(mean), _frozen(u[:, :r]), zero_var)
    return basis, data.with_samples(basis.apply(x))
