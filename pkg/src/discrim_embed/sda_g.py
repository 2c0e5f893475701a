"""Supervised discriminant analysis by gradient refinement (SDA_G).

The criterion combines the LDA trace term, a class-wise row-sparsity penalty
on the projected samples and a reconstruction term through an orthogonal
factor::

    f(Q, P) = tr(Q' S Q) + lambda1 * sum_i ||Q' X_i||_{2,1}
              + lambda2 * ||X - P Q' X||_F^2,   P'P = I

It is minimized by alternating an orthogonal Procrustes step for P with a
gradient step on Q, where each ``||Z||_{2,1}`` is replaced by the reweighted
quadratic ``tr(Z' D Z)`` with ``D = diag(1 / (||z_j|| + epsilon))``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .baselines import fit_ics_dlsr, fit_rslda
from .numcore import (
    LabeledDataset,
    RowWeightDiag,
    compute_scatter,
    l21_norm,
    procrustes_orthogonal,
    row_weight_matrix,
)

INIT_KINDS = ("rslda", "hybrid")


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters shared by the SDA_G solver and the ADMM baselines.

    ``mu0``, ``rho`` and ``mu_max`` drive the ADMM penalty schedule of the
    baselines; ``ics_cols`` is the number of ICS_DLSR directions spliced into
    the hybrid initialization (``None`` means all C of them).
    """

    lambda1: float = 0.1
    lambda2: float = 0.1
    lambda3: float = 0.1
    balance: float = 0.1
    alpha: float = 1e-5
    epsilon: float = 1e-6
    max_iter: int = 200
    tol: float = 1e-6
    seed: int = 0
    safeguard: bool = True
    mu0: float = 0.1
    rho: float = 1.1
    mu_max: float = 1e6
    ics_cols: int | None = None

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda3 < 0:
            raise ValueError("lambda1, lambda2, lambda3 must be non-negative")
        if self.balance <= 0:
            raise ValueError("balance must be positive")
        if not 0 <= self.alpha <= 1e-3:
            raise ValueError("alpha must lie in [0, 1e-3]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.mu0 <= 0 or self.rho < 1 or self.mu_max < self.mu0:
            raise ValueError("invalid ADMM penalty schedule")
        if self.ics_cols is not None and self.ics_cols < 0:
            raise ValueError("ics_cols must be non-negative")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SdaGModel:
    q: np.ndarray
    p: np.ndarray
    d_list: list
    init_kind: str
    history: list
    config: SolverConfig
    q0: np.ndarray | None = None
    flags: tuple = field(default=())

    @property
    def projection(self) -> np.ndarray:
        return self.q


class _Problem:
    """Per-dataset quantities reused across iterations."""

    def __init__(self, data: LabeledDataset, cfg: SolverConfig):
        self.data = data
        self.cfg = cfg
        self.x = data.samples
        self.s = compute_scatter(data, cfg.balance).s
        self.xxt = self.x @ self.x.T
        self.blocks = data.class_blocks()
        self.block_grams = [xi @ xi.T for xi in self.blocks]
        self.x_sq = float(np.sum(self.x * self.x))

    def recon_sq(self, q, p):
        # ||X - P Q'X||^2 with P'P = I expanded to avoid forming d x N products
        return (self.x_sq - 2.0 * np.sum(p * (self.xxt @ q))
                + np.sum(q * (self.xxt @ q)))

    def value(self, q, p, d_list=None, mode="l21"):
        cfg = self.cfg
        f = float(np.sum(q * (self.s @ q)))
        if cfg.lambda1:
            if mode == "l21":
                sp = sum(l21_norm(q.T @ xi) for xi in self.blocks)
            else:
                if d_list is None:
                    d_list = [row_weight_matrix(q.T @ xi, cfg.epsilon) for xi in self.blocks]
                sp = 0.0
                for g, dd in zip(self.block_grams, d_list):
                    # tr((Q'X_i)' D_i Q'X_i) = sum_j D_jj q_j' X_i X_i' q_j
                    sp += float(np.sum(dd.weights * np.sum(q * (g @ q), axis=0)))
            f += cfg.lambda1 * sp
        if cfg.lambda2:
            f += cfg.lambda2 * float(self.recon_sq(q, p))
        return f

    def gradient(self, q, p, d_list):
        cfg = self.cfg
        g = 2.0 * (self.s @ q)
        if cfg.lambda1:
            for gram, dd in zip(self.block_grams, d_list):
                g += 2.0 * cfg.lambda1 * (gram @ q) * dd.weights[None, :]
        if cfg.lambda2:
            g += 2.0 * cfg.lambda2 * (self.xxt @ q - self.xxt @ p)
        return g


def _check_shapes(q, data):
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != data.d:
        raise ValueError(f"q must have {data.d} rows, got shape {q.shape}")
    return q


def objective(q, p, data: LabeledDataset, cfg: SolverConfig, mode: str = "l21",
              d_list=None) -> float:
    """Evaluate the SDA_G criterion.

    Parameters
    ----------
    mode : {"l21", "surrogate"}
        ``"l21"`` uses the exact row-sparsity norm. ``"surrogate"`` uses the
        reweighted trace form; ``d_list`` then supplies frozen diagonals, and
        when omitted they are computed from ``q`` itself.
    """
    if mode not in ("l21", "surrogate"):
        raise ValueError(f"unknown objective mode {mode!r}")
    q = _check_shapes(q, data)
    return _Problem(data, cfg).value(q, np.asarray(p, dtype=float), d_list, mode)


def gradient_q(q, p, d_list, data: LabeledDataset, cfg: SolverConfig) -> np.ndarray:
    """Gradient of the surrogate criterion w.r.t. Q with the diagonals frozen.

    ``G = 2 S Q + 2 lambda1 sum_i X_i X_i' Q D_i + 2 lambda2 (X X' Q - X X' P)``
    """
    q = _check_shapes(q, data)
    return _Problem(data, cfg).gradient(q, np.asarray(p, dtype=float), d_list)


def update_p(q, data: LabeledDataset):
    """Procrustes step: P maximizing ``tr(P' X X' Q)``.

    Returns ``(p, rank_deficient)`` as :func:`procrustes_orthogonal` does.
    """
    q = _check_shapes(q, data)
    x = data.samples
    return procrustes_orthogonal(x @ (x.T @ q))


def update_d(q, data: LabeledDataset, epsilon: float) -> list[RowWeightDiag]:
    """One reweighting diagonal per class, built from the rows of ``Q' X_i``."""
    q = _check_shapes(q, data)
    return [row_weight_matrix(q.T @ xi, epsilon) for xi in data.class_blocks()]


def init_rslda(data: LabeledDataset, cfg: SolverConfig) -> np.ndarray:
    return fit_rslda(data, cfg).q


def init_hybrid(q_ics, q_rslda, d: int, c: int, ics_cols: int | None = None) -> np.ndarray:
    """Splice ICS_DLSR directions in front of the leading RSLDA columns.

    ``q_ics`` is the ``(C, d)`` regression map; its transpose supplies the
    first ``ics_cols`` (default C) columns of the result and the remaining
    ``d - ics_cols`` columns are the first columns of ``q_rslda``. When
    ``C > d`` only the first d ICS_DLSR directions fit.
    """
    q_ics = np.asarray(q_ics, dtype=float)
    q_rslda = np.asarray(q_rslda, dtype=float)
    if q_ics.shape != (c, d):
        raise ValueError(f"q_ics must be ({c}, {d}), got {q_ics.shape}")
    if q_rslda.shape[0] != d:
        raise ValueError(f"q_rslda must have {d} rows, got {q_rslda.shape}")
    k = c if ics_cols is None else ics_cols
    k = min(k, c, d)
    if q_rslda.shape[1] < d - k:
        raise ValueError(f"q_rslda needs at least {d - k} columns")
    return np.hstack([q_ics.T[:, :k], q_rslda[:, :d - k]])


def fit_sda_g(data: LabeledDataset, cfg: SolverConfig | None = None,
              init: str = "rslda", q0=None) -> SdaGModel:
    """Fit SDA_G from an RSLDA (SDA_G_1) or hybrid (SDA_G_2) start.

    Each outer iteration performs the Procrustes P-step, a gradient step on Q
    and a refresh of the reweighting diagonals, and records the surrogate
    objective with the refreshed diagonals. With ``cfg.safeguard`` a step that
    would raise that value is retried at half the step length, up to 20
    times, and skipped if none succeeds; the recorded history is therefore
    non-increasing. Iteration stops when the relative change of the recorded
    value drops below ``cfg.tol``.

    Parameters
    ----------
    q0 : array, optional
        Explicit starting matrix; overrides the baseline-derived start.
    """
    cfg = cfg or SolverConfig()
    if init not in INIT_KINDS:
        raise ValueError(f"init must be one of {INIT_KINDS}, got {init!r}")
    d, c = data.d, data.n_classes
    flags = []
    if q0 is None:
        q_rslda = init_rslda(data, cfg)
        if init == "rslda":
            q0 = q_rslda
        else:
            if c > d:
                flags.append("hybrid_truncated")
            q0 = init_hybrid(fit_ics_dlsr(data, cfg).q, q_rslda, d, c, cfg.ics_cols)
    q0 = _check_shapes(q0, data).copy()

    prob = _Problem(data, cfg)
    eps = cfg.epsilon
    q = q0
    d_list = update_d(q, data, eps)
    history = []
    p = None
    for t in range(cfg.max_iter):
        p, _ = update_p(q, data)
        f_cur = prob.value(q, p, d_list, "surrogate")
        if not np.isfinite(f_cur):
            raise DivergenceError("divergence: reduce alpha")
        g = prob.gradient(q, p, d_list)
        step = cfg.alpha
        q_new, d_new, f_new = q, d_list, f_cur
        if step > 0:
            for _ in range(21 if cfg.safeguard else 1):
                cand = q - step * g
                d_cand = update_d(cand, data, eps)
                f_cand = prob.value(cand, p, d_cand, "surrogate")
                if not cfg.safeguard:
                    q_new, d_new, f_new = cand, d_cand, f_cand
                    break
                if f_cand <= f_cur:
                    q_new, d_new, f_new = cand, d_cand, f_cand
                    break
                step *= 0.5
        if not np.isfinite(f_new):
            raise DivergenceError("divergence: reduce alpha")
        q, d_list = q_new, d_new
        history.append(f_new)
        if t > 0:
            prev = history[-2]
            if abs(prev - f_new) <= cfg.tol * max(abs(prev), np.finfo(float).tiny):
                break
    else:
        flags.append("max_iter_reached")

    return SdaGModel(q=q, p=p, d_list=d_list, init_kind=init, history=history,
                     config=cfg, q0=q0, flags=tuple(flags))


def transform(model, x, m: int | None = None) -> np.ndarray:
    """Embed column samples: ``W[:, :m]' x`` for the model's projection ``W``."""
    w = getattr(model, "projection", model)
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != w.shape[0]:
        raise ValueError(
            f"dimension mismatch: model expects {w.shape[0]} features, got {x.shape[0]}")
    if m is not None:
        if not 1 <= m <= w.shape[1]:
            raise ValueError(f"m must lie in [1, {w.shape[1]}], got {m}")
        w = w[:, :m]
    return w.T @ x
