"""Reference embedders: classical LDA, robust sparse LDA (RSLDA) and
inter-class-sparsity discriminative least squares (ICS_DLSR).

RSLDA and ICS_DLSR are solved with ADMM. Each solver tracks the best iterate
seen so far (the *incumbent*) and returns it; ``history`` records the
incumbent objective after every iteration, while ``raw_history`` keeps the
objective of the plain ADMM iterate for diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .numcore import (
    LabeledDataset,
    compute_scatter,
    l21_norm,
    procrustes_orthogonal,
    row_shrink,
    row_weight_matrix,
    soft_threshold,
)


@dataclass(frozen=True)
class LdaModel:
    q: np.ndarray
    eigenvalues: np.ndarray
    balance: float

    @property
    def projection(self) -> np.ndarray:
        return self.q


@dataclass(frozen=True)
class RsldaModel:
    q: np.ndarray
    p: np.ndarray
    e: np.ndarray
    history: list
    raw_history: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    flags: tuple = ()
    config: object = None

    @property
    def projection(self) -> np.ndarray:
        return self.q


@dataclass(frozen=True)
class IcsDlsrModel:
    """``q`` maps features to the C-dimensional soft-label space (C x d)."""

    q: np.ndarray
    e: np.ndarray
    history: list
    raw_history: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    flags: tuple = ()
    config: object = None

    @property
    def projection(self) -> np.ndarray:
        return self.q.T


def build_label_matrix(data: LabeledDataset) -> np.ndarray:
    """One-hot ``(C, N)`` matrix with a single 1 per column at the sample's class."""
    y = np.zeros((data.n_classes, data.n_samples))
    y[data.labels, np.arange(data.n_samples)] = 1.0
    return y


def _canonical_signs(v):
    # first entry of non-negligible magnitude in each column made positive
    v = v.copy()
    tol = 1e-12 * max(np.max(np.abs(v)), 1.0)
    for j in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, j]) > tol)
        if nz.size and v[nz[0], j] < 0:
            v[:, j] = -v[:, j]
    return v


def fit_lda(data: LabeledDataset, balance: float, m: int) -> LdaModel:
    """Smallest-eigenvalue eigenvectors of ``S = S_w - balance * S_b``.

    The difference form is solved directly with a symmetric eigensolver, so a
    singular ``S_w`` never blocks the fit.
    """
    d = data.d
    if m > d:
        raise ValueError(f"dimension exceeds features: m={m} > d={d}")
    if m < 1:
        raise ValueError("m must be at least 1")
    s = compute_scatter(data, balance).s
    w, v = linalg.eigh(s)
    # eigh returns ascending eigenvalues; stable order keeps index tie-break
    order = np.argsort(w, kind="stable")[:m]
    return LdaModel(_canonical_signs(v[:, order]), w[order].copy(), float(balance))


# ---------------------------------------------------------------------------
# ADMM machinery shared by the two iterative baselines

def _spd_solve(a, b):
    """Solve ``a x = b`` for symmetric ``a``.

    Cholesky first; on failure a ridge of ``1e-10 * trace/d`` is added and
    Cholesky retried; an indefinite system finally falls back to LU.
    """
    a = 0.5 * (a + a.T)
    try:
        return linalg.cho_solve(linalg.cho_factor(a), b)
    except linalg.LinAlgError:
        pass
    d = a.shape[0]
    ridge = 1e-10 * abs(np.trace(a)) / d
    try:
        return linalg.cho_solve(linalg.cho_factor(a + ridge * np.eye(d)), b)
    except linalg.LinAlgError:
        return linalg.solve(a + ridge * np.eye(d), b, assume_a="sym")


def rslda_objective(q, e, s, lambda1, lambda2) -> float:
    """``tr(Q'SQ) + lambda1 ||Q||_{2,1} + lambda2 ||E||_1``."""
    return float(np.trace(q.T @ s @ q) + lambda1 * l21_norm(q)
                 + lambda2 * np.sum(np.abs(e)))


def feasibility_residual(x, q, p, e) -> float:
    """``||X - P Q' X - E||_F / ||X||_F``."""
    nx = np.linalg.norm(x)
    r = np.linalg.norm(x - p @ (q.T @ x) - e)
    return float(r / nx) if nx > 0 else float(r)


def fit_rslda(data: LabeledDataset, cfg) -> RsldaModel:
    """Robust sparse LDA by ADMM.

    Minimizes ``tr(Q'SQ) + lambda1 ||Q||_{2,1} + lambda2 ||E||_1`` subject to
    ``X = P Q' X + E`` and ``P'P = I``. Each iteration updates Q by a
    reweighted linear solve, P by orthogonal Procrustes, E by soft
    thresholding, then the multiplier and penalty. Iteration stops once the
    relative feasibility residual drops below ``cfg.tol``.

    The returned ``(q, p)`` is the incumbent: the iterate with the lowest
    objective at its feasible completion ``E = X - P Q' X``, which is also
    the returned ``e``.
    """
    if cfg.lambda1 <= 0 or cfg.lambda2 <= 0:
        raise ValueError("RSLDA needs lambda1 > 0 and lambda2 > 0")
    x = data.samples
    d, n = x.shape
    s = compute_scatter(data, cfg.balance).s
    xxt = x @ x.T
    q = np.zeros((d, d))
    p = np.eye(d)
    e = np.zeros((d, n))
    mult = np.zeros((d, n))
    mu = cfg.mu0

    best = None
    history, raw_history, residuals = [], [], []
    flags = []
    for _ in range(cfg.max_iter):
        m = x - e + mult / mu
        dq = row_weight_matrix(q, cfg.epsilon).weights
        a = 2.0 * s + 2.0 * cfg.lambda1 * np.diag(dq) + mu * xxt
        q = _spd_solve(a, mu * (x @ (m.T @ p)))
        p, _ = procrustes_orthogonal(m @ (x.T @ q))
        recon = x - p @ (q.T @ x)
        e = soft_threshold(recon + mult / mu, cfg.lambda2 / mu)
        mult = mult + mu * (recon - e)
        mu = min(cfg.rho * mu, cfg.mu_max)

        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(e))):
            raise FloatingPointError("RSLDA iterates became non-finite")
        f_feas = rslda_objective(q, recon, s, cfg.lambda1, cfg.lambda2)
        raw_history.append(rslda_objective(q, e, s, cfg.lambda1, cfg.lambda2))
        res = feasibility_residual(x, q, p, e)
        residuals.append(res)
        if best is None or f_feas <= best[0]:
            best = (f_feas, q, p, recon)
        history.append(best[0])
        if res < cfg.tol:
            break
    else:
        flags.append("max_iter_reached")

    _, q, p, e = best
    return RsldaModel(q=q, p=p, e=e, history=history, raw_history=raw_history,
                      residuals=residuals, flags=tuple(flags), config=cfg)


def ics_dlsr_objective(q, e, x, y, blocks, lambda1, lambda2, lambda3) -> float:
    r = y + e - q @ x
    f = 0.5 * np.sum(r * r) + 0.5 * lambda1 * np.sum(q * q)
    if lambda2:
        f += lambda2 * sum(l21_norm(q @ xi) for xi in blocks)
    if lambda3:
        f += lambda3 * l21_norm(e)
    return float(f)


def fit_ics_dlsr(data: LabeledDataset, cfg) -> IcsDlsrModel:
    """Inter-class-sparsity discriminative least squares regression by ADMM.

    Minimizes ``1/2 ||Y + E - QX||^2 + lambda1/2 ||Q||^2
    + lambda2 sum_i ||Q X_i||_{2,1} + lambda3 ||E||_{2,1}`` with an auxiliary
    ``T = QX`` carrying the class-wise row-sparsity term. ``lambda3 = 0``
    switches the slack ``E`` off (held at zero), which reduces the problem to
    ridge regression when ``lambda2`` is also zero.
    """
    if cfg.lambda1 <= 0:
        raise ValueError("ICS_DLSR needs lambda1 > 0")
    if cfg.lambda2 < 0 or cfg.lambda3 < 0:
        raise ValueError("ICS_DLSR needs lambda2, lambda3 >= 0")
    x = data.samples
    d, n = x.shape
    c = data.n_classes
    y = build_label_matrix(data)
    blocks = data.class_blocks()
    masks = [data.labels == i for i in range(c)]
    xxt = x @ x.T
    eye = np.eye(d)

    q = np.zeros((c, d))
    t = np.zeros((c, n))
    e = np.zeros((c, n))
    mult = np.zeros((c, n))
    mu = cfg.mu0
    obj = lambda q_, e_: ics_dlsr_objective(q_, e_, x, y, blocks, cfg.lambda1,
                                            cfg.lambda2, cfg.lambda3)

    best = None
    history, raw_history, residuals = [], [], []
    flags = []
    q_prev = q
    for _ in range(cfg.max_iter):
        # Q: ridge system (lambda1 I + mu X X') Q' = X (mu T + Lambda)'
        q = _spd_solve(cfg.lambda1 * eye + mu * xxt, x @ (mu * t + mult).T).T
        qx = q @ x
        v = (y + e + mu * qx - mult) / (1.0 + mu)
        t = v.copy()
        if cfg.lambda2:
            for mask in masks:
                t[:, mask] = row_shrink(v[:, mask], cfg.lambda2 / (1.0 + mu))
        if cfg.lambda3:
            e = row_shrink(t - y, cfg.lambda3)
        mult = mult + mu * (t - qx)
        mu = min(cfg.rho * mu, cfg.mu_max)

        if not np.all(np.isfinite(q)):
            raise FloatingPointError("ICS_DLSR iterates became non-finite")
        f = obj(q, e)
        raw_history.append(f)
        nt = np.linalg.norm(t)
        res = float(np.linalg.norm(t - qx) / nt) if nt > 0 else 0.0
        residuals.append(res)
        if best is None or f <= best[0]:
            best = (f, q, e)
        history.append(best[0])
        step = np.linalg.norm(q - q_prev) / max(np.linalg.norm(q), np.finfo(float).tiny)
        q_prev = q
        if res < cfg.tol and step < cfg.tol:
            break
    else:
        flags.append("max_iter_reached")

    _, q, e = best
    return IcsDlsrModel(q=q, e=e, history=history, raw_history=raw_history,
                        residuals=residuals, flags=tuple(flags), config=cfg)
