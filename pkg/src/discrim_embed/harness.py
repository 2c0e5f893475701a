"""Evaluation protocol: synthetic Tetra data, repeated stratified splits,
PCA preprocessing, nearest-neighbour classification and parameter sweeps."""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .baselines import fit_ics_dlsr, fit_lda, fit_rslda
from .numcore import LabeledDataset, pca_preprocess
from .sda_g import SolverConfig, fit_sda_g, transform

METHODS = ("identity", "lda", "rslda", "ics-dlsr", "sda-g-1", "sda-g-2")

# edge length of the tetrahedron of ball centres, in units of the ball radius
TETRA_EDGE = 2.1


def gen_tetra(n_per_class: int, target_dim: int, seed=0) -> LabeledDataset:
    """Four nearly touching unit balls at the vertices of a regular
    tetrahedron, sampled uniformly and lifted isometrically to
    ``target_dim`` dimensions by a random orthonormal 3-column map."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    if target_dim < 3:
        raise ValueError("target_dim must be at least 3")
    rng = np.random.default_rng(seed)
    verts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    verts *= TETRA_EDGE / np.linalg.norm(verts[0] - verts[1])
    pts = []
    for v in verts:
        g = rng.standard_normal((n_per_class, 3))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.random((n_per_class, 1)) ** (1.0 / 3.0)
        pts.append(v + g * r)
    z = np.vstack(pts).T
    lift, _ = np.linalg.qr(rng.standard_normal((target_dim, 3)))
    labels = np.repeat(np.arange(4), n_per_class)
    return LabeledDataset(lift @ z, labels, 4, name="tetra")


def nn_classify(train_embed, train_labels, test_embed) -> np.ndarray:
    """1-NN under Euclidean distance; ties go to the lowest training index."""
    train_embed = np.asarray(train_embed, dtype=float)
    test_embed = np.asarray(test_embed, dtype=float)
    train_labels = np.asarray(train_labels)
    if train_embed.shape[1] == 0:
        raise ValueError("empty training set")
    dist = cdist(test_embed.T, train_embed.T, "sqeuclidean")
    return train_labels[np.argmin(dist, axis=1)]


@dataclass(frozen=True)
class SplitPlan:
    train_per_class: int
    n_repeats: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if self.train_per_class < 1 or self.n_repeats < 1:
            raise ValueError("train_per_class and n_repeats must be positive")

    def validate(self, data: LabeledDataset):
        smallest = int(data.class_counts.min())
        if self.train_per_class >= smallest:
            raise ValueError(
                f"invalid plan: train_per_class={self.train_per_class} must be below "
                f"the smallest class count {smallest}")

    def to_dict(self):
        return {"train_per_class": self.train_per_class, "n_repeats": self.n_repeats,
                "base_seed": self.base_seed}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    config: SolverConfig = field(default_factory=SolverConfig)
    m: int | None = None

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValueError(f"unknown method {self.name!r}; choose from {METHODS}")

    def with_config(self, **changes) -> "MethodSpec":
        return MethodSpec(self.name, self.config.replace(**changes), self.m)


@dataclass(frozen=True)
class EvalReport:
    method: str
    dataset: str
    plan: dict
    per_split: tuple
    mean: float
    std: float
    dim: int | None = None
    params: dict | None = None
    warning: str | None = None

    def to_dict(self) -> dict:
        out = {"method": self.method, "dataset": self.dataset, "plan": dict(self.plan),
               "per_split": list(self.per_split), "mean": self.mean, "std": self.std}
        if self.dim is not None:
            out["dim"] = self.dim
        if self.params is not None:
            out["params"] = dict(self.params)
        if self.warning is not None:
            out["warning"] = self.warning
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(d["method"], d["dataset"], d["plan"], tuple(d["per_split"]),
                   d["mean"], d["std"], d.get("dim"), d.get("params"), d.get("warning"))


def _aggregate(acc):
    # fsum keeps the aggregate independent of split order
    n = len(acc)
    mean = math.fsum(acc) / n
    std = math.sqrt(math.fsum((a - mean) ** 2 for a in acc) / n)
    return mean, std


def make_report(method, dataset, plan, per_split, **extra) -> EvalReport:
    per_split = tuple(float(a) for a in per_split)
    mean, std = _aggregate(per_split)
    plan = plan.to_dict() if isinstance(plan, SplitPlan) else dict(plan)
    return EvalReport(method, dataset, plan, per_split, mean, std, **extra)


def fit_method(spec: MethodSpec, data: LabeledDataset):
    """Fit the named embedder; the result exposes ``.projection`` (d x k)."""
    cfg = spec.config
    if spec.name == "identity":
        return np.eye(data.d)
    if spec.name == "lda":
        m = spec.m if spec.m is not None else max(1, min(data.n_classes - 1, data.d))
        return fit_lda(data, cfg.balance, m)
    if spec.name == "rslda":
        return fit_rslda(data, cfg)
    if spec.name == "ics-dlsr":
        return fit_ics_dlsr(data, cfg)
    if spec.name == "sda-g-1":
        return fit_sda_g(data, cfg, "rslda")
    return fit_sda_g(data, cfg, "hybrid")


def projection_of(model) -> np.ndarray:
    return np.asarray(getattr(model, "projection", model), dtype=float)


def stratified_split(data: LabeledDataset, train_per_class: int, seed):
    """Sorted train/test column indices with ``train_per_class`` per class."""
    rng = np.random.default_rng(seed)
    train = []
    for i in range(data.n_classes):
        idx = np.flatnonzero(data.labels == i)
        train.append(idx[rng.permutation(idx.size)[:train_per_class]])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(data.n_samples), train)
    return train, test


def _prepare_split(data, plan, r):
    train_idx, test_idx = stratified_split(data, plan.train_per_class, plan.base_seed + r)
    train = data.subset(train_idx)
    basis, train_p = pca_preprocess(train)
    test_x = basis.apply(data.samples[:, test_idx])
    return train_p, test_x, data.labels[test_idx]


def _accuracy(pred, truth):
    return 100.0 * float(np.mean(pred == truth))


def _run_split(data, spec, plan, r, dims=None):
    """Accuracy of one repeat, keyed by embedding dimension.

    With ``dims`` the method is fitted once at full dimension and evaluated
    on the leading ``m`` projection columns for each ``m``.
    """
    train, test_x, test_y = _prepare_split(data, plan, r)
    if dims is None:
        fit_spec = spec
        dims = [None if spec.name == "lda" else spec.m]
    else:
        fit_spec = MethodSpec(spec.name, spec.config, train.d if spec.name == "lda" else None)
    w = projection_of(fit_method(fit_spec, train))
    out = {}
    for m in dims:
        if m is not None and m > w.shape[1]:
            out[m] = None
            continue
        z_train = transform(w, train.samples, m)
        z_test = transform(w, test_x, m)
        out[m] = _accuracy(nn_classify(z_train, train.labels, z_test), test_y)
    return out


def _map_repeats(fn, n, jobs):
    if jobs is None or jobs <= 1:
        return [fn(r) for r in range(n)]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, range(n)))


def run_protocol(data: LabeledDataset, spec: MethodSpec, plan: SplitPlan,
                 jobs: int = 1) -> EvalReport:
    """Average test accuracy over ``plan.n_repeats`` seeded stratified splits.

    Each repeat fits PCA on the training part only, projects the test part
    with the training mean and basis, fits the method on the training part,
    embeds both parts and classifies the test part by 1-NN.
    """
    plan.validate(data)
    results = _map_repeats(lambda r: _run_split(data, spec, plan, r), plan.n_repeats, jobs)
    acc = [next(iter(res.values())) for res in results]
    if any(a is None for a in acc):
        raise ValueError(f"m={spec.m} exceeds the embedding dimension")
    return make_report(spec.name, data.name, plan, acc, dim=spec.m)


def sweep_dimension(data: LabeledDataset, spec: MethodSpec, plan: SplitPlan, dims,
                    jobs: int = 1) -> list[EvalReport]:
    """One report per embedding dimension, sorted ascending.

    Each split is fitted once and evaluated on the first ``m`` projection
    columns for every requested ``m``. A dimension larger than the embedding
    of some split yields a report carrying a warning and no accuracies.
    """
    plan.validate(data)
    dims = sorted(set(int(m) for m in dims))
    if any(m < 1 for m in dims):
        raise ValueError("dimensions must be positive")
    results = _map_repeats(lambda r: _run_split(data, spec, plan, r, dims),
                           plan.n_repeats, jobs)
    reports = []
    for m in dims:
        acc = [res[m] for res in results]
        if any(a is None for a in acc):
            msg = f"dimension {m} exceeds the post-PCA embedding dimension; skipped"
            warnings.warn(msg, stacklevel=2)
            reports.append(EvalReport(spec.name, data.name, plan.to_dict(), (),
                                      math.nan, math.nan, dim=m, warning=msg))
        else:
            reports.append(make_report(spec.name, data.name, plan, acc, dim=m))
    return reports


def default_lambda1_grid():
    return list(np.logspace(-5, 0, 6))


def default_lambda2_grid():
    return list(np.logspace(-3, 1, 5))


def sweep_params(data: LabeledDataset, spec: MethodSpec, plan: SplitPlan,
                 lambda1_grid=None, lambda2_grid=None, jobs: int = 1) -> dict:
    """Evaluate every (lambda1, lambda2) pair of the two grids.

    Returns a dict with the grid axes echoed and a row-major list of cells,
    ``cells[i][j]`` holding the report for ``lambda1_grid[i], lambda2_grid[j]``.
    """
    l1 = [float(v) for v in (default_lambda1_grid() if lambda1_grid is None else lambda1_grid)]
    l2 = [float(v) for v in (default_lambda2_grid() if lambda2_grid is None else lambda2_grid)]
    if not l1 or not l2:
        raise ValueError("parameter grids must be nonempty")
    plan.validate(data)
    cells = [[None] * len(l2) for _ in l1]
    for (i, a), (j, b) in itertools.product(enumerate(l1), enumerate(l2)):
        rep = run_protocol(data, spec.with_config(lambda1=a, lambda2=b), plan, jobs)
        cells[i][j] = EvalReport(rep.method, rep.dataset, rep.plan, rep.per_split,
                                 rep.mean, rep.std, params={"lambda1": a, "lambda2": b})
    return {"method": spec.name, "dataset": data.name, "plan": plan.to_dict(),
            "lambda1_grid": l1, "lambda2_grid": l2, "cells": cells}
