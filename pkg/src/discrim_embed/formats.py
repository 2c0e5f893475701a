"""On-disk formats.

Dataset CSV: one sample per row, first column the integer class label, the
remaining columns the features. Lines starting with ``#`` are comments; a
``# manifest: {...}`` comment carries the run manifest of generated files.

Model and report JSON store matrices as row-major nested lists.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .baselines import IcsDlsrModel, LdaModel, RsldaModel
from .harness import EvalReport
from .numcore import LabeledDataset, RowWeightDiag
from .sda_g import SdaGModel, SolverConfig

MANIFEST_PREFIX = "# manifest: "


class CsvParseError(ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


# ---------------------------------------------------------------- datasets

def read_dataset_csv(path, name: str | None = None) -> LabeledDataset:
    """Load a labeled CSV; samples are transposed to columns on load.

    Labels are mapped to ``0..C-1`` in ascending order of their values.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    return parse_dataset_csv(text, name or Path(path).stem)


def parse_dataset_csv(text: str, name: str = "dataset") -> LabeledDataset:
    labels, rows = [], []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if width is None:
            width = len(row)
        if len(row) != width:
            raise CsvParseError(f"row {lineno}: expected {width} columns, got {len(row)}")
        if len(row) < 2:
            raise CsvParseError(f"row {lineno}: need a label and at least one feature")
        try:
            lab = float(row[0])
            feats = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise CsvParseError(f"row {lineno}: {exc}") from None
        if lab != int(lab):
            raise CsvParseError(f"row {lineno}: label {row[0]!r} is not an integer")
        if not all(math.isfinite(v) for v in feats):
            raise CsvParseError(f"row {lineno}: non-finite feature")
        labels.append(int(lab))
        rows.append(feats)
    if not rows:
        raise CsvParseError("no data rows")
    _, idx = np.unique(np.asarray(labels), return_inverse=True)
    return LabeledDataset(np.asarray(rows, dtype=float).T, idx, name=name)


def format_dataset_csv(data: LabeledDataset, manifest: dict | None = None,
                       prefix: str = "x") -> str:
    lines = []
    if manifest is not None:
        lines.append(MANIFEST_PREFIX + json.dumps(manifest, sort_keys=True))
    lines.append("# label," + ",".join(f"{prefix}{j}" for j in range(data.d)))
    for k in range(data.n_samples):
        lines.append(str(int(data.labels[k])) + ","
                     + ",".join(_fmt(v) for v in data.samples[:, k]))
    return "\n".join(lines) + "\n"


def read_csv_manifest(path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(MANIFEST_PREFIX):
                return json.loads(line[len(MANIFEST_PREFIX):])
            if not line.startswith("#"):
                return None
    return None


def format_embedding_csv(labels, z, manifest: dict | None = None) -> str:
    """Embedded coordinates, one sample per row, label first."""
    return format_dataset_csv(LabeledDataset(z, labels), manifest, prefix="z")


# ---------------------------------------------------------------- models

def _mat(a):
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model, method: str) -> dict:
    out = {"method": method}
    if isinstance(model, np.ndarray):
        out["projection"] = _mat(model)
        return out
    if isinstance(model, LdaModel):
        out.update(q=_mat(model.q), eigenvalues=_mat(model.eigenvalues),
                   balance=model.balance)
        return out
    out["config"] = model.config.to_dict() if model.config is not None else None
    out["flags"] = list(model.flags)
    out["history"] = [float(v) for v in model.history]
    out["q"] = _mat(model.q)
    if isinstance(model, RsldaModel):
        out.update(p=_mat(model.p), e=_mat(model.e),
                   raw_history=[float(v) for v in model.raw_history],
                   residuals=[float(v) for v in model.residuals])
    elif isinstance(model, IcsDlsrModel):
        out.update(e=_mat(model.e), raw_history=[float(v) for v in model.raw_history],
                   residuals=[float(v) for v in model.residuals])
    elif isinstance(model, SdaGModel):
        out.update(p=_mat(model.p), init_kind=model.init_kind,
                   q0=_mat(model.q0) if model.q0 is not None else None,
                   d_list=[_mat(dd.weights) for dd in model.d_list],
                   epsilon=model.config.epsilon)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return out


def model_from_dict(d: dict):
    method = d["method"]
    arr = lambda k: np.asarray(d[k], dtype=float)
    if "projection" in d:
        return arr("projection")
    if method == "lda":
        return LdaModel(arr("q"), arr("eigenvalues"), d["balance"])
    cfg = SolverConfig.from_dict(d["config"]) if d.get("config") else None
    if method == "rslda":
        return RsldaModel(arr("q"), arr("p"), arr("e"), d["history"], d["raw_history"],
                          d["residuals"], tuple(d["flags"]), cfg)
    if method == "ics-dlsr":
        return IcsDlsrModel(arr("q"), arr("e"), d["history"], d["raw_history"],
                            d["residuals"], tuple(d["flags"]), cfg)
    if method in ("sda-g-1", "sda-g-2"):
        d_list = [RowWeightDiag(np.asarray(w, dtype=float), d["epsilon"]) for w in d["d_list"]]
        q0 = arr("q0") if d.get("q0") is not None else None
        return SdaGModel(arr("q"), arr("p"), d_list, d["init_kind"], d["history"], cfg,
                         q0, tuple(d["flags"]))
    raise ValueError(f"unknown model method {method!r}")


# ---------------------------------------------------------------- reports

REPORT_CSV_FIELDS = ("method", "dataset", "dim", "lambda1", "lambda2", "split", "seed",
                     "accuracy")


def reports_to_csv(reports, manifest: dict | None = None) -> str:
    """Flat CSV, one row per (report, split)."""
    buf = io.StringIO()
    if manifest is not None:
        buf.write(MANIFEST_PREFIX + json.dumps(manifest, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_FIELDS)
    for rep in reports:
        params = rep.params or {}
        for k, acc in enumerate(rep.per_split):
            w.writerow([rep.method, rep.dataset, "" if rep.dim is None else rep.dim,
                        params.get("lambda1", ""), params.get("lambda2", ""), k,
                        rep.plan["base_seed"] + k, _fmt(acc)])
    return buf.getvalue()


def report_from_dict(d: dict) -> EvalReport:
    return EvalReport.from_dict(d)
