"""Dataset CSV and model-parameter JSON formats.

Datasets exchange as CSV with header ``t,v`` or ``t,v,theta`` and one
sample per row. Models serialize to a JSON document with a mode tag,
a density block shared by all banks, per-bank envelope blocks, and the
flag points. All writes go through a temp-then-rename step so an
interrupted run never leaves a truncated file.
"""

from __future__ import annotations

import csv
import io
import json
import os
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .envelopes import envelope_from_dict
from .errors import ConfigError, InputError
from .metrics import Metrics
from .operators import DensitySpec, EgpiModel, GpiModel, SwitchMode
from .signals import Trajectory

MODE_TAGS = {
    "gpi": None,
    "egpi_two_flag": SwitchMode.TWO_FLAG,
    "egpi_descend_flag": SwitchMode.DESCEND_FLAG,
}

DEFAULT_UNITS = {"input": "count", "output": "deg"}


def _atomic_write(path, text: str):
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _created_stamp() -> str:
    # honor SOURCE_DATE_EPOCH so reruns can be byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        dt = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        dt = datetime.now(tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------- datasets

def load_dataset(path) -> Trajectory:
    """Parse a dataset CSV, reporting the line number of any bad row."""
    path = os.fspath(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: file is empty, expected header 't,v[,theta]'")
        cols = [c.strip() for c in header]
        if cols == ["t", "v"]:
            has_theta = False
        elif cols == ["t", "v", "theta"]:
            has_theta = True
        else:
            raise InputError(
                f"{path}:1: expected header 't,v' or 't,v,theta', got {','.join(cols)!r}"
            )
        width = 3 if has_theta else 2
        t, v, theta = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise InputError(
                    f"{path}:{lineno}: expected {width} columns, got {len(row)}"
                )
            try:
                values = [float(x) for x in row]
            except ValueError:
                raise InputError(f"{path}:{lineno}: malformed row {row!r}") from None
            t.append(values[0])
            v.append(values[1])
            if has_theta:
                theta.append(values[2])
    if not t:
        raise InputError(f"{path}: no data rows")
    t = np.array(t)
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if bad.size:
        raise InputError(
            f"{path}:{int(bad[0]) + 3}: timestamp does not increase over line "
            f"{int(bad[0]) + 2}"
        )
    return Trajectory(t=t, v=np.array(v), theta=np.array(theta) if has_theta else None)


def _format_rows(header, columns) -> str:
    columns = [np.asarray(col) for col in columns]
    fmts = [
        (lambda x: str(int(x))) if np.issubdtype(col.dtype, np.integer) else (lambda x: repr(float(x)))
        for col in columns
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([fmt(x) for fmt, x in zip(fmts, row)])
    return buf.getvalue()


def save_dataset(path, traj: Trajectory):
    if traj.theta is None:
        text = _format_rows(["t", "v"], [traj.t, traj.v])
    else:
        text = _format_rows(["t", "v", "theta"], [traj.t, traj.v, traj.theta])
    _atomic_write(path, text)


def save_simulation(path, t, v, z, z1, z2, active):
    text = _format_rows(["t", "v", "z", "z1", "z2", "active"], [t, v, z, z1, z2, active])
    _atomic_write(path, text)


def save_predictions(path, t, v, theta, theta_hat):
    text = _format_rows(
        ["t", "v", "theta", "theta_hat", "error"],
        [t, v, theta, theta_hat, np.asarray(theta_hat) - np.asarray(theta)],
    )
    _atomic_write(path, text)


# ------------------------------------------------------------ model files

def _density_doc(d: DensitySpec) -> dict:
    return {"lambda": d.lam, "sigma": d.sigma, "r1": d.r1, "rn": d.rn, "n": d.n}


def _density_from_doc(doc: dict) -> DensitySpec:
    try:
        return DensitySpec(
            lam=float(doc["lambda"]),
            sigma=float(doc["sigma"]),
            r1=float(doc["r1"]),
            rn=float(doc["rn"]),
            n=int(doc["n"]),
        )
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"density block missing field {exc}") from None


def _submodel_doc(m: GpiModel) -> dict:
    return {
        "asc_env": m.asc_env.to_dict(),
        "desc_env": m.desc_env.to_dict(),
        "kappa_asc": m.kappa_asc,
        "kappa_desc": m.kappa_desc,
    }


def model_to_doc(model, units: dict | None = None, source: str = "") -> dict:
    """Serializable document for a model, schema shared by save/load."""
    if isinstance(model, GpiModel):
        mode = "gpi"
        density = model.density
        submodels = [_submodel_doc(model)]
        flags = {}
    elif isinstance(model, EgpiModel):
        sub1, sub2 = model.submodels
        if sub1.density != sub2.density:
            raise ConfigError("model file format requires one density shared by both banks")
        density = sub1.density
        submodels = [_submodel_doc(sub1), _submodel_doc(sub2)]
        if model.mode is SwitchMode.TWO_FLAG:
            mode = "egpi_two_flag"
            flags = {"v_f_asc": model.flag_asc, "v_f_desc": model.flag_desc}
        else:
            mode = "egpi_descend_flag"
            flags = {"v_f_desc": model.flag_desc}
    else:
        raise ConfigError(f"cannot serialize object of type {type(model).__name__}")
    return {
        "mode": mode,
        "density": _density_doc(density),
        "submodels": submodels,
        "flags": flags,
        "units": dict(units or DEFAULT_UNITS),
        "meta": {"created": _created_stamp(), "tool_version": __version__, "source": source},
    }


def model_from_doc(doc: dict):
    """Rebuild a model from its document, enforcing mode/flag consistency."""
    if not isinstance(doc, dict) or "mode" not in doc:
        raise ConfigError("model document must be an object with a 'mode' field")
    mode = doc["mode"]
    if mode not in MODE_TAGS:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {sorted(MODE_TAGS)}")
    density = _density_from_doc(doc.get("density", {}))
    subdocs = doc.get("submodels", [])
    expected = 1 if mode == "gpi" else 2
    if len(subdocs) != expected:
        raise ConfigError(f"mode {mode!r} requires {expected} submodel(s), got {len(subdocs)}")

    def bank(sub):
        try:
            return GpiModel(
                density=density,
                asc_env=envelope_from_dict(sub["asc_env"]),
                desc_env=envelope_from_dict(sub["desc_env"]),
                kappa_asc=float(sub.get("kappa_asc", 1.0)),
                kappa_desc=float(sub.get("kappa_desc", 1.0)),
            )
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"submodel block missing field {exc}") from None

    if mode == "gpi":
        return bank(subdocs[0])
    flags = doc.get("flags", {})
    return EgpiModel(
        submodels=[bank(subdocs[0]), bank(subdocs[1])],
        mode=MODE_TAGS[mode],
        flag_asc=_opt_float(flags.get("v_f_asc")),
        flag_desc=_opt_float(flags.get("v_f_desc")),
    )


def _opt_float(x):
    return None if x is None else float(x)


def save_model(path, model, units=None, source=""):
    doc = model_to_doc(model, units=units, source=source)
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")
    return doc


def load_model(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return model_from_doc(doc)


def load_model_doc(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None


# ------------------------------------------------------------- fit output

def fit_result_to_doc(result, dataset: str = "", units=None) -> dict:
    """FitResult document embedding the fitted model's own document."""
    model_doc = model_to_doc(result.model(), units=units, source=dataset)
    return {
        "fit_mode": result.mode,
        "dataset": dataset,
        "v_f": result.v_f,
        "params": result.param_dict(),
        "n_operators": result.n_operators,
        "iterations": result.iterations,
        "converged": result.converged,
        "reason": result.reason,
        "loss_trace": [float(x) for x in result.loss_trace],
        "metrics": result.metrics.to_dict(),
        "model": model_doc,
    }


def save_fit_result(path, result, dataset: str = "", units=None) -> dict:
    doc = fit_result_to_doc(result, dataset=dataset, units=units)
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")
    return doc


# ---------------------------------------------------------------- reports

def report_row(dataset: str, model: str, metrics: Metrics) -> dict:
    return {
        "dataset": dataset,
        "model": model,
        "rmse_deg": metrics.rmse,
        "nrmse_pct": metrics.nrmse,
        "mae_deg": metrics.mae,
        "n": metrics.n,
    }


def write_report(path, rows: list[dict]):
    """One row per (dataset, model) pair; CSV or JSON by file extension."""
    path = os.fspath(path)
    if path.endswith(".json"):
        _atomic_write(path, json.dumps(rows, indent=2) + "\n")
        return
    buf = io.StringIO()
    fields = ["dataset", "model", "rmse_deg", "nrmse_pct", "mae_deg", "n"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buf.getvalue())
