"""JSON instance files, point-set files, certificates and trace CSVs.

Unknown fields are rejected everywhere. All writes go to a temporary file in
the target directory and are renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Any, Optional

from proxima.errors import InstanceFormatError, ParamsError
from proxima.iterator import IterationTrace, outcome_to_dict
from proxima.mapping import GroundTruth, Instance, map_from_dict
from proxima.metric import PointSet, Side, grid_interval, make_point
from proxima.params import ContractionParams
from proxima.settings import validate_keys

INSTANCE_KEYS = frozenset({"dimension", "metric", "A", "B", "map", "params", "ground_truth", "metadata"})
REQUIRED_KEYS = frozenset({"dimension", "A", "B", "map", "params"})


def _check(section: str, raw: Any, allowed: set[str], required: set[str] = frozenset()) -> None:
    validate_keys(section, raw, frozenset(allowed), frozenset(required), InstanceFormatError)


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InstanceFormatError(f"'{where}' must be a finite number, got {value!r}")
    return float(value)


def _point(raw: Any, where: str):
    if not isinstance(raw, list):
        raise InstanceFormatError(f"'{where}' must be a list of coordinates, got {raw!r}")
    return make_point(_number(v, where) for v in raw)


# ---------------------------------------------------------------------------
# Sets
# ---------------------------------------------------------------------------


def set_from_dict(raw: Any, label: Side, where: str) -> PointSet:
    if isinstance(raw, list):
        # bare list of points is accepted for point-set files
        raw = {"kind": "points", "points": raw}
    if not isinstance(raw, dict):
        raise InstanceFormatError(f"'{where}' must be an object")
    kind = raw.get("kind")
    if kind == "points":
        _check(where, raw, {"kind", "points"}, {"points"})
        if not isinstance(raw["points"], list):
            raise InstanceFormatError(f"'{where}.points' must be a list")
        return PointSet.from_points(
            [_point(p, f"{where}.points[{i}]") for i, p in enumerate(raw["points"])], label
        )
    if kind == "grid_interval":
        _check(where, raw, {"kind", "low", "high", "points_per_axis"}, {"low", "high", "points_per_axis"})
        count = raw["points_per_axis"]
        if isinstance(count, bool) or not isinstance(count, int):
            raise InstanceFormatError(f"'{where}.points_per_axis' must be an integer, got {count!r}")
        return grid_interval(_point(raw["low"], f"{where}.low"), _point(raw["high"], f"{where}.high"), count, label)
    raise InstanceFormatError(f"'{where}.kind' must be 'points' or 'grid_interval', got {kind!r}")


def set_to_dict(s: PointSet) -> dict[str, Any]:
    if s.grid is not None:
        return {
            "kind": "grid_interval",
            "low": list(s.grid.low),
            "high": list(s.grid.high),
            "points_per_axis": s.grid.points_per_axis,
        }
    return {"kind": "points", "points": [list(p) for p in s.as_points()]}


def load_point_set_file(path: str) -> PointSet:
    return set_from_dict(_read_json(path), Side.IMAGE, os.path.basename(path))


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def _params_from_dict(raw: Any) -> ContractionParams:
    _check("params", raw, {"K", "alpha", "beta", "omega"}, {"K", "alpha", "beta"})
    omega = raw.get("omega")
    return ContractionParams(
        K=_number(raw["K"], "params.K"),
        alpha=_number(raw["alpha"], "params.alpha"),
        beta=_number(raw["beta"], "params.beta"),
        omega=None if omega is None else _number(omega, "params.omega"),
    )


def _ground_truth_from_dict(raw: Any) -> GroundTruth:
    _check("ground_truth", raw, {"D", "fixed_point", "z_A", "z_B"})

    def opt_point(key: str):
        value = raw.get(key)
        return None if value is None else _point(value, f"ground_truth.{key}")

    D = raw.get("D")
    return GroundTruth(
        D=None if D is None else _number(D, "ground_truth.D"),
        fixed_point=opt_point("fixed_point"),
        z_A=opt_point("z_A"),
        z_B=opt_point("z_B"),
    )


def instance_from_dict(raw: Any) -> Instance:
    _check("instance", raw, INSTANCE_KEYS, REQUIRED_KEYS)
    dimension = raw["dimension"]
    if isinstance(dimension, bool) or not isinstance(dimension, int) or dimension < 1:
        raise InstanceFormatError(f"'dimension' must be a positive integer, got {dimension!r}")
    metric = raw.get("metric", "euclidean")
    if metric != "euclidean":
        raise InstanceFormatError(f"only the 'euclidean' metric is supported, got {metric!r}")
    metadata = raw.get("metadata", {}) or {}
    if not isinstance(metadata, dict):
        raise InstanceFormatError("'metadata' must be an object")
    try:
        params = _params_from_dict(raw["params"])
    except ParamsError as exc:
        raise InstanceFormatError(f"invalid params: {exc}") from exc
    truth = raw.get("ground_truth")
    return Instance(
        dimension=dimension,
        A=set_from_dict(raw["A"], Side.A, "A"),
        B=set_from_dict(raw["B"], Side.B, "B"),
        map=map_from_dict(raw["map"], dimension),
        params=params,
        ground_truth=None if truth is None else _ground_truth_from_dict(truth),
        metadata=dict(metadata),
    )


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    p = inst.params
    out: dict[str, Any] = {
        "dimension": inst.dimension,
        "metric": "euclidean",
        "A": set_to_dict(inst.A),
        "B": set_to_dict(inst.B),
        "map": inst.map.to_dict(),
        "params": {"K": p.K, "alpha": p.alpha, "beta": p.beta, "omega": p.omega},
    }
    if inst.ground_truth is not None:
        g = inst.ground_truth
        out["ground_truth"] = {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in (("D", g.D), ("fixed_point", g.fixed_point), ("z_A", g.z_A), ("z_B", g.z_B))
            if v is not None
        }
    if inst.metadata:
        out["metadata"] = inst.metadata
    return out


def _read_json(path: str) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise InstanceFormatError(f"{path}: {exc.strerror or exc}") from exc


def load_instance(path: str) -> Instance:
    return instance_from_dict(_read_json(path))


def save_instance(inst: Instance, path: str) -> None:
    write_json(path, instance_to_dict(inst))


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".proxima_", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(payload: Any) -> str:
    return json.dumps(payload, indent=2) + "\n"


def write_json(path: str, payload: Any) -> None:
    atomic_write(path, dump_json(payload))


def _full(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def trace_rows(trace: IterationTrace) -> list[dict[str, str]]:
    """One row per iterate, 1-based; step columns are blank where undefined."""
    rows = []
    for i, (p, side) in enumerate(zip(trace.points, trace.sides)):
        row = {"n": str(i + 1), "side": side.value}
        row.update({f"coord_{k}": repr(float(c)) for k, c in enumerate(p)})
        at = lambda seq: seq[i] if i < len(seq) else None  # noqa: E731
        row["step_dist"] = _full(at(trace.step_dist))
        row["two_step_dist"] = _full(at(trace.two_step_dist))
        row["bound_rhs"] = _full(at(trace.bound_rhs))
        row["partial_sum"] = _full(at(trace.partial_sums))
        rows.append(row)
    return rows


def trace_fieldnames(dimension: int) -> list[str]:
    coords = [f"coord_{k}" for k in range(dimension)]
    return ["n", "side", *coords, "step_dist", "two_step_dist", "bound_rhs", "partial_sum"]


def write_trace(path: str, trace: IterationTrace, extra: Optional[dict[str, Any]] = None) -> str:
    """Write the trace CSV and its ``.outcome.json`` sibling; returns the sibling path."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=trace_fieldnames(len(trace.points[0])), lineterminator="\n")
    writer.writeheader()
    writer.writerows(trace_rows(trace))
    atomic_write(path, buf.getvalue())

    outcome = outcome_to_dict(trace.outcome)
    outcome.update(
        D=trace.D,
        iterations=trace.iterations,
        policy=str(trace.policy),
        omega=trace.omega,
        stopped_early=trace.stopped_early,
    )
    outcome.update(extra or {})
    sibling = os.path.splitext(path)[0] + ".outcome.json"
    write_json(sibling, outcome)
    return sibling
