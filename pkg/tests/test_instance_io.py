"""Tests for proxima.instance_io: instance files, point sets, trace CSVs."""

from __future__ import annotations

import csv
import json

import pytest

from proxima.certifier import certify
from proxima.errors import InstanceFormatError
from proxima.gallery import (
    SCAN_PLAN,
    make_expansive_counterexample,
    make_finite_random,
    make_intersecting,
    make_midpoint_cyclic,
    make_multivalued_ball,
)
from proxima.instance_io import (
    atomic_write,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_point_set_file,
    save_instance,
    trace_fieldnames,
    write_trace,
)
from proxima.iterator import run
from proxima.mapping import TableMap
from proxima.metric import Side


def _minimal(**overrides) -> dict:
    raw = {
        "dimension": 1,
        "A": {"kind": "points", "points": [[1.0], [2.0]]},
        "B": {"kind": "points", "points": [[-1.0]]},
        "map": {"kind": "table", "from_A": [[0], [0]], "from_B": [[0]]},
        "params": {"K": 0.5, "alpha": 0.0, "beta": 0.0},
    }
    raw.update(overrides)
    return raw


def _write(tmp_path, payload, name="inst.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload) if not isinstance(payload, str) else payload)
    return str(path)


class TestInstanceFromDict:
    def test_minimal(self):
        inst = instance_from_dict(_minimal())
        assert inst.dimension == 1
        assert isinstance(inst.map, TableMap)
        assert inst.D == 2.0
        assert inst.ground_truth is None
        assert inst.metadata == {}

    def test_grid_interval_set(self):
        inst = instance_from_dict(
            _minimal(A={"kind": "grid_interval", "low": [1.0], "high": [2.0], "points_per_axis": 2})
        )
        assert inst.A.as_points() == [(1.0,), (2.0,)]
        assert inst.A.label is Side.A

    def test_unknown_top_level_key(self):
        with pytest.raises(InstanceFormatError, match="Unknown keys"):
            instance_from_dict(_minimal(colour="red"))

    def test_missing_required_key(self):
        raw = _minimal()
        del raw["params"]
        with pytest.raises(InstanceFormatError, match="params"):
            instance_from_dict(raw)

    def test_unknown_param_key(self):
        with pytest.raises(InstanceFormatError, match="Unknown keys"):
            instance_from_dict(_minimal(params={"K": 0.5, "alpha": 0.0, "beta": 0.0, "gamma": 1}))

    def test_invalid_params_become_format_errors(self):
        with pytest.raises(InstanceFormatError, match="invalid params"):
            instance_from_dict(_minimal(params={"K": 1.5, "alpha": 0.0, "beta": 0.0}))

    def test_boolean_number_rejected(self):
        with pytest.raises(InstanceFormatError, match="finite number"):
            instance_from_dict(_minimal(params={"K": True, "alpha": 0.0, "beta": 0.0}))

    def test_other_metric_rejected(self):
        with pytest.raises(InstanceFormatError, match="euclidean"):
            instance_from_dict(_minimal(metric="manhattan"))

    def test_bad_dimension(self):
        with pytest.raises(InstanceFormatError, match="dimension"):
            instance_from_dict(_minimal(dimension=0))

    def test_bad_set_kind(self):
        with pytest.raises(InstanceFormatError, match="grid_interval"):
            instance_from_dict(_minimal(B={"kind": "cloud", "points": [[-1.0]]}))

    def test_empty_set(self):
        with pytest.raises(InstanceFormatError, match="nonempty"):
            instance_from_dict(_minimal(B={"kind": "points", "points": []}))

    def test_metadata_must_be_object(self):
        with pytest.raises(InstanceFormatError, match="metadata"):
            instance_from_dict(_minimal(metadata=[1, 2]))

    def test_ground_truth(self):
        inst = instance_from_dict(_minimal(ground_truth={"D": 2.0, "z_A": [1.0], "z_B": [-1.0]}))
        assert inst.ground_truth.D == 2.0
        assert inst.ground_truth.z_B == (-1.0,)
        assert inst.ground_truth.fixed_point is None


class TestSaveLoad:
    def test_midpoint_round_trip(self, tmp_path):
        inst = make_midpoint_cyclic(11)
        path = str(tmp_path / "mid.json")
        save_instance(inst, path)
        loaded = load_instance(path)
        assert loaded.A.as_points() == inst.A.as_points()
        assert loaded.B.as_points() == inst.B.as_points()
        assert loaded.D == inst.D
        assert loaded.omega == inst.omega
        assert loaded.metadata == inst.metadata
        assert instance_to_dict(loaded) == instance_to_dict(inst)

    def test_grid_written_compactly(self, tmp_path):
        path = str(tmp_path / "mid.json")
        save_instance(make_midpoint_cyclic(101), path)
        raw = json.loads(open(path).read())
        assert raw["A"] == {"kind": "grid_interval", "low": [1.0], "high": [2.0], "points_per_axis": 101}

    def test_table_round_trip(self, tmp_path):
        inst = make_finite_random(2, 4, 5)
        path = str(tmp_path / "rand.json")
        save_instance(inst, path)
        loaded = load_instance(path)
        assert loaded.map.from_A == inst.map.from_A
        assert loaded.A.as_points() == inst.A.as_points()

    def test_ball_round_trip(self, tmp_path):
        inst = make_multivalued_ball(0.05, 3, 11)
        path = str(tmp_path / "ball.json")
        save_instance(inst, path)
        assert load_instance(path).omega == inst.omega

    @pytest.mark.parametrize(
        "build",
        [
            lambda: make_midpoint_cyclic(11),
            lambda: make_intersecting(0.5, 101),
            lambda: make_expansive_counterexample(11),
            lambda: make_multivalued_ball(0.05, 3, 11),
        ],
        ids=["midpoint", "intersecting", "expansive", "multivalued-ball"],
    )
    def test_certificate_survives_round_trip(self, tmp_path, build):
        inst = build()
        path = str(tmp_path / "inst.json")
        save_instance(inst, path)
        loaded = load_instance(path)
        cert = certify(loaded, SCAN_PLAN)
        assert cert.certified is loaded.metadata["expected_certified"]
        assert cert.to_dict() == certify(inst, SCAN_PLAN).to_dict()

    def test_malformed_json(self, tmp_path):
        with pytest.raises(InstanceFormatError, match="malformed JSON"):
            load_instance(_write(tmp_path, "{not json"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InstanceFormatError):
            load_instance(str(tmp_path / "nope.json"))

    def test_point_set_file_bare_list(self, tmp_path):
        s = load_point_set_file(_write(tmp_path, [[0.0, 0.0], [1.0, 0.0]], "pts.json"))
        assert s.as_points() == [(0.0, 0.0), (1.0, 0.0)]


class TestAtomicWrite:
    def test_replaces_content(self, tmp_path):
        path = str(tmp_path / "out.txt")
        atomic_write(path, "one")
        atomic_write(path, "two")
        assert open(path).read() == "two"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(OSError):
            atomic_write(str(tmp_path / "missing" / "out.txt"), "x")


class TestWriteTrace:
    def test_csv_and_outcome(self, tmp_path):
        trace = run(make_midpoint_cyclic(101), (2.0,))
        path = str(tmp_path / "trace.csv")
        sibling = write_trace(path, trace, {"x0": [2.0]})
        assert sibling == str(tmp_path / "trace.outcome.json")

        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == trace_fieldnames(1)
        assert len(rows) == len(trace.points)
        assert rows[0]["n"] == "1"
        assert rows[0]["side"] == "A"
        assert float(rows[0]["step_dist"]) == 3.5
        assert float(rows[0]["coord_0"]) == 2.0
        # the last iterate has no outgoing step
        assert rows[-1]["step_dist"] == ""
        assert rows[-1]["two_step_dist"] == ""

        outcome = json.loads(open(sibling).read())
        assert outcome["kind"] == "BestProximityPair"
        assert outcome["D"] == 2.0
        assert outcome["iterations"] == 22
        assert outcome["policy"] == "nearest"
        assert outcome["x0"] == [2.0]

    def test_values_round_trip_exactly(self, tmp_path):
        trace = run(make_midpoint_cyclic(101), (2.0,))
        path = str(tmp_path / "trace.csv")
        write_trace(path, trace)
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert [float(r["step_dist"]) for r in rows[:-1]] == trace.step_dist

    def test_fieldnames(self):
        assert trace_fieldnames(2) == [
            "n", "side", "coord_0", "coord_1", "step_dist", "two_step_dist", "bound_rhs", "partial_sum",
        ]
