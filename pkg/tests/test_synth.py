import json
import os

import pytest

from lognition.errors import ArgumentError
from lognition.ingest import default_catalog, import_directory
from lognition.model import Context, TimeInterval
from lognition.query import QueryEngine
from lognition.ring import RingConfig
from lognition.store import EventStore
from lognition.synth import (
    AppMixSpec,
    SynthSpec,
    demo_spec,
    spec_from_dict,
    synth_generate,
)

from conftest import BASE_TS


def tiny_spec(**overrides):
    base = dict(
        seed=77,
        start_ts=BASE_TS,
        duration_hours=2,
        cabinets=((0, 0),),
        base_rates={"MCE": 1.0, "ECC": 2.0},
        unmatched_line_fraction=0.1,
        apps=AppMixSpec(runs=5, min_nodes=1, max_nodes=4),
    )
    base.update(overrides)
    return SynthSpec(**base)


def read_tree(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out


class TestGenerator:
    def test_same_seed_byte_identical(self, tmp_path):
        spec = tiny_spec()
        synth_generate(spec, str(tmp_path / "a"))
        synth_generate(spec, str(tmp_path / "b"))
        assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        synth_generate(tiny_spec(), str(tmp_path / "a"))
        synth_generate(tiny_spec(seed=78), str(tmp_path / "b"))
        assert read_tree(tmp_path / "a") != read_tree(tmp_path / "b")

    def test_zero_rates_empty_outputs(self, tmp_path):
        spec = tiny_spec(
            base_rates={"MCE": 0.0},
            unmatched_line_fraction=0.0,
            apps=AppMixSpec(runs=0),
        )
        truth = synth_generate(spec, str(tmp_path / "z"))
        assert truth["total_lines"] == 0
        assert truth["per_type_lines"] == {"MCE": 0}
        assert truth["apps"]["count"] == 0

    def test_truth_counts_match_files(self, tmp_path):
        out = tmp_path / "c"
        truth = synth_generate(tiny_spec(), str(out))
        n_lines = 0
        for name in truth["files"]:
            with open(out / name) as fh:
                n_lines += sum(1 for _ in fh)
        assert n_lines == truth["total_lines"]
        assert truth["matched_lines"] + truth["unmatched_lines"] == truth["total_lines"]
        assert sum(truth["per_type_lines"].values()) == truth["matched_lines"]

    def test_ground_truth_json_written(self, tmp_path):
        out = tmp_path / "d"
        truth = synth_generate(tiny_spec(), str(out))
        with open(out / "ground_truth.json") as fh:
            assert json.load(fh) == truth

    def test_validation(self):
        with pytest.raises(ArgumentError):
            tiny_spec(duration_hours=0)
        with pytest.raises(ArgumentError):
            tiny_spec(start_ts=BASE_TS + 5)
        with pytest.raises(ArgumentError):
            tiny_spec(unmatched_line_fraction=1.0)

    def test_demo_spec_loads(self):
        spec = demo_spec()
        assert spec.duration_hours == 24
        assert len(spec.cabinets) == 2
        assert spec.hot_node is not None
        assert spec.coupling is not None
        assert spec.flood is not None

    def test_spec_round_trip_from_dict(self):
        raw = {
            "seed": 5,
            "start": BASE_TS,
            "duration_hours": 3,
            "cabinets": [[0, 0], [1, 1]],
            "base_rates": {"MCE": 0.5},
            "phenomena": {
                "hot_node": {"location": "c0-0c0s0n0", "factor": 5},
                "coupling": {
                    "type_a": "MCE", "type_b": "ECC", "lag_ms": 1000,
                    "strength": 0.5, "window_hours": [0, 1],
                },
                "flood": {
                    "type": "LustreError", "token": "ost0001",
                    "window_hours": [1, 2], "volume": 10,
                },
            },
            "apps": {"runs": 2},
        }
        spec = spec_from_dict(raw)
        assert spec.coupling.lag_ms == 1000
        assert spec.flood.volume == 10
        assert spec.apps.runs == 2


class TestGeneratedCorpusImports:
    def test_all_matched_lines_parse(self, tmp_path):
        out = str(tmp_path / "corpus")
        spec = tiny_spec(
            hot_node=None,
            apps=AppMixSpec(runs=3),
        )
        truth = synth_generate(spec, out)
        store = EventStore(ring=RingConfig(storage_nodes=2))
        stats = import_directory(default_catalog(), out, store)
        assert stats.lines_read == truth["total_lines"]
        assert stats.lines_matched == truth["matched_lines"]
        assert stats.lines_unmatched == truth["unmatched_lines"]
        assert stats.lines_quarantined == 0
        assert stats.per_type == {
            k: v for k, v in truth["per_type_lines"].items() if v
        }
        assert stats.apps_loaded == truth["apps"]["count"]

    def test_hot_node_recoverable(self, tmp_path):
        out = str(tmp_path / "hot")
        spec = tiny_spec(
            duration_hours=4,
            hot_node=spec_from_dict(
                {
                    "seed": 1, "start": BASE_TS, "duration_hours": 1,
                    "cabinets": [[0, 0]], "base_rates": {},
                    "phenomena": {"hot_node": {"location": "c0-0c1s2n3", "factor": 12}},
                }
            ).hot_node,
        )
        truth = synth_generate(spec, out)
        store = EventStore(ring=RingConfig(storage_nodes=2))
        import_directory(default_catalog(), out, store)
        engine = QueryEngine(store)
        ctx = Context(TimeInterval(spec.start_ts, spec.end_ts))
        heat = engine.heatmap(ctx, "ECC")
        from lognition.model import format_node_id

        hottest = max(heat.counts.items(), key=lambda kv: kv[1])[0]
        assert format_node_id(hottest) == truth["hot_node"]["location"]
        assert heat.counts[hottest] == truth["hot_node"]["counts_by_type"]["ECC"]
