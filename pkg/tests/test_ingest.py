import random

import pytest
from hypothesis import given, settings, strategies as st

from lognition.errors import MalformedCaptureError
from lognition.ingest import (
    PatternCatalog,
    RawLine,
    LogSource,
    batch_import,
    coalesce,
    default_catalog,
    import_directory,
    parse_line,
)
from lognition.model import EventRecord, NodeLocation
from lognition.ring import RingConfig
from lognition.store import EventStore

from conftest import BASE_TS, HOUR, random_event


@pytest.fixture(scope="module")
def catalog():
    return default_catalog()


def console_line(text):
    return RawLine(LogSource.CONSOLE, 0, text)


class TestParseLine:
    def test_mce_golden(self, catalog):
        line = "2026-08-10 14:23:11.123 c3-10c1s4n2 HWERR: Machine Check Exception bank 4 status 0x9c000400"
        rec = parse_line(catalog, console_line(line))
        assert rec is not None
        assert rec.type_id == "MCE"
        assert rec.location == NodeLocation(10, 3, 1, 4, 2)
        assert rec.count == 1
        assert rec.attributes["bank"] == "4"
        assert rec.raw_message == line

    def test_timestamp_decoding(self, catalog):
        line = "2026-01-01 00:00:00.000 c0-0c0s0n0 HWERR: Machine Check Exception bank 0 status 0x0"
        rec = parse_line(catalog, console_line(line))
        assert rec.timestamp == 1_767_225_600_000

    def test_unmatched_line(self, catalog):
        assert parse_line(catalog, console_line("completely unrelated noise")) is None

    def test_lustre_target_attribute(self, catalog):
        line = "2026-08-10 14:23:11.123 c0-1c2s3n1 LustreError: ost0041: object storage target is not responding"
        rec = parse_line(catalog, console_line(line))
        assert rec.type_id == "LustreError"
        assert rec.attributes["target"] == "ost0041"

    def test_malformed_timestamp_quarantines(self, catalog):
        line = "2026-13-99 24:61:61.999 c0-0c0s0n0 HWERR: Machine Check Exception bank 1 status 0xff"
        with pytest.raises(MalformedCaptureError):
            parse_line(catalog, console_line(line))

    def test_out_of_range_location_quarantines(self, catalog):
        line = "2026-08-10 14:23:11.123 c9-30c0s0n0 HWERR: Machine Check Exception bank 1 status 0xff"
        with pytest.raises(MalformedCaptureError):
            parse_line(catalog, console_line(line))

    def test_first_match_wins_order(self, catalog):
        # the specific "not responding" pattern precedes the generic Lustre detail one
        line = "2026-08-10 14:23:11.123 c0-0c0s0n0 LustreError: ost7: object storage target is not responding"
        rec = parse_line(catalog, console_line(line))
        assert "detail" not in rec.attributes


class TestCoalesce:
    def loc(self, n=0):
        return NodeLocation(0, 0, 0, 0, n)

    def test_same_second_merges(self):
        base = BASE_TS + 250
        batch = [
            EventRecord(base + i, "LustreError", self.loc(), 1, f"line {i}") for i in range(3)
        ]
        out = coalesce(batch)
        assert len(out) == 1
        assert out[0].count == 3
        assert out[0].timestamp == BASE_TS  # window start
        assert out[0].raw_message == "line 0"

    def test_different_nodes_do_not_merge(self):
        batch = [
            EventRecord(BASE_TS + 1, "MCE", self.loc(0), 1, "a"),
            EventRecord(BASE_TS + 2, "MCE", self.loc(1), 1, "b"),
        ]
        assert len(coalesce(batch)) == 2

    def test_different_types_do_not_merge(self):
        batch = [
            EventRecord(BASE_TS + 1, "MCE", self.loc(), 1, "a"),
            EventRecord(BASE_TS + 2, "ECC", self.loc(), 1, "b"),
        ]
        assert len(coalesce(batch)) == 2

    def test_unsorted_input_allowed(self):
        batch = [
            EventRecord(BASE_TS + 900, "MCE", self.loc(), 1, "later"),
            EventRecord(BASE_TS + 100, "MCE", self.loc(), 1, "earlier"),
        ]
        out = coalesce(batch)
        assert out[0].raw_message == "earlier"

    @given(st.lists(st.tuples(st.integers(0, 5000), st.integers(0, 2), st.integers(1, 3)), max_size=60))
    def test_count_conservation(self, spec):
        batch = [
            EventRecord(BASE_TS + off, "MCE", self.loc(n), c, "m") for off, n, c in spec
        ]
        out = coalesce(batch)
        assert sum(r.count for r in out) == sum(r.count for r in batch)
        assert out == sorted(out, key=lambda r: r.sort_key())


class TestBatchImport:
    def write_corpus(self, tmp_path, lines, name="console-0.log"):
        p = tmp_path / name
        p.write_text("\n".join(lines) + ("\n" if lines else ""))
        return str(p)

    def test_empty_file_set(self, catalog, mem_store):
        stats = batch_import(catalog, [], mem_store)
        assert stats.lines_read == 0
        assert stats.records_written == 0

    def test_accounting_and_quarantine(self, catalog, mem_store, tmp_path):
        lines = [
            "2026-08-10 14:23:11.000 c0-0c0s0n0 HWERR: Machine Check Exception bank 1 status 0xff",
            "junk line that matches nothing",
            "2026-99-99 14:23:11.000 c0-0c0s0n0 HWERR: Machine Check Exception bank 1 status 0xff",
        ]
        path = self.write_corpus(tmp_path, lines)
        qpath = str(tmp_path / "quarantine.jsonl")
        stats = batch_import(catalog, [path], mem_store, quarantine_path=qpath)
        assert stats.lines_read == 3
        assert stats.lines_matched == 2  # one clean, one quarantined
        assert stats.lines_unmatched == 1
        assert stats.lines_quarantined == 1
        assert stats.lines_read == stats.lines_matched + stats.lines_unmatched
        assert stats.records_written == 1
        with open(qpath) as fh:
            assert len(fh.readlines()) == 1

    def test_double_import_idempotent(self, catalog, mem_store, tmp_path):
        lines = [
            f"2026-08-10 14:23:{s:02d}.000 c0-0c0s0n{n} HWERR: Machine Check Exception bank 1 status 0xff"
            for s in range(10)
            for n in range(2)
        ]
        path = self.write_corpus(tmp_path, lines)
        batch_import(catalog, [path], mem_store)
        rows_before = mem_store.store_stats().total_rows
        batch_import(catalog, [path], mem_store)
        assert mem_store.store_stats().total_rows == rows_before

    def test_unreadable_file_recorded(self, catalog, mem_store, tmp_path):
        stats = batch_import(catalog, [str(tmp_path / "missing.log")], mem_store)
        assert len(stats.file_errors) == 1

    def test_deterministic_store_bytes(self, catalog, tmp_path):
        rng = random.Random(99)
        lines = []
        for i in range(300):
            s = rng.randrange(60)
            node = rng.randrange(4)
            lines.append(
                f"2026-08-10 15:00:{s:02d}.{rng.randrange(1000):03d} c0-0c0s0n{node} "
                f"HWERR: Machine Check Exception bank {rng.randrange(8)} status 0xff"
            )
        f1 = self.write_corpus(tmp_path, lines, "console-a.log")
        f2 = self.write_corpus(tmp_path, lines[:150], "console-b.log")

        def run(dest):
            store = EventStore(str(dest), ring=RingConfig(storage_nodes=2))
            batch_import(catalog, [f1, f2], store)
            store.close()
            segs = {}
            for shard in sorted(dest.iterdir()):
                if shard.is_dir():
                    for seg in sorted(shard.iterdir()):
                        segs[f"{shard.name}/{seg.name}"] = seg.read_bytes()
            return segs

        assert run(tmp_path / "s1") == run(tmp_path / "s2")

    def test_import_directory_with_apps(self, catalog, mem_store, tmp_path):
        self.write_corpus(
            tmp_path,
            ["2026-08-10 14:23:11.000 c0-0c0s0n0 HWERR: Machine Check Exception bank 1 status 0xff"],
        )
        (tmp_path / "apps.jsonl").write_text(
            '{"job_id": "j1", "user": "u", "app_name": "a", "start_ts": %d, "end_ts": %d, '
            '"nodes": ["c0-0c0s0n0"], "exit_status": "success"}\n' % (BASE_TS, BASE_TS + HOUR)
        )
        stats = import_directory(catalog, str(tmp_path), mem_store)
        assert stats.records_written == 1
        assert stats.apps_loaded == 1
        assert len(mem_store.all_runs()) == 1
