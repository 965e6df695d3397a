import random
import threading
import time
from contextlib import contextmanager

import pytest
import uvicorn

from lognition.model import (
    ApplicationRun,
    EventRecord,
    ExitStatus,
    NodeLocation,
    Topology,
)
from lognition.ring import RingConfig
from lognition.store import EventStore

BASE_TS = 1_754_000_000_000 - 1_754_000_000_000 % 3_600_000  # hour-aligned, mid-2025
HOUR = 3_600_000

TYPE_IDS = ["MCE", "ECC", "GPUXID", "LustreError", "LinkFailure", "KernelPanic"]


def random_location(rng: random.Random, topology: Topology = Topology(4, 2)) -> NodeLocation:
    return NodeLocation(
        rng.randrange(topology.rows),
        rng.randrange(topology.cols),
        rng.randrange(topology.cages_per_cabinet),
        rng.randrange(topology.slots_per_cage),
        rng.randrange(topology.nodes_per_slot),
    )


def random_event(rng: random.Random, span_ms: int = 6 * HOUR, base_ts: int = BASE_TS) -> EventRecord:
    type_id = rng.choice(TYPE_IDS)
    return EventRecord(
        timestamp=base_ts + rng.randrange(span_ms),
        type_id=type_id,
        location=random_location(rng),
        count=rng.randint(1, 4),
        raw_message=f"{type_id} synthetic event {rng.randrange(1000)}",
    )


def random_run(rng: random.Random, span_ms: int = 6 * HOUR, base_ts: int = BASE_TS) -> ApplicationRun:
    start = base_ts + rng.randrange(span_ms)
    nodes = frozenset(random_location(rng) for _ in range(rng.randint(1, 6)))
    return ApplicationRun(
        job_id=f"job-{rng.randrange(10**9)}",
        user=rng.choice(["alice", "bob", "carol", "dave"]),
        app_name=rng.choice(["lammps", "gromacs", "vasp", "namd"]),
        start_ts=start,
        end_ts=start + rng.randrange(0, 3 * HOUR),
        nodes=nodes,
        exit_status=rng.choice(list(ExitStatus)),
    )


@pytest.fixture
def mem_store():
    store = EventStore(path=None, ring=RingConfig(storage_nodes=4, replication_factor=1))
    for tid in TYPE_IDS:
        store.register_type(tid)
    return store


@contextmanager
def live_server(app):
    """Run the app under a real uvicorn server on an ephemeral port.

    Needed for endpoints with indefinitely open responses (the push stream),
    which the in-process test client cannot iterate incrementally.
    """
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server failed to start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)
