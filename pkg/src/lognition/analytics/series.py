"""Occurrence-count time series used by the information-flow analytics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import ArgumentError
from ..model import EventRecord, TimeInterval


@dataclass(frozen=True)
class BinnedSeries:
    interval: TimeInterval
    bin_width_ms: int
    values: np.ndarray  # int64 occurrence counts, one per bin

    def __post_init__(self) -> None:
        expected = -(-self.interval.length_ms // self.bin_width_ms)
        if len(self.values) != expected:
            raise ArgumentError(
                f"series length {len(self.values)} != expected {expected} bins"
            )

    def __len__(self) -> int:
        return len(self.values)

    def total(self) -> int:
        return int(self.values.sum())


def bin_series(
    records: Iterable[EventRecord],
    interval: TimeInterval,
    bin_width_ms: int,
) -> BinnedSeries:
    """Sum record counts into fixed-width bins tiling the interval."""
    if bin_width_ms <= 0:
        raise ArgumentError("bin_width_ms must be > 0")
    n_bins = -(-interval.length_ms // bin_width_ms)
    values = np.zeros(n_bins, dtype=np.int64)
    for rec in records:
        if not interval.contains(rec.timestamp):
            raise ArgumentError(
                f"record at {rec.timestamp} outside interval "
                f"[{interval.start_ts}, {interval.end_ts})"
            )
        values[(rec.timestamp - interval.start_ts) // bin_width_ms] += rec.count
    return BinnedSeries(interval, bin_width_ms, values)
