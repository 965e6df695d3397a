"""Transfer entropy between event-type series.

The estimator is the plug-in (maximum likelihood) one over binarized series:
a bin becomes 1 when its count exceeds the threshold. With history length k,

    TE(Y -> X) = sum p(x_next, x_hist, y_hist)
                 * log2[ p(x_next | x_hist, y_hist) / p(x_next | x_hist) ]

with probabilities read off joint frequency tables and 0 * log(.) terms
contributing nothing. Output is in bits; for binary series with k = 1 both
directions are bounded by 1 bit. No small-sample bias correction is applied.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import ArgumentError, InsufficientDataError
from ..model import Context, TimeInterval
from .series import BinnedSeries, bin_series

SeriesLike = Union[BinnedSeries, Sequence[int], np.ndarray]


@dataclass(frozen=True)
class TEResult:
    te_y_to_x: float
    te_x_to_y: float
    n_samples: int
    binarize_threshold: float
    history_length: int


@dataclass(frozen=True)
class WindowTE:
    window_start: int
    result: TEResult
    low_support: bool


def _as_values(series: SeriesLike) -> np.ndarray:
    if isinstance(series, BinnedSeries):
        return series.values
    return np.asarray(series)


def _directional_te(target: np.ndarray, source: np.ndarray, k: int) -> float:
    """TE(source -> target) in bits for binary arrays, history length k."""
    n = len(target)
    m = n - k  # samples: one per transition with a full history
    t_hist = np.zeros(m, dtype=np.int64)
    s_hist = np.zeros(m, dtype=np.int64)
    for j in range(k):
        t_hist = t_hist * 2 + target[j : j + m]
        s_hist = s_hist * 2 + source[j : j + m]
    future = target[k:]
    hist_states = 1 << k

    idx = (future * hist_states + t_hist) * hist_states + s_hist
    joint = np.bincount(idx, minlength=2 * hist_states * hist_states).astype(np.float64)
    joint = joint.reshape(2, hist_states, hist_states)

    c_ts = joint.sum(axis=0)  # (t_hist, s_hist)
    c_ft = joint.sum(axis=2)  # (future, t_hist)
    c_t = joint.sum(axis=(0, 2))  # (t_hist,)

    nz = joint > 0
    f_i, t_i, s_i = np.nonzero(nz)
    num = joint[nz] * c_t[t_i]
    den = c_ts[t_i, s_i] * c_ft[f_i, t_i]
    te = float(np.sum(joint[nz] * np.log2(num / den)) / m)
    return max(te, 0.0)  # plug-in TE is a KL divergence; clamp float dust


def transfer_entropy(
    x: SeriesLike,
    y: SeriesLike,
    threshold: float = 0.0,
    k: int = 1,
) -> TEResult:
    """Both directions of transfer entropy between two equally-binned series."""
    if k < 1:
        raise ArgumentError("history length k must be >= 1")
    if isinstance(x, BinnedSeries) and isinstance(y, BinnedSeries):
        if x.bin_width_ms != y.bin_width_ms:
            raise ArgumentError("series must share a bin width")
    xv, yv = _as_values(x), _as_values(y)
    if len(xv) != len(yv):
        raise ArgumentError(f"length mismatch: {len(xv)} vs {len(yv)}")
    if len(xv) < 3 or len(xv) < k + 1:
        raise InsufficientDataError(f"need at least {max(3, k + 1)} bins, got {len(xv)}")
    bx = (xv > threshold).astype(np.int64)
    by = (yv > threshold).astype(np.int64)
    return TEResult(
        te_y_to_x=_directional_te(bx, by, k),
        te_x_to_y=_directional_te(by, bx, k),
        n_samples=len(xv) - k,
        binarize_threshold=threshold,
        history_length=k,
    )


def te_windows(
    engine,
    ctx: Context,
    type_a: str,
    type_b: str,
    window_ms: int,
    step_ms: int,
    bin_width_ms: int,
    threshold: float = 0.0,
    k: int = 1,
) -> list[WindowTE]:
    """Sliding-window TE between two event types inside a context.

    Windows and steps must be multiples of the bin width so every window is
    an aligned slice of one binned pass over the interval. Windows where
    either binarized series is constant carry a low-support flag (their TE
    is identically zero).
    """
    if bin_width_ms <= 0:
        raise ArgumentError("bin_width_ms must be > 0")
    if window_ms % bin_width_ms or step_ms % bin_width_ms:
        raise ArgumentError("window_ms and step_ms must be multiples of bin_width_ms")
    bins_per_window = window_ms // bin_width_ms
    if bins_per_window < 3:
        raise ArgumentError("window must span at least 3 bins")
    if step_ms <= 0:
        raise ArgumentError("step_ms must be > 0")

    interval = ctx.interval
    series = {}
    for type_id in (type_a, type_b):
        narrowed = Context(
            interval,
            event_types=frozenset({type_id}),
            locations=ctx.locations,
            users=ctx.users,
            apps=ctx.apps,
        )
        series[type_id] = bin_series(engine.events_for(narrowed), interval, bin_width_ms)

    va, vb = series[type_a].values, series[type_b].values
    out: list[WindowTE] = []
    start = interval.start_ts
    while start + window_ms <= interval.end_ts:
        lo = (start - interval.start_ts) // bin_width_ms
        hi = lo + bins_per_window
        wa, wb = va[lo:hi], vb[lo:hi]
        result = transfer_entropy(wa, wb, threshold=threshold, k=k)
        ba = (wa > threshold)
        bb = (wb > threshold)
        low_support = bool(ba.all() or (~ba).all() or bb.all() or (~bb).all())
        out.append(WindowTE(start, result, low_support))
        start += step_ms
    return out
