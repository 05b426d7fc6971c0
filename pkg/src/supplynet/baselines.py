"""Reference predictors: planned-shipment passthrough and Croston's method."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .network import Edge, NetworkSnapshot
from .timelines import basis_vector


def planned_passthrough(snapshot: NetworkSnapshot) -> dict[Edge, list[np.ndarray]]:
    """Predict every planned event exactly as planned (multiplier 1, no
    shift): per-edge lists of one-hot event timelines."""
    out: dict[Edge, list[np.ndarray]] = {}
    for edge, state in snapshot.edge_states.items():
        out[edge] = [ev.quantity * basis_vector(ev.time_offset, snapshot.horizon_days)
                     for ev in state.planned_events]
    return out


@dataclass
class CrostonState:
    """Smoothed non-zero shipment size and inter-event interval for one edge.

    ``has_events`` is False when the fitted series contained no non-zero
    entries; such edges forecast zero.
    """

    size: float = 0.0
    interval: float = 1.0
    has_events: bool = False

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("smoothed size must be >= 0")
        if self.interval < 1:
            raise ValueError("smoothed interval must be >= 1")


def croston_fit_series(series: np.ndarray, alpha: float = 0.9) -> CrostonState:
    """Classic Croston recursion over one daily series.

    Initialized at the first non-zero observation (size = its value,
    interval = its 1-based position); afterwards both estimates update
    only at non-zero observations with smoothing factor ``alpha``.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"smoothing factor must be in (0, 1], got {alpha}")
    series = np.asarray(series, dtype=float)
    size = 0.0
    interval = 1.0
    last_pos = None
    seen = False
    for pos, value in enumerate(series, start=1):
        if value <= 0:
            continue
        if not seen:
            size = float(value)
            interval = float(pos)
            seen = True
        else:
            gap = pos - last_pos
            size = alpha * float(value) + (1 - alpha) * size
            interval = alpha * gap + (1 - alpha) * interval
        last_pos = pos
    return CrostonState(size=size, interval=max(interval, 1.0), has_events=seen)


def croston_fit(series_by_edge: Mapping[Edge, np.ndarray],
                alpha: float = 0.9) -> dict[Edge, CrostonState]:
    return {edge: croston_fit_series(series, alpha)
            for edge, series in series_by_edge.items()}


def croston_predict(state: CrostonState, horizon: int) -> np.ndarray:
    """Flat daily rate size/interval across the horizon (zeros if the edge
    never shipped)."""
    if not state.has_events:
        return np.zeros(horizon)
    return np.full(horizon, state.size / state.interval)
