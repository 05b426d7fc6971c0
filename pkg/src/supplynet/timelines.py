"""Aggregation of event predictions into daily, cumulative, and weekly
quantity timelines.

Probability mass that a predicted event time would place outside the
horizon is dropped, not renormalized; :func:`event_time_distribution`
therefore may sum to less than one and the lost fraction is available as
a diagnostic.  The constant matrices here are shared by the plain numpy
path and the differentiable training path, so both compute identical
timelines.
"""
from __future__ import annotations

import numpy as np

from .events import DELTA_SIZE, DELTA_VALUES, EventPrediction

DailyTimeline = np.ndarray       # shape (horizon_days,)
CumulativeTimeline = np.ndarray  # shape (horizon_days,), running sums
WeeklyTimeline = np.ndarray      # shape (horizon_days // 7,)


def basis_vector(t_prime: int, horizon: int) -> DailyTimeline:
    """One-hot day vector at offset ``t_prime``; all-zero if out of horizon."""
    out = np.zeros(horizon)
    if 0 <= t_prime < horizon:
        out[t_prime] = 1.0
    return out


def time_basis_matrix(tau: int, horizon: int) -> np.ndarray:
    """(horizon, 15) map from delta probabilities to a day distribution:
    column for offset delta is the basis vector at day tau + delta."""
    m = np.zeros((horizon, DELTA_SIZE))
    for j, delta in enumerate(DELTA_VALUES):
        day = tau + delta
        if 0 <= day < horizon:
            m[day, j] = 1.0
    return m


def event_time_distribution(pred: EventPrediction, tau: int, horizon: int) -> DailyTimeline:
    """Day distribution of the predicted event time (redistribution must
    already have been applied to ``pred.delta``)."""
    return time_basis_matrix(tau, horizon) @ pred.delta.probabilities


def event_quantity_vector(pred: EventPrediction, planned_qty: float,
                          tau: int, horizon: int) -> DailyTimeline:
    """Expected daily quantities of one event: multiplier x planned x timing."""
    return pred.multiplier * planned_qty * event_time_distribution(pred, tau, horizon)


def daily_vector(event_vectors: list[DailyTimeline], horizon: int) -> DailyTimeline:
    """Elementwise sum of per-event quantity vectors on one edge."""
    out = np.zeros(horizon)
    for vec in event_vectors:
        if len(vec) != horizon:
            raise ValueError(f"event vector length {len(vec)} != horizon {horizon}")
        out = out + vec
    return out


def cumulative(daily: DailyTimeline) -> CumulativeTimeline:
    return np.cumsum(np.asarray(daily, dtype=float))


def cumsum_matrix(horizon: int) -> np.ndarray:
    """Lower-triangular ones: cumulative = cumsum_matrix @ daily."""
    return np.tril(np.ones((horizon, horizon)))


def weekly_bucket(daily: DailyTimeline) -> WeeklyTimeline:
    daily = np.asarray(daily, dtype=float)
    if len(daily) % 7 != 0:
        raise ValueError(f"daily timeline length {len(daily)} is not a multiple of 7")
    return daily.reshape(-1, 7).sum(axis=1)


def week_matrix(horizon: int) -> np.ndarray:
    """(weeks, horizon) bucketing map: week w sums days 7w..7w+6."""
    if horizon % 7 != 0:
        raise ValueError(f"horizon {horizon} is not a multiple of 7")
    weeks = horizon // 7
    m = np.zeros((weeks, horizon))
    for w in range(weeks):
        m[w, 7 * w:7 * w + 7] = 1.0
    return m


def lost_mass(pred: EventPrediction, tau: int, horizon: int) -> float:
    """Probability mass dropped because tau + delta fell outside the horizon."""
    return float(1.0 - event_time_distribution(pred, tau, horizon).sum())
