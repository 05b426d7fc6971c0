"""Evaluation metrics for shipment-event and inventory predictions.

All metrics are percentages.  A zero denominator (no actual quantity on
the evaluated index set) raises :class:`DegenerateDatasetError` instead of
silently returning 0 or infinity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .rollout import RolloutResult
from .timelines import cumulative


class DegenerateDatasetError(ValueError):
    """The metric is undefined on this dataset (empty or zero denominator)."""


def _ratio(numerator: float, denominator: float, what: str) -> float:
    if denominator <= 0:
        raise DegenerateDatasetError(f"{what}: denominator is {denominator}")
    return 100.0 * numerator / denominator


def smace(pred_cumulative: Sequence[np.ndarray],
          actual_daily: Sequence[np.ndarray]) -> float:
    """Scaled mean absolute cumulative error over matched edge timelines.

    Sum of |predicted cumulative - actual cumulative| over every day of
    every timeline, divided by the summed actual daily quantities.  A
    quantity predicted d days off contributes quantity x |d|.
    """
    if len(pred_cumulative) != len(actual_daily):
        raise ValueError("prediction and actual sets differ in size")
    if not pred_cumulative:
        raise DegenerateDatasetError("sMACE: empty dataset")
    num = 0.0
    den = 0.0
    for pred_cum, act in zip(pred_cumulative, actual_daily):
        pred_cum = np.asarray(pred_cum, dtype=float)
        act = np.asarray(act, dtype=float)
        if pred_cum.shape != act.shape:
            raise ValueError(f"shape mismatch {pred_cum.shape} vs {act.shape}")
        num += float(np.abs(pred_cum - cumulative(act)).sum())
        den += float(act.sum())
    return _ratio(num, den, "sMACE")


@dataclass(frozen=True)
class PenaltyFunction:
    """Timing penalty accumulated per day of prediction error.

    ``kind`` selects the per-day weight: "linear" uses the constant cost,
    "linear-weighted" grows it by the overweighting ratio per extra day,
    and "geometric" discounts it by the discount ratio per extra day.
    Separate cost/ratio parameters apply to late (positive offset) and
    early (negative offset) predictions.
    """

    kind: str = "linear"
    cost_late: float = 1.0
    cost_early: float = 1.0
    ratio_late: float = 0.0
    ratio_early: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "linear-weighted", "geometric"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.cost_late <= 0 or self.cost_early <= 0:
            raise ValueError("cost parameters must be positive")
        if self.kind == "linear-weighted":
            if not (0 <= self.ratio_late <= 1 and 0 <= self.ratio_early <= 1):
                raise ValueError("overweighting ratios must be in [0, 1]")
        if self.kind == "geometric":
            if not (0 < self.ratio_late < 1 and 0 < self.ratio_early < 1):
                raise ValueError("discount ratios must be in (0, 1)")

    def _weight(self, step: int, late: bool) -> float:
        cost = self.cost_late if late else self.cost_early
        ratio = self.ratio_late if late else self.ratio_early
        if self.kind == "linear":
            return cost
        if self.kind == "linear-weighted":
            return cost * (1.0 + ratio * (step - 1))
        return cost * ratio ** (step - 1)

    def penalty(self, delta: int) -> float:
        if delta == 0:
            return 0.0
        steps = abs(int(delta))
        late = delta > 0
        return sum(self._weight(j, late) for j in range(1, steps + 1))


def generalized_smace(aligned_events: Sequence[tuple[float, Mapping[int, float]]],
                      penalty: PenaltyFunction | None = None) -> float:
    """Quantity-weighted expected timing penalty over aligned events.

    Each element pairs an actual event quantity with the predicted
    distribution of its timing offset (predicted day minus actual day),
    given as offset -> probability.  With the default linear |delta|
    penalty this reduces to sMACE on timing-only errors.
    """
    if penalty is None:
        penalty = PenaltyFunction()
    if not aligned_events:
        raise DegenerateDatasetError("generalized sMACE: no aligned events")
    num = 0.0
    den = 0.0
    for quantity, dist in aligned_events:
        expected = sum(p * penalty.penalty(delta) for delta, p in dist.items())
        num += quantity * expected
        den += quantity
    return _ratio(num, den, "generalized sMACE")


def wmape_inventory(pred: Sequence[np.ndarray], actual: Sequence[np.ndarray]) -> float:
    """Sum of absolute errors over sum of actuals, over matched vectors."""
    if len(pred) != len(actual):
        raise ValueError("prediction and actual sets differ in size")
    if not pred:
        raise DegenerateDatasetError("wMAPE: empty dataset")
    num = 0.0
    den = 0.0
    for p, a in zip(pred, actual):
        p = np.asarray(p, dtype=float)
        a = np.asarray(a, dtype=float)
        if p.shape != a.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {a.shape}")
        num += float(np.abs(p - a).sum())
        den += float(a.sum())
    return _ratio(num, den, "wMAPE")


def kappa(results: Sequence[RolloutResult],
          actual_inventory: Sequence[Mapping[str, np.ndarray]]) -> float:
    """Capacity-violation error: summed excess of pre-adjustment outgoing
    supply over capacity, normalized by the summed actual inventories."""
    if len(results) != len(actual_inventory):
        raise ValueError("results and actual inventories differ in size")
    if not results:
        raise DegenerateDatasetError("kappa: empty dataset")
    num = 0.0
    den = 0.0
    for res, labels in zip(results, actual_inventory):
        for v, pre in res.outgoing_unclipped.items():
            excess = pre - res.capacity[v]
            num += float(excess[excess > 0].sum())
        for v, inv in labels.items():
            den += float(np.asarray(inv, dtype=float).sum())
    return _ratio(num, den, "kappa")


def bias(pred: Sequence[np.ndarray], actual: Sequence[np.ndarray]) -> float:
    """Signed total error over total actual quantity (can be negative)."""
    if len(pred) != len(actual):
        raise ValueError("prediction and actual sets differ in size")
    if not pred:
        raise DegenerateDatasetError("bias: empty dataset")
    num = 0.0
    den = 0.0
    for p, a in zip(pred, actual):
        p = np.asarray(p, dtype=float)
        a = np.asarray(a, dtype=float)
        num += float((p - a).sum())
        den += float(a.sum())
    return _ratio(num, den, "bias")
