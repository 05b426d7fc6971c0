"""Per-event prediction heads: quantity multiplier and timing-offset
distribution over the day offsets -7..+7, plus the feasibility
redistribution that moves mass from impossible early offsets onto zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .network import PlannedEvent

DELTA_MIN = -7
DELTA_MAX = 7
DELTA_SIZE = DELTA_MAX - DELTA_MIN + 1  # 15
DELTA_VALUES = tuple(range(DELTA_MIN, DELTA_MAX + 1))


def delta_index(delta: int) -> int:
    if not DELTA_MIN <= delta <= DELTA_MAX:
        raise ValueError(f"delta {delta} outside {DELTA_MIN}..{DELTA_MAX}")
    return delta - DELTA_MIN


@dataclass(frozen=True)
class DeltaDistribution:
    """Categorical distribution over timing offsets -7..+7."""

    probabilities: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probabilities, dtype=float)
        if arr.shape != (DELTA_SIZE,):
            raise ValueError(f"delta distribution needs {DELTA_SIZE} entries, got {arr.shape}")
        if (arr < 0).any():
            raise ValueError("delta probabilities must be non-negative")
        if abs(arr.sum() - 1.0) > 1e-9:
            raise ValueError(f"delta probabilities sum to {arr.sum()}, expected 1")
        arr.setflags(write=False)
        object.__setattr__(self, "probabilities", arr)

    def prob(self, delta: int) -> float:
        return float(self.probabilities[delta_index(delta)])

    @staticmethod
    def point_mass(delta: int) -> "DeltaDistribution":
        p = np.zeros(DELTA_SIZE)
        p[delta_index(delta)] = 1.0
        return DeltaDistribution(p)


@dataclass(frozen=True)
class EventPrediction:
    """Predicted adjustment of one planned event: a quantity multiplier in
    (0, 2] and a timing-offset distribution."""

    multiplier: float
    delta: DeltaDistribution
    event: PlannedEvent | None = None

    def __post_init__(self):
        if not 0.0 < self.multiplier <= 2.0:
            raise ValueError(f"multiplier must be in (0, 2], got {self.multiplier}")


def redistribution_matrix(tau: int) -> np.ndarray:
    """Linear map moving all mass at offsets delta < -tau onto delta = 0.

    Works both on probability vectors and on sampled one-hots: an
    infeasible one-hot maps to the one-hot at zero.
    """
    if tau < 0:
        raise ValueError(f"planned offset must be >= 0, got {tau}")
    m = np.eye(DELTA_SIZE)
    zero_idx = delta_index(0)
    for j, delta in enumerate(DELTA_VALUES):
        if delta < -tau:
            m[j, j] = 0.0
            m[zero_idx, j] = 1.0
    return m


def redistribute_infeasible(d: DeltaDistribution, tau: int) -> DeltaDistribution:
    """Move probability of offsets that would land before day 0 onto zero."""
    return DeltaDistribution(redistribution_matrix(tau) @ d.probabilities)


@dataclass(frozen=True)
class MlpParams:
    """Dense feedforward net: leaky_relu hidden layers, linear output."""

    weights: tuple[Tensor, ...]  # each (in_dim, out_dim)
    biases: tuple[Tensor, ...]


def init_mlp(rng: np.random.Generator, in_dim: int, hidden: Sequence[int],
             out_dim: int, name_prefix: str) -> tuple[MlpParams, list[Tensor]]:
    dims = [in_dim, *hidden, out_dim]
    weights, biases, params = [], [], []
    for li in range(len(dims) - 1):
        limit = np.sqrt(6.0 / (dims[li] + dims[li + 1]))
        w = ad.parameter(rng.uniform(-limit, limit, size=(dims[li], dims[li + 1])),
                         f"{name_prefix}.linear{li}.weight")
        b = ad.parameter(np.zeros(dims[li + 1]), f"{name_prefix}.linear{li}.bias")
        weights.append(w)
        biases.append(b)
        params.extend([w, b])
    return MlpParams(weights=tuple(weights), biases=tuple(biases)), params


def mlp_apply(params: MlpParams, x: Tensor) -> Tensor:
    if x.values.ndim != 1:
        raise ValueError(f"mlp_apply expects a feature vector, got shape {x.shape}")
    h = x
    last = len(params.weights) - 1
    for li, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = ad.add(ad.matmul(h, w), b)
        if li != last:
            h = ad.leaky_relu(h)
    return h


@dataclass(frozen=True)
class EventHeads:
    """Heads mapping a pair of endpoint embeddings to (multiplier, delta logits)."""

    multiplier_mlp: MlpParams
    delta_mlp: MlpParams


def init_event_heads(rng: np.random.Generator, embed_dim: int,
                     multiplier_hidden: Sequence[int], delta_hidden: Sequence[int],
                     ) -> tuple[EventHeads, list[Tensor]]:
    mr, p1 = init_mlp(rng, 2 * embed_dim, multiplier_hidden, 1, "head.multiplier")
    mp, p2 = init_mlp(rng, 2 * embed_dim, delta_hidden, DELTA_SIZE, "head.delta")
    return EventHeads(multiplier_mlp=mr, delta_mlp=mp), p1 + p2


def predict_event_tensors(u_src: Tensor, u_dst: Tensor, heads: EventHeads,
                          mode: str, temperature: float,
                          rng: np.random.Generator | None) -> tuple[Tensor, Tensor]:
    """Predict (multiplier scalar, delta probability vector) as tensors.

    ``mode`` is "soft" (Gumbel-Softmax relaxation), "hard" (straight-through
    one-hot sample), or "expected" (plain softmax, no noise).
    """
    pair = ad.concat([u_src, u_dst])
    r_out = mlp_apply(heads.multiplier_mlp, pair)
    r = ad.scale(ad.sigmoid(ad.get(r_out, 0)), 2.0)
    logits = mlp_apply(heads.delta_mlp, pair)
    if mode == "expected":
        probs = ad.softmax(ad.scale(logits, 1.0 / temperature))
    elif mode in ("soft", "hard"):
        if rng is None:
            raise ValueError(f"mode {mode!r} needs a random generator")
        probs = ad.gumbel_softmax(logits, temperature, hard=(mode == "hard"), rng=rng)
    else:
        raise ValueError(f"unknown prediction mode {mode!r}")
    return r, probs


def predict_event(u_src, u_dst, heads: EventHeads, mode: str = "expected",
                  temperature: float = 1.0,
                  rng: np.random.Generator | None = None,
                  event: PlannedEvent | None = None) -> EventPrediction:
    """Value-level wrapper around :func:`predict_event_tensors`."""
    u_src = u_src if isinstance(u_src, Tensor) else Tensor(u_src)
    u_dst = u_dst if isinstance(u_dst, Tensor) else Tensor(u_dst)
    r, probs = predict_event_tensors(u_src, u_dst, heads, mode, temperature, rng)
    return EventPrediction(multiplier=float(r.values),
                           delta=DeltaDistribution(probs.values.copy()),
                           event=event)
