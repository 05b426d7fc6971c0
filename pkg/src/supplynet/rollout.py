"""Weekly inventory rollout and capacity-constrained inference.

The rollout converts per-edge daily supply predictions into node-level
weekly trajectories: incoming supply is the lead-time convolution of
upstream shipments, capacity is start inventory plus incoming minus
demand, and outgoing supply above capacity is scaled down by clipping the
contributing events.  The iterative variant re-estimates incoming supply
from the previous iterate's (already clipped) timelines so that clipping
cascades through the network, repeating until the averaged relative
timeline change drops below a threshold.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .network import Edge, NetworkSnapshot
from .timelines import weekly_bucket

LeadTimeKey = tuple[str, str, str]  # (sku, src, dst)

_CLIP_EPS = 1e-12


@dataclass(frozen=True)
class LeadTimeModel:
    """Per-edge categorical distributions over discrete lead times 0..H-1.

    Edges without their own history fall back to the pooled network-wide
    distribution; with no observations anywhere the pooled distribution is
    a point mass at ``default_lead``.
    """

    horizon_days: int
    edge_dists: Mapping[LeadTimeKey, np.ndarray]
    pooled: np.ndarray
    default_lead: int = 2

    def __post_init__(self):
        for key, dist in self.edge_dists.items():
            _check_dist(dist, self.horizon_days, f"edge {key}")
        _check_dist(self.pooled, self.horizon_days, "pooled")

    def distribution(self, sku: str, edge: Edge) -> np.ndarray:
        return self.edge_dists.get((sku, edge[0], edge[1]), self.pooled)


def _check_dist(dist: np.ndarray, horizon: int, what: str):
    dist = np.asarray(dist)
    if dist.shape != (horizon,):
        raise ValueError(f"lead-time distribution for {what} has shape {dist.shape}, "
                         f"expected ({horizon},)")
    if (dist < 0).any() or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError(f"lead-time distribution for {what} is not a probability vector")


def _lead_days(ship, receive) -> int:
    if isinstance(ship, dt.date):
        return (receive - ship).days
    return int(receive) - int(ship)


def fit_leadtime(pairs_by_edge: Mapping[LeadTimeKey, Sequence[tuple]],
                 horizon_days: int, smoothing: float = 0.0,
                 default_lead: int = 2) -> LeadTimeModel:
    """Empirical per-edge lead-time distributions with additive smoothing.

    ``pairs_by_edge`` maps (sku, src, dst) to (ship, receive) pairs given
    as dates or integer day indices.  Observed leads beyond the horizon
    are counted at the last supported day H-1.
    """
    edge_counts: dict[LeadTimeKey, np.ndarray] = {}
    pooled_counts = np.zeros(horizon_days)
    for key, pairs in pairs_by_edge.items():
        counts = np.zeros(horizon_days)
        for ship, receive in pairs:
            lead = _lead_days(ship, receive)
            if lead < 0:
                raise ValueError(f"negative lead time {lead} on edge {key}")
            counts[min(lead, horizon_days - 1)] += 1.0
        if counts.sum() > 0:
            edge_counts[key] = counts
            pooled_counts += counts
    if pooled_counts.sum() > 0:
        pooled = pooled_counts + smoothing
        pooled = pooled / pooled.sum()
    else:
        pooled = np.zeros(horizon_days)
        pooled[min(default_lead, horizon_days - 1)] = 1.0
    edge_dists = {}
    for key, counts in edge_counts.items():
        smoothed = counts + smoothing
        edge_dists[key] = smoothed / smoothed.sum()
    return LeadTimeModel(horizon_days=horizon_days, edge_dists=edge_dists,
                         pooled=pooled, default_lead=default_lead)


def receive_matrix(lt_dist: np.ndarray, horizon: int) -> np.ndarray:
    """(H, H) map from shipped daily quantities to received daily
    quantities; arrivals past the horizon are dropped."""
    m = np.zeros((horizon, horizon))
    for h in range(horizon):
        upper = horizon - h
        m[h:, h] = lt_dist[:upper]
    return m


def receive_convolve(daily: np.ndarray, lt_dist: np.ndarray) -> np.ndarray:
    """Arrival timeline: ship day h plus lead k lands at day h + k."""
    daily = np.asarray(daily, dtype=float)
    return receive_matrix(np.asarray(lt_dist, dtype=float), len(daily)) @ daily


@dataclass
class RolloutResult:
    """Node trajectories and adjusted edge timelines from one rollout.

    ``inventory[v]`` has ``weeks + 1`` entries (start of each week plus
    the next-start after the horizon).  ``outgoing_unclipped`` is the
    outgoing supply before the week's capacity adjustment; ``outgoing``
    is the value after it and is what the inventory recursion uses.
    """

    horizon_days: int
    inventory: dict[str, np.ndarray]
    incoming: dict[str, np.ndarray]
    outgoing: dict[str, np.ndarray]
    outgoing_unclipped: dict[str, np.ndarray]
    capacity: dict[str, np.ndarray]
    edge_daily: dict[Edge, np.ndarray]
    edge_events: dict[Edge, list[np.ndarray]]
    clip_ratios: list[tuple[str, int, float]] = field(default_factory=list)
    lost_mass: dict[Edge, float] = field(default_factory=dict)
    rho_trace: tuple[float, ...] = ()
    converged: bool = True
    iterations: int = 0

    @property
    def weeks(self) -> int:
        return self.horizon_days // 7


def _check_predictions(snapshot: NetworkSnapshot,
                       edge_predictions: Mapping[Edge, Sequence[np.ndarray]]):
    missing = set(snapshot.graph.edges) - set(edge_predictions)
    if missing:
        raise ValueError(f"missing predictions for edges {sorted(missing)}")
    for edge, events in edge_predictions.items():
        for vec in events:
            if len(vec) != snapshot.horizon_days:
                raise ValueError(f"event timeline on {edge} has length {len(vec)}, "
                                 f"horizon is {snapshot.horizon_days}")


def rollout_inventory(snapshot: NetworkSnapshot,
                      edge_predictions: Mapping[Edge, Sequence[np.ndarray]],
                      lt: LeadTimeModel,
                      apply_capacity_clip: bool = True) -> RolloutResult:
    """Single-pass weekly rollout (process model of one iteration).

    ``edge_predictions`` gives per-edge lists of per-event daily quantity
    timelines.  Incoming supply is always computed from the *input*
    timelines; the capacity clip only rescales each node's own outgoing
    events (cascading effects are the job of
    :func:`constrained_inference`).  With the clip disabled this is the
    pure accounting pass used for evaluation.

    The weekly trajectories record the values in effect when each week was
    processed; the returned event timelines carry the final cumulative
    scale of each event (a multi-week event clipped at a later week is
    scaled as a whole, matching the per-event adjustment rule).
    """
    _check_predictions(snapshot, edge_predictions)
    g = snapshot.graph
    sku = g.sku_id
    horizon = snapshot.horizon_days
    weeks = snapshot.horizon_weeks

    base_events = {e: [np.asarray(v, dtype=float) for v in evs]
                   for e, evs in edge_predictions.items()}
    base_weekly = {e: [weekly_bucket(v) for v in evs] for e, evs in base_events.items()}

    incoming_weekly: dict[str, np.ndarray] = {v: np.zeros(weeks) for v in g.nodes}
    lost: dict[Edge, float] = {}
    for edge in g.edges:
        daily = np.sum(base_events[edge], axis=0) if base_events[edge] else np.zeros(horizon)
        recv = receive_convolve(daily, lt.distribution(sku, edge))
        lost[edge] = float(daily.sum() - recv.sum())
        incoming_weekly[edge[1]] = incoming_weekly[edge[1]] + weekly_bucket(recv)

    scales = {e: np.ones(len(base_events[e])) for e in g.edges}
    inventory = {v: np.zeros(weeks + 1) for v in g.nodes}
    outgoing = {v: np.zeros(weeks) for v in g.nodes}
    outgoing_pre = {v: np.zeros(weeks) for v in g.nodes}
    capacity = {v: np.zeros(weeks) for v in g.nodes}
    clip_log: list[tuple[str, int, float]] = []
    for v in g.nodes:
        inventory[v][0] = snapshot.node_states[v].inventory_start

    node_order = sorted(g.nodes)
    for w in range(weeks):
        for v in node_order:
            demand = snapshot.node_states[v].demand_forecast[w]
            supply_in = incoming_weekly[v][w]
            cap = inventory[v][w] + supply_in - demand
            out_edges = g.outgoing_edges(v)
            a_pre = sum(scales[e][i] * base_weekly[e][i][w]
                        for e in out_edges for i in range(len(base_weekly[e])))
            a_post = a_pre
            if apply_capacity_clip and a_pre > cap + _CLIP_EPS and a_pre > 0:
                ratio = max(cap, 0.0) / a_pre
                for e in out_edges:
                    for i, wk in enumerate(base_weekly[e]):
                        if wk[w] > 0:
                            scales[e][i] *= ratio
                a_post = sum(scales[e][i] * base_weekly[e][i][w]
                             for e in out_edges for i in range(len(base_weekly[e])))
                clip_log.append((v, w, ratio))
            capacity[v][w] = cap
            outgoing_pre[v][w] = a_pre
            outgoing[v][w] = a_post
            inventory[v][w + 1] = inventory[v][w] + supply_in - demand - a_post

    edge_events = {e: [scales[e][i] * base_events[e][i] for i in range(len(base_events[e]))]
                   for e in g.edges}
    edge_daily = {e: (np.sum(edge_events[e], axis=0) if edge_events[e] else np.zeros(horizon))
                  for e in g.edges}
    return RolloutResult(horizon_days=horizon, inventory=inventory,
                         incoming={v: incoming_weekly[v].copy() for v in g.nodes},
                         outgoing=outgoing, outgoing_unclipped=outgoing_pre,
                         capacity=capacity, edge_daily=edge_daily,
                         edge_events=edge_events, clip_ratios=clip_log,
                         lost_mass=lost, converged=True, iterations=0)


def constrained_inference(snapshot: NetworkSnapshot,
                          edge_predictions: Mapping[Edge, Sequence[np.ndarray]],
                          lt: LeadTimeModel, epsilon: float = 0.005,
                          max_iters: int = 10) -> RolloutResult:
    """Iterative capacity-constrained inference.

    Iteration 0 is the unconstrained prediction.  Each later iteration
    walks the weeks in order; for week w the incoming supply of a node is
    estimated from the concatenation of this iteration's already-finalized
    days (before week w) with the previous iteration's days (week w on),
    convolved with the lead times.  The week's capacity clip then rescales
    the *original* unconstrained events, so over-clipping in an earlier
    iteration can relax once upstream estimates stabilize.  Iteration
    stops when the edge-averaged relative L2 change of the daily timelines
    falls below ``epsilon``; non-convergence returns the last iterate with
    ``converged=False``.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    _check_predictions(snapshot, edge_predictions)
    g = snapshot.graph
    sku = g.sku_id
    horizon = snapshot.horizon_days
    weeks = snapshot.horizon_weeks
    node_order = sorted(g.nodes)

    base_events = {e: [np.asarray(v, dtype=float) for v in evs]
                   for e, evs in edge_predictions.items()}
    base_weekly = {e: [weekly_bucket(v) for v in evs] for e, evs in base_events.items()}
    recv_mats = {e: receive_matrix(lt.distribution(sku, e), horizon) for e in g.edges}

    prev_daily = {e: (np.sum(base_events[e], axis=0) if base_events[e] else np.zeros(horizon))
                  for e in g.edges}
    rho_trace: list[float] = []
    converged = False
    result: RolloutResult | None = None

    for iteration in range(1, max_iters + 1):
        scales = {e: np.ones(len(base_events[e])) for e in g.edges}
        cur_daily = {e: np.zeros(horizon) for e in g.edges}
        inventory = {v: np.zeros(weeks + 1) for v in g.nodes}
        incoming = {v: np.zeros(weeks) for v in g.nodes}
        outgoing = {v: np.zeros(weeks) for v in g.nodes}
        outgoing_pre = {v: np.zeros(weeks) for v in g.nodes}
        capacity = {v: np.zeros(weeks) for v in g.nodes}
        clip_log: list[tuple[str, int, float]] = []
        lost: dict[Edge, float] = {}
        for v in g.nodes:
            inventory[v][0] = snapshot.node_states[v].inventory_start

        for w in range(weeks):
            cut = 7 * w
            est = {e: np.concatenate([cur_daily[e][:cut], prev_daily[e][cut:]])
                   for e in g.edges}
            recv_week = {e: weekly_bucket(recv_mats[e] @ est[e]) for e in g.edges}
            for v in node_order:
                demand = snapshot.node_states[v].demand_forecast[w]
                supply_in = sum(recv_week[e][w] for e in g.incoming_edges(v))
                cap = inventory[v][w] + supply_in - demand
                out_edges = g.outgoing_edges(v)
                a_pre = sum(scales[e][i] * base_weekly[e][i][w]
                            for e in out_edges for i in range(len(base_weekly[e])))
                a_post = a_pre
                if a_pre > cap + _CLIP_EPS and a_pre > 0:
                    ratio = max(cap, 0.0) / a_pre
                    for e in out_edges:
                        for i, wk in enumerate(base_weekly[e]):
                            if wk[w] > 0:
                                scales[e][i] *= ratio
                    a_post = sum(scales[e][i] * base_weekly[e][i][w]
                                 for e in out_edges for i in range(len(base_weekly[e])))
                    clip_log.append((v, w, ratio))
                incoming[v][w] = supply_in
                capacity[v][w] = cap
                outgoing_pre[v][w] = a_pre
                outgoing[v][w] = a_post
                inventory[v][w + 1] = inventory[v][w] + supply_in - demand - a_post
            for e in g.edges:
                if base_events[e]:
                    week_part = sum(scales[e][i] * base_events[e][i][cut:cut + 7]
                                    for i in range(len(base_events[e])))
                    cur_daily[e][cut:cut + 7] = week_part

        changes = []
        for e in g.edges:
            prev_norm = float(np.linalg.norm(prev_daily[e]))
            if prev_norm == 0.0:
                changes.append(0.0)
            else:
                changes.append(float(np.linalg.norm(cur_daily[e] - prev_daily[e])) / prev_norm)
        rho = float(np.mean(changes)) if changes else 0.0
        rho_trace.append(rho)

        edge_events = {e: [scales[e][i] * base_events[e][i]
                           for i in range(len(base_events[e]))] for e in g.edges}
        for e in g.edges:
            recv = recv_mats[e] @ cur_daily[e]
            lost[e] = float(cur_daily[e].sum() - recv.sum())
        result = RolloutResult(horizon_days=horizon, inventory=inventory,
                               incoming=incoming, outgoing=outgoing,
                               outgoing_unclipped=outgoing_pre, capacity=capacity,
                               edge_daily={e: cur_daily[e].copy() for e in g.edges},
                               edge_events=edge_events, clip_ratios=clip_log,
                               lost_mass=lost, rho_trace=tuple(rho_trace),
                               converged=False, iterations=iteration)
        prev_daily = cur_daily
        if rho < epsilon:
            converged = True
            break

    assert result is not None
    result.converged = converged
    result.rho_trace = tuple(rho_trace)
    return result
