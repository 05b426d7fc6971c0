"""Data model for SKU-specific supply networks.

A supply network is a small directed graph (plants, distribution centers,
retailers) attached to one SKU.  A :class:`NetworkSnapshot` freezes the
network at one prediction time together with per-node planning state,
per-edge planned shipment events, and (optionally) ground-truth labels.
Snapshots are immutable after construction and safe to share across
workers.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

Edge = tuple[str, str]


def _freeze_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NetworkGraph:
    """Directed supply graph for one SKU.

    Edges are ordered so that per-edge feature rows elsewhere can refer to
    edges by position.  Duplicate directed edges are rejected; every
    endpoint must be a declared node.
    """

    sku_id: str
    nodes: frozenset[str]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        if len(set(self.edges)) != len(self.edges):
            raise ValueError(f"duplicate directed edges in graph {self.sku_id!r}")
        for src, dst in self.edges:
            if src not in self.nodes or dst not in self.nodes:
                raise ValueError(f"edge ({src!r}, {dst!r}) references unknown node")
        incoming: dict[str, list[str]] = {v: [] for v in self.nodes}
        outgoing: dict[str, list[str]] = {v: [] for v in self.nodes}
        for src, dst in self.edges:
            incoming[dst].append(src)
            outgoing[src].append(dst)
        object.__setattr__(self, "_incoming", {v: tuple(u) for v, u in incoming.items()})
        object.__setattr__(self, "_outgoing", {v: tuple(u) for v, u in outgoing.items()})

    def neighbors_src(self, v: str) -> frozenset[str]:
        """Parents of ``v``: all ``u`` with an edge ``u -> v``."""
        try:
            return frozenset(self._incoming[v])
        except KeyError:
            raise KeyError(f"unknown node {v!r} in graph {self.sku_id!r}") from None

    def neighbors_dest(self, v: str) -> frozenset[str]:
        """Children of ``v``: all ``w`` with an edge ``v -> w``."""
        try:
            return frozenset(self._outgoing[v])
        except KeyError:
            raise KeyError(f"unknown node {v!r} in graph {self.sku_id!r}") from None

    def incoming_edges(self, v: str) -> tuple[Edge, ...]:
        return tuple((u, v) for u in self._incoming[v])

    def outgoing_edges(self, v: str) -> tuple[Edge, ...]:
        return tuple((v, w) for w in self._outgoing[v])


def reverse_graph(g: NetworkGraph) -> NetworkGraph:
    """Same node set, every edge direction flipped, edge order preserved."""
    return NetworkGraph(sku_id=g.sku_id, nodes=g.nodes,
                        edges=tuple((w, v) for v, w in g.edges))


def neighbors_src(g: NetworkGraph, v: str) -> frozenset[str]:
    return g.neighbors_src(v)


def neighbors_dest(g: NetworkGraph, v: str) -> frozenset[str]:
    return g.neighbors_dest(v)


@dataclass(frozen=True)
class NodeState:
    """Planning state of one node at the prediction time.

    ``planned_inventory`` covers weeks 1..W-1 (week 0 starts at the actual
    inventory); the three plan/forecast vectors cover weeks 0..W-1.
    Inventory may be negative (backlog); plans and forecasts may not.
    """

    inventory_start: float
    planned_inventory: np.ndarray
    demand_forecast: np.ndarray
    planned_incoming: np.ndarray
    planned_outgoing: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.inventory_start):
            raise ValueError("inventory_start must be finite")
        for name in ("planned_inventory", "demand_forecast",
                     "planned_incoming", "planned_outgoing"):
            object.__setattr__(self, name, _freeze_vector(getattr(self, name), name))
        weeks = len(self.demand_forecast)
        if len(self.planned_incoming) != weeks or len(self.planned_outgoing) != weeks:
            raise ValueError("demand/incoming/outgoing plan vectors must share one week horizon")
        if len(self.planned_inventory) != weeks - 1:
            raise ValueError(f"planned_inventory must cover weeks 1..{weeks - 1} "
                             f"({weeks - 1} entries), got {len(self.planned_inventory)}")
        for name in ("demand_forecast", "planned_incoming", "planned_outgoing"):
            if (getattr(self, name) < 0).any():
                raise ValueError(f"{name} must be non-negative")

    @property
    def weeks(self) -> int:
        return len(self.demand_forecast)


@dataclass(frozen=True)
class PlannedEvent:
    """One planned shipment: day offset within the horizon and quantity."""

    time_offset: int
    quantity: float

    def __post_init__(self):
        if self.time_offset < 0 or self.time_offset != int(self.time_offset):
            raise ValueError(f"time_offset must be a non-negative integer, got {self.time_offset}")
        object.__setattr__(self, "time_offset", int(self.time_offset))
        if not np.isfinite(self.quantity) or self.quantity < 0:
            raise ValueError(f"event quantity must be finite and >= 0, got {self.quantity}")


@dataclass(frozen=True)
class EdgeState:
    """Planned events on one edge plus its recent shipment history.

    ``history`` holds (days_before, quantity) pairs for past actual
    shipments, most recent first (strictly increasing days_before).
    """

    planned_events: tuple[PlannedEvent, ...]
    history: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "planned_events", tuple(self.planned_events))
        hist = tuple((int(d), float(q)) for d, q in self.history)
        object.__setattr__(self, "history", hist)
        prev = 0
        for days_before, qty in hist:
            if days_before <= prev:
                raise ValueError("history must be most-recent-first with distinct days_before >= 1")
            if not np.isfinite(qty) or qty < 0:
                raise ValueError("history quantities must be finite and >= 0")
            prev = days_before


@dataclass(frozen=True)
class NetworkSnapshot:
    """One SKU's network at a prediction time, with states and labels.

    ``label_daily_outgoing`` maps each edge to the actual daily outgoing
    quantities over the horizon; ``label_weekly_inventory`` maps each node
    to the actual start-of-week inventory over the weekly horizon.  Both
    are optional (inference-only snapshots).  ``leadtime_history`` holds
    observed (ship_date, receive_date) pairs per edge.
    """

    graph: NetworkGraph
    prediction_time: dt.date
    horizon_days: int
    node_states: Mapping[str, NodeState]
    edge_states: Mapping[Edge, EdgeState]
    label_daily_outgoing: Mapping[Edge, np.ndarray] | None = None
    label_weekly_inventory: Mapping[str, np.ndarray] | None = None
    leadtime_history: Mapping[Edge, tuple[tuple[dt.date, dt.date], ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon_days <= 0 or self.horizon_days % 7 != 0:
            raise ValueError(f"horizon_days must be a positive multiple of 7, got {self.horizon_days}")
        weeks = self.horizon_days // 7
        if set(self.node_states) != set(self.graph.nodes):
            raise ValueError("node_states must cover exactly the graph's nodes")
        if set(self.edge_states) != set(self.graph.edges):
            raise ValueError("edge_states must cover exactly the graph's edges")
        for v, state in self.node_states.items():
            if state.weeks != weeks:
                raise ValueError(f"node {v!r} state has {state.weeks} weeks, horizon needs {weeks}")
        for edge, state in self.edge_states.items():
            for ev in state.planned_events:
                if ev.time_offset >= self.horizon_days:
                    raise ValueError(f"planned event on {edge} at day {ev.time_offset} "
                                     f"outside horizon of {self.horizon_days} days")
        if self.label_daily_outgoing is not None:
            frozen = {}
            for edge, vec in self.label_daily_outgoing.items():
                if edge not in self.edge_states:
                    raise ValueError(f"label for unknown edge {edge}")
                arr = _freeze_vector(vec, f"label_daily_outgoing[{edge}]")
                if len(arr) != self.horizon_days:
                    raise ValueError(f"daily label on {edge} has length {len(arr)}, "
                                     f"expected {self.horizon_days}")
                frozen[edge] = arr
            object.__setattr__(self, "label_daily_outgoing", frozen)
        if self.label_weekly_inventory is not None:
            frozen = {}
            for v, vec in self.label_weekly_inventory.items():
                if v not in self.node_states:
                    raise ValueError(f"label for unknown node {v!r}")
                arr = _freeze_vector(vec, f"label_weekly_inventory[{v}]")
                if len(arr) != weeks:
                    raise ValueError(f"weekly label on {v!r} has length {len(arr)}, expected {weeks}")
                frozen[v] = arr
            object.__setattr__(self, "label_weekly_inventory", frozen)
        for edge, pairs in self.leadtime_history.items():
            if edge not in self.edge_states:
                raise ValueError(f"lead-time history for unknown edge {edge}")
            for ship, receive in pairs:
                if receive < ship:
                    raise ValueError(f"lead-time pair on {edge} has receive before ship")

    @property
    def horizon_weeks(self) -> int:
        return self.horizon_days // 7

    def max_event_count(self) -> int:
        """Largest number of planned events on any single edge."""
        if not self.edge_states:
            return 0
        return max(len(s.planned_events) for s in self.edge_states.values())


def planned_daily_timeline(snapshot: NetworkSnapshot, edge: Edge) -> np.ndarray:
    """Daily quantities implied by the planned events on one edge."""
    out = np.zeros(snapshot.horizon_days)
    for ev in snapshot.edge_states[edge].planned_events:
        out[ev.time_offset] += ev.quantity
    return out
