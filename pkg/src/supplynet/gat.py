"""Graph attention convolution with edge features, plus the bidirectional
node embedding used by the event prediction heads.

Each layer computes, per attention head and per node i with in-neighbors j,

    o_ij = attn . leaky_relu(W_self h_i + W_neigh h_j + W_edge e_ji)
    a_ij = softmax_j(o_ij)          over j in N_src(i) + {i}
    h_i' = sigma(a_ii W_self h_i + sum_j a_ij (W_neigh h_j + W_edge e_ji))

The self term uses a zero edge-feature vector.  Hidden layers concatenate
head outputs and apply leaky_relu; the final layer averages heads and
applies no activation.  A node's embedding is the concatenation of the
final features from the original graph and from the reversed graph (each
reversed edge keeps the original edge's features).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .network import NetworkGraph, reverse_graph


@dataclass(frozen=True)
class GatHeadParams:
    w_self: Tensor   # (in_dim, out_dim)
    w_neigh: Tensor  # (in_dim, out_dim)
    w_edge: Tensor   # (edge_dim, out_dim)
    attn: Tensor     # (out_dim,)

    def __post_init__(self):
        in_dim, out_dim = self.w_self.shape
        if self.w_neigh.shape != (in_dim, out_dim):
            raise ValueError("w_neigh shape mismatch")
        if self.w_edge.shape[1] != out_dim:
            raise ValueError("w_edge output dimension mismatch")
        if self.attn.shape != (out_dim,):
            raise ValueError("attention vector length must equal out_dim")


@dataclass(frozen=True)
class GatLayerParams:
    heads: tuple[GatHeadParams, ...]
    combine: str       # "concat" for hidden layers, "mean" for the final layer
    activate: bool     # leaky_relu after aggregation (hidden layers only)

    @property
    def out_dim(self) -> int:
        width = self.heads[0].w_self.shape[1]
        return width * len(self.heads) if self.combine == "concat" else width


GatStack = tuple[GatLayerParams, ...]


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_gat_stack(rng: np.random.Generator, in_dim: int, edge_dim: int,
                   layer_dims: list[int], head_count: int,
                   name_prefix: str) -> tuple[GatStack, list[Tensor]]:
    """Build an L-layer stack; returns the params and the flat tensor list."""
    layers = []
    params: list[Tensor] = []
    cur = in_dim
    for li, width in enumerate(layer_dims):
        final = li == len(layer_dims) - 1
        heads = []
        for hi in range(head_count):
            tag = f"{name_prefix}.layer{li}.head{hi}"
            head = GatHeadParams(
                w_self=ad.parameter(_glorot(rng, cur, width), f"{tag}.w_self"),
                w_neigh=ad.parameter(_glorot(rng, cur, width), f"{tag}.w_neigh"),
                w_edge=ad.parameter(_glorot(rng, edge_dim, width), f"{tag}.w_edge"),
                attn=ad.parameter(_glorot(rng, width, 1)[:, 0], f"{tag}.attn"),
            )
            heads.append(head)
            params.extend([head.w_self, head.w_neigh, head.w_edge, head.attn])
        layers.append(GatLayerParams(heads=tuple(heads),
                                     combine="mean" if final else "concat",
                                     activate=not final))
        cur = layers[-1].out_dim
    return tuple(layers), params


def gat_layer(h: Tensor, e: Tensor, g: NetworkGraph,
              node_order: tuple[str, ...], params: GatLayerParams) -> Tensor:
    """One attention layer.  ``h`` is (n, in_dim) with rows following
    ``node_order``; ``e`` is (|E|, edge_dim) with rows following
    ``g.edges``.  Returns (n, out_dim)."""
    n = len(node_order)
    if h.shape[0] != n:
        raise ValueError(f"feature matrix has {h.shape[0]} rows for {n} nodes")
    if e.shape[0] != len(g.edges):
        raise ValueError(f"edge feature matrix has {e.shape[0]} rows for {len(g.edges)} edges")
    index = {v: i for i, v in enumerate(node_order)}
    in_edges: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    for ei, (src, dst) in enumerate(g.edges):
        in_edges[index[dst]].append((index[src], ei))

    head_outputs = []
    for head in params.heads:
        if h.shape[1] != head.w_self.shape[0]:
            raise ValueError(f"node feature dim {h.shape[1]} does not match "
                             f"layer input dim {head.w_self.shape[0]}")
        if e.shape[1] != head.w_edge.shape[0]:
            raise ValueError(f"edge feature dim {e.shape[1]} does not match "
                             f"layer edge dim {head.w_edge.shape[0]}")
        z_self = ad.matmul(h, head.w_self)
        z_neigh = ad.matmul(h, head.w_neigh)
        z_edge = ad.matmul(e, head.w_edge)
        rows = []
        for i in range(n):
            self_row = ad.row(z_self, i)
            neigh_terms = []
            scores = [ad.matmul(head.attn,
                                ad.leaky_relu(ad.add(self_row, ad.row(z_neigh, i))))]
            for j, ei in in_edges[i]:
                msg = ad.add(ad.row(z_neigh, j), ad.row(z_edge, ei))
                neigh_terms.append(msg)
                scores.append(ad.matmul(head.attn,
                                        ad.leaky_relu(ad.add(self_row, msg))))
            alpha = ad.softmax(ad.stack_scalars(scores))
            agg = ad.mul(ad.get(alpha, 0), self_row)
            for k, msg in enumerate(neigh_terms):
                agg = ad.add(agg, ad.mul(ad.get(alpha, k + 1), msg))
            rows.append(agg)
        head_outputs.append(ad.stack_rows(rows))

    if params.combine == "concat":
        out = ad.concat_cols(head_outputs)
    else:
        out = head_outputs[0]
        for other in head_outputs[1:]:
            out = ad.add(out, other)
        out = ad.scale(out, 1.0 / len(head_outputs))
    if params.activate:
        out = ad.leaky_relu(out)
    return out


def run_gat_stack(x: Tensor, e: Tensor, g: NetworkGraph,
                  node_order: tuple[str, ...], stack: GatStack) -> Tensor:
    h = x
    for layer in stack:
        h = gat_layer(h, e, g, node_order, layer)
    return h


def embed_bidirectional(x: Tensor, e: Tensor, g: NetworkGraph,
                        node_order: tuple[str, ...],
                        stack_fwd: GatStack, stack_bwd: GatStack) -> Tensor:
    """Per-node embedding (n, 2B): forward-graph features concatenated with
    reverse-graph features.  Reversed edges reuse the original edge rows."""
    u_f = run_gat_stack(x, e, g, node_order, stack_fwd)
    u_b = run_gat_stack(x, e, reverse_graph(g), node_order, stack_bwd)
    return ad.concat_cols([u_f, u_b])
