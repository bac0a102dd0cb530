"""Multi-layer graph containers, edge-list I/O and community bookkeeping.

A multi-layer network here is a fixed node set observed on M layers, each
layer a symmetric nonnegative weighted adjacency matrix.  Layers are stored
as CSR matrices whose diagonal carries TWICE the self-loop weight: with that
convention row sums are exactly the multi-degrees k_i^(m) (a self-loop adds
2 to the degree of its endpoint) and the quadratic form Z' S Z over a
one-hot partition matrix Z yields the community weight table e_ql^(m)
directly, with within-community weight counted twice on the diagonal.
Conventional adjacency (self-loop weight stated once) is used at every
input/output boundary; the doubling is internal.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import sparse


class InputDataError(ValueError):
    """Malformed or inconsistent input data."""


class PreconditionError(ValueError):
    """A structural or numeric precondition does not hold."""


def _format_weight(w: float) -> str:
    if w == int(w) and abs(w) < 1e15:
        return str(int(w))
    return repr(float(w))


class MultiLayerGraph:
    """Immutable weighted undirected multi-layer network.

    Attributes
    ----------
    layers:
        CSR matrices (one per layer) with doubled diagonal, see module
        docstring.  Treated as read-only.
    degrees:
        (M, N) array, degrees[m, i] = k_i^(m).
    layer_totals:
        (M,) array of 2 * L^(m) (total degree per layer).
    grand_total:
        2 * L, the sum of layer totals.
    node_ids / layer_names:
        External string identifiers, index-aligned with the internal
        0-based node and layer indices.
    """

    __slots__ = (
        "layers",
        "n_nodes",
        "n_layers",
        "node_ids",
        "layer_names",
        "degrees",
        "loops",
        "layer_totals",
        "grand_total",
        "_id_index",
    )

    def __init__(
        self,
        layers: Sequence[sparse.csr_array],
        node_ids: Sequence[str] | None = None,
        layer_names: Sequence[str] | None = None,
        _trusted: bool = False,
    ):
        if len(layers) == 0:
            raise InputDataError("a multi-layer graph needs at least one layer")
        n = layers[0].shape[0]
        mats = []
        for m, a in enumerate(layers):
            a = sparse.csr_array(a, dtype=np.float64)
            if a.shape != (n, n):
                raise InputDataError(
                    f"layer {m} has shape {a.shape}, expected ({n}, {n})"
                )
            if not _trusted:
                if a.nnz and a.data.min() < 0.0:
                    raise InputDataError(f"layer {m} has a negative weight")
                asym = (a - a.T).tocoo()
                if asym.nnz and np.max(np.abs(asym.data)) > 1e-12:
                    raise InputDataError(f"layer {m} is not symmetric")
            a.sum_duplicates()
            a.eliminate_zeros()
            mats.append(a)
        self.layers = tuple(mats)
        self.n_nodes = n
        self.n_layers = len(mats)
        if node_ids is None:
            node_ids = [str(i) for i in range(n)]
        if len(node_ids) != n:
            raise InputDataError("node_ids length does not match node count")
        self.node_ids = list(node_ids)
        if layer_names is None:
            layer_names = [str(m) for m in range(self.n_layers)]
        if len(layer_names) != self.n_layers:
            raise InputDataError("layer_names length does not match layer count")
        self.layer_names = list(layer_names)
        self._id_index = {u: i for i, u in enumerate(self.node_ids)}
        if len(self._id_index) != n:
            raise InputDataError("duplicate node ids")
        self.degrees = np.vstack([a.sum(axis=1) for a in self.layers])
        self.loops = np.vstack([a.diagonal() for a in self.layers])
        self.layer_totals = self.degrees.sum(axis=1)
        self.grand_total = float(self.layer_totals.sum())

    # -- constructors -------------------------------------------------

    @classmethod
    def from_dense(
        cls,
        layers: Sequence[np.ndarray],
        node_ids: Sequence[str] | None = None,
        layer_names: Sequence[str] | None = None,
    ) -> "MultiLayerGraph":
        """Build from conventional dense adjacency (self-loops stated once)."""
        mats = []
        for m, a in enumerate(layers):
            a = np.asarray(a, dtype=np.float64)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise InputDataError(f"layer {m} is not square")
            if not np.allclose(a, a.T, atol=1e-12):
                raise InputDataError(f"layer {m} is not symmetric")
            if a.size and a.min() < 0.0:
                raise InputDataError(f"layer {m} has a negative weight")
            s = a.copy()
            np.fill_diagonal(s, 2.0 * np.diag(a))
            mats.append(sparse.csr_array(s))
        return cls(mats, node_ids=node_ids, layer_names=layer_names, _trusted=True)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str, str, float]],
        dedup: str = "sum-halved",
    ) -> "MultiLayerGraph":
        """Build from (layer, u, v, weight) records, one per observed line.

        Node and layer order follow first appearance.  Records naming the
        same unordered pair within a layer are merged by ``dedup``:

        - ``"sum-halved"``: weights are summed; if the pair appeared in
          both orientations (u,v and v,u) the sum is halved, so a fully
          mirrored listing round-trips to the stated weight.
        - ``"sum"``: plain sum.
        - ``"max"``: maximum single stated weight.
        """
        if dedup not in ("sum-halved", "sum", "max"):
            raise InputDataError(f"unknown dedup policy: {dedup!r}")
        node_index: dict[str, int] = {}
        layer_index: dict[str, int] = {}
        # per layer: {(i<=j): [sum, max, orientations]}
        acc: list[dict[tuple[int, int], list]] = []
        for layer, u, v, w in edges:
            if w < 0.0:
                raise InputDataError(
                    f"negative weight {w} on edge ({u}, {v}) in layer {layer}"
                )
            li = layer_index.setdefault(layer, len(layer_index))
            if li == len(acc):
                acc.append({})
            i = node_index.setdefault(u, len(node_index))
            j = node_index.setdefault(v, len(node_index))
            key = (i, j) if i <= j else (j, i)
            orient = 1 if i <= j else 2
            slot = acc[li].get(key)
            if slot is None:
                acc[li][key] = [w, w, orient]
            else:
                slot[0] += w
                slot[1] = max(slot[1], w)
                slot[2] |= orient
        if not layer_index:
            raise InputDataError("no edges: empty layer set")
        n = len(node_index)
        node_ids = [None] * n
        for u, i in node_index.items():
            node_ids[i] = u
        layer_names = [None] * len(layer_index)
        for name, li in layer_index.items():
            layer_names[li] = name
        mats = []
        for li in range(len(layer_index)):
            rows, cols, data = [], [], []
            for (i, j), (total, wmax, orient) in acc[li].items():
                if dedup == "sum":
                    w = total
                elif dedup == "max":
                    w = wmax
                else:
                    w = total / 2.0 if orient == 3 else total
                if w == 0.0:
                    continue
                if i == j:
                    rows.append(i)
                    cols.append(i)
                    data.append(2.0 * w)
                else:
                    rows.extend((i, j))
                    cols.extend((j, i))
                    data.extend((w, w))
            mats.append(
                sparse.csr_array(
                    sparse.coo_array((data, (rows, cols)), shape=(n, n))
                )
            )
        return cls(mats, node_ids=node_ids, layer_names=layer_names, _trusted=True)

    # -- views ---------------------------------------------------------

    def to_dense(self, m: int) -> np.ndarray:
        """Conventional dense adjacency of layer ``m`` (diagonal halved)."""
        a = self.layers[m].toarray()
        np.fill_diagonal(a, np.diag(a) / 2.0)
        return a

    def total_degrees(self) -> np.ndarray:
        """(N,) array of K_i = sum over layers of k_i^(m)."""
        return self.degrees.sum(axis=0)

    def index_of(self, node_id: str) -> int:
        try:
            return self._id_index[node_id]
        except KeyError:
            raise InputDataError(f"unknown node id: {node_id!r}") from None

    # -- derived graphs -------------------------------------------------

    def aggregate(self) -> "MultiLayerGraph":
        """Single-layer graph whose weights are the sum over layers."""
        s = self.layers[0]
        for a in self.layers[1:]:
            s = s + a
        return MultiLayerGraph(
            [sparse.csr_array(s)],
            node_ids=self.node_ids,
            layer_names=["aggregate"],
            _trusted=True,
        )

    def restrict_to_cross_layer_connected(self) -> tuple["MultiLayerGraph", list[str]]:
        """Drop nodes with zero degree in at least one layer.

        Returns the restricted graph and the removed node ids.  Applying
        the restriction twice removes nothing the second time only if the
        first pass left every surviving node positive in every layer, so
        the pass repeats until stable.
        """
        keep = np.ones(self.n_nodes, dtype=bool)
        layers = self.layers
        while True:
            deg = np.vstack([a[keep][:, keep].sum(axis=1) for a in layers])
            alive = (deg > 0.0).all(axis=0)
            if alive.all():
                break
            idx = np.flatnonzero(keep)
            keep[idx[~alive]] = False
            if not keep.any():
                raise PreconditionError(
                    "no node has positive degree in every layer"
                )
        removed = [self.node_ids[i] for i in np.flatnonzero(~keep)]
        if not removed:
            return self, []
        sub = [sparse.csr_array(a[keep][:, keep]) for a in layers]
        ids = [self.node_ids[i] for i in np.flatnonzero(keep)]
        return (
            MultiLayerGraph(sub, node_ids=ids, layer_names=self.layer_names, _trusted=True),
            removed,
        )


def aggregate_graph(g: MultiLayerGraph) -> MultiLayerGraph:
    """Collapse all layers into one by summing weights edge-wise."""
    return g.aggregate()


@dataclass
class Partition:
    """Node-to-community assignment with labels 1..k."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise InputDataError("labels must be a 1-d vector")
        if self.k < 1:
            raise InputDataError("k must be at least 1")
        if self.labels.size:
            lo, hi = int(self.labels.min()), int(self.labels.max())
            if lo < 1 or hi > self.k:
                raise InputDataError(
                    f"labels must lie in 1..{self.k}, found range [{lo}, {hi}]"
                )

    @classmethod
    def from_labels(cls, labels, k: int | None = None) -> "Partition":
        arr = np.asarray(labels, dtype=np.int64)
        if k is None:
            k = int(arr.max()) if arr.size else 1
        return cls(arr, k)

    @property
    def n_nodes(self) -> int:
        return self.labels.size

    def z0(self) -> np.ndarray:
        """0-based copy of the labels, for array indexing."""
        return self.labels - 1

    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.labels - 1, minlength=self.k)

    def compact(self) -> "Partition":
        """Renumber to 1..k' dropping empty labels, first-appearance order."""
        seen: dict[int, int] = {}
        out = np.empty_like(self.labels)
        for i, lab in enumerate(self.labels):
            out[i] = seen.setdefault(int(lab), len(seen) + 1)
        return Partition(out, max(len(seen), 1))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Partition)
            and self.k == other.k
            and np.array_equal(self.labels, other.labels)
        )


class CommunityStats:
    """Community weight bookkeeping for one partition of one graph.

    ``e_ql`` is the (M, K, K) table of community pair weights per layer,
    within-community weight counted twice on the diagonal; ``e_q`` its row
    sums.  Both stay consistent under :func:`apply_move`, and row q of any
    layer sums to e_q^(m); summing e_q^(m) over q gives 2 L^(m).
    """

    __slots__ = ("graph", "e_ql", "e_q", "labels", "k")

    def __init__(self, graph: MultiLayerGraph, e_ql, e_q, labels, k):
        self.graph = graph
        self.e_ql = e_ql
        self.e_q = e_q
        self.labels = labels
        self.k = k

    @property
    def n_layers(self) -> int:
        return self.graph.n_layers

    @property
    def layer_totals(self) -> np.ndarray:
        return self.graph.layer_totals

    @property
    def grand_total(self) -> float:
        return self.graph.grand_total

    def e_diag(self) -> np.ndarray:
        """(M, K) view of the within-community entries e_qq^(m)."""
        m, k = self.e_ql.shape[0], self.k
        return np.einsum("mqq->mq", self.e_ql)

    def copy(self) -> "CommunityStats":
        return CommunityStats(
            self.graph, self.e_ql.copy(), self.e_q.copy(), self.labels.copy(), self.k
        )


def init_stats(g: MultiLayerGraph, partition: Partition) -> CommunityStats:
    """Compute the full community weight table for a partition."""
    if partition.n_nodes != g.n_nodes:
        raise PreconditionError(
            f"partition covers {partition.n_nodes} nodes, graph has {g.n_nodes}"
        )
    k = partition.k
    z0 = partition.z0()
    zmat = sparse.csr_array(
        (np.ones(g.n_nodes), (np.arange(g.n_nodes), z0)), shape=(g.n_nodes, k)
    )
    e_ql = np.empty((g.n_layers, k, k), dtype=np.float64)
    for m, a in enumerate(g.layers):
        e_ql[m] = (zmat.T @ a @ zmat).toarray()
    e_q = e_ql.sum(axis=2)
    return CommunityStats(g, e_ql, e_q, partition.labels.copy(), k)


def node_profile(
    g: MultiLayerGraph, labels0: np.ndarray, node: int, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-layer neighbor weight of ``node`` toward each community.

    Returns (w, kvec, loop): w is (M, K) with w[m, c] the weight from the
    node to community c in layer m excluding any self-loop, kvec is the
    node's degree per layer, loop its doubled self-loop weight per layer.
    """
    w = np.zeros((g.n_layers, k), dtype=np.float64)
    for m, a in enumerate(g.layers):
        lo, hi = a.indptr[node], a.indptr[node + 1]
        idx = a.indices[lo:hi]
        dat = a.data[lo:hi]
        if idx.size:
            keep = idx != node
            if not keep.all():
                idx, dat = idx[keep], dat[keep]
            w[m] += np.bincount(labels0[idx], weights=dat, minlength=k)
    return w, g.degrees[:, node].copy(), g.loops[:, node].copy()


def apply_move(
    stats: CommunityStats,
    node: int,
    from_label: int,
    to_label: int,
    g: MultiLayerGraph | None = None,
) -> None:
    """Update ``stats`` in place for moving ``node`` between communities.

    ``from_label`` must be the node's current community; both labels are
    1-based.  The update is exact: it leaves ``stats`` equal to a fresh
    recomputation on the moved partition.
    """
    if g is None:
        g = stats.graph
    elif g is not stats.graph:
        raise PreconditionError("stats were built for a different graph")
    n = g.n_nodes
    if not (0 <= node < n):
        raise PreconditionError(f"node index {node} out of range")
    if stats.labels[node] != from_label:
        raise PreconditionError(
            f"node {node} is in community {stats.labels[node]}, not {from_label}"
        )
    if not (1 <= to_label <= stats.k):
        raise PreconditionError(f"target community {to_label} out of range 1..{stats.k}")
    if from_label == to_label:
        raise PreconditionError("move must change the community")
    r, s = from_label - 1, to_label - 1
    w, kvec, loop = node_profile(g, stats.labels - 1, node, stats.k)
    e = stats.e_ql
    e[:, r, :] -= w
    e[:, :, r] -= w
    e[:, r, r] -= loop
    e[:, s, :] += w
    e[:, :, s] += w
    e[:, s, s] += loop
    stats.e_q[:, r] -= kvec
    stats.e_q[:, s] += kvec
    stats.labels[node] = to_label


# -- edge-list I/O -----------------------------------------------------


def _open_maybe(source, mode: str):
    if isinstance(source, (str, Path)):
        return open(source, mode, encoding="utf-8"), True
    return source, False


def _parse_weight(tok: str, lineno: int, where: str) -> float:
    try:
        w = float(tok)
    except ValueError:
        raise InputDataError(f"{where} line {lineno}: bad weight {tok!r}") from None
    if not np.isfinite(w):
        raise InputDataError(f"{where} line {lineno}: non-finite weight {tok!r}")
    if w < 0.0:
        raise InputDataError(f"{where} line {lineno}: negative weight {tok!r}")
    return w


def _iter_edge_lines(stream: IO[str], where: str, with_layer: bool, layer: str = ""):
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if with_layer:
            if len(parts) == 3:
                lay, u, v = parts
                w = 1.0
            elif len(parts) == 4:
                lay, u, v = parts[:3]
                w = _parse_weight(parts[3], lineno, where)
            else:
                raise InputDataError(
                    f"{where} line {lineno}: expected 'layer u v [w]', got {len(parts)} fields"
                )
        else:
            if len(parts) == 2:
                u, v = parts
                w = 1.0
                lay = layer
            elif len(parts) == 3:
                u, v = parts[:2]
                w = _parse_weight(parts[2], lineno, where)
                lay = layer
            else:
                raise InputDataError(
                    f"{where} line {lineno}: expected 'u v [w]', got {len(parts)} fields"
                )
        yield lay, u, v, w


def load_multilayer_edgelist(source, dedup: str = "sum-halved") -> MultiLayerGraph:
    """Read a whitespace-separated ``layer u v [w]`` edge list.

    Missing weights default to 1.  Blank lines and lines starting with
    ``#`` are skipped.  Repeated pairs are merged per ``dedup``; see
    :meth:`MultiLayerGraph.from_edges`.
    """
    stream, close = _open_maybe(source, "r")
    where = getattr(stream, "name", "<stream>")
    try:
        return MultiLayerGraph.from_edges(
            _iter_edge_lines(stream, where, with_layer=True), dedup=dedup
        )
    finally:
        if close:
            stream.close()


def load_layer_files(paths: Sequence, dedup: str = "sum-halved") -> MultiLayerGraph:
    """Read one ``u v [w]`` edge list per layer; layer name is the file stem."""
    if not paths:
        raise InputDataError("no edges: empty layer set")

    def gen():
        for p in paths:
            p = Path(p)
            with open(p, "r", encoding="utf-8") as fh:
                yield from _iter_edge_lines(fh, str(p), with_layer=False, layer=p.stem)

    return MultiLayerGraph.from_edges(gen(), dedup=dedup)


def write_multilayer_edgelist(g: MultiLayerGraph, dest) -> None:
    """Write ``layer u v w`` lines, one per undirected edge (i <= j)."""
    stream, close = _open_maybe(dest, "w")
    try:
        for m, a in enumerate(g.layers):
            name = g.layer_names[m]
            coo = sparse.triu(a).tocoo()
            order = np.lexsort((coo.col, coo.row))
            for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order]):
                if i == j:
                    w = w / 2.0
                stream.write(
                    f"{name} {g.node_ids[i]} {g.node_ids[j]} {_format_weight(w)}\n"
                )
    finally:
        if close:
            stream.close()


def write_partition(partition: Partition, node_ids: Sequence[str], dest) -> None:
    """Write ``node<TAB>community`` lines in node order."""
    if len(node_ids) != partition.n_nodes:
        raise PreconditionError("node id list does not match partition length")
    stream, close = _open_maybe(dest, "w")
    try:
        for u, lab in zip(node_ids, partition.labels):
            stream.write(f"{u}\t{int(lab)}\n")
    finally:
        if close:
            stream.close()


def load_partition_map(source) -> dict[str, int]:
    """Node id to community mapping of a partition file, in file order."""
    stream, close = _open_maybe(source, "r")
    where = getattr(stream, "name", "<stream>")
    seen: dict[str, int] = {}
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputDataError(
                    f"{where} line {lineno}: expected 'node community'"
                )
            u, lab_tok = parts
            try:
                lab = int(lab_tok)
            except ValueError:
                raise InputDataError(
                    f"{where} line {lineno}: bad community label {lab_tok!r}"
                ) from None
            if lab < 1:
                raise InputDataError(
                    f"{where} line {lineno}: community labels start at 1"
                )
            if u in seen:
                raise InputDataError(f"{where} line {lineno}: duplicate node {u!r}")
            seen[u] = lab
    finally:
        if close:
            stream.close()
    if not seen:
        raise InputDataError(f"{where}: empty partition file")
    return seen


def load_partition(source, node_ids: Sequence[str] | None = None) -> Partition:
    """Read a ``node<TAB>community`` file.

    With ``node_ids`` given, the result is aligned to that node order and
    every id must be covered exactly once.  Without it, file order is kept.
    """
    seen = load_partition_map(source)
    if node_ids is None:
        labels = np.fromiter(seen.values(), dtype=np.int64, count=len(seen))
    else:
        missing = [u for u in node_ids if u not in seen]
        if missing:
            raise InputDataError(f"partition misses node {missing[0]!r}")
        extra = set(seen) - set(node_ids)
        if extra:
            raise InputDataError(f"partition names unknown node {sorted(extra)[0]!r}")
        labels = np.array([seen[u] for u in node_ids], dtype=np.int64)
    return Partition.from_labels(labels)
