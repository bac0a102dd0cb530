"""Greedy optimizers for the multi-layer quality measures.

Two search strategies:

- :func:`louvain` grows communities from singletons by locally best moves
  and then contracts each community to a super-node, repeating until no
  contraction changes anything.  The number of communities is free.
- :func:`kernighan_lin` keeps a fixed number of communities and runs
  sweeps in which every node is moved exactly once (to its best target,
  even at a loss), keeping the best prefix of each sweep.

Both work on exact score deltas, so accepted moves translate into real
score improvements; final scores are recomputed from scratch as a check.
Moves are evaluated against marginals with the moving node taken out, and
accepted when the gain of the best target beats staying put by at least
``min_gain``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import (
    CommunityStats,
    MultiLayerGraph,
    Partition,
    PreconditionError,
    init_stats,
)
from .modularity import (
    _BLOCKMODEL_POOLING,
    CONFIGURATION_MEASURES,
    Measure,
    _config_terms,
    score,
)


@dataclass
class OptimizeConfig:
    """Knobs shared by both optimizers.

    ``restarts`` defaults to 10 for Louvain and 20 for Kernighan-Lin when
    left as None.  ``known_k`` switches detection to Kernighan-Lin with
    that many communities.  ``trace`` records the recomputed full score
    after every sweep of the winning restart.
    """

    measure: Measure
    restarts: int | None = None
    seed: int = 0
    min_gain: float = 1e-10
    max_sweeps: int = 50
    known_k: int | None = None
    kl_variant: str = "steepest"
    trace: bool = False

    def __post_init__(self):
        self.measure = Measure(self.measure)
        if self.restarts is not None and self.restarts < 1:
            raise PreconditionError("restarts must be at least 1")
        if self.min_gain <= 0.0:
            raise PreconditionError("min_gain must be positive")
        if self.max_sweeps < 1:
            raise PreconditionError("max_sweeps must be at least 1")
        if self.kl_variant not in ("steepest", "ordered"):
            raise PreconditionError(
                f"kl_variant must be 'steepest' or 'ordered', got {self.kl_variant!r}"
            )
        if self.known_k is not None and self.known_k < 1:
            raise PreconditionError("known_k must be at least 1")


@dataclass
class DetectResult:
    partition: Partition
    score: float
    k_detected: int
    sweeps_used: int
    restart_scores: list[float]
    trace: list[float] | None = None


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))


# -- shared gain machinery ------------------------------------------------


def _neighbor_data(g: MultiLayerGraph, node: int):
    """Per-layer neighbor indices and weights of ``node``, self excluded."""
    idxs, dats = [], []
    for a in g.layers:
        lo, hi = a.indptr[node], a.indptr[node + 1]
        idx = a.indices[lo:hi]
        dat = a.data[lo:hi]
        if idx.size:
            keep = idx != node
            if not keep.all():
                idx, dat = idx[keep], dat[keep]
        idxs.append(idx)
        dats.append(dat)
    return idxs, dats


def _candidate_weights(g, labels, node, own):
    """Distinct communities adjacent to ``node`` plus its own.

    Returns (cands, w) with cands sorted ascending and w of shape
    (M, len(cands)) holding the node's weight toward each candidate.
    """
    idxs, dats = _neighbor_data(g, node)
    labs = [labels[idx] for idx in idxs]
    if labs:
        allc = np.concatenate(labs + [np.array([own], dtype=labels.dtype)])
    else:
        allc = np.array([own], dtype=labels.dtype)
    cands = np.unique(allc)
    w = np.zeros((g.n_layers, cands.size))
    for m in range(g.n_layers):
        if labs[m].size:
            np.add.at(w[m], np.searchsorted(cands, labs[m]), dats[m])
    return cands, w


def _config_join_gains(measure, eq_iso, eqq_iso, w, kvec, loop, t, grand, n_layers):
    """Gain of adding one node to each candidate community.

    ``eq_iso`` / ``eqq_iso`` are (M, C) candidate marginals with the node
    taken out; ``w`` (M, C) its weight to each candidate.  Closed forms
    for the linear measures, generic two-term difference otherwise.
    """
    tc = t[:, None]
    if measure is Measure.MNAVRG:
        per = (2.0 * w + loop[:, None] - (2.0 * eq_iso * kvec[:, None] + (kvec**2)[:, None]) / tc) / tc
        return per.sum(axis=0) / n_layers
    if measure is Measure.NG_AGGREGATE:
        e_shared = eq_iso.sum(axis=0)
        k_shared = kvec.sum()
        return (
            (2.0 * w + loop[:, None]).sum(axis=0)
            - (2.0 * e_shared * k_shared + k_shared**2) / grand
        ) / grand
    if measure is Measure.SDAVRG:
        e_shared = eq_iso.sum(axis=0)
        k_shared = kvec.sum()
        return (
            ((2.0 * w + loop[:, None]) / tc).sum(axis=0) / n_layers
            - (2.0 * e_shared * k_shared + k_shared**2) / (grand * grand / 2.0) / 2.0
        )
    if measure is Measure.SDLOCAL:
        e_shared = eq_iso.sum(axis=0)
        k_shared = kvec.sum()
        num = (
            2.0 * w
            + loop[:, None]
            - (eq_iso * k_shared + kvec[:, None] * (e_shared + k_shared)) / grand
        )
        return (num / tc).sum(axis=0) / n_layers
    # ratio measure: evaluate the per-community term before and after
    args = (t, grand, n_layers)
    before = _config_terms(measure, eqq_iso, eq_iso, *args)
    after = _config_terms(
        measure, eqq_iso + 2.0 * w + loop[:, None], eq_iso + kvec[:, None], *args
    )
    return after - before


def _bm_termsum(rows, c_idx, d_c, d_all, t, pool_pairs, pool_comms):
    """Sum of pair terms touching one community, batched.

    rows:  (M, *B, K) raw pair weights of the community under change.
    c_idx: int array of shape B (or scalar), the community's own column.
    d_c:   its proportion: (M, *B) per layer, or (*B,) pooled.
    d_all: proportions of every community in the current state:
           (M, *B, K) per layer, or (*B, K) pooled.
    """
    tb = t.reshape((t.size,) + (1,) * (rows.ndim - 1))
    coeff = rows / tb
    num = coeff.sum(axis=0)[None] if pool_pairs else coeff
    den = np.asarray(d_c)[..., None] * d_all
    c_arr = np.broadcast_to(np.asarray(c_idx), den.shape[:-1])[..., None]
    np.put_along_axis(den, c_arr, (np.asarray(d_c) ** 2)[..., None], axis=-1)
    # ordered-pair weighting: the score counts (c, l) and (l, c) separately,
    # so every column except the community's own diagonal enters twice
    wt = np.full(den.shape, 2.0)
    np.put_along_axis(wt, c_arr, 1.0, axis=-1)
    if pool_comms:
        den = den[None]
        wt = wt[None]
    mask = coeff > 0.0
    num_safe = np.where(mask, np.broadcast_to(num, coeff.shape), 1.0)
    den_safe = np.where(mask, np.broadcast_to(den, coeff.shape), 1.0)
    vals = wt * coeff * np.log(num_safe / den_safe)
    return vals.sum(axis=(0, -1))


# -- Louvain ---------------------------------------------------------------


class _ConfigAcc:
    """Diagonal community marginals, enough for the configuration family."""

    __slots__ = ("e_qq", "e_q")

    def __init__(self, g: MultiLayerGraph):
        self.e_q = g.degrees.copy()
        self.e_qq = g.loops.copy()

    def best_move(self, g, labels, node, measure, t, grand, n_layers):
        own = labels[node]
        cands, w = _candidate_weights(g, labels, node, own)
        pos = int(np.searchsorted(cands, own))
        kvec = g.degrees[:, node]
        loop = g.loops[:, node]
        eq = self.e_q[:, cands].copy()
        eq[:, pos] -= kvec
        eqq = self.e_qq[:, cands].copy()
        eqq[:, pos] -= 2.0 * w[:, pos] + loop
        rel = _config_join_gains(measure, eq, eqq, w, kvec, loop, t, grand, n_layers)
        net = rel - rel[pos]
        best = int(np.argmax(net))
        if best == pos:
            return 0.0, -1, None
        return float(net[best]), int(cands[best]), (kvec, loop, w[:, pos], w[:, best])

    def apply(self, node, own, target, payload):
        kvec, loop, w_own, w_tgt = payload
        self.e_q[:, own] -= kvec
        self.e_q[:, target] += kvec
        self.e_qq[:, own] -= 2.0 * w_own + loop
        self.e_qq[:, target] += 2.0 * w_tgt + loop


class _BlockmodelAcc:
    """Full pair table; needed by the blockmodel family."""

    __slots__ = ("e_ql", "e_q", "pool_pairs", "pool_comms")

    def __init__(self, g: MultiLayerGraph, measure: Measure):
        n = g.n_nodes
        self.e_ql = np.zeros((g.n_layers, n, n))
        for m, a in enumerate(g.layers):
            coo = a.tocoo()
            self.e_ql[m][coo.row, coo.col] = coo.data
        self.e_q = g.degrees.copy()
        self.pool_pairs, self.pool_comms = _BLOCKMODEL_POOLING[measure]

    def best_move(self, g, labels, node, measure, t, grand, n_layers):
        own = labels[node]
        cands, w = _candidate_weights(g, labels, node, own)
        pos = int(np.searchsorted(cands, own))
        kvec = g.degrees[:, node]
        loop = g.loops[:, node]
        k = self.e_q.shape[1]
        wfull = np.zeros((n_layers, k))
        wfull[:, cands] = w

        eq_iso = self.e_q.copy()
        eq_iso[:, own] -= kvec
        d_iso = eq_iso / t[:, None]

        rows = np.ascontiguousarray(self.e_ql[:, cands, :])
        rows[:, :, own] -= w
        rows[:, pos, :] = self.e_ql[:, own, :] - wfull
        rows[:, pos, own] = self.e_ql[:, own, own] - 2.0 * w[:, pos] - loop

        rows_after = rows + wfull[:, None, :]
        put = rows_after[:, np.arange(cands.size), cands]
        rows_after[:, np.arange(cands.size), cands] = put + w + loop[:, None]

        if self.pool_comms:
            dp = d_iso.sum(axis=0)
            d_c_b = dp[cands]
            d_c_a = d_c_b + float((kvec / t).sum())
            d_all = dp[None, :]
        else:
            d_c_b = d_iso[:, cands]
            d_c_a = d_c_b + (kvec / t)[:, None]
            d_all = d_iso[:, None, :]
        rel = _bm_termsum(
            rows_after, cands, d_c_a, d_all, t, self.pool_pairs, self.pool_comms
        ) - _bm_termsum(rows, cands, d_c_b, d_all, t, self.pool_pairs, self.pool_comms)
        net = rel - rel[pos]
        best = int(np.argmax(net))
        if best == pos:
            return 0.0, -1, None
        return float(net[best]), int(cands[best]), (kvec, loop, wfull)

    def apply(self, node, own, target, payload):
        kvec, loop, wfull = payload
        e = self.e_ql
        e[:, own, :] -= wfull
        e[:, :, own] -= wfull
        e[:, own, own] -= loop
        e[:, target, :] += wfull
        e[:, :, target] += wfull
        e[:, target, target] += loop
        self.e_q[:, own] -= kvec
        self.e_q[:, target] += kvec


def _contract(g: MultiLayerGraph, inverse: np.ndarray, k: int) -> MultiLayerGraph:
    zmat = sparse.csr_array(
        (np.ones(g.n_nodes), (np.arange(g.n_nodes), inverse)), shape=(g.n_nodes, k)
    )
    mats = [sparse.csr_array(zmat.T @ a @ zmat) for a in g.layers]
    return MultiLayerGraph(mats, layer_names=g.layer_names, _trusted=True)


def _louvain_once(g, measure, rng, min_gain, max_sweeps, want_trace):
    assign = np.arange(g.n_nodes)
    level = g
    total_sweeps = 0
    trace: list[float] | None = [] if want_trace else None

    def record():
        if trace is not None:
            part = Partition.from_labels(assign_snapshot() + 1).compact()
            trace.append(score(measure, init_stats(g, part)))

    def assign_snapshot():
        return labels[assign]

    while True:
        n = level.n_nodes
        labels = np.arange(n)
        t = level.layer_totals
        grand = level.grand_total
        n_layers = level.n_layers
        if measure in CONFIGURATION_MEASURES:
            acc = _ConfigAcc(level)
        else:
            acc = _BlockmodelAcc(level, measure)
        for _ in range(max_sweeps):
            gain = 0.0
            for node in rng.permutation(n):
                own = labels[node]
                delta, target, payload = acc.best_move(
                    level, labels, node, measure, t, grand, n_layers
                )
                if target >= 0 and delta >= min_gain:
                    acc.apply(node, own, target, payload)
                    labels[node] = target
                    gain += delta
            total_sweeps += 1
            record()
            if gain < min_gain:
                break
        uniq, inverse = np.unique(labels, return_inverse=True)
        assign = inverse[assign]
        if uniq.size == n:
            break
        level = _contract(level, inverse, uniq.size)
    return assign, total_sweeps, trace


def louvain(g: MultiLayerGraph, cfg: OptimizeConfig) -> DetectResult:
    """Multi-restart greedy agglomeration; community count is free.

    Each restart visits nodes in a seeded random order, moves nodes to
    the adjacent community with the largest positive gain (ties go to the
    lowest community index), and contracts once a pass gains less than
    ``min_gain``.  The best restart by final recomputed score wins.
    """
    measure = Measure(cfg.measure)
    restarts = cfg.restarts if cfg.restarts is not None else 10
    best = None
    restart_scores = []
    for r in range(restarts):
        rng = _restart_rng(cfg.seed, r)
        assign, sweeps, trace = _louvain_once(
            g, measure, rng, cfg.min_gain, cfg.max_sweeps, cfg.trace
        )
        part = Partition.from_labels(assign + 1).compact()
        val = score(measure, init_stats(g, part))
        restart_scores.append(val)
        if best is None or val > best[0]:
            best = (val, part, sweeps, trace)
    val, part, sweeps, trace = best
    return DetectResult(
        partition=part,
        score=val,
        k_detected=part.k,
        sweeps_used=sweeps,
        restart_scores=restart_scores,
        trace=trace,
    )


# -- Kernighan-Lin ----------------------------------------------------------


class _KLState:
    """Dense bookkeeping for fixed-k sweeps: labels, marginals, and the
    (M, N, K) node-to-community weight table."""

    def __init__(self, g: MultiLayerGraph, labels0: np.ndarray, k: int, measure):
        self.g = g
        self.k = k
        self.measure = measure
        self.labels = labels0.copy()
        n = g.n_nodes
        zmat = sparse.csr_array(
            (np.ones(n), (np.arange(n), labels0)), shape=(n, k)
        )
        self.w = np.stack([(a @ zmat).toarray() for a in g.layers])
        self.w[:, np.arange(n), labels0] -= g.loops
        e_ql = np.empty((g.n_layers, k, k))
        for m, a in enumerate(g.layers):
            e_ql[m] = (zmat.T @ a @ zmat).toarray()
        self.e_ql = e_ql
        self.e_q = e_ql.sum(axis=2)
        if measure in CONFIGURATION_MEASURES:
            self.pool_pairs = self.pool_comms = None
        else:
            self.pool_pairs, self.pool_comms = _BLOCKMODEL_POOLING[measure]

    def snapshot(self):
        return (
            self.labels.copy(),
            self.w.copy(),
            self.e_ql.copy(),
            self.e_q.copy(),
        )

    def restore(self, snap):
        labels, w, e_ql, e_q = snap
        self.labels = labels.copy()
        self.w = w.copy()
        self.e_ql = e_ql.copy()
        self.e_q = e_q.copy()

    def apply(self, node, target):
        g = self.g
        own = self.labels[node]
        kvec = g.degrees[:, node]
        loop = g.loops[:, node]
        wrow = self.w[:, node, :]
        e = self.e_ql
        e[:, own, :] -= wrow
        e[:, :, own] -= wrow
        e[:, own, own] -= loop
        e[:, target, :] += wrow
        e[:, :, target] += wrow
        e[:, target, target] += loop
        self.e_q[:, own] -= kvec
        self.e_q[:, target] += kvec
        for m, a in enumerate(g.layers):
            lo, hi = a.indptr[node], a.indptr[node + 1]
            idx = a.indices[lo:hi]
            dat = a.data[lo:hi]
            if idx.size:
                keep = idx != node
                if not keep.all():
                    idx, dat = idx[keep], dat[keep]
                self.w[m, idx, own] -= dat
                self.w[m, idx, target] += dat
        self.labels[node] = target

    # gain[i, c] = exact score change of moving i to c; own column -inf
    def gains(self, nodes: np.ndarray) -> np.ndarray:
        g = self.g
        t = g.layer_totals
        grand = g.grand_total
        n_layers = g.n_layers
        z = self.labels[nodes]
        kd = g.degrees[:, nodes]
        lp = g.loops[:, nodes]
        wn = self.w[:, nodes, :]
        if self.measure in CONFIGURATION_MEASURES:
            out = self._gains_config(nodes, z, kd, lp, wn, t, grand, n_layers)
        else:
            out = self._gains_blockmodel(nodes, z, kd, lp, wn, t, grand, n_layers)
        out[np.arange(nodes.size), z] = -np.inf
        return out

    def _gains_config(self, nodes, z, kd, lp, wn, t, grand, n_layers):
        measure = self.measure
        args = (t, grand, n_layers)
        e_qq = np.einsum("mqq->mq", self.e_ql)
        w_own = np.take_along_axis(wn, z[None, :, None], axis=2)[:, :, 0]
        term_comm = _config_terms(measure, e_qq, self.e_q, *args)
        from_after = _config_terms(
            measure, e_qq[:, z] - 2.0 * w_own - lp, self.e_q[:, z] - kd, *args
        )
        from_delta = from_after - term_comm[z]
        to_after = _config_terms(
            measure,
            e_qq[:, None, :] + 2.0 * wn + lp[:, :, None],
            self.e_q[:, None, :] + kd[:, :, None],
            *args,
        )
        return from_delta[:, None] + (to_after - term_comm[None, :])

    def _gains_blockmodel(self, nodes, z, kd, lp, wn, t, grand, n_layers):
        k = self.k
        out = np.zeros((nodes.size, k))
        for own in np.unique(z):
            sel = z == own
            grp = np.flatnonzero(sel)
            gsz = grp.size
            w_g = wn[:, grp, :]
            k_g = kd[:, grp]
            l_g = lp[:, grp]
            # marginals with each node taken out of its community
            eq_iso = np.broadcast_to(
                self.e_q[:, None, :], (n_layers, gsz, k)
            ).copy()
            eq_iso[:, :, own] -= k_g
            d_iso = eq_iso / t[:, None, None]
            if self.pool_comms:
                d_all = d_iso.sum(axis=0)
                shift = (k_g / t[:, None]).sum(axis=0)
            else:
                d_all = d_iso
            rel = np.empty((gsz, k))
            for c in range(k):
                rows = np.broadcast_to(
                    self.e_ql[:, c, :][:, None, :], (n_layers, gsz, k)
                ).copy()
                if c == own:
                    rows -= w_g
                    rows[:, :, own] = (
                        self.e_ql[:, own, own][:, None] - 2.0 * w_g[:, :, own] - l_g
                    )
                else:
                    rows[:, :, own] -= w_g[:, :, c]
                rows_after = rows + w_g
                rows_after[:, :, c] += w_g[:, :, c] + l_g
                if self.pool_comms:
                    d_c_b = d_all[:, c]
                    d_c_a = d_c_b + shift
                else:
                    d_c_b = d_iso[:, :, c]
                    d_c_a = d_c_b + k_g / t[:, None]
                rel[:, c] = _bm_termsum(
                    rows_after, c, d_c_a, d_all, t, self.pool_pairs, self.pool_comms
                ) - _bm_termsum(rows, c, d_c_b, d_all, t, self.pool_pairs, self.pool_comms)
            out[grp] = rel - rel[:, own][:, None]
        return out


def _kl_once(g, measure, k, labels0, rng, min_gain, max_sweeps, variant, want_trace):
    state = _KLState(g, labels0, k, measure)
    n = g.n_nodes
    sweeps = 0
    trace: list[float] | None = [] if want_trace else None
    for _ in range(max_sweeps):
        snap = state.snapshot()
        moves: list[tuple[int, int]] = []
        cums: list[float] = []
        run = 0.0
        if variant == "steepest":
            unmoved = np.ones(n, dtype=bool)
            for _step in range(n):
                nodes = np.flatnonzero(unmoved)
                gm = state.gains(nodes)
                flat = int(np.argmax(gm))
                row, target = divmod(flat, state.k)
                node = int(nodes[row])
                run += float(gm[row, target])
                state.apply(node, target)
                moves.append((node, target))
                cums.append(run)
                unmoved[node] = False
        else:
            for node in rng.permutation(n):
                gm = state.gains(np.array([node]))
                target = int(np.argmax(gm[0]))
                run += float(gm[0, target])
                state.apply(int(node), target)
                moves.append((int(node), target))
                cums.append(run)
        sweeps += 1
        best_idx = int(np.argmax(cums))
        best_gain = cums[best_idx]
        state.restore(snap)
        if best_gain < min_gain:
            break
        for node, target in moves[: best_idx + 1]:
            state.apply(node, target)
        if trace is not None:
            part = Partition.from_labels(state.labels + 1).compact()
            trace.append(score(measure, init_stats(g, part)))
    return state.labels.copy(), sweeps, trace


def _random_labels(rng, n, k):
    labels = rng.integers(0, k, size=n)
    if n >= k:
        labels[rng.permutation(n)[:k]] = np.arange(k)
    return labels


def kernighan_lin(
    g: MultiLayerGraph, cfg: OptimizeConfig, init: Partition | None = None
) -> DetectResult:
    """Fixed-k sweep optimizer.

    With ``init`` given the first restart refines it; remaining restarts
    (and all of them when ``init`` is None) start from seeded random
    assignments that touch every community.  In each sweep every node
    moves exactly once to its currently best target, the best prefix of
    the sweep is kept, and sweeps stop once a full sweep cannot improve
    by ``min_gain``.  The ``steepest`` variant picks the globally best
    (node, target) at every step; ``ordered`` visits nodes in random
    order, which is faster and usually close.
    """
    measure = Measure(cfg.measure)
    if cfg.known_k is not None:
        k = cfg.known_k
    elif init is not None:
        k = init.k
    else:
        raise PreconditionError("kernighan_lin needs known_k or an init partition")
    if init is not None:
        if init.n_nodes != g.n_nodes:
            raise PreconditionError("init partition does not match the graph")
        if init.k > k:
            raise PreconditionError(
                f"init uses {init.k} communities, more than known_k={k}"
            )
    restarts = cfg.restarts if cfg.restarts is not None else 20
    best = None
    restart_scores = []
    for r in range(restarts):
        rng = _restart_rng(cfg.seed, r)
        if r == 0 and init is not None:
            labels0 = init.labels - 1
        else:
            labels0 = _random_labels(rng, g.n_nodes, k)
        labels, sweeps, trace = _kl_once(
            g,
            measure,
            k,
            labels0,
            rng,
            cfg.min_gain,
            cfg.max_sweeps,
            cfg.kl_variant,
            cfg.trace,
        )
        part = Partition.from_labels(labels + 1, k=k).compact()
        val = score(measure, init_stats(g, part))
        restart_scores.append(val)
        if best is None or val > best[0]:
            best = (val, part, sweeps, trace)
    val, part, sweeps, trace = best
    return DetectResult(
        partition=part,
        score=val,
        k_detected=part.k,
        sweeps_used=sweeps,
        restart_scores=restart_scores,
        trace=trace,
    )


def detect(
    g: MultiLayerGraph, cfg: OptimizeConfig, init: Partition | None = None
) -> DetectResult:
    """Run the optimizer matching the configuration.

    ``known_k`` set (or an init partition given) selects Kernighan-Lin,
    otherwise Louvain explores the community count freely.
    """
    if cfg.known_k is not None or init is not None:
        return kernighan_lin(g, cfg, init=init)
    return louvain(g, cfg)


def perturb_labels(partition: Partition, fraction: float, seed: int) -> Partition:
    """Reassign a random ``fraction`` of nodes to uniform random labels.

    Reassignment draws from all labels 1..k, so some chosen nodes may
    keep their label by chance.
    """
    if not (0.0 <= fraction <= 1.0):
        raise PreconditionError("fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    labels = partition.labels.copy()
    count = int(round(fraction * partition.n_nodes))
    idx = rng.choice(partition.n_nodes, size=count, replace=False)
    labels[idx] = rng.integers(1, partition.k + 1, size=count)
    return Partition(labels, partition.k)


def brute_force_best(
    g: MultiLayerGraph, measure: Measure, max_k: int
) -> DetectResult:
    """Exhaustive search over all partitions with at most ``max_k`` parts.

    Enumerates set partitions in restricted growth form, so each
    partition appears exactly once and ties resolve to the first in that
    canonical order.  Guarded to 12 nodes.
    """
    n = g.n_nodes
    if n > 12:
        raise PreconditionError(f"exhaustive search is limited to 12 nodes, got {n}")
    if max_k < 1:
        raise PreconditionError("max_k must be at least 1")
    measure = Measure(measure)
    dense = np.stack([g.layers[m].toarray() for m in range(g.n_layers)])
    t = g.layer_totals
    grand = g.grand_total
    best_val = -np.inf
    best_labels = None

    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)  # b[i] = max(a[:i]) so a[i] <= b[i] + 1

    def evaluate(labels0, k):
        zmat = np.zeros((n, k))
        zmat[np.arange(n), labels0] = 1.0
        e_ql = np.einsum("mij,iq,jl->mql", dense, zmat, zmat, optimize=True)
        stats = CommunityStats(g, e_ql, e_ql.sum(axis=2), labels0 + 1, k)
        return score(measure, stats)

    while True:
        k = int(a.max()) + 1 if n else 1
        val = evaluate(a, k)
        if val > best_val:
            best_val = val
            best_labels = a.copy()
        # next restricted growth string with values capped below max_k
        i = n - 1
        while i > 0:
            if a[i] <= b[i] and a[i] + 1 < max_k:
                break
            i -= 1
        if i == 0:
            break
        a[i] += 1
        a[i + 1 :] = 0
        b[i + 1 :] = max(b[i], a[i])
    part = Partition.from_labels(best_labels + 1).compact()
    return DetectResult(
        partition=part,
        score=best_val,
        k_detected=part.k,
        sweeps_used=0,
        restart_scores=[best_val],
    )
