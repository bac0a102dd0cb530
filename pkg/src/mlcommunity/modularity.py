"""Quality measures for multi-layer partitions and one-move deltas.

Two families share the bookkeeping of :class:`~mlcommunity.graph.CommunityStats`:

- configuration-style measures (Newman-Girvan on the aggregate, the
  multi-layer average, and three shared-degree variants) reward
  within-community weight beyond a degree-based expectation, and
- blockmodel likelihood measures score the full community pair table
  against an independence baseline, in four combinations of pooling the
  pair proportions and the community proportions across layers.

All formulas use natural logarithms with the 0 * log 0 = 0 convention;
empty communities contribute nothing.  Per-community terms are exposed
internally so that scores and move deltas share one code path.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .graph import CommunityStats, MultiLayerGraph, PreconditionError, node_profile


class Measure(str, Enum):
    """Partition quality measures."""

    NG_AGGREGATE = "ng-aggregate"
    MNAVRG = "mnavrg"
    SDAVRG = "sdavrg"
    SDLOCAL = "sdlocal"
    SDRATIO = "sdratio"
    DCMLSBM = "dcmlsbm"
    DCRMLSBM = "dcrmlsbm"
    SDMLSBM = "sdmlsbm"
    SDRMLSBM = "sdrmlsbm"

    @classmethod
    def parse(cls, text: str) -> "Measure":
        try:
            return cls(text.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise PreconditionError(
                f"unknown measure {text!r}; expected one of: {valid}"
            ) from None


CONFIGURATION_MEASURES = frozenset(
    {Measure.NG_AGGREGATE, Measure.MNAVRG, Measure.SDAVRG, Measure.SDLOCAL, Measure.SDRATIO}
)
BLOCKMODEL_MEASURES = frozenset(
    {Measure.DCMLSBM, Measure.DCRMLSBM, Measure.SDMLSBM, Measure.SDRMLSBM}
)

# (pool pair proportions over layers, pool community proportions over layers)
_BLOCKMODEL_POOLING = {
    Measure.DCMLSBM: (False, False),
    Measure.DCRMLSBM: (True, False),
    Measure.SDMLSBM: (False, True),
    Measure.SDRMLSBM: (True, True),
}


def _check_totals(stats: CommunityStats) -> None:
    t = stats.layer_totals
    if np.any(t <= 0.0):
        m = int(np.argmin(t))
        raise PreconditionError(f"layer {m} has no edge weight")


# -- configuration family ----------------------------------------------
#
# Every measure in this family decomposes as Q = sum_q T(q) where T(q)
# depends only on community q's own marginals (e_qq^(m), e_q^(m)) and on
# global constants, so a move changes exactly two terms.


def _config_terms(
    measure: Measure,
    e_qq: np.ndarray,
    e_q: np.ndarray,
    totals: np.ndarray,
    grand: float,
    n_layers: int,
) -> np.ndarray:
    """Per-community contributions T(q).

    ``e_qq`` and ``e_q`` are (M, ...) blocks of community marginals; the
    layer axis comes first and is reduced, any batch shape may follow.
    """
    t = totals.reshape((totals.size,) + (1,) * (e_qq.ndim - 1))
    if measure is Measure.NG_AGGREGATE:
        return (e_qq.sum(axis=0) - e_q.sum(axis=0) ** 2 / grand) / grand
    if measure is Measure.MNAVRG:
        per = (e_qq - e_q**2 / t) / t
    elif measure is Measure.SDAVRG:
        shared = e_q.sum(axis=0)
        per = (e_qq - (t / 2.0) * shared**2 / (grand * grand / 2.0)) / t
    elif measure is Measure.SDLOCAL:
        shared = e_q.sum(axis=0)
        per = (e_qq - e_q * shared / grand) / t
    elif measure is Measure.SDRATIO:
        shared = e_q.sum(axis=0)
        sq = (e_q**2).sum(axis=0)
        penalty = np.zeros_like(e_q)
        pos = sq > 0.0
        if pos.any():
            penalty[:, pos] = (
                e_q[:, pos] ** 2 * shared[pos] ** 2 / (grand * sq[pos])
            )
        per = (e_qq - penalty) / t
    else:
        raise PreconditionError(f"{measure} is not a configuration measure")
    return per.sum(axis=0) / n_layers


def _config_value(measure: Measure, stats: CommunityStats) -> float:
    _check_totals(stats)
    terms = _config_terms(
        measure,
        stats.e_diag(),
        stats.e_q,
        stats.layer_totals,
        stats.grand_total,
        stats.n_layers,
    )
    return float(terms.sum())


def q_ng(stats: CommunityStats) -> float:
    """Newman-Girvan modularity; defined for single-layer graphs only."""
    if stats.n_layers != 1:
        raise PreconditionError(
            f"plain modularity needs a single layer, got {stats.n_layers}"
        )
    return _config_value(Measure.NG_AGGREGATE, stats)


def q_ng_aggregate(stats: CommunityStats) -> float:
    """Newman-Girvan modularity of the layer-summed network.

    Computed directly from multi-layer community weights: summing e_ql
    over layers equals the community weights of the aggregated graph.
    """
    return _config_value(Measure.NG_AGGREGATE, stats)


def q_mnavrg(stats: CommunityStats) -> float:
    """Average over layers of each layer's own modularity."""
    return _config_value(Measure.MNAVRG, stats)


def q_sdavrg(stats: CommunityStats) -> float:
    """Layer-averaged modularity with a fully shared degree expectation."""
    return _config_value(Measure.SDAVRG, stats)


def q_sdlocal(stats: CommunityStats) -> float:
    """Shared-degree variant mixing layer and pooled community degrees."""
    return _config_value(Measure.SDLOCAL, stats)


def q_sdratio(stats: CommunityStats) -> float:
    """Shared-degree variant scaling by each community's degree profile.

    A community with no weight in any layer contributes nothing.
    """
    return _config_value(Measure.SDRATIO, stats)


# -- blockmodel family ---------------------------------------------------


def _blockmodel_value(stats: CommunityStats, pool_pairs: bool, pool_comms: bool) -> float:
    # Sums run over ordered community pairs (q, l), so each off-diagonal
    # pair counts twice and the doubled diagonal once; this keeps the score
    # equal to (twice) the Poisson profile log-likelihood it comes from.
    _check_totals(stats)
    t = stats.layer_totals
    p = stats.e_ql / t[:, None, None]
    d = stats.e_q / t[:, None]
    coeff = p
    if pool_pairs:
        num = np.broadcast_to(p.sum(axis=0), coeff.shape)
    else:
        num = coeff
    if pool_comms:
        ds = d.sum(axis=0)
        den = np.broadcast_to(ds[:, None] * ds[None, :], coeff.shape)
    else:
        den = d[:, :, None] * d[:, None, :]
    mask = coeff > 0.0
    out = 0.0
    if mask.any():
        out = float(
            np.sum(coeff[mask] * np.log(num[mask] / den[mask]))
        )
    return out


def q_dcmlsbm(stats: CommunityStats) -> float:
    """Profile likelihood score with per-layer pair and community rates."""
    return _blockmodel_value(stats, False, False)


def q_dcrmlsbm(stats: CommunityStats) -> float:
    """Blockmodel score with pooled pair rates, per-layer community rates."""
    return _blockmodel_value(stats, True, False)


def q_sdmlsbm(stats: CommunityStats) -> float:
    """Blockmodel score with per-layer pair rates, pooled community rates."""
    return _blockmodel_value(stats, False, True)


def q_sdrmlsbm(stats: CommunityStats) -> float:
    """Blockmodel score with both pair and community rates pooled."""
    return _blockmodel_value(stats, True, True)


_SCORERS = {
    Measure.NG_AGGREGATE: q_ng_aggregate,
    Measure.MNAVRG: q_mnavrg,
    Measure.SDAVRG: q_sdavrg,
    Measure.SDLOCAL: q_sdlocal,
    Measure.SDRATIO: q_sdratio,
    Measure.DCMLSBM: q_dcmlsbm,
    Measure.DCRMLSBM: q_dcrmlsbm,
    Measure.SDMLSBM: q_sdmlsbm,
    Measure.SDRMLSBM: q_sdrmlsbm,
}


def score(measure: Measure, stats: CommunityStats) -> float:
    """Evaluate ``measure`` on the partition described by ``stats``."""
    return _SCORERS[Measure(measure)](stats)


# -- move deltas ----------------------------------------------------------


def _moved_marginals(stats, r, s, w, kvec, loop):
    """Marginals of communities r and s before and after moving the node."""
    e_qq_b = np.stack([stats.e_ql[:, r, r], stats.e_ql[:, s, s]], axis=1)
    e_q_b = np.stack([stats.e_q[:, r], stats.e_q[:, s]], axis=1)
    e_qq_a = np.stack(
        [
            stats.e_ql[:, r, r] - 2.0 * w[:, r] - loop,
            stats.e_ql[:, s, s] + 2.0 * w[:, s] + loop,
        ],
        axis=1,
    )
    e_q_a = np.stack([stats.e_q[:, r] - kvec, stats.e_q[:, s] + kvec], axis=1)
    return e_qq_b, e_q_b, e_qq_a, e_q_a


def _config_delta(measure, stats, r, s, w, kvec, loop):
    e_qq_b, e_q_b, e_qq_a, e_q_a = _moved_marginals(stats, r, s, w, kvec, loop)
    args = (stats.layer_totals, stats.grand_total, stats.n_layers)
    before = _config_terms(measure, e_qq_b, e_q_b, *args)
    after = _config_terms(measure, e_qq_a, e_q_a, *args)
    return float(after.sum() - before.sum())


def _pair_terms(coeff, num, den):
    """Sum of coeff * log(num / den) with zero coefficients dropped."""
    mask = coeff > 0.0
    if not mask.any():
        return 0.0
    return float(np.sum(coeff[mask] * np.log(num[mask] / den[mask])))


def _blockmodel_delta(stats, pool_pairs, pool_comms, r, s, w, kvec, loop):
    """Exact change of a blockmodel score for one node move r -> s.

    Only pair terms touching r or s change, so the delta sums the affected
    rows of the pair table before and after applying the row update.
    """
    t = stats.layer_totals
    e = stats.e_ql
    row_r_b = e[:, r, :].copy()
    row_s_b = e[:, s, :].copy()
    row_r_a = row_r_b - w
    row_s_a = row_s_b + w
    row_r_a[:, r] = row_r_b[:, r] - 2.0 * w[:, r] - loop
    row_s_a[:, s] = row_s_b[:, s] + 2.0 * w[:, s] + loop
    cross = row_r_b[:, s] + w[:, r] - w[:, s]
    row_r_a[:, s] = cross
    row_s_a[:, r] = cross

    d_b = stats.e_q / t[:, None]
    k = stats.k
    others = np.ones(k, dtype=bool)
    others[[r, s]] = False
    # community proportions of the untouched communities never change
    d_other = d_b.sum(axis=0) if pool_comms else d_b

    def affected(row_r, row_s, dr, dsm):
        # dr, dsm: community proportions of r and s at this state,
        # scalars when pooled over layers, (M,) otherwise.
        coeff_r = row_r / t[:, None]
        coeff_s = row_s / t[:, None]
        if pool_pairs:
            num_r = np.broadcast_to(coeff_r.sum(axis=0), coeff_r.shape)
            num_s = np.broadcast_to(coeff_s.sum(axis=0), coeff_s.shape)
        else:
            num_r, num_s = coeff_r, coeff_s
        if pool_comms:
            den_r = np.broadcast_to(dr * d_other, coeff_r.shape)
            den_s = np.broadcast_to(dsm * d_other, coeff_s.shape)
        else:
            den_r = dr[:, None] * d_other
            den_s = dsm[:, None] * d_other
        one = np.broadcast_to
        shape = (t.size,)
        # ordered-pair weighting: cells off the diagonal appear twice in
        # the score (once per orientation), diagonal cells once
        total = 2.0 * _pair_terms(coeff_r[:, others], num_r[:, others], den_r[:, others])
        total += 2.0 * _pair_terms(coeff_s[:, others], num_s[:, others], den_s[:, others])
        total += _pair_terms(coeff_r[:, r], num_r[:, r], one(np.asarray(dr * dr), shape))
        total += _pair_terms(coeff_s[:, s], num_s[:, s], one(np.asarray(dsm * dsm), shape))
        total += 2.0 * _pair_terms(coeff_r[:, s], num_r[:, s], one(np.asarray(dr * dsm), shape))
        return total

    if pool_comms:
        ds_vec = d_b.sum(axis=0)
        shift = float((kvec / t).sum())
        before = affected(row_r_b, row_s_b, float(ds_vec[r]), float(ds_vec[s]))
        after = affected(row_r_a, row_s_a, float(ds_vec[r]) - shift, float(ds_vec[s]) + shift)
    else:
        before = affected(row_r_b, row_s_b, d_b[:, r], d_b[:, s])
        after = affected(
            row_r_a, row_s_a, (stats.e_q[:, r] - kvec) / t, (stats.e_q[:, s] + kvec) / t
        )
    return after - before


def _move_context(stats, node, from_label, to_label):
    if stats.labels[node] != from_label:
        raise PreconditionError(
            f"node {node} is in community {stats.labels[node]}, not {from_label}"
        )
    if not (1 <= to_label <= stats.k) or not (1 <= from_label <= stats.k):
        raise PreconditionError("community labels out of range")
    if from_label == to_label:
        raise PreconditionError("move must change the community")
    w, kvec, loop = node_profile(stats.graph, stats.labels - 1, node, stats.k)
    return from_label - 1, to_label - 1, w, kvec, loop


def delta_move(
    measure: Measure,
    stats: CommunityStats,
    node: int,
    from_label: int,
    to_label: int,
) -> float:
    """Change in ``measure`` if ``node`` moved between the two communities.

    Matches score(after) - score(before) up to roundoff; ``stats`` is not
    modified.
    """
    _check_totals(stats)
    measure = Measure(measure)
    r, s, w, kvec, loop = _move_context(stats, node, from_label, to_label)
    if measure in CONFIGURATION_MEASURES:
        return _config_delta(measure, stats, r, s, w, kvec, loop)
    pool_pairs, pool_comms = _BLOCKMODEL_POOLING[measure]
    return _blockmodel_delta(stats, pool_pairs, pool_comms, r, s, w, kvec, loop)


def delta_isolated_join(
    measure: Measure,
    stats: CommunityStats,
    node: int,
    target_label: int,
) -> float:
    """Gain from merging a currently isolated node into ``target_label``.

    The node must form a singleton community.  For the layer-averaged and
    the two simpler shared-degree measures this uses dedicated closed
    forms (linear in the node's neighbor weights); the rest reuse the
    general move delta.
    """
    _check_totals(stats)
    measure = Measure(measure)
    own = int(stats.labels[node])
    if own == target_label:
        raise PreconditionError("node already belongs to the target community")
    sizes = np.bincount(stats.labels - 1, minlength=stats.k)
    if sizes[own - 1] != 1:
        raise PreconditionError(f"node {node} is not isolated in its community")
    if measure in (Measure.MNAVRG, Measure.SDAVRG, Measure.SDLOCAL):
        c = target_label - 1
        w, kvec, loop = node_profile(stats.graph, stats.labels - 1, node, stats.k)
        t = stats.layer_totals
        grand = stats.grand_total
        m = stats.n_layers
        wc = w[:, c]
        e_c = stats.e_q[:, c]
        if measure is Measure.MNAVRG:
            val = np.sum(2.0 * wc / t - e_c * kvec / (t * (t / 2.0))) / m
        elif measure is Measure.SDAVRG:
            shared_c = float(e_c.sum())
            shared_i = float(kvec.sum())
            val = np.sum(2.0 * wc / t) / m - shared_c * shared_i / (
                2.0 * (grand / 2.0) ** 2
            )
        else:
            shared_c = float(e_c.sum())
            shared_i = float(kvec.sum())
            val = np.sum(
                (2.0 * wc - (e_c * shared_i + kvec * shared_c) / grand) / t
            ) / m
        return float(val)
    return delta_move(measure, stats, node, own, target_label)
