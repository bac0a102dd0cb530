"""Agreement between detected and reference partitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Partition, PreconditionError

HUNGARIAN_LIMIT = 20


@dataclass
class EvalReport:
    """Assignment-level comparison of a detected partition to a reference.

    ``matching`` maps detected labels to reference labels (both 1-based),
    injective on the smaller side; ``agreement`` counts nodes whose
    matched labels coincide.  ``hungarian`` records whether the matching
    is the optimal one or the greedy fallback used above
    ``HUNGARIAN_LIMIT`` communities.
    """

    nmi: float
    nmi_variant: str
    confusion: np.ndarray
    matching: dict[int, int]
    agreement: int
    k_detected: int
    k_true: int
    hungarian: bool


def _as_labels(p) -> np.ndarray:
    if isinstance(p, Partition):
        return p.labels
    arr = np.asarray(p, dtype=np.int64)
    if arr.ndim != 1:
        raise PreconditionError("labels must be a 1-d vector")
    return arr


def confusion_matrix(detected, truth) -> np.ndarray:
    """Contingency counts; rows follow detected labels, columns reference.

    Row i counts nodes with the i-th smallest detected label, likewise
    for columns, so unused intermediate labels do not produce rows.
    """
    a = _as_labels(detected)
    b = _as_labels(truth)
    if a.size != b.size:
        raise PreconditionError("partitions cover different node counts")
    if a.size == 0:
        raise PreconditionError("partitions are empty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = ai.max() + 1
    kb = bi.max() + 1
    out = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(out, (ai, bi), 1)
    return out


def nmi(detected, truth, variant: str = "mean") -> float:
    """Normalized mutual information of two partitions.

    Natural logs; the normalizer is the arithmetic mean of the two
    entropies by default, with "sqrt" (geometric mean) and "max"
    variants.  Two partitions that are both single-cluster agree
    perfectly and score 1.
    """
    if variant not in ("mean", "sqrt", "max"):
        raise PreconditionError(f"unknown nmi variant {variant!r}")
    c = confusion_matrix(detected, truth).astype(np.float64)
    n = c.sum()
    pa = c.sum(axis=1) / n
    pb = c.sum(axis=0) / n
    ha = -np.sum(pa[pa > 0] * np.log(pa[pa > 0]))
    hb = -np.sum(pb[pb > 0] * np.log(pb[pb > 0]))
    pj = c / n
    mask = pj > 0
    info = float(np.sum(pj[mask] * np.log(pj[mask] / np.outer(pa, pb)[mask])))
    if variant == "mean":
        denom = 0.5 * (ha + hb)
    elif variant == "sqrt":
        denom = float(np.sqrt(ha * hb))
    else:
        denom = max(ha, hb)
    if denom <= 0.0:
        return 1.0 if (ha == 0.0 and hb == 0.0) else 0.0
    return float(info / denom)


def optimal_assignment(detected, truth, nmi_variant: str = "mean") -> EvalReport:
    """Match detected communities to reference communities.

    Uses the optimal one-to-one matching maximizing shared nodes while
    both sides stay at or below ``HUNGARIAN_LIMIT`` communities; above
    that a greedy best-cell matching stands in, flagged in the report.
    """
    a = _as_labels(detected)
    b = _as_labels(truth)
    c = confusion_matrix(a, b)
    ua = np.unique(a)
    ub = np.unique(b)
    if max(c.shape) <= HUNGARIAN_LIMIT:
        rows, cols = linear_sum_assignment(c, maximize=True)
        hungarian = True
    else:
        taken_r: set[int] = set()
        taken_c: set[int] = set()
        rows_l: list[int] = []
        cols_l: list[int] = []
        order = np.argsort(c, axis=None)[::-1]
        for flat in order:
            r, col = divmod(int(flat), c.shape[1])
            if r in taken_r or col in taken_c:
                continue
            taken_r.add(r)
            taken_c.add(col)
            rows_l.append(r)
            cols_l.append(col)
            if len(rows_l) == min(c.shape):
                break
        rows = np.array(rows_l, dtype=np.int64)
        cols = np.array(cols_l, dtype=np.int64)
        hungarian = False
    matching = {int(ua[r]): int(ub[col]) for r, col in zip(rows, cols)}
    agreement = int(c[rows, cols].sum())
    return EvalReport(
        nmi=nmi(a, b, nmi_variant),
        nmi_variant=nmi_variant,
        confusion=c,
        matching=matching,
        agreement=agreement,
        k_detected=int(ua.size),
        k_true=int(ub.size),
        hungarian=hungarian,
    )


def mse_num_communities(detected_counts, true_count: int) -> float:
    """Mean squared error of detected community counts against the truth."""
    arr = np.asarray(detected_counts, dtype=np.float64)
    if arr.size == 0:
        raise PreconditionError("no community counts given")
    return float(np.mean((arr - float(true_count)) ** 2))
