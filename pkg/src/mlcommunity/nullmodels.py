"""Poisson null models for multi-layer degree structure.

Two nested models for the edge weights A_ij^(m) of an undirected
multi-layer network, both with independent Poisson weights:

- independent degrees (ID): every node gets its own propensity per layer,
  rate theta_i^(m) * theta_j^(m);
- shared degrees (SD): one propensity per node plus a layer share,
  rate theta_i * theta_j * beta_m with the shares summing to one.

Maximum likelihood fits are closed-form.  Twice the gap between the two
maximized log likelihoods is asymptotically chi-square with
M*N - (N + M - 1) degrees of freedom under SD, but the asymptotics are
unreliable at realistic sizes, so selection relies on a parametric
bootstrap from the fitted SD model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse, stats

from .graph import InputDataError, MultiLayerGraph, PreconditionError


@dataclass
class NullParams:
    """Fitted null model; ``theta`` is (M, N) for ID and (N,) for SD."""

    kind: str
    theta: np.ndarray
    beta: np.ndarray | None
    loglik: float
    n_nodes: int
    n_layers: int


@dataclass
class LrtResult:
    """Model selection outcome between the ID and SD null models."""

    statistic: float
    df: int
    p_boot: float
    p_chi2: float
    recommended: str
    n_boot: int
    alpha: float
    boot_stats: np.ndarray | None = None


def _check_graph(g: MultiLayerGraph) -> None:
    if np.any(g.layer_totals <= 0.0):
        m = int(np.argmin(g.layer_totals))
        raise PreconditionError(f"layer {m} has no edge weight")


def _xlogx_dot(w: np.ndarray, x: np.ndarray) -> float:
    """Sum of w * log(x) with w = 0 terms dropped (0 log 0 = 0)."""
    mask = w > 0.0
    return float(np.sum(w[mask] * np.log(x[mask])))


def loglik_id(g: MultiLayerGraph) -> float:
    """Maximized independent-degrees log likelihood, up to a shared constant.

    The dropped constant is identical for both models on the same graph,
    so differences of the two log likelihoods are exact.
    """
    _check_graph(g)
    k = g.degrees
    total = 0.0
    for m in range(g.n_layers):
        total += _xlogx_dot(k[m], k[m] / np.sqrt(g.layer_totals[m]))
    return total - g.grand_total / 2.0


def loglik_sd(g: MultiLayerGraph) -> float:
    """Maximized shared-degrees log likelihood, same constant dropped."""
    _check_graph(g)
    ktot = g.degrees.sum(axis=0)
    grand = g.grand_total
    lam = g.layer_totals / 2.0
    big_l = grand / 2.0
    total = _xlogx_dot(ktot, ktot / np.sqrt(grand))
    total += float(np.sum(lam * np.log(lam / big_l)))
    return total - big_l


def lrt_statistic(g: MultiLayerGraph) -> float:
    """2 * (loglik_id - loglik_sd); nonnegative since the models nest."""
    return 2.0 * (loglik_id(g) - loglik_sd(g))


def degrees_of_freedom(n_nodes: int, n_layers: int) -> int:
    """Parameter count gap: M*N for ID versus N + M - 1 for SD."""
    return n_layers * n_nodes - (n_nodes + n_layers - 1)


def fit_id(g: MultiLayerGraph) -> NullParams:
    """Closed-form ML fit of the independent-degrees model."""
    _check_graph(g)
    theta = g.degrees / np.sqrt(g.layer_totals)[:, None]
    return NullParams(
        kind="ID",
        theta=theta,
        beta=None,
        loglik=loglik_id(g),
        n_nodes=g.n_nodes,
        n_layers=g.n_layers,
    )


def fit_sd(g: MultiLayerGraph) -> NullParams:
    """Closed-form ML fit of the shared-degrees model; beta sums to one."""
    _check_graph(g)
    theta = g.degrees.sum(axis=0) / np.sqrt(g.grand_total)
    beta = g.layer_totals / g.grand_total
    return NullParams(
        kind="SD",
        theta=theta,
        beta=beta,
        loglik=loglik_sd(g),
        n_nodes=g.n_nodes,
        n_layers=g.n_layers,
    )


def sample_from_null(params: NullParams, rng) -> MultiLayerGraph:
    """Draw one multi-layer graph of independent Poisson edge weights.

    Self-loops are excluded.  ``rng`` is a :class:`numpy.random.Generator`
    or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = params.n_nodes
    iu, il = np.triu_indices(n, k=1)
    mats = []
    for m in range(params.n_layers):
        if params.kind == "ID":
            rate = params.theta[m][iu] * params.theta[m][il]
        elif params.kind == "SD":
            rate = params.theta[iu] * params.theta[il] * params.beta[m]
        else:
            raise PreconditionError(f"unknown null model kind {params.kind!r}")
        w = rng.poisson(rate).astype(np.float64)
        nz = w > 0.0
        mats.append(
            sparse.csr_array(
                sparse.coo_array(
                    (np.concatenate([w[nz], w[nz]]),
                     (np.concatenate([iu[nz], il[nz]]),
                      np.concatenate([il[nz], iu[nz]]))),
                    shape=(n, n),
                )
            )
        )
    return MultiLayerGraph(mats, _trusted=True)


def bootstrap_lrt(
    g: MultiLayerGraph,
    n_boot: int = 200,
    seed: int = 0,
    alpha: float = 0.05,
    keep_boot_stats: bool = False,
) -> LrtResult:
    """Select between the ID and SD null models by parametric bootstrap.

    Fits SD to ``g``, draws ``n_boot`` replicate graphs from the fit, and
    compares the observed statistic against the replicate distribution:
    p = (1 + #{replicates >= observed}) / (n_boot + 1).  Replicates that
    come out with an empty layer are redrawn (at most ten tries each).
    The chi-square tail probability is reported alongside for reference;
    the recommendation is "ID" when the bootstrap p-value falls below
    ``alpha`` and "SD" otherwise.
    """
    if g.n_layers < 2:
        raise PreconditionError("model selection needs at least two layers")
    if n_boot < 1:
        raise PreconditionError("n_boot must be positive")
    if not (0.0 < alpha < 1.0):
        raise PreconditionError("alpha must lie strictly between 0 and 1")
    observed = lrt_statistic(g)
    df = degrees_of_freedom(g.n_nodes, g.n_layers)
    params = fit_sd(g)
    stats_out = np.empty(n_boot, dtype=np.float64)
    count = 0
    for b in range(n_boot):
        replicate = None
        for attempt in range(10):
            ss = np.random.SeedSequence(seed, spawn_key=(b, attempt))
            candidate = sample_from_null(params, np.random.default_rng(ss))
            if np.all(candidate.layer_totals > 0.0):
                replicate = candidate
                break
        if replicate is None:
            raise PreconditionError(
                f"bootstrap replicate {b} kept drawing an empty layer; "
                "the fitted null is too sparse to resample"
            )
        stat = lrt_statistic(replicate)
        stats_out[b] = stat
        if stat >= observed:
            count += 1
    p_boot = (1.0 + count) / (n_boot + 1.0)
    p_chi2 = float(stats.chi2.sf(observed, df)) if df > 0 else 1.0
    return LrtResult(
        statistic=observed,
        df=df,
        p_boot=p_boot,
        p_chi2=p_chi2,
        recommended="ID" if p_boot < alpha else "SD",
        n_boot=n_boot,
        alpha=alpha,
        boot_stats=stats_out if keep_boot_stats else None,
    )
