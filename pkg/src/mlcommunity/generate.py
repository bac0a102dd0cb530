"""Synthetic multi-layer benchmark networks with planted communities.

Labels are drawn i.i.d. from class probabilities.  Edges are independent
Bernoulli draws per layer with block connectivity rho_m * lambda_(m,q) on
the diagonal and rho_m * epsilon_m off it.  Degree-corrected variants
multiply the block rate by node propensities drawn from a power law and
normalized to sum to one within each community, either one draw shared by
all layers or an independent draw per layer.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import InputDataError, MultiLayerGraph, Partition, PreconditionError

DEGREE_MODES = ("none", "shared", "independent")


@dataclass
class GeneratorSpec:
    """Full parameterization of one synthetic network draw.

    ``lam`` is (M, K): the within-community connectivity multiplier per
    layer and community; ``epsilon`` (M,) the between-community
    multiplier; ``rho`` (M,) the overall layer density scale.
    ``clamp_policy`` decides what happens when a resulting edge
    probability exceeds one: "clamp" truncates and warns, "strict"
    raises.
    """

    n_nodes: int
    n_communities: int
    n_layers: int
    class_probs: np.ndarray
    rho: np.ndarray
    lam: np.ndarray
    epsilon: np.ndarray
    degree_mode: str = "none"
    powerlaw_exponent: float = 2.5
    seed: int = 0
    clamp_policy: str = "clamp"

    def __post_init__(self):
        if self.n_nodes < 1 or self.n_communities < 1 or self.n_layers < 1:
            raise PreconditionError("sizes must be positive")
        self.class_probs = np.asarray(self.class_probs, dtype=np.float64)
        if self.class_probs.shape != (self.n_communities,):
            raise PreconditionError("class_probs must have one entry per community")
        if np.any(self.class_probs < 0) or not np.isclose(self.class_probs.sum(), 1.0):
            raise PreconditionError("class_probs must be a probability vector")
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.epsilon = np.asarray(self.epsilon, dtype=np.float64)
        lam = np.asarray(self.lam, dtype=np.float64)
        if lam.ndim == 1:
            lam = np.repeat(lam[:, None], self.n_communities, axis=1)
        self.lam = lam
        if self.rho.shape != (self.n_layers,) or self.epsilon.shape != (self.n_layers,):
            raise PreconditionError("rho and epsilon must have one entry per layer")
        if self.lam.shape != (self.n_layers, self.n_communities):
            raise PreconditionError("lam must be (n_layers, n_communities)")
        if np.any(self.rho < 0) or np.any(self.epsilon < 0) or np.any(self.lam < 0):
            raise PreconditionError("connectivity parameters must be nonnegative")
        if self.degree_mode not in DEGREE_MODES:
            raise PreconditionError(
                f"degree_mode must be one of {DEGREE_MODES}, got {self.degree_mode!r}"
            )
        if self.powerlaw_exponent <= 1.0:
            raise PreconditionError("powerlaw_exponent must exceed 1")
        if self.clamp_policy not in ("clamp", "strict"):
            raise PreconditionError("clamp_policy must be 'clamp' or 'strict'")


def _rng(spec: GeneratorSpec, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=key))


def connectivity_matrix(spec: GeneratorSpec, layer: int) -> np.ndarray:
    """(K, K) block rate matrix of one layer."""
    k = spec.n_communities
    pi = np.full((k, k), spec.rho[layer] * spec.epsilon[layer])
    np.fill_diagonal(pi, spec.rho[layer] * spec.lam[layer])
    return pi


def sample_labels(spec: GeneratorSpec) -> Partition:
    """Draw i.i.d. community labels from the class probabilities."""
    rng = _rng(spec, 0)
    labels = rng.choice(spec.n_communities, size=spec.n_nodes, p=spec.class_probs) + 1
    return Partition(labels, spec.n_communities)


def _handle_excess(excess: int, what: str, policy: str) -> None:
    if excess == 0:
        return
    if policy == "strict":
        raise PreconditionError(
            f"{excess} {what} exceed probability 1; lower the density target"
        )
    warnings.warn(
        f"{excess} {what} exceeded probability 1 and were clamped",
        RuntimeWarning,
        stacklevel=3,
    )


def _bernoulli_layer(rng, probs_upper, iu, il, n):
    draw = rng.random(probs_upper.size) < probs_upper
    src, dst = iu[draw], il[draw]
    data = np.ones(src.size * 2)
    return sparse.csr_array(
        sparse.coo_array(
            (data, (np.concatenate([src, dst]), np.concatenate([dst, src]))),
            shape=(n, n),
        )
    )


def sample_mlsbm(labels: Partition, spec: GeneratorSpec) -> MultiLayerGraph:
    """Bernoulli blockmodel draw without degree correction; no self-loops."""
    if labels.n_nodes != spec.n_nodes:
        raise PreconditionError("labels do not match spec.n_nodes")
    rng = _rng(spec, 1)
    z0 = labels.z0()
    n = spec.n_nodes
    iu, il = np.triu_indices(n, k=1)
    zu, zl = z0[iu], z0[il]
    mats = []
    for m in range(spec.n_layers):
        pi = connectivity_matrix(spec, m)
        excess = int(np.sum(pi > 1.0))
        _handle_excess(excess, f"block rates in layer {m}", spec.clamp_policy)
        probs = np.minimum(pi, 1.0)[zu, zl]
        mats.append(_bernoulli_layer(rng, probs, iu, il, n))
    return MultiLayerGraph(mats, _trusted=True)


def sample_propensities(labels: Partition, spec: GeneratorSpec) -> np.ndarray:
    """(M, N) node propensities, summing to one within each community.

    Draws from a power law with density exponent ``powerlaw_exponent`` on
    [1, inf).  Mode "shared" draws once and repeats the row per layer;
    "independent" draws and normalizes per layer.  Mode "none" returns
    the community-uniform profile (every member weighted equally).
    """
    if labels.n_nodes != spec.n_nodes:
        raise PreconditionError("labels do not match spec.n_nodes")
    z0 = labels.z0()
    sizes = np.bincount(z0, minlength=spec.n_communities)
    if spec.degree_mode == "none":
        theta_row = np.zeros(spec.n_nodes)
        nonzero = sizes[z0] > 0
        theta_row[nonzero] = 1.0 / sizes[z0][nonzero]
        return np.repeat(theta_row[None, :], spec.n_layers, axis=0)
    rng = _rng(spec, 2)
    a = spec.powerlaw_exponent - 1.0

    def one_draw():
        raw = rng.pareto(a, size=spec.n_nodes) + 1.0
        out = np.empty_like(raw)
        for q in range(spec.n_communities):
            members = z0 == q
            if members.any():
                out[members] = raw[members] / raw[members].sum()
        return out

    if spec.degree_mode == "shared":
        row = one_draw()
        return np.repeat(row[None, :], spec.n_layers, axis=0)
    return np.stack([one_draw() for _ in range(spec.n_layers)])


def sample_dcmlsbm(labels: Partition, spec: GeneratorSpec) -> MultiLayerGraph:
    """Degree-corrected blockmodel draw; rates theta_i theta_j * block rate.

    Propensities come from :func:`sample_propensities`; pairwise rates
    above one follow the clamp policy.  No self-loops.
    """
    if spec.degree_mode == "none":
        raise PreconditionError(
            "degree_mode 'none' has no degree correction; use sample_mlsbm"
        )
    if labels.n_nodes != spec.n_nodes:
        raise PreconditionError("labels do not match spec.n_nodes")
    theta = sample_propensities(labels, spec)
    rng = _rng(spec, 3)
    z0 = labels.z0()
    n = spec.n_nodes
    iu, il = np.triu_indices(n, k=1)
    zu, zl = z0[iu], z0[il]
    mats = []
    for m in range(spec.n_layers):
        pi = connectivity_matrix(spec, m)
        rates = theta[m][iu] * theta[m][il] * pi[zu, zl]
        excess = int(np.sum(rates > 1.0))
        _handle_excess(excess, f"pair rates in layer {m}", spec.clamp_policy)
        probs = np.minimum(rates, 1.0)
        mats.append(_bernoulli_layer(rng, probs, iu, il, n))
    return MultiLayerGraph(mats, _trusted=True)


def sample_network(spec: GeneratorSpec) -> tuple[Partition, MultiLayerGraph]:
    """Labels plus a network drawn per ``spec.degree_mode``."""
    labels = sample_labels(spec)
    if spec.degree_mode == "none":
        return labels, sample_mlsbm(labels, spec)
    return labels, sample_dcmlsbm(labels, spec)
