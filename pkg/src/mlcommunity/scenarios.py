"""Named generator presets and the density calibration behind them.

A scenario fixes the qualitative shape of a synthetic study: how many
layers, how informative each layer is (within/between connectivity
ratio), how the total edge budget is shared between layers, and whether
node degrees are corrected, shared or independent across layers.  Size,
community count and the average degree stay free so sweeps can vary them.

The density scale rho_m for each layer is solved from the requested
average degree.  Without degree correction the expected degree of a node
in community q is (N-1) * rho * (eps + (lam_q - eps) * p_q); averaging
over q with weights p_q gives the target equation.  With degree
correction the propensities sum to one inside every community, so the
expected total layer degree is rho * (sum_q lam_q + eps * K * (K - 1))
and the block sizes drop out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .generate import DEGREE_MODES, GeneratorSpec
from .graph import InputDataError, PreconditionError

_SCHEMA = "mlcommunity.scenario/1"


@dataclass
class LayerPlan:
    """One layer's shape: signal_ratio = lambda / epsilon, and the share
    of the total expected degree carried by this layer."""

    signal_ratio: float
    density_share: float


@dataclass
class Scenario:
    name: str
    layers: list[LayerPlan]
    degree_mode: str = "none"
    powerlaw_exponent: float = 2.5
    description: str = ""

    def __post_init__(self):
        if not self.layers:
            raise InputDataError("a scenario needs at least one layer")
        if self.degree_mode not in DEGREE_MODES:
            raise InputDataError(f"unknown degree_mode {self.degree_mode!r}")
        total = sum(p.density_share for p in self.layers)
        if total <= 0:
            raise InputDataError("density shares must sum to a positive value")
        for p in self.layers:
            if p.signal_ratio <= 0 or p.density_share < 0:
                raise InputDataError("layer plans need positive ratio and share")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def spec(
        self,
        n_nodes: int,
        n_communities: int,
        avg_degree: float,
        seed: int,
        class_probs=None,
        clamp_policy: str = "clamp",
    ) -> GeneratorSpec:
        """Concrete generator parameters hitting the average total degree.

        ``avg_degree`` is the expected degree of a node summed over all
        layers; each layer carries its density share of it.
        """
        if avg_degree <= 0:
            raise PreconditionError("avg_degree must be positive")
        k = n_communities
        if class_probs is None:
            class_probs = np.full(k, 1.0 / k)
        else:
            class_probs = np.asarray(class_probs, dtype=np.float64)
        shares = np.array([p.density_share for p in self.layers])
        shares = shares / shares.sum()
        ratios = np.array([p.signal_ratio for p in self.layers])
        eps = np.ones(self.n_layers)
        lam = ratios.copy()
        rho = np.empty(self.n_layers)
        for m in range(self.n_layers):
            d_m = avg_degree * shares[m]
            if self.degree_mode == "none":
                mix = float(
                    np.sum(class_probs * (eps[m] + (lam[m] - eps[m]) * class_probs))
                )
                rho[m] = d_m / ((n_nodes - 1) * mix)
            else:
                mass = k * lam[m] + eps[m] * k * (k - 1)
                rho[m] = d_m * n_nodes / mass
        return GeneratorSpec(
            n_nodes=n_nodes,
            n_communities=k,
            n_layers=self.n_layers,
            class_probs=class_probs,
            rho=rho,
            lam=np.repeat(lam[:, None], k, axis=1),
            epsilon=eps,
            degree_mode=self.degree_mode,
            powerlaw_exponent=self.powerlaw_exponent,
            seed=seed,
            clamp_policy=clamp_policy,
        )


def _scenario_from_dict(payload: dict, fallback_name: str) -> Scenario:
    if payload.get("schema") != _SCHEMA:
        raise InputDataError(
            f"scenario file declares schema {payload.get('schema')!r}, expected {_SCHEMA!r}"
        )
    try:
        layers = [
            LayerPlan(float(p["signal_ratio"]), float(p["density_share"]))
            for p in payload["layers"]
        ]
        return Scenario(
            name=payload.get("name", fallback_name),
            layers=layers,
            degree_mode=payload.get("degree_mode", "none"),
            powerlaw_exponent=float(payload.get("powerlaw_exponent", 2.5)),
            description=payload.get("description", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputDataError(f"malformed scenario file: {exc}") from exc


def load_scenario(path) -> Scenario:
    """Read a scenario JSON file."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputDataError(f"{path}: not valid JSON: {exc}") from exc
    return _scenario_from_dict(payload, path.stem)


def builtin_scenario_names() -> list[str]:
    base = resources.files("mlcommunity") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in base.iterdir() if p.name.endswith(".json"))


def builtin_scenario(name: str) -> Scenario:
    base = resources.files("mlcommunity") / "scenarios"
    candidate = base / f"{name}.json"
    try:
        text = candidate.read_text(encoding="utf-8")
    except FileNotFoundError:
        known = ", ".join(builtin_scenario_names())
        raise InputDataError(f"unknown scenario {name!r}; built in: {known}") from None
    return _scenario_from_dict(json.loads(text), name)


def resolve_scenario(name_or_path: str) -> Scenario:
    """Accept either a built-in scenario name or a path to a JSON file."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        return load_scenario(p)
    return builtin_scenario(name_or_path)
