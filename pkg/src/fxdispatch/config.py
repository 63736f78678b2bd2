"""Run configuration: YAML schema, validation, and round-trip serialization.

A run file has sections `generators`, `loss`, `topology`, `params`,
`disturbance`, `output`, and optionally `initial`. Powers are MW, costs
$/h. A generator entry may omit `d0`, in which case its demand share is
derived as p0 - P_Li(P(0)) so that the stated initial powers satisfy the
balance equation exactly.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import AlgorithmParams, DisturbanceSpec, DispatchSystem
from .grid_model import ConfigurationError, GeneratorSpec, KronLossModel
from .topology import LocalTopology


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    stride: int = 100
    write_trajectory: bool = True
    write_report: bool = True

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ConfigurationError("output stride must be >= 1")


@dataclass(eq=False)
class RunConfig:
    generators: tuple
    loss: KronLossModel
    topology: LocalTopology
    params: AlgorithmParams
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    z0: tuple | None = None

    def __post_init__(self) -> None:
        n = len(self.generators)
        if n == 0:
            raise ConfigurationError("generator list is empty")
        if self.loss.n != n:
            raise ConfigurationError(f"{n} generators but loss matrix is {self.loss.n}x{self.loss.n}")
        if self.topology.n != n:
            raise ConfigurationError(f"{n} generators but topology has {self.topology.n} nodes")
        if self.z0 is not None and len(self.z0) != n:
            raise ConfigurationError(f"z0 has length {len(self.z0)}, expected {n}")

    def system(self) -> DispatchSystem:
        return DispatchSystem(gens=self.generators, loss=self.loss, top=self.topology)

    def to_dict(self) -> dict:
        return {
            "generators": [
                {"a": g.a, "b": g.b, "c": g.c, "p0": g.p0, "d0": g.d0} for g in self.generators
            ],
            "loss": {
                "b_matrix": self.loss.B.tolist(),
                "b0": self.loss.B0.tolist(),
                "b00": self.loss.B00,
            },
            "topology": {
                "nodes": self.topology.n,
                "edges": [[i, j, w] for i, j, w in self.topology.edges],
            },
            "params": {
                "k1": self.params.k1, "k2": self.params.k2,
                "mu": self.params.mu, "nu": self.params.nu,
                "dt": self.params.dt, "t_end": self.params.t_end,
                "fp_tol": self.params.fp_tol, "fp_max_iter": self.params.fp_max_iter,
                "settle_tol": self.params.settle_tol, "settle_window": self.params.settle_window,
            },
            "disturbance": {
                "enabled": self.disturbance.enabled, "amplitude": self.disturbance.amplitude,
                "seed": self.disturbance.seed, "kind": self.disturbance.kind,
            },
            "output": {
                "directory": self.output.directory, "stride": self.output.stride,
                "write_trajectory": self.output.write_trajectory,
                "write_report": self.output.write_report,
            },
            **({"initial": {"z0": list(self.z0)}} if self.z0 is not None else {}),
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()


def _section(data: dict, name: str, path: str) -> dict:
    if name not in data:
        raise ConfigurationError(f"{path}: missing section '{name}'")
    sec = data[name]
    if not isinstance(sec, dict):
        raise ConfigurationError(f"{path}: section '{name}' must be a mapping")
    return sec


def _derive_demand_shares(gens_raw, loss: KronLossModel):
    """Fill missing d0 entries as p0 - P_Li(P(0))."""
    p0 = np.array([g["p0"] for g in gens_raw], dtype=float)
    own = loss.generator_losses(p0)
    out = []
    for k, g in enumerate(gens_raw):
        d0 = g.get("d0")
        out.append(float(d0) if d0 is not None else float(p0[k] - own[k]))
    return out


def config_from_dict(data: dict, path: str = "<config>") -> RunConfig:
    gens_sec = data.get("generators")
    if not isinstance(gens_sec, list) or not gens_sec:
        raise ConfigurationError(f"{path}: 'generators' must be a non-empty list")
    loss_sec = _section(data, "loss", path)
    try:
        loss = KronLossModel(loss_sec["b_matrix"], loss_sec["b0"], loss_sec.get("b00", 0.0))
    except KeyError as e:
        raise ConfigurationError(f"{path}: loss section missing field {e}") from e

    d0s = _derive_demand_shares(gens_sec, loss)
    gens = []
    for k, (g, d0) in enumerate(zip(gens_sec, d0s)):
        try:
            gens.append(GeneratorSpec(a=float(g["a"]), b=float(g["b"]), c=float(g["c"]),
                                      p0=float(g.get("p0", 0.0)), d0=d0))
        except KeyError as e:
            raise ConfigurationError(f"{path}: generator {k} missing field {e}") from e

    topo_sec = _section(data, "topology", path)
    topology = LocalTopology(int(topo_sec.get("nodes", len(gens))),
                             [tuple(e) for e in topo_sec.get("edges", [])])

    params_sec = _section(data, "params", path)
    try:
        params = AlgorithmParams(**{k: (int(v) if k == "fp_max_iter" else float(v))
                                    for k, v in params_sec.items()})
    except TypeError as e:
        raise ConfigurationError(f"{path}: bad params section: {e}") from e

    dist_sec = data.get("disturbance", {})
    disturbance = DisturbanceSpec(
        enabled=bool(dist_sec.get("enabled", False)),
        amplitude=float(dist_sec.get("amplitude", 0.0)),
        seed=int(dist_sec.get("seed", 0)),
        kind=str(dist_sec.get("kind", "sinusoid")),
    )

    out_sec = data.get("output", {})
    output = OutputSpec(
        directory=str(out_sec.get("directory", "out")),
        stride=int(out_sec.get("stride", 100)),
        write_trajectory=bool(out_sec.get("write_trajectory", True)),
        write_report=bool(out_sec.get("write_report", True)),
    )

    init_sec = data.get("initial", {}) or {}
    z0 = tuple(float(v) for v in init_sec["z0"]) if "z0" in init_sec else None

    return RunConfig(generators=tuple(gens), loss=loss, topology=topology,
                     params=params, disturbance=disturbance, output=output, z0=z0)


def load_config(path: str) -> RunConfig:
    """Parse and fully validate a run file; raises ConfigurationError with
    field context on any structural problem."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"{path}: parse error: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return config_from_dict(data, path)


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_config(config: RunConfig, path: str) -> None:
    atomic_write_text(path, yaml.safe_dump(config.to_dict(), sort_keys=False))
