"""Plain-text ``key = value`` run configuration with dotted keys.

Lines may carry ``#`` comments; unknown keys are rejected.  All physical
parameters are validated against the module preconditions while the run
objects are built, so a bad configuration fails before any computation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .eos import EosSpec, covolume_gas_eos, ideal_gas_eos
from .errors import ConfigError
from .fields import Grid1D
from .functionals import HomogeneousReference
from .simulator import InitSpec, SimConfig

__all__ = ["RunConfig", "parse_config", "load_config"]

_SCHEMA = {
    "grid.length": (float, 1.0),
    "grid.n_cells": (int, 200),
    "eos.kind": (str, "ideal"),
    "eos.cv_ref": (float, 1.0),
    "eos.gamma": (float, 1.4),
    "eos.b": (float, 0.0),
    "eos.theta_ref": (float, 1.0),
    "eos.rho_ref": (float, 1.0),
    "ref.theta_hat": (float, 1.0),
    "ref.rho_hat": (float, 1.0),
    "sim.mu": (float, 1e-2),
    "sim.kappa": (float, 1e-2),
    "sim.cfl": (float, 0.9),
    "sim.t_end": (float, 0.0),  # 0 means: use the diffusive time scale
    "sim.output_every": (int, 50),
    "init.k": (int, 1),
    "init.a_rho": (float, 0.01),
    "init.a_v": (float, 0.01),
    "init.a_theta": (float, 0.01),
    "verify.seed": (int, 0),
    "verify.samples": (int, 1000),
}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of a parsed configuration."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def grid(self) -> Grid1D:
        return Grid1D(length=self["grid.length"], n_cells=self["grid.n_cells"])

    def eos(self) -> EosSpec:
        kind = self["eos.kind"]
        if kind == "ideal":
            return ideal_gas_eos(self["eos.cv_ref"], self["eos.gamma"],
                                 self["eos.theta_ref"], self["eos.rho_ref"])
        if kind == "covolume":
            return covolume_gas_eos(self["eos.cv_ref"], self["eos.gamma"],
                                    self["eos.b"], self["eos.theta_ref"],
                                    self["eos.rho_ref"])
        raise ConfigError(f"unknown eos.kind '{kind}' (expected ideal or covolume)")

    def reference(self) -> HomogeneousReference:
        return HomogeneousReference(theta_hat=self["ref.theta_hat"],
                                    rho_hat=self["ref.rho_hat"])

    def sim(self) -> SimConfig:
        from .simulator import diffusive_time_scale
        init = InitSpec(k=self["init.k"], a_rho=self["init.a_rho"],
                        a_v=self["init.a_v"], a_theta=self["init.a_theta"])
        t_end = self["sim.t_end"]
        if t_end == 0.0:
            probe = SimConfig(grid=self.grid(), eos=self.eos(),
                              ref=self.reference(), mu=self["sim.mu"],
                              kappa=self["sim.kappa"], cfl=self["sim.cfl"],
                              t_end=1.0, output_every=self["sim.output_every"],
                              init=init)
            t_end = diffusive_time_scale(probe, self.reference())
        return SimConfig(grid=self.grid(), eos=self.eos(), ref=self.reference(),
                         mu=self["sim.mu"], kappa=self["sim.kappa"],
                         cfl=self["sim.cfl"], t_end=t_end,
                         output_every=self["sim.output_every"], init=init)


def parse_config(text: str) -> RunConfig:
    values = {key: default for key, (_, default) in _SCHEMA.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        ctor = _SCHEMA[key][0]
        try:
            if ctor is int:
                values[key] = int(value)
            elif ctor is float:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(
                f"line {lineno}: cannot parse '{value}' for key '{key}'") from None
    return RunConfig(values=values)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
