"""Run configuration: flat INI-style key-value files with sections.

Example::

    [run]
    seed = 20240817

    [potential]
    kind = hard-core
    hard_core = 1.0
    range = 1.0

    [region]
    dimension = 1
    sides = 50, 100, 200, 400

    [ensemble]
    beta = 1.0
    target_density = 0.03     # or an explicit mu0 = ...

    [table]
    source = oracle-fit       # compute | load | oracle-fit
    mode = two-connected-integral
    n_max = 5

    [integration]
    points = 16
    mc_samples = 400000

    [deviations]
    alphas = 0.5, 1.0
    u_values = 0.0, 0.01
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coeffs import ClusterTable, IntegrationConfig, build_table, \
    beta_n_infinite
from .duality import InfiniteVolumeModel
from .errors import ConfigError
from .oracle import ideal_log_z, quadrature_log_z, tonks_log_z_source
from .potentials import PairPotential, hard_rod, square_well, tabulated, \
    zero_potential
from .thermo import FreeEnergyModel, SimulationRegion


@dataclass
class RunConfig:
    potential: PairPotential
    beta: float
    sides: list[float]
    dimension: int
    mu0: float | None
    target_density: float | None
    table_source: str             # compute | load | oracle-fit
    table_mode: str
    n_max: int
    table_path: str | None
    integration: IntegrationConfig
    alphas: list[float]
    u_values: list[float]
    seed: int
    outdir: str

    def regions(self) -> list[SimulationRegion]:
        return [SimulationRegion(self.dimension, s) for s in self.sides]


def _find_line(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip().lower().startswith(key.lower()):
            return i
    return 0


def _floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    text = path.read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def bad(section, key, msg):
        line = _find_line(text, key)
        return ConfigError(f"{path}:{line}: [{section}] {key}: {msg}")

    # potential
    pot_sec = parser["potential"] if parser.has_section("potential") else {}
    kind = pot_sec.get("kind", "zero")
    a = float(pot_sec.get("hard_core", 0.0))
    rng = float(pot_sec.get("range", a))
    depth = float(pot_sec.get("well_depth", 0.0))
    try:
        if kind == "zero":
            potential = zero_potential()
        elif kind == "hard-core":
            potential = hard_rod(a)
        elif kind == "square-well":
            b_given = pot_sec.get("stability_b")
            potential = square_well(a, rng, depth,
                                    float(b_given) if b_given else None)
        elif kind == "tabulated-radial":
            rs = _floats(pot_sec.get("table_r", ""))
            vs = _floats(pot_sec.get("table_v", ""))
            potential = tabulated(rs, vs, hard_core=a,
                                  stability_b=float(pot_sec.get("stability_b", 0.0)))
        else:
            raise bad("potential", "kind", f"unknown kind {kind!r}")
    except ValueError as exc:
        raise bad("potential", "kind", str(exc)) from exc

    # ensemble
    ens = parser["ensemble"] if parser.has_section("ensemble") else {}
    beta = float(ens.get("beta", 1.0))
    if beta <= 0:
        raise bad("ensemble", "beta", "must be positive")
    mu0 = float(ens["mu0"]) if "mu0" in ens else None
    target = float(ens["target_density"]) if "target_density" in ens else None
    if mu0 is None and target is None:
        raise bad("ensemble", "mu0", "need mu0 or target_density")

    # region
    reg = parser["region"] if parser.has_section("region") else {}
    dimension = int(reg.get("dimension", 1))
    sides = _floats(reg.get("sides", "100"))
    if not sides or any(s <= 0 for s in sides):
        raise bad("region", "sides", "need positive side lengths")

    # table
    tab = parser["table"] if parser.has_section("table") else {}
    source = tab.get("source", "compute")
    if source not in ("compute", "load", "oracle-fit"):
        raise bad("table", "source", f"unknown source {source!r}")
    mode = tab.get("mode", "two-connected-integral")
    n_max = int(tab.get("n_max", 3))
    table_path = tab.get("path") or None
    if source == "load" and not table_path:
        raise bad("table", "path", "load source needs a path")

    # integration
    icfg = parser["integration"] if parser.has_section("integration") else {}
    run = parser["run"] if parser.has_section("run") else {}
    seed = int(run.get("seed", 0))
    integration = IntegrationConfig(
        scheme=icfg.get("scheme", "tensor-quadrature"),
        points=int(icfg.get("points", 16)),
        mc_samples=int(icfg.get("mc_samples", 400_000)),
        seed=seed,
        tolerance=float(icfg.get("tolerance", 1e-8)),
        quad_n_cap=int(icfg.get("quad_n_cap", 2)),
    )

    dev = parser["deviations"] if parser.has_section("deviations") else {}
    alphas = _floats(dev.get("alphas", "")) if dev.get("alphas") else []
    u_values = _floats(dev.get("u_values", "")) if dev.get("u_values") else []

    return RunConfig(
        potential=potential, beta=beta, sides=sides, dimension=dimension,
        mu0=mu0, target_density=target, table_source=source, table_mode=mode,
        n_max=n_max, table_path=table_path, integration=integration,
        alphas=alphas, u_values=u_values, seed=seed,
        outdir=run.get("outdir", "out"))


# ---------------------------------------------------------------------------
# assembling models from a config
# ---------------------------------------------------------------------------

def oracle_source(potential: PairPotential, beta: float,
                  region: SimulationRegion, cfg: IntegrationConfig):
    """A log Z callable for the configured potential: closed form for hard
    rods, free gas for the zero potential, direct quadrature otherwise."""
    if potential.kind == "zero":
        return ideal_log_z(region)
    if potential.kind == "hard-core" and region.dimension == 1:
        return tonks_log_z_source(region, potential.hard_core)
    cache: dict[int, float] = {}

    def logz(N: int) -> float:
        if N not in cache:
            cache[N] = quadrature_log_z(potential, beta, region, N,
                                        mc_samples=cfg.mc_samples,
                                        seed=cfg.seed + N).value
        return cache[N]

    return logz


def table_for_region(run: RunConfig, region: SimulationRegion) -> ClusterTable:
    if run.table_source == "load":
        table = ClusterTable.load(run.table_path)
        return table
    if run.table_source == "oracle-fit":
        z = oracle_source(run.potential, run.beta, region, run.integration)
        return build_table(run.potential, run.beta, region, run.n_max,
                           run.integration, mode="oracle-fitted", z_source=z)
    return build_table(run.potential, run.beta, region, run.n_max,
                       run.integration, mode=run.table_mode)


def model_for_region(run: RunConfig, region: SimulationRegion) -> FreeEnergyModel:
    return FreeEnergyModel(run.beta, region, table_for_region(run, region))


def bulk_model(run: RunConfig, n_orders: int = 2) -> InfiniteVolumeModel:
    """Infinite-volume coefficient model for the configured potential."""
    if run.potential.kind == "zero":
        return InfiniteVolumeModel(run.beta, np.zeros(1))
    values = [beta_n_infinite(run.potential, run.beta, n, run.integration)[0]
              for n in range(1, n_orders + 1)]
    return InfiniteVolumeModel(run.beta, np.array(values))


def resolve_mu0(run: RunConfig) -> float:
    """The sweep's chemical potential: explicit, or tuned to the target
    density through the bulk coefficient series."""
    if run.mu0 is not None:
        return run.mu0
    bulk = bulk_model(run)
    return bulk.mu_of_rho(run.target_density)
