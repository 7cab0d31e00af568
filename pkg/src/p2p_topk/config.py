"""Experiment configuration: flat ``key = value`` files and the typed settings they resolve to."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import NamedTuple

from p2p_topk.datastore import DataGenConfig
from p2p_topk.protocol.statistics import HeuristicConfig, HeuristicMode
from p2p_topk.simkernel.churn import ChurnModel
from p2p_topk.simkernel.engine import AlgorithmSpec, ExecutionModel
from p2p_topk.simkernel.links import LinkModel

ALL_ALGORITHMS = "fd-basic,fd-str1,fd-str12,cn,cnstar"

# defaults of the study; every value is kept as text, the way it appears in a file
DEFAULT_CONFIG: dict[str, str] = {
    "sweep.variable": "",
    "sweep.values": "",
    "algo.list": ALL_ALGORITHMS,
    "seed.list": "1",
    "output.path": "",
    "k": "20",
    "ttl": "coverage",
    "topology.nPeers": "1000",
    "topology.attachmentEdges": "2",
    "data.tupleCountMin": "1001",
    "data.tupleCountMax": "19999",
    "data.payloadMeanBytes": "1024",
    "data.payloadVarianceBytes": "64",
    "link.latencyMeanMs": "200",
    "link.latencyVariance": "100",
    "link.bandwidthMeanKbps": "56",
    "link.bandwidthVariance": "32",
    "churn.distribution": "none",
    "churn.meanLifetimeSeconds": "3600",
    "strategy1.lambdaMaxMs": "20",
    "heuristic.mode": "positionThreshold",
    "heuristic.x": "0.5",
    "heuristic.z": "0.8",
    "heuristic.warmup": "3",
    "k.inflationP": "0",
    "exec.msPerRow": "0.005",
    "merge.timeMs": "1",
    "wait.marginMs": "1",
    "wait.execBudgetMs": "auto",
    "summary.baseline": "",
}

REQUIRED_KEYS = ("sweep.variable", "sweep.values")

ERR_MALFORMED_LINE = "expected 'key = value'"
ERR_DUPLICATE_KEY = "duplicate key, first set on line {first}"


class SweepVariable(StrEnum):
    """Parameter varied across the cells of an experiment."""

    N_PEERS = "nPeers"
    BANDWIDTH_MEAN = "bandwidthMean"
    LATENCY_MEAN = "latencyMean"
    Z_FACTOR = "zFactor"
    MEAN_LIFETIME = "meanLifetime"


class ConfigEntry(NamedTuple):
    """One ``key = value`` line of a config file."""

    line: int
    key: str
    value: str


@dataclass(frozen=True, slots=True)
class ConfigDiagnostic:
    """A problem found in a config file.

    Attributes:
        line: 1-based line number, ``None`` for file-level problems.
        key: Offending key, if any.
        message: Human readable description.
    """

    line: int | None
    key: str | None
    message: str

    def __str__(self) -> str:
        location = f"line {self.line}" if self.line is not None else "config"
        if self.key:
            location = f"{location}: {self.key}"
        return f"{location}: {self.message}"


class ConfigError(ValueError):
    """Raised when a config file cannot be resolved; carries every diagnostic."""

    def __init__(self, diagnostics: list[ConfigDiagnostic]) -> None:
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(item) for item in self.diagnostics))


def parse_entries(text: str) -> tuple[list[ConfigEntry], list[ConfigDiagnostic]]:
    """Split ``text`` into entries; ``#`` comments and blank lines are skipped."""
    entries: list[ConfigEntry] = []
    problems: list[ConfigDiagnostic] = []
    first_seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            problems.append(ConfigDiagnostic(lineno, None, ERR_MALFORMED_LINE))
            continue
        if key in first_seen:
            problems.append(
                ConfigDiagnostic(lineno, key, ERR_DUPLICATE_KEY.format(first=first_seen[key]))
            )
            continue
        first_seen[key] = lineno
        entries.append(ConfigEntry(lineno, key, value.strip()))
    return entries, problems


def load_config_at(path: Path) -> list[ConfigEntry]:
    """Read the entries of the config file at ``path``.

    Raises:
        ConfigError: If a line is malformed or a key repeats.
    """
    entries, problems = parse_entries(path.read_text(encoding="utf-8"))
    if problems:
        raise ConfigError(problems)
    return entries


@dataclass(frozen=True, slots=True)
class SimulationSettings:
    """Fixed parameters shared by every cell of an experiment.

    Attributes:
        n_peers: Network size.
        attachment_edges: Edges each new peer attaches with.
        k: Number of items the user asks for.
        ttl: Query hop limit; ``None`` uses the originator's coverage ttl.
        inflation_p: Probability that a top item is inaccessible.
        data: Workload generator settings.
        link: Link characteristic distributions.
        churn: Peer lifetime model.
        execution: Local cost model and wait-time settings.
        heuristics: Neighbour filter of the ``-stats`` variants.
        warmup: Query executions preceding the measured one for ``-stats`` variants.
    """

    n_peers: int = 1000
    attachment_edges: int = 2
    k: int = 20
    ttl: int | None = None
    inflation_p: float = 0.0
    data: DataGenConfig = field(default_factory=DataGenConfig)
    link: LinkModel = field(default_factory=LinkModel)
    churn: ChurnModel = field(default_factory=ChurnModel)
    execution: ExecutionModel = field(default_factory=ExecutionModel)
    heuristics: HeuristicConfig = field(
        default_factory=lambda: HeuristicConfig(HeuristicMode.POSITION_THRESHOLD)
    )
    warmup: int = 3

    def swept(self, variable: SweepVariable, value: float) -> SimulationSettings:
        """Return a copy with ``variable`` set to ``value``."""
        match variable:
            case SweepVariable.N_PEERS:
                return dataclasses.replace(self, n_peers=int(value))
            case SweepVariable.BANDWIDTH_MEAN:
                link = dataclasses.replace(self.link, bandwidth_mean_kbps=value)
                return dataclasses.replace(self, link=link)
            case SweepVariable.LATENCY_MEAN:
                link = dataclasses.replace(self.link, latency_mean_ms=value)
                return dataclasses.replace(self, link=link)
            case SweepVariable.Z_FACTOR:
                heuristics = dataclasses.replace(self.heuristics, z=value)
                return dataclasses.replace(self, heuristics=heuristics)
            case SweepVariable.MEAN_LIFETIME:
                churn = dataclasses.replace(self.churn, mean_lifetime_seconds=value)
                return dataclasses.replace(self, churn=churn)


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    """A fully resolved experiment.

    Attributes:
        sweep_variable: Parameter varied across cells.
        sweep_values: Values it takes, in file order.
        algorithms: Algorithms run on every cell.
        seeds: Seeds run for every sweep value.
        settings: Fixed parameters.
        output_path: Target directory; ``None`` selects the default data directory.
        summary_baseline: Algorithm the summary reports byte reductions against.
    """

    sweep_variable: SweepVariable
    sweep_values: tuple[float, ...]
    algorithms: tuple[AlgorithmSpec, ...]
    seeds: tuple[int, ...]
    settings: SimulationSettings = field(default_factory=SimulationSettings)
    output_path: Path | None = None
    summary_baseline: str | None = None


__all__ = [
    "ALL_ALGORITHMS",
    "DEFAULT_CONFIG",
    "REQUIRED_KEYS",
    "ConfigDiagnostic",
    "ConfigEntry",
    "ConfigError",
    "ExperimentConfig",
    "SimulationSettings",
    "SweepVariable",
    "load_config_at",
    "parse_entries",
]
