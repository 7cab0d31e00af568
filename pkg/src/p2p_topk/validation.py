"""Validation of experiment config files into a fully resolved :class:`ExperimentConfig`."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

from p2p_topk.config import (
    DEFAULT_CONFIG,
    REQUIRED_KEYS,
    ConfigDiagnostic,
    ConfigError,
    ExperimentConfig,
    SimulationSettings,
    SweepVariable,
    parse_entries,
)
from p2p_topk.datastore import DataGenConfig
from p2p_topk.protocol.statistics import HeuristicConfig, HeuristicMode
from p2p_topk.simkernel.churn import ChurnDistribution, ChurnModel
from p2p_topk.simkernel.engine import ExecutionModel, parse_algorithm
from p2p_topk.simkernel.links import LinkModel
from p2p_topk.topology import TopologyConfig
from p2p_topk.utils import logger, parse_list

ERR_UNKNOWN_KEY = "unknown key"
ERR_MISSING_SWEEP = "missing sweep: {key} is required"
ERR_NOT_INTEGER = "expected an integer, got {value!r}"
ERR_NOT_NUMBER = "expected a number, got {value!r}"
ERR_BOUND = "must be {op} {bound}, got {value}"
ERR_INFLATION = (
    "must satisfy 0 <= P < 1, got {value}; k-inflation requests k / (1 - P) items "
    "and is undefined for P >= 1"
)
ERR_SWEEP_VARIABLE = "unknown sweep variable {value!r}; expected one of {choices}"
ERR_SWEEP_VALUE = "value {value} is invalid: {reason}"
ERR_SWEEP_PEERS = "nPeers values must be whole numbers, got {value}"
ERR_BASELINE_NOT_RUN = "baseline {name!r} is not in algo.list"

_Converter = Callable[[str], Any]


def _integer(minimum: int) -> _Converter:
    def convert(value: str) -> int:
        try:
            number = int(value)
        except ValueError:
            raise ValueError(ERR_NOT_INTEGER.format(value=value)) from None
        if number < minimum:
            raise ValueError(ERR_BOUND.format(op=">=", bound=minimum, value=number))
        return number

    return convert


def _number(
    low: float = -math.inf, high: float = math.inf, *, low_open: bool = False
) -> _Converter:
    def convert(value: str) -> float:
        try:
            number = float(value)
        except ValueError:
            raise ValueError(ERR_NOT_NUMBER.format(value=value)) from None
        if not math.isfinite(number):
            raise ValueError(ERR_NOT_NUMBER.format(value=value))
        if number < low or (low_open and number == low):
            op = ">" if low_open else ">="
            raise ValueError(ERR_BOUND.format(op=op, bound=low, value=number))
        if number > high:
            raise ValueError(ERR_BOUND.format(op="<=", bound=high, value=number))
        return number

    return convert


def _inflation_probability(value: str) -> float:
    number = _number()(value)
    if not 0.0 <= number < 1.0:
        raise ValueError(ERR_INFLATION.format(value=number))
    return number


def _ttl(value: str) -> int | None:
    if value.lower() == "coverage":
        return None
    return _integer(0)(value)


def _exec_budget(value: str) -> float | None:
    if value.lower() == "auto":
        return None
    return _number(0.0)(value)


def _sweep_variable(value: str) -> SweepVariable:
    try:
        return SweepVariable(value)
    except ValueError:
        choices = ", ".join(item.value for item in SweepVariable)
        raise ValueError(ERR_SWEEP_VARIABLE.format(value=value, choices=choices)) from None


def _algorithms(value: str) -> tuple[Any, ...]:
    return tuple(dict.fromkeys(parse_list(value, parse_algorithm)))


def _optional_algorithm(value: str) -> str | None:
    return parse_algorithm(value).name if value else None


_CONVERTERS: dict[str, _Converter] = {
    "sweep.variable": _sweep_variable,
    "sweep.values": lambda value: tuple(parse_list(value, float)),
    "algo.list": _algorithms,
    "seed.list": lambda value: tuple(dict.fromkeys(parse_list(value, int))),
    "output.path": lambda value: Path(value).expanduser() if value else None,
    "k": _integer(1),
    "ttl": _ttl,
    "topology.nPeers": _integer(1),
    "topology.attachmentEdges": _integer(1),
    "data.tupleCountMin": _integer(1),
    "data.tupleCountMax": _integer(1),
    "data.payloadMeanBytes": _number(1.0),
    "data.payloadVarianceBytes": _number(0.0),
    "link.latencyMeanMs": _number(0.0, low_open=True),
    "link.latencyVariance": _number(0.0),
    "link.bandwidthMeanKbps": _number(0.0, low_open=True),
    "link.bandwidthVariance": _number(0.0),
    "churn.distribution": ChurnDistribution.parse,
    "churn.meanLifetimeSeconds": _number(0.0, low_open=True),
    "strategy1.lambdaMaxMs": _number(0.0, low_open=True),
    "heuristic.mode": HeuristicMode.parse,
    "heuristic.x": _number(0.0, 1.0),
    "heuristic.z": _number(0.0, 1.0),
    "heuristic.warmup": _integer(0),
    "k.inflationP": _inflation_probability,
    "exec.msPerRow": _number(0.0),
    "merge.timeMs": _number(0.0),
    "wait.marginMs": _number(0.0),
    "wait.execBudgetMs": _exec_budget,
    "summary.baseline": _optional_algorithm,
}


def _settings_from(values: Mapping[str, Any]) -> SimulationSettings:
    return SimulationSettings(
        n_peers=values["topology.nPeers"],
        attachment_edges=values["topology.attachmentEdges"],
        k=values["k"],
        ttl=values["ttl"],
        inflation_p=values["k.inflationP"],
        data=DataGenConfig(
            tuple_count_min=values["data.tupleCountMin"],
            tuple_count_max=values["data.tupleCountMax"],
            payload_mean_bytes=values["data.payloadMeanBytes"],
            payload_variance_bytes=values["data.payloadVarianceBytes"],
        ),
        link=LinkModel(
            latency_mean_ms=values["link.latencyMeanMs"],
            latency_variance=values["link.latencyVariance"],
            bandwidth_mean_kbps=values["link.bandwidthMeanKbps"],
            bandwidth_variance=values["link.bandwidthVariance"],
        ),
        churn=ChurnModel(
            distribution=values["churn.distribution"],
            mean_lifetime_seconds=values["churn.meanLifetimeSeconds"],
        ),
        execution=ExecutionModel(
            ms_per_row=values["exec.msPerRow"],
            merge_time_ms=values["merge.timeMs"],
            wait_margin_ms=values["wait.marginMs"],
            exec_budget_ms=values["wait.execBudgetMs"],
            lambda_max_ms=values["strategy1.lambdaMaxMs"],
        ),
        heuristics=HeuristicConfig(
            mode=values["heuristic.mode"], x=values["heuristic.x"], z=values["heuristic.z"]
        ),
        warmup=values["heuristic.warmup"],
    )


def check_settings(settings: SimulationSettings) -> None:
    """Raise ``ValueError`` when the components of ``settings`` cannot work together."""
    TopologyConfig(settings.n_peers, settings.attachment_edges).validate()
    settings.data.validate()
    settings.link.validate()
    settings.churn.validate()
    settings.execution.validate()


def _check_sweep(
    settings: SimulationSettings,
    variable: SweepVariable,
    sweep_values: tuple[float, ...],
    line: int | None,
) -> list[ConfigDiagnostic]:
    problems: list[ConfigDiagnostic] = []
    for value in sweep_values:
        reason: str | None = None
        if variable is SweepVariable.N_PEERS and not float(value).is_integer():
            reason = ERR_SWEEP_PEERS.format(value=value)
        else:
            try:
                check_settings(settings.swept(variable, value))
            except ValueError as exc:
                reason = str(exc)
        if reason is not None:
            problems.append(
                ConfigDiagnostic(
                    line, "sweep.values", ERR_SWEEP_VALUE.format(value=value, reason=reason)
                )
            )
    return problems


def _resolve(values: Mapping[str, Any], lines: Mapping[str, int]) -> ExperimentConfig:
    problems: list[ConfigDiagnostic] = []
    settings = _settings_from(values)
    try:
        check_settings(settings)
    except ValueError as exc:
        problems.append(ConfigDiagnostic(None, None, str(exc)))
    variable: SweepVariable = values["sweep.variable"]
    problems.extend(
        _check_sweep(settings, variable, values["sweep.values"], lines.get("sweep.values"))
    )
    algorithms = values["algo.list"]
    baseline = values["summary.baseline"]
    if baseline is not None and baseline not in {spec.name for spec in algorithms}:
        problems.append(
            ConfigDiagnostic(
                lines.get("summary.baseline"),
                "summary.baseline",
                ERR_BASELINE_NOT_RUN.format(name=baseline),
            )
        )
    if problems:
        raise ConfigError(problems)
    if variable is SweepVariable.MEAN_LIFETIME and not settings.churn.enabled:
        logger.warning("sweeping meanLifetime while churn.distribution is none")
    return ExperimentConfig(
        sweep_variable=variable,
        sweep_values=values["sweep.values"],
        algorithms=algorithms,
        seeds=values["seed.list"],
        settings=settings,
        output_path=values["output.path"],
        summary_baseline=baseline,
    )


def validate_config(text: str) -> ExperimentConfig:
    """Resolve config ``text`` into an :class:`ExperimentConfig`.

    Keys missing from ``text`` take their value from :data:`DEFAULT_CONFIG`.

    Raises:
        ConfigError: With one line-anchored diagnostic per problem found.
    """
    entries, problems = parse_entries(text)
    lines = {entry.key: entry.line for entry in entries}
    raw = dict(DEFAULT_CONFIG)
    for entry in entries:
        if entry.key not in DEFAULT_CONFIG:
            problems.append(ConfigDiagnostic(entry.line, entry.key, ERR_UNKNOWN_KEY))
            continue
        raw[entry.key] = entry.value
    missing = {key for key in REQUIRED_KEYS if not raw[key]}
    problems.extend(
        ConfigDiagnostic(lines.get(key), key, ERR_MISSING_SWEEP.format(key=key))
        for key in REQUIRED_KEYS
        if key in missing
    )
    values: dict[str, Any] = {}
    for key, convert in _CONVERTERS.items():
        if key in missing:
            continue
        try:
            values[key] = convert(raw[key])
        except ValueError as exc:
            problems.append(ConfigDiagnostic(lines.get(key), key, str(exc)))
    if problems:
        raise ConfigError(problems)
    return _resolve(values, lines)


def validate_config_file(path: str | Path) -> ExperimentConfig:
    """Read ``path`` and resolve it with :func:`validate_config`."""
    return validate_config(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "ConfigDiagnostic",
    "ConfigError",
    "check_settings",
    "validate_config",
    "validate_config_file",
]
