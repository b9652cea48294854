import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Literal

import yaml
from loguru import logger
from pydantic import BaseModel, Field, ValidationError

from data_models.models import Scenario
from toolkit.toolkits import (
    build_background,
    compare_direct_table,
    counterexample_table,
    file_digest,
    moments_table,
    nonuniqueness_tables,
    profile_table,
    simulate_table,
    verify_order_tables,
    write_plot,
    write_table,
)
from utils.errors import ConfigError

SUBCOMMANDS = ("moments", "profile", "simulate", "verify-order", "compare-direct", "counterexample", "nonuniqueness")
TIME_BOUND = ("simulate", "verify-order", "compare-direct", "nonuniqueness")


class Router(BaseModel):
    """Subcommand to dispatch"""
    next: Literal["moments", "profile", "simulate", "verify-order", "compare-direct", "counterexample", "nonuniqueness"] = Field(
        description="The node that produces this subcommand's tables"
    )


@dataclass
class RunRecord:
    subcommand: str
    scenario_hash: str
    config_digest: str
    outputs: dict[str, str] = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / "run_record.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
        return path


def config_digest(raw: bytes) -> str:
    """Git blob id of the config file."""
    return hashlib.sha1(b"blob %d\0" % len(raw) + raw).hexdigest()


def scenario_hash(scenario: Scenario) -> str:
    canonical = json.dumps(scenario.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.model_dump(mode="json"), sort_keys=True)


def parse_scenario(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"scenario is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping at the top level")
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'scenario'}: {err['msg']}" for err in e.errors())
        raise ConfigError(problems) from e


def load_scenario(path: str | Path | None) -> tuple[Scenario, bytes]:
    """Scenario and the raw bytes it was read from; defaults when no path is given."""
    if path is None:
        return Scenario(), b""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"config file is not UTF-8: {path}") from e
    scenario = parse_scenario(text)
    logger.info("loaded scenario '{}' (mode {}) from {}", scenario.name, scenario.mode, path)
    return scenario, raw


def check_horizon(scenario: Scenario) -> None:
    bf = build_background(scenario)
    if scenario.t_end >= bf.breaking_time:
        raise ConfigError(f"t_end = {scenario.t_end} is not below the breaking time {bf.breaking_time:.6g}")


class ScenarioRunner:
    def __init__(self, scenario: Scenario, raw_config: bytes = b"", out_dir: str | Path = "results",
                 threads: int = 1, strict_compat: bool = False):
        self.scenario = scenario
        self.raw_config = raw_config
        self.out_dir = Path(out_dir)
        self.threads = threads
        self.strict_compat = strict_compat
        self.digest = scenario_hash(scenario)

    def moments_node(self) -> dict:
        return moments_table(self.scenario)

    def profile_node(self) -> dict:
        return profile_table(self.scenario)

    def simulate_node(self) -> dict:
        tables, traj = simulate_table(self.scenario, self.strict_compat)
        logger.info("trajectory digest {}", traj.digest())
        return tables

    def verify_order_node(self) -> dict:
        return verify_order_tables(self.scenario, self.strict_compat, self.threads)

    def compare_direct_node(self) -> dict:
        return compare_direct_table(self.scenario, self.strict_compat)

    def counterexample_node(self) -> dict:
        return counterexample_table(self.scenario)

    def nonuniqueness_node(self) -> dict:
        return nonuniqueness_tables(self.scenario)

    def workflow(self) -> dict[str, Callable[[], dict]]:
        return {
            "moments": self.moments_node,
            "profile": self.profile_node,
            "simulate": self.simulate_node,
            "verify-order": self.verify_order_node,
            "compare-direct": self.compare_direct_node,
            "counterexample": self.counterexample_node,
            "nonuniqueness": self.nonuniqueness_node,
        }

    def run(self, subcommand: str) -> RunRecord:
        try:
            route = Router(next=subcommand)
        except ValidationError as e:
            raise ConfigError(f"unknown subcommand '{subcommand}'; choose one of {', '.join(SUBCOMMANDS)}") from e
        if route.next in TIME_BOUND:
            check_horizon(self.scenario)

        tables = self.workflow()[route.next]()
        record = RunRecord(route.next, self.digest, config_digest(self.raw_config))
        for name, df in tables.items():
            path = write_table(df, self.out_dir / f"{name}.csv", self.digest)
            record.outputs[path.name] = file_digest(path)
            if self.scenario.output.plots:
                plot = write_plot(name, df, self.out_dir / f"{name}.svg")
                if plot is not None:
                    record.outputs[plot.name] = file_digest(plot)
        record.write(self.out_dir)
        logger.info("{} wrote {} file(s) to {}", route.next, len(record.outputs), self.out_dir)
        return record
