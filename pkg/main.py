import sys
from pathlib import Path
from typing import Optional

import typer
from loguru import logger
from pydantic import ValidationError

from data_models.models import Scenario
from runner import ScenarioRunner, load_scenario
from utils.errors import ConfigError, SolitonError
from utils.settings import configure_logging, get_settings

app = typer.Typer(help="Weak-asymptotics delta-soliton dynamics: tables from scenario files.", add_completion=False)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def parse_eps_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"--eps-list must be comma-separated numbers, got '{text}'") from e
    if not values:
        raise ConfigError("--eps-list is empty")
    return values


def run(
    subcommand: str,
    config: str | Path | None,
    out: str | Path | None = None,
    threads: int | None = None,
    strict_compat: bool | None = None,
    eps_list: str | None = None,
) -> int:
    """Run one subcommand; flags override the scenario, which overrides the environment."""
    settings = get_settings()
    try:
        scenario, raw = load_scenario(config)
        if eps_list is not None:
            try:
                scenario = Scenario.model_validate({**scenario.model_dump(), "eps_list": parse_eps_list(eps_list)})
            except ValidationError as e:
                raise ConfigError(f"--eps-list: {e.errors()[0]['msg']}") from e
        out_dir = out or scenario.output.out_dir or settings.out_dir
        workers = threads or scenario.output.threads or settings.threads
        if workers < 1:
            raise ConfigError(f"--threads must be at least 1, got {workers}")
        strict = strict_compat if strict_compat is not None else (settings.strict_compat or scenario.strict_compat)
        ScenarioRunner(scenario, raw, out_dir, workers, strict).run(subcommand)
    except ConfigError as e:
        sys.stderr.write(f"error: ConfigError: {e}\n")
        return EXIT_CONFIG
    except SolitonError as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_SOLVER
    return EXIT_OK


ConfigOpt = typer.Option(None, "--config", help="Scenario YAML file")
OutOpt = typer.Option(None, "--out", help="Output directory")
ThreadsOpt = typer.Option(None, "--threads", help="Workers for eps sweeps")
StrictOpt = typer.Option(None, "--strict-compat/--no-strict-compat", help="Fail on corner incompatibility")
EpsOpt = typer.Option(None, "--eps-list", help="Comma-separated eps sweep, overrides the scenario")


def _command(name: str):
    def command(
        config: Optional[Path] = ConfigOpt,
        out: Optional[Path] = OutOpt,
        threads: Optional[int] = ThreadsOpt,
        strict_compat: Optional[bool] = StrictOpt,
        eps_list: Optional[str] = EpsOpt,
    ) -> None:
        code = run(name, config, out, threads, strict_compat, eps_list)
        if code:
            raise typer.Exit(code)

    command.__doc__ = f"Write the {name} tables."
    return command


for _name in ("moments", "profile", "simulate", "verify-order", "compare-direct", "counterexample", "nonuniqueness"):
    app.command(_name)(_command(_name))


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, "--log-level", help="loguru level for stderr")) -> None:
    configure_logging(log_level or get_settings().log_level)
    logger.debug("logging configured")


def cli() -> None:
    app()


if __name__ == "__main__":
    cli()
