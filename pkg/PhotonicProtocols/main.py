# Import the logging config before any other imports.
import PhotonicProtocols.logging_config

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import click
import pandas as pd

import PhotonicProtocols.constants as constants
from PhotonicProtocols.models.exceptions import (
    DecompositionMismatch,
    DerivationFailed,
    PhotonicError,
)
from PhotonicProtocols.models.experiment_config import (
    COMMAND_PARAMS,
    MAX_SEED,
    ExperimentConfig,
    ParamSpec,
    RunReport,
    load_config_file,
)
from PhotonicProtocols.models.experiment_runner import ExperimentRunner
from PhotonicProtocols.views.report_view import ReportView

PROG_NAME = "photonic-protocols"
RUN_OPTIONS = ("config", "seed", "output", "csv", "timing")

COMMAND_HELP = {
    "bell": "Many-party CHSH test on two copies of |W_K>.",
    "bleed-analytic": "Exact bleeding probabilities on the four-party symmetric state.",
    "bleed-seq": "Sequential bleeding on four copies of |W_K>, sampled and exact.",
    "faux-check": "Direct versus third-quantized outcome statistics.",
    "sample": "Adaptive boson sampling and its permanent formula.",
    "permanent": "Permanent of a JSON matrix.",
    "povm-check": "Spectral W-like criterion on POVM elements.",
    "wstate-fidelity": "W copies versus Sigma* and heralded W sources.",
}


def run_options(function: Callable) -> Callable:
    """Options accepted on the group and on every command. The command's
    value wins over the group's, which wins over the config file."""
    options = [
        click.option(
            "--config",
            type=click.Path(exists=True, dir_okay=False),
            default=None,
            help="JSON run configuration.",
        ),
        click.option(
            "--seed", type=click.IntRange(0, MAX_SEED), default=None, help="Run seed."
        ),
        click.option(
            "--output",
            type=click.Path(dir_okay=False),
            default=None,
            help="Write the JSON report here instead of stdout.",
        ),
        click.option(
            "--csv",
            type=click.Path(dir_okay=False),
            default=None,
            help="Write the outcome table as CSV.",
        ),
        click.option(
            "--timing/--no-timing",
            default=None,
            help="Add wall-clock milliseconds to the report.",
        ),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def build_config(
    ctx: click.Context, command: Optional[str], flags: Dict[str, Any]
) -> ExperimentConfig:
    """Merges command flags, group flags and the config file.

    Raises:
        click.UsageError: On an unreadable or invalid config file, a
            command mismatch, or parameters out of range.
    """
    flags = dict(flags)
    group = (ctx.obj or {}).get("group", {})
    chosen = {key: flags.pop(key, None) for key in RUN_OPTIONS}
    for key in RUN_OPTIONS:
        if chosen[key] is None:
            chosen[key] = group.get(key)

    try:
        document = load_config_file(chosen["config"]) if chosen["config"] else {}
        file_command = document.get("command")
        command = command or file_command
        if command is None:
            raise click.UsageError("The config file does not name a command.", ctx)
        if file_command is not None and file_command != command:
            raise click.UsageError(
                f"The config file is for {file_command!r}, not {command!r}.", ctx
            )
        params = dict(document.get("params", {}))
        params.update({name: value for name, value in flags.items() if value is not None})

        def pick(key: str) -> Any:
            return chosen[key] if chosen[key] is not None else document.get(key)

        return ExperimentConfig.create(
            command,
            params,
            seed=pick("seed"),
            output_path=pick("output"),
            csv_path=pick("csv"),
            timing=pick("timing"),
        )
    except PhotonicError as error:
        logging.error(f"Rejected configuration: {error}")
        raise click.UsageError(str(error), ctx) from error


def _param_option(name: str, spec: ParamSpec) -> Callable:
    flag = f"--{name.replace('_', '-')}"
    if spec.kind is bool:
        return click.option(
            f"{flag}/--no-{name.replace('_', '-')}", name, default=None, help=spec.help
        )
    kind = click.Choice(spec.choices) if spec.choices else spec.kind
    return click.option(flag, name, type=kind, default=None, help=spec.help)


def _make_command(command: str) -> click.Command:
    @click.pass_context
    def callback(ctx: click.Context, **flags: Any) -> ExperimentConfig:
        return build_config(ctx, command, flags)

    callback = run_options(callback)
    for name, spec in reversed(list(COMMAND_PARAMS[command].items())):
        callback = _param_option(name, spec)(callback)
    return click.command(command, help=COMMAND_HELP[command])(callback)


@click.group(invoke_without_command=True)
@click.version_option(constants.VERSION, prog_name=constants.MAIN_TITLE)
@run_options
@click.pass_context
def cli(ctx: click.Context, **flags: Any) -> Optional[ExperimentConfig]:
    """Exact simulation and verification of distributed linear-optical
    W-state protocols. Every run prints a JSON report and exits 0 when all
    of its criteria pass, 1 when one fails and 2 on a usage error."""
    ctx.ensure_object(dict)
    ctx.obj["group"] = flags
    if ctx.invoked_subcommand is None:
        if flags["config"] is None:
            raise click.UsageError("Give a command, or a --config file naming one.", ctx)
        return build_config(ctx, None, {})
    return None


for _command in COMMAND_PARAMS:
    cli.add_command(_make_command(_command))


def write_report(report: RunReport) -> None:
    text = report.to_json()
    if report.config.output_path:
        Path(report.config.output_path).write_text(text + "\n", encoding="utf-8")
        logging.info(f"Report written to {report.config.output_path}.")
    else:
        click.echo(text)
    if report.config.csv_path:
        if report.table:
            pd.DataFrame(report.table).to_csv(report.config.csv_path, index=False)
            logging.info(f"Table written to {report.config.csv_path}.")
        else:
            logging.warning(f"{report.config.command} has no table to write as CSV.")
    ReportView().show(report)


def run(config: ExperimentConfig) -> Tuple[RunReport, int]:
    """Runs a validated config, writes its report and returns it with the
    exit code.

    Raises:
        click.UsageError: If an input file or parameter is rejected.
        click.ClickException: If a derivation or decomposition search fails.
    """
    try:
        report = ExperimentRunner(config).run()
    except (DerivationFailed, DecompositionMismatch) as error:
        logging.error(f"{config.command} failed: {error}")
        raise click.ClickException(str(error)) from error
    except PhotonicError as error:
        logging.error(f"{config.command} rejected its inputs: {error}")
        raise click.UsageError(str(error)) from error
    write_report(report)
    return report, report.exit_code


@cli.result_callback()
@click.pass_context
def finish(ctx: click.Context, result: Optional[ExperimentConfig], **_flags: Any) -> Any:
    if ctx.obj.get("parse_only"):
        return result
    _, code = run(result)
    ctx.exit(code)


def parse_config(argv: Sequence[str]) -> ExperimentConfig:
    """Parses a command line into an ExperimentConfig without running it.

    Raises:
        click.UsageError: For unknown commands, flags or keys and values
            out of range.
    """
    config = cli.main(
        args=list(argv),
        prog_name=PROG_NAME,
        standalone_mode=False,
        obj={"parse_only": True},
    )
    if not isinstance(config, ExperimentConfig):
        raise click.UsageError("No experiment was configured.")
    return config


def main(argv: Optional[Sequence[str]] = None) -> None:
    cli.main(args=None if argv is None else list(argv), prog_name=PROG_NAME)


if __name__ == "__main__":
    main()
