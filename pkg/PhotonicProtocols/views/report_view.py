import logging
from typing import Any, Dict, Iterable, Optional, Tuple

from rich.console import Console
from rich.table import Table

from PhotonicProtocols.constants import MAIN_TITLE
from PhotonicProtocols.models.experiment_config import RunReport


def _headline(results: Dict[str, Any], prefix: str = "") -> Iterable[Tuple[str, Any]]:
    """Scalar results, flattened one level into section.name."""
    for name, value in sorted(results.items()):
        if isinstance(value, bool) or not isinstance(value, (int, float, str, dict)):
            continue
        if isinstance(value, dict):
            if not prefix:
                yield from _headline(value, f"{name}.")
            continue
        yield f"{prefix}{name}", value


class ReportView:
    """Summary of a RunReport for the terminal. Written to stderr so the
    JSON report on stdout stays machine-readable."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console(stderr=True)

    def results_table(self, report: RunReport) -> Table:
        table = Table(title=f"{MAIN_TITLE}: {report.config.command}")
        table.add_column("Result")
        table.add_column("Value", justify="right")
        for name, value in _headline(report.results):
            table.add_row(name, f"{value:.10g}" if isinstance(value, float) else str(value))
        return table

    def criteria_table(self, report: RunReport) -> Table:
        table = Table(title="Criteria")
        table.add_column("Criterion")
        table.add_column("Status")
        for name, passed in sorted(report.criteria.items()):
            table.add_row(name, "[green]pass[/green]" if passed else "[red]FAIL[/red]")
        return table

    def show(self, report: RunReport) -> None:
        logging.debug(f"Rendering report for {report.config.command}.")
        self.console.print(self.results_table(report))
        if report.criteria:
            self.console.print(self.criteria_table(report))
        verdict = "[green]passed[/green]" if report.passed else "[red]failed[/red]"
        self.console.print(f"Run {verdict} with seed {report.config.seed}.")
