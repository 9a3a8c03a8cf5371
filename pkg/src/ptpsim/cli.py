"""Command-line client for the simulator service.

The CLI contains no simulation logic: it builds the same request models
the HTTP service accepts and either executes them in-process (default) or
posts them to a running service given with --server. Files are always
written client-side from the response payloads, so local and remote runs
produce identical artifacts.

PTPSIM_OUT_DIR sets the default output directory; with no output
directory at all, results go to stdout only.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
import pydantic

from . import figures, telemetry
from .runner import RunResult, summaries_table
from .scenarios import ScenarioConfig, builtin_scenarios
from .service import (
    NamedCsv,
    ReportRequest,
    ReportResponse,
    RunRequest,
    RunResponse,
    SuiteRequest,
    SuiteResponse,
    execute_report,
    execute_run,
    execute_suite,
)

_SKEW_OVERLAY = ("skew-10ppb", "skew-50ppb", "skew-100ppb")


class Client:
    """Executes service requests locally or against a remote instance."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def _post(self, path: str, request: pydantic.BaseModel, response_model):
        if self.server is None:
            raise AssertionError("remote post on local client")
        try:
            resp = httpx.post(
                f"{self.server}{path}",
                json=request.model_dump(mode="json"),
                timeout=120.0,
            )
        except httpx.HTTPError as exc:
            raise click.ClickException(f"cannot reach {self.server}: {exc}") from exc
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise click.ClickException(f"server error {resp.status_code}: {detail}")
        return response_model.model_validate(resp.json())

    def run(self, request: RunRequest) -> RunResponse:
        if self.server:
            return self._post("/run", request, RunResponse)
        return execute_run(request)

    def suite(self, request: SuiteRequest) -> SuiteResponse:
        if self.server:
            return self._post("/suite", request, SuiteResponse)
        return execute_suite(request)

    def report(self, request: ReportRequest) -> ReportResponse:
        if self.server:
            return self._post("/report", request, ReportResponse)
        return execute_report(request)


def _load_scenario_arg(value: str) -> tuple[str | None, ScenarioConfig | None]:
    """A scenario argument is a builtin name or a path to a config file."""
    path = Path(value)
    if value.endswith(".json") or path.is_file():
        try:
            config = ScenarioConfig.model_validate_json(path.read_text())
        except OSError as exc:
            raise click.ClickException(f"cannot read scenario file {value}: {exc}") from exc
        except pydantic.ValidationError as exc:
            raise click.ClickException(f"invalid scenario config {value}:\n{exc}") from exc
        return None, config
    if value not in builtin_scenarios():
        known = ", ".join(sorted(builtin_scenarios()))
        raise click.ClickException(f"unknown scenario {value!r} (builtins: {known})")
    return value, None


def _result_for_figures(response: RunResponse) -> RunResult:
    trace = telemetry.trace_from_csv(
        response.csv or "", scenario=response.config.name, seed=response.config.seed
    )
    return RunResult(config=response.config, trace=trace, summary=response.summary)


_server_option = click.option(
    "--server", default=None, metavar="URL", help="Run against a remote service instead of in-process."
)
_out_option = click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    envvar="PTPSIM_OUT_DIR",
    help="Output directory (default: $PTPSIM_OUT_DIR, else stdout only).",
)


@click.group()
def main() -> None:
    """Deterministic PTP client-host simulator with fault-injection payloads."""


@main.command("run")
@click.option("--scenario", required=True, metavar="NAME|FILE", help="Builtin name or JSON config path.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--duration", type=int, default=None, help="Override the duration in seconds.")
@_out_option
@_server_option
def run_cmd(scenario: str, seed: int | None, duration: int | None, out: Path | None, server: str | None) -> None:
    """Run one scenario; print its summary, optionally write the trace CSV."""
    name, config = _load_scenario_arg(scenario)
    request = RunRequest(scenario=name, config=config, seed=seed, duration_s=duration)
    response = Client(server).run(request)
    if out is not None and response.csv is not None:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{response.config.name}.csv"
        csv_path.write_text(response.csv, newline="")
        click.echo(f"trace written to {csv_path}", err=True)
    click.echo(response.summary.model_dump_json(indent=2))


@main.command("suite")
@click.option("--figures", "figure_suite", type=click.Choice(["paper"]), default=None,
              help="Run the standard figure suite (all builtins plus the skew overlay).")
@click.option("--scenario", "scenario_args", multiple=True, metavar="NAME|FILE",
              help="Scenario to include; repeatable. Ignored with --figures.")
@click.option("--seed", type=int, default=None, help="Override every scenario's seed.")
@_out_option
@_server_option
def suite_cmd(figure_suite: str | None, scenario_args: tuple[str, ...], seed: int | None,
              out: Path | None, server: str | None) -> None:
    """Run a suite of scenarios; print the comparison report."""
    if figure_suite is None and not scenario_args:
        raise click.UsageError("give --figures paper or at least one --scenario")
    if figure_suite is not None:
        request = SuiteRequest(figures=figure_suite, seed=seed)
    else:
        entries: list[str | ScenarioConfig] = []
        for value in scenario_args:
            name, config = _load_scenario_arg(value)
            entries.append(name if name is not None else config)
        request = SuiteRequest(scenarios=entries, seed=seed)
    response = Client(server).suite(request)

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for item in response.results:
            if item.csv is not None:
                (out / f"{item.config.name}.csv").write_text(item.csv, newline="")
        (out / "suite_offsets.csv").write_text(response.combined_csv, newline="")
        (out / "suite_report.txt").write_text(response.report, newline="")
        results = [_result_for_figures(item) for item in response.results if item.csv]
        for result in results:
            figures.emit_plot_data(result, out)
        overlay = [r for r in results if r.config.name in _SKEW_OVERLAY]
        if len(overlay) >= 2:
            figures.emit_overlay(overlay, out)
        click.echo(f"artifacts written to {out}", err=True)

    click.echo(response.report, nl=False)
    if response.errors:
        for name, message in response.errors.items():
            click.echo(f"ERROR {name}: {message}", err=True)
        sys.exit(1)


@main.command("report")
@click.argument("traces", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True, help="Emit summaries as JSON instead of a table.")
@_server_option
def report_cmd(traces: tuple[Path, ...], as_json: bool, server: str | None) -> None:
    """Recompute metrics from previously exported trace CSVs."""
    request = ReportRequest(
        traces=[NamedCsv(name=p.stem, csv=p.read_text()) for p in traces]
    )
    try:
        response = Client(server).report(request)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    if as_json:
        click.echo(json.dumps([s.model_dump() for s in response.summaries], indent=2))
    else:
        click.echo(summaries_table(response.summaries), nl=False)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8061, show_default=True)
def serve_cmd(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


@main.command("scenarios")
def scenarios_cmd() -> None:
    """List the builtin scenarios."""
    for name, config in builtin_scenarios().items():
        click.echo(f"{name:<14} {config.duration_s:>4} s  {config.description}")


if __name__ == "__main__":
    main()
