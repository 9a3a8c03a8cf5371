"""HTTP facade over the simulator.

The service wraps the core runner so scenario runs, suites and metric
recomputation can be requested by any HTTP client; the bundled CLI is one
such client. All handler logic lives in plain functions (execute_*) that
take and return the pydantic models below, so the CLI can call them
in-process without a running server and get identical behavior.

Endpoints:
  GET  /health       liveness and version
  GET  /scenarios    builtin scenario configurations
  POST /run          run one scenario (builtin name or inline config)
  POST /suite        run several scenarios / the standard figure suite
  POST /report       recompute metrics from previously exported trace CSVs
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import __version__, telemetry
from .runner import (
    RunResult,
    ScenarioSummary,
    run_scenario,
    run_suite,
    summarize,
)
from .scenarios import FIGURE_SUITE, ScenarioConfig, builtin_scenarios, get_builtin


class TraceRow(BaseModel):
    t_s: int
    t_server_ns: int
    t_client_ns: int
    measured_offset_ns: int
    correction_ppb: int | None
    step_ns: int | None
    actual_offset_ns: int
    servo_state: str


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str | None = None
    config: ScenarioConfig | None = None
    seed: int | None = None
    duration_s: int | None = Field(default=None, ge=0)
    include_csv: bool = True
    include_trace: bool = False

    @model_validator(mode="after")
    def _exactly_one_source(self) -> "RunRequest":
        if (self.scenario is None) == (self.config is None):
            raise ValueError("provide exactly one of 'scenario' or 'config'")
        return self


class RunResponse(BaseModel):
    config: ScenarioConfig
    summary: ScenarioSummary
    csv: str | None = None
    trace: list[TraceRow] | None = None


class SuiteRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenarios: list[str | ScenarioConfig] | None = None
    figures: str | None = None  # "paper" runs the standard figure suite
    seed: int | None = None
    include_csv: bool = True

    @model_validator(mode="after")
    def _exactly_one_source(self) -> "SuiteRequest":
        if (self.scenarios is None) == (self.figures is None):
            raise ValueError("provide exactly one of 'scenarios' or 'figures'")
        if self.figures is not None and self.figures != "paper":
            raise ValueError(f"unknown figure suite {self.figures!r}")
        return self


class SuiteResponse(BaseModel):
    results: list[RunResponse]
    report: str
    combined_csv: str
    errors: dict[str, str] = {}


class NamedCsv(BaseModel):
    name: str
    csv: str


class ReportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    traces: list[NamedCsv] = Field(min_length=1)


class ReportResponse(BaseModel):
    summaries: list[ScenarioSummary]


def _resolve_config(
    scenario: str | ScenarioConfig | None,
    config: ScenarioConfig | None,
    seed: int | None,
    duration_s: int | None,
) -> ScenarioConfig:
    if isinstance(scenario, ScenarioConfig):
        resolved = scenario
    elif scenario is not None:
        resolved = get_builtin(scenario)
    else:
        assert config is not None
        resolved = config
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if duration_s is not None:
        updates["duration_s"] = duration_s
    return resolved.model_copy(update=updates) if updates else resolved


def _to_response(result: RunResult, include_csv: bool, include_trace: bool) -> RunResponse:
    rows = None
    if include_trace:
        rows = [
            TraceRow(
                t_s=r.t_true_s,
                t_server_ns=r.t_server_ns,
                t_client_ns=r.t_client_ns,
                measured_offset_ns=r.measured_offset_ns,
                correction_ppb=r.correction_freq_ppb,
                step_ns=r.correction_step_ns,
                actual_offset_ns=r.actual_offset_ns,
                servo_state=r.servo_state,
            )
            for r in result.trace.records
        ]
    return RunResponse(
        config=result.config,
        summary=result.summary,
        csv=telemetry.trace_to_csv(result.trace) if include_csv else None,
        trace=rows,
    )


def execute_run(request: RunRequest) -> RunResponse:
    config = _resolve_config(request.scenario, request.config, request.seed, request.duration_s)
    result = run_scenario(config)
    return _to_response(result, request.include_csv, request.include_trace)


def execute_suite(request: SuiteRequest) -> SuiteResponse:
    if request.figures == "paper":
        entries: list[str | ScenarioConfig] = list(FIGURE_SUITE)
    else:
        entries = request.scenarios or []
    configs = [
        _resolve_config(e, None, request.seed, None)
        if isinstance(e, str)
        else _resolve_config(None, e, request.seed, None)
        for e in entries
    ]
    suite = run_suite(configs)
    return SuiteResponse(
        results=[_to_response(r, request.include_csv, False) for r in suite.results],
        report=suite.report,
        combined_csv=suite.combined_csv,
        errors=suite.errors,
    )


def execute_report(request: ReportRequest) -> ReportResponse:
    summaries = []
    for item in request.traces:
        trace = telemetry.trace_from_csv(item.csv, scenario=item.name)
        summaries.append(summarize(trace))
    return ReportResponse(summaries=summaries)


app = FastAPI(
    title="ptpsim",
    version=__version__,
    description="Deterministic PTP client-host simulator with kernel-boundary fault injection",
)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/scenarios", response_model=dict[str, ScenarioConfig])
def scenarios() -> dict[str, ScenarioConfig]:
    return builtin_scenarios()


@app.post("/run", response_model=RunResponse)
def run(request: RunRequest) -> RunResponse:
    try:
        return execute_run(request)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc.args[0])) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/suite", response_model=SuiteResponse)
def suite(request: SuiteRequest) -> SuiteResponse:
    try:
        return execute_suite(request)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc.args[0])) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/report", response_model=ReportResponse)
def report(request: ReportRequest) -> ReportResponse:
    try:
        return execute_report(request)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
