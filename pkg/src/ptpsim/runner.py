"""Per-tick simulation loop, scenario execution and suite orchestration.

One tick is one simulated second (the sync interval, the second-loop
polling interval and the logging interval all coincide at 1 Hz):

  1. advance every clock by 1 s of true time
  2. one two-step exchange master <-> PHC; PI servo disciplines the PHC
  3. PHC-to-system comparison; PI servo disciplines the system clock
  4. append one telemetry record

All servo and protocol calls cross the syscall boundary, so installed
payloads see every read and every adjustment. The logged correction is
what the daemon commanded, before any payload tampering, mirroring what
the real daemons print. The actual offset is computed from raw clock
state and never passes through hooks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel

from . import rng, telemetry
from .attacks import (
    ConstantOffsetPayload,
    ConstantVariant,
    JitterDistribution,
    ProgressiveSkewPayload,
    RandomJitterPayload,
    SkewVariant,
)
from .clocks import NS_PER_SEC, ClockId, SimClock
from .interception import (
    Activation,
    AttackPayload,
    HookPoint,
    PayloadChain,
    SyscallBoundary,
)
from .protocol import (
    PathModel,
    TimestampQuad,
    compute_offset_delay,
    phc_to_sys_offset,
    run_sync_exchange,
)
from .scenarios import (
    ConstantOffsetSpec,
    ProgressiveSkewSpec,
    RandomJitterSpec,
    ScenarioConfig,
    hook_from_name,
)
from .servo import LockState, PiServo, Slew, Step, apply_action
from .telemetry import LogRecord, Trace

DEFAULT_STEALTH_FILTER_NS = 1_000
DEFAULT_DRIFT_SPEC_PPB = 10.0
MTIE_TAUS = (1, 10, 100)


class StealthSummary(BaseModel):
    filter_threshold_ns: int
    drift_spec_ppb: float
    window_start_s: int
    interval_violation_times: list[int]
    max_interval_delta_ns: int
    fitted_drift_ppb: float
    drift_exceeded: bool
    filter_tripped: bool


class ScenarioSummary(BaseModel):
    """Headline metrics; every value is recomputable from the trace."""

    scenario: str
    seed: int
    duration_s: int
    degenerate: bool = False
    lock_time_s: int | None = None
    steady_window_start_s: int | None = None
    residual_offset_ns: float | None = None
    drift_fit_window_s: tuple[int, int] | None = None
    drift_slope_ns_per_s: float | None = None
    jitter_window_start_s: int | None = None
    jitter_std_ns: float | None = None
    mtie_ns: dict[int, int] = {}
    stealth: StealthSummary | None = None
    final_actual_offset_ns: int | None = None


def _build_payload(spec, stream: random.Random) -> AttackPayload:
    if isinstance(spec, ConstantOffsetSpec):
        return ConstantOffsetPayload(
            delta_ns=spec.delta_ns, variant=ConstantVariant(spec.variant)
        )
    if isinstance(spec, ProgressiveSkewSpec):
        return ProgressiveSkewPayload(
            rate_ppb=spec.rate_ppb,
            variant=SkewVariant(spec.variant),
            factor=spec.factor_fraction(),
        )
    if isinstance(spec, RandomJitterSpec):
        return RandomJitterPayload(
            sigma_ns=spec.sigma_ns,
            period_n=spec.period_n,
            distribution=JitterDistribution(spec.distribution),
            rng=stream,
        )
    raise TypeError(f"unknown payload spec: {type(spec).__name__}")


def _activation(spec_activation) -> Activation:
    if spec_activation == "immediate":
        return Activation.immediate()
    if spec_activation == "on_lock":
        return Activation.when_locked()
    return Activation.at(spec_activation.at_ns)


@dataclass
class World:
    """All mutable state of one running scenario."""

    config: ScenarioConfig
    master: SimClock
    phc: SimClock
    system: SimClock
    path: PathModel
    boundary: SyscallBoundary
    servo_phc: PiServo
    servo_sys: PiServo
    trace: Trace
    true_now_ns: int = 0
    quads: list[TimestampQuad] = field(default_factory=list)


def build_world(config: ScenarioConfig, *, bypass_interception: bool = False) -> World:
    servo_kwargs = dict(
        kp=config.servo.kp_fraction(),
        ki=config.servo.ki_fraction(),
        first_step_threshold_ns=config.servo.first_step_threshold_ns,
        step_threshold_ns=config.servo.step_threshold_ns,
        max_freq_ppb=config.servo.max_freq_ppb,
    )
    chain: PayloadChain | None = None
    if not bypass_interception:
        chain = PayloadChain()
        for i, spec in enumerate(config.payloads):
            payload = _build_payload(spec, rng.stream(config.seed, f"payload.{i}.{spec.kind}"))
            chain.install(hook_from_name(spec.hook), payload, _activation(spec.activation))
    elif config.payloads:
        raise ValueError("cannot bypass interception in a scenario with payloads")

    def clock(cid: ClockId, spec) -> SimClock:
        return SimClock(
            id=cid,
            intrinsic_freq_error_ppb=spec.intrinsic_freq_error_ppb,
            phase_offset_ns=spec.initial_offset_ns,
            max_freq_ppb=config.servo.max_freq_ppb,
        )

    return World(
        config=config,
        master=clock(ClockId.MASTER, config.master),
        phc=clock(ClockId.PHC, config.phc),
        system=clock(ClockId.SYSTEM, config.system),
        path=PathModel(
            forward_delay_ns=config.path.forward_delay_ns,
            reverse_delay_ns=config.path.reverse_or_forward_ns,
            jitter_std_ns=config.path.jitter_std_ns,
            rng=rng.stream(config.seed, "path"),
        ),
        boundary=SyscallBoundary(chain=chain),
        servo_phc=PiServo(**servo_kwargs),
        servo_sys=PiServo(**servo_kwargs),
        trace=Trace(scenario=config.name, seed=config.seed),
    )


def _sample_and_apply(world: World, servo: PiServo, clock: SimClock, offset_ns: int, loop: str):
    was_locked = servo.lock_state is LockState.LOCKED
    action = servo.sample(offset_ns)
    apply_action(action, clock, world.boundary)
    if not was_locked and servo.lock_state is LockState.LOCKED:
        world.boundary.note_lock(loop)
    return action


def tick(world: World, dt_ns: int = NS_PER_SEC) -> None:
    """Advance the world by one sync interval and log one record."""
    world.master.advance(dt_ns)
    world.phc.advance(dt_ns)
    world.system.advance(dt_ns)
    world.true_now_ns += dt_ns
    now = world.true_now_ns
    world.boundary.set_time(now)

    # Loop 1: master -> PHC over the network path.
    quad = run_sync_exchange(world.master, world.phc, world.path, now, world.boundary)
    world.quads.append(quad)
    phc_offset = compute_offset_delay(quad).offset_ns
    phc_action = _sample_and_apply(world, world.servo_phc, world.phc, phc_offset, "phc")

    # Loop 2: PHC -> system clock, both read at the same instant.
    phc_read = world.boundary.read(HookPoint.READ_PHC, world.phc.read_raw(now))
    sys_read = world.boundary.read(HookPoint.READ_SYS, world.system.read_raw(now))
    sys_offset = phc_to_sys_offset(phc_read, sys_read, world.config.rdelay_ns)
    sys_action = _sample_and_apply(world, world.servo_sys, world.system, sys_offset, "system")

    if world.config.observed_loop == "system":
        measured, action, state = sys_offset, sys_action, world.servo_sys.lock_state
        client = world.system
    else:
        measured, action, state = phc_offset, phc_action, world.servo_phc.lock_state
        client = world.phc

    t_server = world.master.read_raw(now)
    t_client = client.read_raw(now)
    world.trace.append(
        LogRecord(
            t_true_s=now // NS_PER_SEC,
            t_server_ns=t_server,
            t_client_ns=t_client,
            measured_offset_ns=measured,
            correction_freq_ppb=round(action.freq_ppb) if isinstance(action, Slew) else None,
            correction_step_ns=action.amount_ns if isinstance(action, Step) else None,
            actual_offset_ns=t_client - t_server,
            servo_state=state.value,
        )
    )


def simulate(config: ScenarioConfig, *, bypass_interception: bool = False) -> World:
    world = build_world(config, bypass_interception=bypass_interception)
    for _ in range(config.duration_s):
        tick(world)
    return world


def _lock_time_s(trace: Trace) -> int | None:
    for r in trace.records:
        if r.servo_state == LockState.LOCKED.value:
            return r.t_true_s
    return None


def summarize(
    trace: Trace,
    *,
    stealth_filter_ns: int = DEFAULT_STEALTH_FILTER_NS,
    drift_spec_ppb: float = DEFAULT_DRIFT_SPEC_PPB,
) -> ScenarioSummary:
    """Standard metrics block over a finished trace.

    Window policy: residual over the tail from t=60 (or the second half
    of short runs), jitter from t=50, drift fitted from t=20 to the end;
    a trace too short for a window reports None for that metric.
    """
    duration = len(trace)
    summary = ScenarioSummary(
        scenario=trace.scenario, seed=trace.seed, duration_s=duration
    )
    if duration < 2:
        summary.degenerate = True
        return summary

    summary.lock_time_s = _lock_time_s(trace)
    summary.final_actual_offset_ns = trace.records[-1].actual_offset_ns

    steady_start = 60 if duration > 70 else max(1, duration // 2)
    summary.steady_window_start_s = steady_start
    summary.residual_offset_ns = telemetry.residual_offset(trace, steady_start)

    fit_start = 20 if duration > 40 else max(1, duration // 4)
    try:
        summary.drift_slope_ns_per_s = telemetry.drift_slope(trace, fit_start)
        summary.drift_fit_window_s = (fit_start, trace.records[-1].t_true_s)
    except telemetry.DegenerateWindow:
        pass

    jitter_start = 50 if duration > 60 else max(1, duration // 2)
    try:
        summary.jitter_std_ns = telemetry.jitter_std(trace, jitter_start)
        summary.jitter_window_start_s = jitter_start
    except telemetry.DegenerateWindow:
        pass

    summary.mtie_ns = {}
    for tau in MTIE_TAUS:
        if duration > tau:
            _, mtie = telemetry.tie_mtie(trace, tau)
            summary.mtie_ns[tau] = mtie

    try:
        report = telemetry.stealth_check(trace, stealth_filter_ns, drift_spec_ppb)
        summary.stealth = StealthSummary(
            filter_threshold_ns=report.filter_threshold_ns,
            drift_spec_ppb=report.drift_spec_ppb,
            window_start_s=report.window_start_s,
            interval_violation_times=list(report.interval_violation_times),
            max_interval_delta_ns=report.max_interval_delta_ns,
            fitted_drift_ppb=report.fitted_drift_ppb,
            drift_exceeded=report.drift_exceeded,
            filter_tripped=report.filter_tripped,
        )
    except telemetry.DegenerateWindow:
        pass
    return summary


@dataclass
class RunResult:
    config: ScenarioConfig
    trace: Trace
    summary: ScenarioSummary
    csv_path: Path | None = None


def run_scenario(
    config: ScenarioConfig,
    *,
    out_dir: str | Path | None = None,
    bypass_interception: bool = False,
) -> RunResult:
    world = simulate(config, bypass_interception=bypass_interception)
    summary = summarize(world.trace)
    csv_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{config.name}.csv"
        csv_path.write_text(telemetry.trace_to_csv(world.trace), newline="")
    return RunResult(config=config, trace=world.trace, summary=summary, csv_path=csv_path)


@dataclass
class SuiteResult:
    results: list[RunResult]
    report: str
    combined_csv: str
    errors: dict[str, str] = field(default_factory=dict)


def combined_offsets_csv(results: list[RunResult]) -> str:
    """Long-format actual-offset series of every run, for overlay plots."""
    lines = ["scenario,t_s,actual_offset_ns"]
    for result in results:
        for t, x in result.trace.actual_series():
            lines.append(f"{result.config.name},{t},{x}")
    return "\n".join(lines) + "\n"


def summaries_table(summaries: list[ScenarioSummary]) -> str:
    header = (
        f"{'scenario':<16} {'residual_ns':>12} {'slope_ns_s':>11} {'jitter_ns':>10} "
        f"{'mtie10_ns':>10} {'filter':>7} {'drift':>6}"
    )
    lines = [header, "-" * len(header)]

    def fmt(v, spec=".1f"):
        return "-" if v is None else format(v, spec)

    for s in summaries:
        stealth_f = "-" if s.stealth is None else ("TRIP" if s.stealth.filter_tripped else "ok")
        stealth_d = "-" if s.stealth is None else ("DRIFT" if s.stealth.drift_exceeded else "ok")
        lines.append(
            f"{s.scenario:<16} {fmt(s.residual_offset_ns):>12} "
            f"{fmt(s.drift_slope_ns_per_s, '.2f'):>11} {fmt(s.jitter_std_ns):>10} "
            f"{fmt(s.mtie_ns.get(10), 'd'):>10} {stealth_f:>7} {stealth_d:>6}"
        )
    return "\n".join(lines) + "\n"


def suite_report(results: list[RunResult]) -> str:
    return summaries_table([r.summary for r in results])


def run_suite(
    configs: list[ScenarioConfig], *, out_dir: str | Path | None = None
) -> SuiteResult:
    if not configs:
        raise ValueError("suite needs at least one scenario")
    results: list[RunResult] = []
    errors: dict[str, str] = {}
    for config in configs:
        try:
            results.append(run_scenario(config, out_dir=out_dir))
        except Exception as exc:  # aggregate, report per scenario
            errors[config.name] = str(exc)
    report = suite_report(results)
    combined = combined_offsets_csv(results)
    if out_dir is not None and results:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "suite_offsets.csv").write_text(combined, newline="")
        (out / "suite_report.txt").write_text(report, newline="")
    return SuiteResult(results=results, report=report, combined_csv=combined, errors=errors)
