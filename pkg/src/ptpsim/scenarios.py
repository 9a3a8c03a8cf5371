"""Scenario configuration schema and the builtin scenario suite.

A scenario is fully described by one JSON document (validated here with
pydantic); together with its seed it determines every byte of output.
The builtin suite covers the four standard runs:

  baseline       no payloads; both client clocks start 50 us off with
                 10 ppm oscillator error and must lock cleanly
  constant-3us   constant read bias on the system-clock read, sized to
                 leave the client 3 us ahead while the servo sees zero
  skew-{10,50,100}ppb
                 progressive read-ramp drift of the system clock at the
                 named rate (ns gained per second)
  jitter-500ns   500 ns gaussian noise on every second system-clock read

Read-side payload sign: shifting reads by +x drives the true clock to
-x, so the builtins install negated values to induce the advertised
positive client offsets.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .interception import HookPoint

DEFAULT_SEED = 42

HookName = Literal[
    "read_phc", "read_sys", "adj_freq_phc", "adj_freq_sys",
    "set_offset_phc", "set_offset_sys",
]


def hook_from_name(name: str) -> HookPoint:
    return HookPoint(name)


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ClockSpec(_StrictModel):
    intrinsic_freq_error_ppb: int = 0
    initial_offset_ns: int = 0


class PathSpec(_StrictModel):
    forward_delay_ns: int = Field(default=10_000, ge=0)
    reverse_delay_ns: int | None = Field(default=None, ge=0)
    jitter_std_ns: int = Field(default=0, ge=0)

    @property
    def reverse_or_forward_ns(self) -> int:
        return self.forward_delay_ns if self.reverse_delay_ns is None else self.reverse_delay_ns


class ServoSpec(_StrictModel):
    # Gains are parsed as exact decimals ("0.7" == 7/10) so servo math is
    # bit-reproducible; floats are accepted and go through their repr.
    kp: float | str = "0.7"
    ki: float | str = "0.3"
    first_step_threshold_ns: int = Field(default=20_000, gt=0)
    step_threshold_ns: int | None = Field(default=None, gt=0)
    max_freq_ppb: int = Field(default=500_000, gt=0)

    @field_validator("kp", "ki")
    @classmethod
    def _gain_in_stability_region(cls, v: float | str) -> float | str:
        value = Fraction(str(v))
        if not (0 < value <= 1):
            raise ValueError(f"gain {v} outside (0, 1]")
        return v

    def kp_fraction(self) -> Fraction:
        return Fraction(str(self.kp))

    def ki_fraction(self) -> Fraction:
        return Fraction(str(self.ki))


class AtTime(_StrictModel):
    at_ns: int = Field(ge=0)


ActivationSpec = Union[Literal["immediate", "on_lock"], AtTime]


class ConstantOffsetSpec(_StrictModel):
    kind: Literal["constant_offset"]
    hook: HookName
    delta_ns: int
    variant: Literal["read_shift", "step_tamper"] = "read_shift"
    activation: ActivationSpec = "on_lock"


class ProgressiveSkewSpec(_StrictModel):
    kind: Literal["progressive_skew"]
    hook: HookName
    rate_ppb: int
    variant: Literal["read_ramp", "freq_bias_add", "freq_bias_mult"] = "read_ramp"
    factor: float | str = "1.0"
    activation: ActivationSpec = "on_lock"

    def factor_fraction(self) -> Fraction:
        return Fraction(str(self.factor))


class RandomJitterSpec(_StrictModel):
    kind: Literal["random_jitter"]
    hook: HookName
    sigma_ns: int = Field(ge=0)
    period_n: int = Field(default=2, ge=1)
    distribution: Literal["gaussian", "uniform"] = "gaussian"
    activation: ActivationSpec = "on_lock"


PayloadSpec = Annotated[
    Union[ConstantOffsetSpec, ProgressiveSkewSpec, RandomJitterSpec],
    Field(discriminator="kind"),
]


class ScenarioConfig(_StrictModel):
    name: str
    description: str = ""
    duration_s: int = Field(ge=0)
    seed: int = DEFAULT_SEED
    master: ClockSpec = ClockSpec()
    phc: ClockSpec = ClockSpec()
    system: ClockSpec = ClockSpec()
    path: PathSpec = PathSpec()
    servo: ServoSpec = ServoSpec()
    rdelay_ns: int = 0
    observed_loop: Literal["system", "phc"] = "system"
    payloads: list[PayloadSpec] = Field(default_factory=list)


# Client clock defaults shared by the builtin suite: 50 us initial offset
# and 10 ppm oscillator error on both client clocks, ideal master,
# symmetric jitter-free 10 us path.
_PHC_SPEC = ClockSpec(intrinsic_freq_error_ppb=10_000, initial_offset_ns=50_000)
_SYS_SPEC = ClockSpec(intrinsic_freq_error_ppb=-10_000, initial_offset_ns=-50_000)


def _base(name: str, description: str, duration_s: int, payloads: list | None = None) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        description=description,
        duration_s=duration_s,
        phc=_PHC_SPEC.model_copy(),
        system=_SYS_SPEC.model_copy(),
        payloads=payloads or [],
    )


def builtin_scenarios() -> dict[str, ScenarioConfig]:
    """Fresh copies of the builtin suite, keyed by scenario name."""
    scenarios = [
        _base("baseline", "no attack; both loops lock from a 50 us start", 100),
        _base(
            "constant-3us",
            "constant bias leaving the client 3 us ahead while measured offset reads zero",
            100,
            [ConstantOffsetSpec(kind="constant_offset", hook="read_sys", delta_ns=-3000)],
        ),
        _base(
            "skew-10ppb",
            "progressive drift of the system clock at 10 ns/s",
            250,
            [ProgressiveSkewSpec(kind="progressive_skew", hook="read_sys", rate_ppb=-10)],
        ),
        _base(
            "skew-50ppb",
            "progressive drift of the system clock at 50 ns/s",
            250,
            [ProgressiveSkewSpec(kind="progressive_skew", hook="read_sys", rate_ppb=-50)],
        ),
        _base(
            "skew-100ppb",
            "progressive drift of the system clock at 100 ns/s",
            250,
            [ProgressiveSkewSpec(kind="progressive_skew", hook="read_sys", rate_ppb=-100)],
        ),
        _base(
            "jitter-500ns",
            "500 ns gaussian noise on every second system-clock read",
            100,
            [RandomJitterSpec(kind="random_jitter", hook="read_sys", sigma_ns=500, period_n=2)],
        ),
    ]
    return {s.name: s for s in scenarios}


def get_builtin(name: str) -> ScenarioConfig:
    scenarios = builtin_scenarios()
    if name not in scenarios:
        known = ", ".join(sorted(scenarios))
        raise KeyError(f"unknown scenario {name!r} (builtins: {known})")
    return scenarios[name]


# The scenario set behind `suite --figures paper`: the four standard
# runs, with the skew attack at all three rates for the overlay chart.
FIGURE_SUITE = (
    "baseline",
    "constant-3us",
    "skew-10ppb",
    "skew-50ppb",
    "skew-100ppb",
    "jitter-500ns",
)
