"""The three time-tampering payload families.

Each payload is installed on one hook point of the syscall boundary and
rewrites the values (reads) or requests (adjustments) flowing through it.
Payloads hold their own call-gating state and random stream; they never
read the true simulation time, only what crosses the boundary, which is
all a real in-kernel hook would see.

Sign note for read-side payloads: a hook that *adds* x to reads of a
clock makes the servo believe the clock is ahead by x, so the loop drives
the true clock x *behind* its reference. To induce a client that leads
its reference, install the negated value. The builtin scenarios do this.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .clocks import (
    NS_PER_SEC,
    TimexMode,
    TimexRequest,
    decode_step,
    encode_step,
    ppb_to_scaled_ppm,
)
from .interception import AttackPayload


class ConstantVariant(enum.Enum):
    READ_SHIFT = "read_shift"
    STEP_TAMPER = "step_tamper"


@dataclass
class ConstantOffsetPayload(AttackPayload):
    """A fixed bias, either on every read or on one step request.

    READ_SHIFT returns raw + delta on a read hook: the servo chases the
    shifted value forever and the clock stabilizes with a steady error.
    STEP_TAMPER shifts the total of a SETOFFSET request once it crosses
    the boundary; the daemon believes the offset was zeroed and holds the
    error indefinitely.
    """

    delta_ns: int = 0
    variant: ConstantVariant = ConstantVariant.READ_SHIFT

    def on_read(self, raw_ts: int, call_index: int) -> int:
        if self.variant is ConstantVariant.READ_SHIFT:
            return raw_ts + self.delta_ns
        return raw_ts

    def on_adj(self, req: TimexRequest, call_index: int) -> TimexRequest:
        if (
            self.variant is ConstantVariant.STEP_TAMPER
            and req.mode is TimexMode.ADJ_SETOFFSET
        ):
            return encode_step(decode_step(req) + self.delta_ns)
        return req


class SkewVariant(enum.Enum):
    READ_RAMP = "read_ramp"
    FREQ_BIAS_ADD = "freq_bias_add"
    FREQ_BIAS_MULT = "freq_bias_mult"


@dataclass
class ProgressiveSkewPayload(AttackPayload):
    """Slow cumulative drift at rate_ppb nanoseconds per second.

    READ_RAMP biases reads by an amount that grows linearly with the
    hooked clock's own elapsed time since the payload first fired. Each
    one-second change is tiny, but the servo keeps chasing a reference
    that creeps away, so the true clock drifts at -rate_ppb indefinitely,
    regardless of the servo gains.

    FREQ_BIAS_ADD adds rate_ppb to every frequency-adjustment request,
    and FREQ_BIAS_MULT scales the requested frequency by a factor. Both
    tamper with the actuator only: the servo still measures the true
    clock, so its integral term absorbs the bias after a bounded
    transient. They are kept for completeness and for studying that
    transient; READ_RAMP is the variant that produces sustained drift.
    """

    rate_ppb: int = 0
    variant: SkewVariant = SkewVariant.READ_RAMP
    factor: Fraction = field(default_factory=lambda: Fraction(1))
    _ramp_origin_ns: int | None = field(default=None, repr=False)

    def on_read(self, raw_ts: int, call_index: int) -> int:
        if self.variant is not SkewVariant.READ_RAMP:
            return raw_ts
        if self._ramp_origin_ns is None:
            self._ramp_origin_ns = raw_ts
        return raw_ts + (self.rate_ppb * (raw_ts - self._ramp_origin_ns)) // NS_PER_SEC

    def on_adj(self, req: TimexRequest, call_index: int) -> TimexRequest:
        if req.mode is not TimexMode.ADJ_FREQUENCY:
            return req
        if self.variant is SkewVariant.FREQ_BIAS_ADD:
            return TimexRequest(
                mode=TimexMode.ADJ_FREQUENCY,
                freq_scaled_ppm=req.freq_scaled_ppm + ppb_to_scaled_ppm(self.rate_ppb),
            )
        if self.variant is SkewVariant.FREQ_BIAS_MULT:
            return TimexRequest(
                mode=TimexMode.ADJ_FREQUENCY,
                freq_scaled_ppm=round(self.factor * req.freq_scaled_ppm),
            )
        return req


class JitterDistribution(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass
class RandomJitterPayload(AttackPayload):
    """Zero-mean noise of standard deviation sigma, every period_n-th call.

    On a read hook the sampled nanoseconds are added to the timestamp; on
    a frequency-adjustment hook the sample is applied as a ppb
    perturbation of the requested correction. The servo sees a sudden
    error, overcorrects, then counter-corrects on the next clean cycle:
    the clock jitters around the true time without a net bias.
    """

    sigma_ns: int = 0
    period_n: int = 2
    distribution: JitterDistribution = JitterDistribution.GAUSSIAN
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self) -> None:
        if self.period_n < 1:
            raise ValueError("period_n must be >= 1")

    def _sample(self) -> float:
        if self.distribution is JitterDistribution.UNIFORM:
            half_width = self.sigma_ns * math.sqrt(3.0)
            return self.rng.uniform(-half_width, half_width)
        return self.rng.gauss(0.0, float(self.sigma_ns))

    def on_read(self, raw_ts: int, call_index: int) -> int:
        if self.sigma_ns == 0 or call_index % self.period_n != 0:
            return raw_ts
        return raw_ts + round(self._sample())

    def on_adj(self, req: TimexRequest, call_index: int) -> TimexRequest:
        if (
            self.sigma_ns == 0
            or req.mode is not TimexMode.ADJ_FREQUENCY
            or call_index % self.period_n != 0
        ):
            return req
        perturb_ppb = round(self._sample())
        return TimexRequest(
            mode=TimexMode.ADJ_FREQUENCY,
            freq_scaled_ppm=req.freq_scaled_ppm + ppb_to_scaled_ppm(perturb_ppb),
        )
