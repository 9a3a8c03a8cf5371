"""PI clock-discipline servo, one instance per loop.

Mirrors the stock daemon behavior: an offset beyond the first-step
threshold is corrected by stepping the clock once, everything after that
is slewed with a proportional-integral frequency correction. The default
configuration never steps again after the initial lock (the subsequent
step threshold is infinite).

Gains and the integral accumulator are exact rationals so the servo's
arithmetic is deterministic to the bit across platforms; quantization to
the kernel's scaled-ppm unit happens only when a correction crosses the
syscall boundary.

Sign convention: positive offset means the disciplined clock is ahead of
its reference, so corrections are negated offsets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .clocks import (
    ClockId,
    SimClock,
    TimexMode,
    TimexRequest,
    encode_step,
    ppb_to_scaled_ppm,
)
from .interception import HookPoint, SyscallBoundary

DEFAULT_KP = Fraction(7, 10)
DEFAULT_KI = Fraction(3, 10)
DEFAULT_FIRST_STEP_THRESHOLD_NS = 20_000


class LockState(enum.Enum):
    INIT = "init"
    STEPPED = "stepped"
    LOCKED = "locked"


@dataclass(frozen=True)
class Slew:
    freq_ppb: Fraction

    @property
    def freq_scaled_ppm(self) -> int:
        return ppb_to_scaled_ppm(self.freq_ppb)


@dataclass(frozen=True)
class Step:
    amount_ns: int


ServoAction = Slew | Step


def _clamp(value: Fraction, bound: int) -> Fraction:
    return max(Fraction(-bound), min(Fraction(bound), value))


@dataclass
class PiServo:
    kp: Fraction = DEFAULT_KP
    ki: Fraction = DEFAULT_KI
    first_step_threshold_ns: int = DEFAULT_FIRST_STEP_THRESHOLD_NS
    step_threshold_ns: int | None = None  # None = never step after lock
    max_freq_ppb: int = 500_000
    integral_ppb: Fraction = field(default_factory=lambda: Fraction(0))
    lock_state: LockState = LockState.INIT
    last_correction_ppb: Fraction = field(default_factory=lambda: Fraction(0))

    def __post_init__(self) -> None:
        if not (0 < self.kp <= 1 and 0 < self.ki <= 1):
            raise ValueError(f"gains outside stability region: kp={self.kp} ki={self.ki}")

    def sample(self, offset_ns: int, interval_s: Fraction = Fraction(1)) -> ServoAction:
        """Consume one offset measurement, produce the next correction."""
        if interval_s <= 0:
            raise ValueError("interval must be positive")
        if (
            self.lock_state is LockState.INIT
            and abs(offset_ns) > self.first_step_threshold_ns
        ):
            self.lock_state = LockState.STEPPED
            return Step(-offset_ns)
        if self.step_threshold_ns is not None and abs(offset_ns) > self.step_threshold_ns:
            return Step(-offset_ns)

        # At a 1 Hz sampling interval the offset rate is numerically ppb.
        offset_rate = Fraction(offset_ns) / interval_s
        self.integral_ppb = _clamp(
            self.integral_ppb + self.ki * offset_rate, self.max_freq_ppb
        )
        freq_ppb = _clamp(-(self.kp * offset_rate + self.integral_ppb), self.max_freq_ppb)
        self.last_correction_ppb = freq_ppb
        self.lock_state = LockState.LOCKED
        return Slew(freq_ppb)


_ADJ_FREQ_HOOKS = {ClockId.PHC: HookPoint.ADJ_FREQ_PHC, ClockId.SYSTEM: HookPoint.ADJ_FREQ_SYS}
_SET_OFFSET_HOOKS = {ClockId.PHC: HookPoint.SET_OFFSET_PHC, ClockId.SYSTEM: HookPoint.SET_OFFSET_SYS}


def apply_action(action: ServoAction, clock: SimClock, boundary: SyscallBoundary) -> None:
    """Apply a servo correction through the syscall boundary.

    Never calls the raw clock operations directly: payloads installed on
    the adjustment hooks must get a chance to rewrite the request.
    """
    if isinstance(action, Slew):
        req = TimexRequest(
            mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=action.freq_scaled_ppm
        )
        req = boundary.adjust(_ADJ_FREQ_HOOKS[clock.id], req)
        clock.adj_frequency_raw(req.freq_scaled_ppm)
    else:
        req = encode_step(action.amount_ns)
        req = boundary.adjust(_SET_OFFSET_HOOKS[clock.id], req)
        clock.adj_setoffset_raw(req)
