"""Simulated clocks with kernel-style read / slew / step semantics.

All clock arithmetic is exact integer arithmetic on nanosecond counts.
A clock's local time is the integral of its rate over true simulation
time, carried incrementally with a sub-nanosecond residual accumulator,
plus a steppable phase offset:

    local(t) = integral_0^t (1 + (intrinsic_ppb + servo_ppb)/1e9) + phase

Frequency adjustments are expressed in the kernel's "scaled ppm" unit
(ppm * 2^16) and converted to integer parts-per-billion; phase steps are
(seconds, nanoseconds) pairs normalized so that 0 <= ns < 1e9, with the
usual borrow into the seconds field for negative totals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

NS_PER_SEC = 1_000_000_000

# Scaled ppm: 1 ppm == 2^16 units, so one unit is 1000/65536 ppb.
SCALED_PPM_PER_PPM = 65536

# Largest frequency correction a clock accepts, in ppb (0.05% rate error).
DEFAULT_MAX_FREQ_PPB = 500_000


class ClockId(enum.Enum):
    MASTER = "master"
    PHC = "phc"
    SYSTEM = "system"


class TimexMode(enum.Enum):
    ADJ_FREQUENCY = "adj_frequency"
    ADJ_SETOFFSET = "adj_setoffset"


class TimexError(ValueError):
    """Raised for malformed clock-adjustment requests."""


@dataclass
class TimexRequest:
    """One clock-adjustment request crossing the syscall boundary."""

    mode: TimexMode
    freq_scaled_ppm: int = 0
    offset_sec: int = 0
    offset_ns: int = 0

    def total_offset_ns(self) -> int:
        return self.offset_sec * NS_PER_SEC + self.offset_ns

    def is_normalized(self) -> bool:
        return 0 <= self.offset_ns < NS_PER_SEC


def scaled_ppm_to_ppb(scaled_ppm: int | Fraction) -> int:
    return round(Fraction(scaled_ppm) * 1000 / SCALED_PPM_PER_PPM)


def ppb_to_scaled_ppm(ppb: int | Fraction) -> int:
    return round(Fraction(ppb) * SCALED_PPM_PER_PPM / 1000)


def encode_step(ns_total: int) -> TimexRequest:
    """Encode a signed nanosecond step as a normalized SETOFFSET request.

    Floor division performs the borrow: -1 ns becomes (-1 s, 999999999 ns).
    """
    sec, ns = divmod(ns_total, NS_PER_SEC)
    return TimexRequest(mode=TimexMode.ADJ_SETOFFSET, offset_sec=sec, offset_ns=ns)


def decode_step(req: TimexRequest) -> int:
    if req.mode is not TimexMode.ADJ_SETOFFSET:
        raise TimexError(f"not a SETOFFSET request: {req.mode}")
    return req.total_offset_ns()


@dataclass
class SimClock:
    """A simulated clock advanced in lock-step with true simulation time.

    ``intrinsic_freq_error_ppb`` is the oscillator's fixed rate error;
    ``servo_freq_ppb`` is the correction applied through adj_frequency.
    The residual accumulator guarantees that advancing in k steps of dt
    equals advancing once by k*dt, exactly.
    """

    id: ClockId
    intrinsic_freq_error_ppb: int = 0
    servo_freq_ppb: int = 0
    phase_offset_ns: int = 0
    max_freq_ppb: int = DEFAULT_MAX_FREQ_PPB

    advanced_to_ns: int = 0
    elapsed_local_ns: int = 0
    residual_frac_ns: int = 0

    def _rate_numerator(self) -> int:
        rate = NS_PER_SEC + self.intrinsic_freq_error_ppb + self.servo_freq_ppb
        if rate <= 0:
            raise ValueError(f"clock {self.id} rate is non-positive: {rate}")
        return rate

    def advance(self, true_dt_ns: int) -> None:
        """Advance the clock by a true-time interval (exact integration)."""
        if true_dt_ns < 0:
            raise ValueError("cannot advance a clock backwards")
        acc = self.residual_frac_ns + true_dt_ns * self._rate_numerator()
        self.elapsed_local_ns += acc // NS_PER_SEC
        self.residual_frac_ns = acc % NS_PER_SEC
        self.advanced_to_ns += true_dt_ns

    def read_raw(self, true_now_ns: int | None = None) -> int:
        """Local time at the instant the clock is advanced to, without hooks."""
        if true_now_ns is not None and true_now_ns != self.advanced_to_ns:
            raise ValueError(
                f"clock {self.id} advanced to {self.advanced_to_ns}, not {true_now_ns}"
            )
        return self.elapsed_local_ns + self.phase_offset_ns

    def local_at(self, true_t_ns: int) -> int:
        """Local time at a true instant at or after the last advance.

        Pure lookahead with the current rate; uses the same residual
        arithmetic as advance() so peeking never disagrees with advancing.
        """
        extra = true_t_ns - self.advanced_to_ns
        if extra < 0:
            raise ValueError("cannot read a clock in its past")
        acc = self.residual_frac_ns + extra * self._rate_numerator()
        return self.elapsed_local_ns + acc // NS_PER_SEC + self.phase_offset_ns

    def adj_frequency_raw(self, freq_scaled_ppm: int) -> None:
        """Set the servo frequency correction; saturates at +/-max_freq_ppb."""
        ppb = scaled_ppm_to_ppb(freq_scaled_ppm)
        self.servo_freq_ppb = max(-self.max_freq_ppb, min(self.max_freq_ppb, ppb))

    def adj_setoffset_raw(self, req: TimexRequest) -> None:
        """Atomically step the clock phase; rate is unchanged."""
        if req.mode is not TimexMode.ADJ_SETOFFSET:
            raise TimexError(f"adj_setoffset needs ADJ_SETOFFSET, got {req.mode}")
        if not req.is_normalized():
            raise TimexError(
                f"unnormalized SETOFFSET request: sec={req.offset_sec} ns={req.offset_ns}"
            )
        self.phase_offset_ns += req.total_offset_ns()
