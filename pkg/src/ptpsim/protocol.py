"""Two-step offset measurement between master and client.

One exchange per second: Sync/Follow_Up from the master, Delay_Req from
the client, yielding the four hardware timestamps t1..t4. Offset and path
delay come out of the standard end-to-end formula

    offset = ((t2 - t1) - (t4 - t3)) / 2
    delay  = ((t2 - t1) + (t4 - t3)) / 2

with integer division truncating toward zero. Client-side reads (t2, t3)
pass through the syscall boundary; master-side reads never do, and message
contents are never modified by payloads, so attacks stay invisible on the
wire.

The PHC-to-system comparison used by the second loop reads both clocks at
the same instant and subtracts a constant read latency.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .clocks import SimClock
from .interception import HookPoint, SyscallBoundary

# Client turnaround between Sync arrival and Delay_Req departure. Cancels
# exactly in the offset/delay formula; only has to fit inside one tick.
DELAY_REQ_TURNAROUND_NS = 1_000_000


@dataclass
class PathModel:
    """One-way network delays, optionally jittered, always >= 0."""

    forward_delay_ns: int = 10_000
    reverse_delay_ns: int = 10_000
    jitter_std_ns: int = 0
    rng: random.Random | None = None

    def _sample(self, mean_ns: int) -> int:
        if self.jitter_std_ns == 0 or self.rng is None:
            return mean_ns
        return max(0, round(self.rng.gauss(mean_ns, self.jitter_std_ns)))

    def sample_forward(self) -> int:
        return self._sample(self.forward_delay_ns)

    def sample_reverse(self) -> int:
        return self._sample(self.reverse_delay_ns)


@dataclass(frozen=True)
class TimestampQuad:
    """Hardware timestamps of one exchange: master send, client receive,
    client send, master receive."""

    t1: int
    t2: int
    t3: int
    t4: int


@dataclass(frozen=True)
class OffsetSample:
    offset_ns: int
    path_delay_ns: int
    epoch_ns: int


def _half_trunc(x: int) -> int:
    # Integer /2 rounding toward zero, per the servo's offset arithmetic.
    return x // 2 if x >= 0 else -((-x) // 2)


def run_sync_exchange(
    master: SimClock,
    slave_phc: SimClock,
    path: PathModel,
    true_now_ns: int,
    boundary: SyscallBoundary,
) -> TimestampQuad:
    """One two-step exchange starting at true_now_ns.

    Event instants are true times; each clock is read at the instant the
    corresponding message is sent or received. Client reads go through the
    boundary so installed payloads can skew them.
    """
    d_fwd = path.sample_forward()
    d_rev = path.sample_reverse()

    t_send = true_now_ns
    t_arrive = t_send + d_fwd
    t_depart = t_arrive + DELAY_REQ_TURNAROUND_NS
    t_return = t_depart + d_rev

    t1 = master.local_at(t_send)
    t2 = boundary.read(HookPoint.READ_PHC, slave_phc.local_at(t_arrive))
    t3 = boundary.read(HookPoint.READ_PHC, slave_phc.local_at(t_depart))
    t4 = master.local_at(t_return)
    return TimestampQuad(t1, t2, t3, t4)


def compute_offset_delay(quad: TimestampQuad) -> OffsetSample:
    """Recover (client - master) offset and one-way path delay from a quad."""
    forward = quad.t2 - quad.t1
    backward = quad.t4 - quad.t3
    return OffsetSample(
        offset_ns=_half_trunc(forward - backward),
        path_delay_ns=_half_trunc(forward + backward),
        epoch_ns=quad.t2,
    )


def phc_to_sys_offset(phc_ts: int, sys_ts: int, rdelay_ns: int = 0) -> int:
    """System-clock offset relative to the PHC, minus the read latency."""
    return sys_ts - phc_ts - rdelay_ns
