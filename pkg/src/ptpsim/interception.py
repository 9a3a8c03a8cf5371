"""The modeled kernel syscall boundary.

Every clock read and every clock adjustment issued by the protocol or
servo code crosses a SyscallBoundary. A boundary built with a PayloadChain
routes each call through the payloads installed on that hook point, in
installation order; payloads see and may rewrite the value or request,
exactly like a hook sitting on the syscall table would. A boundary built
without a chain is a hard bypass used to prove the interception layer is
transparent when empty.

Payloads never touch clock state directly: they transform the arguments
and return values flowing across the boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .clocks import TimexRequest


class HookPoint(enum.Enum):
    READ_PHC = "read_phc"
    READ_SYS = "read_sys"
    ADJ_FREQ_PHC = "adj_freq_phc"
    ADJ_FREQ_SYS = "adj_freq_sys"
    SET_OFFSET_PHC = "set_offset_phc"
    SET_OFFSET_SYS = "set_offset_sys"

    @property
    def is_read(self) -> bool:
        return self in (HookPoint.READ_PHC, HookPoint.READ_SYS)

    @property
    def loop(self) -> str:
        """Which discipline loop owns the hooked clock.

        PHC hooks sit on the master->PHC loop, SYS hooks on the
        PHC->system loop.
        """
        return "phc" if self.value.endswith("_phc") else "system"


class AttackPayload:
    """Base payload: identity transforms. Subclasses override one or both."""

    def on_read(self, raw_ts: int, call_index: int) -> int:
        return raw_ts

    def on_adj(self, req: TimexRequest, call_index: int) -> TimexRequest:
        return req


@dataclass(frozen=True)
class Activation:
    """When an installed payload starts transforming calls.

    Either an absolute true time (ns since run start) or "when the hooked
    clock's discipline loop first reports lock". Immediate activation is
    at_ns=0.
    """

    at_ns: int | None = 0
    on_lock: bool = False

    @classmethod
    def immediate(cls) -> "Activation":
        return cls(at_ns=0)

    @classmethod
    def at(cls, at_ns: int) -> "Activation":
        return cls(at_ns=at_ns)

    @classmethod
    def when_locked(cls) -> "Activation":
        return cls(at_ns=None, on_lock=True)


@dataclass
class InstalledPayload:
    hook: HookPoint
    payload: AttackPayload
    activation: Activation

    def is_active(self, true_now_ns: int, lock_times: dict[str, int]) -> bool:
        if self.activation.on_lock:
            locked_at = lock_times.get(self.hook.loop)
            return locked_at is not None and true_now_ns > locked_at
        return true_now_ns >= (self.activation.at_ns or 0)


class PayloadChain:
    """Ordered payloads per hook point, plus per-hook call counters.

    Dispatch applies payloads in installation order. Call indices count
    every dispatch on a hook from run start (0-based), whether or not any
    payload is active, so gating like "every N-th call" is a pure function
    of the run schedule.
    """

    def __init__(self) -> None:
        self._entries: list[InstalledPayload] = []
        self._counts: dict[HookPoint, int] = {h: 0 for h in HookPoint}
        self._lock_times: dict[str, int] = {}

    def install(
        self,
        hook: HookPoint,
        payload: AttackPayload,
        activation: Activation | None = None,
    ) -> None:
        self._entries.append(
            InstalledPayload(hook, payload, activation or Activation.immediate())
        )

    def __len__(self) -> int:
        return len(self._entries)

    def call_count(self, hook: HookPoint) -> int:
        return self._counts[hook]

    def note_lock(self, loop: str, true_now_ns: int) -> None:
        """Record the first time a discipline loop reaches lock."""
        self._lock_times.setdefault(loop, true_now_ns)

    def dispatch_read(self, hook: HookPoint, raw_ts: int, true_now_ns: int) -> int:
        if not hook.is_read:
            raise ValueError(f"{hook} is not a read hook")
        idx = self._counts[hook]
        self._counts[hook] = idx + 1
        ts = raw_ts
        for entry in self._entries:
            if entry.hook is hook and entry.is_active(true_now_ns, self._lock_times):
                ts = entry.payload.on_read(ts, idx)
        return ts

    def dispatch_adj(
        self, hook: HookPoint, req: TimexRequest, true_now_ns: int
    ) -> TimexRequest:
        if hook.is_read:
            raise ValueError(f"{hook} is not an adjustment hook")
        idx = self._counts[hook]
        self._counts[hook] = idx + 1
        for entry in self._entries:
            if entry.hook is hook and entry.is_active(true_now_ns, self._lock_times):
                req = entry.payload.on_adj(req, idx)
        return req


@dataclass
class SyscallBoundary:
    """The choke point protocol and servo code must call through.

    chain=None bypasses interception entirely (no payloads, no counters);
    an empty chain must behave identically, which the test suite asserts.
    """

    chain: PayloadChain | None = None
    true_now_ns: int = 0

    def set_time(self, true_now_ns: int) -> None:
        self.true_now_ns = true_now_ns

    def note_lock(self, loop: str) -> None:
        if self.chain is not None:
            self.chain.note_lock(loop, self.true_now_ns)

    def read(self, hook: HookPoint, raw_ts: int) -> int:
        if self.chain is None:
            return raw_ts
        return self.chain.dispatch_read(hook, raw_ts, self.true_now_ns)

    def adjust(self, hook: HookPoint, req: TimexRequest) -> TimexRequest:
        if self.chain is None:
            return req
        return self.chain.dispatch_adj(hook, req, self.true_now_ns)
