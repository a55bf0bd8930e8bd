"""Per-slot transmit construction: phase-1 broadcasts, retrospective phase-2 precoding.

Phase-2 coefficients are chosen so that the interference a pair slot creates
at each member equals (up to the published slot scale) an observation that
member already stored in phase 1. Transmitters only ever touch the channel
through an access-controlled CsitView, which records every read for audit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, MessageSet
from .schedule import CsitTable, Phase1Slot, Phase2Slot, Schedule

__all__ = [
    "CsitAccessError",
    "CsitRead",
    "CsitView",
    "TransmitPlan",
    "audit_csit_trace",
    "build_transmit_plan",
    "phase1_signal",
    "phase2_precode",
]


class CsitAccessError(RuntimeError):
    """A precoder tried to read channel state its CSIT contract does not grant."""

    def __init__(self, receiver: int, slot: int, at_slot: int, state: str):
        self.receiver = receiver
        self.slot = slot
        self.at_slot = at_slot
        self.state = state
        super().__init__(
            f"illegal CSIT read of receiver {receiver} slot {slot} at slot "
            f"{at_slot} (state {state!r})"
        )


@dataclass(frozen=True)
class CsitRead:
    """One granted channel read: receiver row `slot`, issued while in `at_slot`."""

    receiver: int
    slot: int
    at_slot: int


class CsitView:
    """Access-controlled window onto the channel tensor.

    A read of receiver i's coefficient row at slot t' is granted only when
    the state table marks (i, now) as "P" with t' == now, or (i, t') as "D"
    with t' strictly earlier than now. Granted reads accumulate in `reads`;
    an illegal read is recorded in `violations` and raised.
    """

    def __init__(self, channels: ChannelRealization, table: CsitTable):
        self._h = channels.h
        self._table = table
        self.now = 0
        self.reads: list[CsitRead] = []
        self.violations: list[CsitRead] = []

    def read_row(self, receiver: int, slot: int) -> np.ndarray:
        state = self._table.state(receiver, slot)
        current_ok = slot == self.now and self._table.state(receiver, self.now) == "P"
        delayed_ok = slot < self.now and state == "D"
        record = CsitRead(receiver=receiver, slot=slot, at_slot=self.now)
        if not (current_ok or delayed_ok):
            self.violations.append(record)
            raise CsitAccessError(receiver, slot, self.now, state)
        self.reads.append(record)
        return self._h[receiver, :, slot].copy()


def audit_csit_trace(reads, table: CsitTable) -> list[CsitRead]:
    """Re-check a read trace against the state table; returns the offenders."""
    bad = []
    for r in reads:
        current_ok = r.slot == r.at_slot and table.state(r.receiver, r.slot) == "P"
        delayed_ok = r.slot < r.at_slot and table.state(r.receiver, r.slot) == "D"
        if not (current_ok or delayed_ok):
            bad.append(r)
    return bad


def phase1_signal(slot: Phase1Slot, messages: MessageSet) -> np.ndarray:
    """Transmit vector of a phase-1 slot: transmitter j sends w[i, j, c] as is."""
    if not isinstance(slot, Phase1Slot):
        raise ValueError(f"expected a phase-1 slot, got {type(slot).__name__}")
    return messages.w[slot.receiver, :, slot.copy].copy()


def _phase2_coefficients(slot: Phase2Slot, csit: CsitView, schedule: Schedule):
    """Per-transmitter coefficients on each pair member's messages.

    Member (a, ca) paired with (b, cb) at slot t gets coefficient
    h[b,j,t]^-1 * h[b,j,t_a] on w[a,j,ca]: through receiver b's current
    fading this collapses to h[b,j,t_a], reproducing the observation b stored
    when (a, ca) was broadcast, so b can subtract it.
    """
    (a, ca), (b, cb) = slot.pair
    csit.now = slot.slot
    h_a_now = csit.read_row(a, slot.slot)
    h_b_now = csit.read_row(b, slot.slot)
    h_b_then = csit.read_row(b, schedule.phase1_slot_of(a, ca))
    h_a_then = csit.read_row(a, schedule.phase1_slot_of(b, cb))
    assert np.all(h_a_now != 0) and np.all(h_b_now != 0)
    return h_b_then / h_b_now, h_a_then / h_a_now


def phase2_precode(
    slot: Phase2Slot, messages: MessageSet, csit: CsitView, schedule: Schedule
) -> np.ndarray:
    """Unnormalized transmit vector of a phase-2 pair slot."""
    if not isinstance(slot, Phase2Slot):
        raise ValueError(f"expected a phase-2 slot, got {type(slot).__name__}")
    coef_a, coef_b = _phase2_coefficients(slot, csit, schedule)
    (a, ca), (b, cb) = slot.pair
    return coef_a * messages.w[a, :, ca] + coef_b * messages.w[b, :, cb]


@dataclass
class TransmitPlan:
    """Sparse linear forms for all T slots plus the audit trail that built them.

    slot_terms[t][j] lists ((receiver, transmitter, copy), coefficient) pairs
    that make up transmitter j's signal in slot t; slot_scale[t] is the common
    scalar applied to every transmitter of slot t (1.0 unless normalization is
    on), which receivers also apply to stored observations when subtracting.
    """

    schedule: Schedule
    messages: MessageSet
    slot_terms: tuple
    slot_scale: np.ndarray
    normalized: bool
    csit_reads: tuple[CsitRead, ...]
    csit_violations: tuple[CsitRead, ...]
    _signals: np.ndarray | None = field(default=None, repr=False)

    def signal_matrix(self) -> np.ndarray:
        """All transmit vectors as an (M, T) matrix, computed once and cached."""
        if self._signals is None:
            s = self.schedule
            w = self.messages.w
            X = np.zeros((s.M, s.T), dtype=complex)
            for t, per_tx in enumerate(self.slot_terms):
                for j, terms in enumerate(per_tx):
                    X[j, t] = sum(coef * w[i, j, c] for (i, j2, c), coef in terms)
            X.setflags(write=False)
            self._signals = X
        return self._signals

    def to_dict(self) -> dict:
        s = self.schedule
        slots = []
        for t, per_tx in enumerate(self.slot_terms):
            slots.append(
                {
                    "slot": t,
                    "scale": float(self.slot_scale[t]),
                    "transmitters": [
                        [
                            {
                                "receiver": i,
                                "transmitter": j,
                                "copy": c,
                                "coef": [float(coef.real), float(coef.imag)],
                            }
                            for (i, j, c), coef in terms
                        ]
                        for terms in per_tx
                    ],
                }
            )
        return {
            "M": s.M,
            "N": s.N,
            "k": s.k,
            "T": s.T,
            "normalized": self.normalized,
            "slots": slots,
        }


def build_transmit_plan(
    schedule: Schedule,
    messages: MessageSet,
    channels: ChannelRealization,
    csit: CsitTable,
    normalize: bool = False,
) -> TransmitPlan:
    """Assemble the linear forms for every slot under CSIT access control.

    With normalize=True each phase-2 slot is scaled by one common factor
    1 / max_j ||coefficients of transmitter j||, so every transmitter meets a
    unit power budget with unit-power messages. A common factor (rather than
    per-transmitter ones) keeps the stored-observation subtraction exact.
    """
    view = CsitView(channels, csit)
    terms: list = [None] * schedule.T
    scale = np.ones(schedule.T)
    for p in schedule.phase1:
        terms[p.slot] = tuple(
            (((p.receiver, j, p.copy), 1.0 + 0.0j),) for j in range(schedule.M)
        )
    for p in schedule.phase2:
        coef_a, coef_b = _phase2_coefficients(p, view, schedule)
        (a, ca), (b, cb) = p.pair
        g = 1.0
        if normalize:
            norms = np.sqrt(np.abs(coef_a) ** 2 + np.abs(coef_b) ** 2)
            g = 1.0 / float(norms.max())
            scale[p.slot] = g
        terms[p.slot] = tuple(
            (((a, j, ca), g * coef_a[j]), ((b, j, cb), g * coef_b[j]))
            for j in range(schedule.M)
        )
    scale.setflags(write=False)
    return TransmitPlan(
        schedule=schedule,
        messages=messages,
        slot_terms=tuple(terms),
        slot_scale=scale,
        normalized=normalize,
        csit_reads=tuple(view.reads),
        csit_violations=tuple(view.violations),
    )
