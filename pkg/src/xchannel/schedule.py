"""Two-phase transmission schedules and per-slot CSIT state tables.

Phase 1 broadcasts each (receiver, copy) message group once. Phase 2 serves
receivers in pairs: each pair slot hands both members one fresh combination
of their desired messages while the interference it creates replays an
observation the member already stored during phase 1. Decodability therefore
needs every (receiver, copy) to take part in exactly M-1 pair slots; the
builders below construct such balanced sequences for every supported (M, N)
and verify the balance before returning.

CSIT states use one character per (receiver, slot) cell: "P" for perfect
current-slot knowledge, "D" for delayed knowledge (readable at any strictly
later slot), "N" for none.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

__all__ = [
    "SchemeCase",
    "UnsupportedConfigurationError",
    "SchemeConstructionError",
    "Phase1Slot",
    "Phase2Slot",
    "Schedule",
    "CsitTable",
    "classify_case",
    "replication_factor",
    "one_factorization",
    "hamiltonian_cycles",
    "build_schedule",
    "build_csit_table",
    "permute_schedule",
    "count_csit_variants",
    "format_schedule",
    "format_csit_table",
]


class SchemeCase(Enum):
    """Scheduling regime for a given (M, N); ties (M = N) go to the M >= N branch."""

    M_GE_N_GENERAL = "M_GE_N_GENERAL"
    M_GE_N_EVEN_M_ODD_N = "M_GE_N_EVEN_M_ODD_N"
    N_GE_M_EVEN_N = "N_GE_M_EVEN_N"
    N_GE_M_ODD_N = "N_GE_M_ODD_N"


class UnsupportedConfigurationError(ValueError):
    """The (M, N) pair admits no pairing-based schedule (needs N >= 2)."""


class SchemeConstructionError(RuntimeError):
    """A built schedule or assembled system violates a structural invariant."""


@dataclass(frozen=True)
class Phase1Slot:
    """Slot that broadcasts the message group of one (receiver, copy)."""

    slot: int
    receiver: int
    copy: int = 0


@dataclass(frozen=True)
class Phase2Slot:
    """Slot that serves two (receiver, copy) members with retrospective precoding."""

    slot: int
    pair: tuple[tuple[int, int], tuple[int, int]]

    @property
    def receivers(self) -> tuple[int, int]:
        return (self.pair[0][0], self.pair[1][0])


@dataclass(frozen=True)
class Schedule:
    """Complete slot plan for one run: kN phase-1 slots then the pair slots.

    Slot indices are 0-based and global: phase 1 occupies 0..k*N-1 in copy-major
    order (all copy-0 groups, then copy-1), phase 2 occupies the remainder.
    """

    M: int
    N: int
    case: SchemeCase
    k: int
    phase1: tuple[Phase1Slot, ...]
    phase2: tuple[Phase2Slot, ...]
    T: int

    @cached_property
    def _phase1_index(self) -> dict[tuple[int, int], int]:
        return {(p.receiver, p.copy): p.slot for p in self.phase1}

    def phase1_slot_of(self, receiver: int, copy: int = 0) -> int:
        """Slot in which the (receiver, copy) message group was broadcast."""
        return self._phase1_index[(receiver, copy)]

    @property
    def message_count(self) -> int:
        return self.k * self.M * self.N

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "case": self.case.value,
            "k": self.k,
            "T": self.T,
            "phase1": [
                {"slot": p.slot, "receiver": p.receiver, "copy": p.copy} for p in self.phase1
            ],
            "phase2": [
                {
                    "slot": p.slot,
                    "pair": [
                        {"receiver": a, "copy": ca},
                        {"receiver": b, "copy": cb},
                    ],
                }
                for p in self.phase2
                for (a, ca), (b, cb) in [p.pair]
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "Schedule":
        phase1 = tuple(
            Phase1Slot(slot=e["slot"], receiver=e["receiver"], copy=e["copy"])
            for e in data["phase1"]
        )
        phase2 = tuple(
            Phase2Slot(
                slot=e["slot"],
                pair=(
                    (e["pair"][0]["receiver"], e["pair"][0]["copy"]),
                    (e["pair"][1]["receiver"], e["pair"][1]["copy"]),
                ),
            )
            for e in data["phase2"]
        )
        return Schedule(
            M=data["M"],
            N=data["N"],
            case=SchemeCase(data["case"]),
            k=data["k"],
            phase1=phase1,
            phase2=phase2,
            T=data["T"],
        )


@dataclass(frozen=True)
class CsitTable:
    """Per-receiver CSIT state strings, one character per slot."""

    states: tuple[str, ...]

    @property
    def N(self) -> int:
        return len(self.states)

    @property
    def T(self) -> int:
        return len(self.states[0]) if self.states else 0

    def state(self, receiver: int, slot: int) -> str:
        return self.states[receiver][slot]

    def counts(self, receiver: int) -> dict[str, int]:
        row = self.states[receiver]
        return {s: row.count(s) for s in "PDN"}

    def to_dict(self) -> dict:
        return {"states": [list(row) for row in self.states]}

    @staticmethod
    def from_dict(data: dict) -> "CsitTable":
        return CsitTable(states=tuple("".join(row) for row in data["states"]))


def classify_case(M: int, N: int) -> SchemeCase:
    """Pick the scheduling regime; M = N resolves to the M >= N branch."""
    if M < 1 or N < 1:
        raise ValueError(f"user counts must be at least 1, got M={M} N={N}")
    if M >= N:
        if M % 2 == 0 and N % 2 == 1:
            return SchemeCase.M_GE_N_EVEN_M_ODD_N
        return SchemeCase.M_GE_N_GENERAL
    if N % 2 == 0:
        return SchemeCase.N_GE_M_EVEN_N
    return SchemeCase.N_GE_M_ODD_N


def replication_factor(case: SchemeCase) -> int:
    """k = 2 exactly for the regimes that double messages and slots."""
    if case in (SchemeCase.M_GE_N_EVEN_M_ODD_N, SchemeCase.N_GE_M_ODD_N):
        return 2
    return 1


def one_factorization(n: int) -> list[list[tuple[int, int]]]:
    """Round-robin perfect matchings of the complete graph on even n vertices.

    Circle method: vertex n-1 is fixed, the others rotate. Returns n-1 rounds
    of n/2 disjoint pairs that together cover every pair exactly once.
    """
    if n < 2 or n % 2:
        raise ValueError(f"need an even vertex count >= 2, got {n}")
    rounds = []
    for r in range(n - 1):
        pairs = [tuple(sorted((r % (n - 1), n - 1)))]
        for m in range(1, n // 2):
            a = (r + m) % (n - 1)
            b = (r - m) % (n - 1)
            pairs.append(tuple(sorted((a, b))))
        rounds.append(pairs)
    return rounds


def hamiltonian_cycles(n: int) -> list[list[tuple[int, int]]]:
    """Edge-disjoint closed tours covering the complete graph on odd n vertices.

    Each tour visits every vertex once (two pair appearances per vertex), so a
    whole tour is a balanced scheduling unit. The (n-1)/2 tours use the hub
    vertex n-1 plus a zigzag over the rotating ring vertices.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"need an odd vertex count >= 3, got {n}")
    half = (n - 1) // 2
    offsets = [0]
    for d in range(1, half):
        offsets += [d, -d]
    offsets.append(half)
    cycles = []
    for r in range(half):
        verts = [n - 1] + [(r + off) % (n - 1) for off in offsets]
        cycles.append(
            [tuple(sorted((verts[i], verts[(i + 1) % n]))) for i in range(n)]
        )
    return cycles


def _pair_sequence_m_ge_n(N: int, appearances: int) -> list[tuple[int, int]]:
    """Receiver pairs with every receiver appearing exactly `appearances` times.

    Whole sweeps of all C(N,2) pairs in lexicographic order contribute N-1
    appearances each; the remainder is filled with whole balanced units: one
    perfect matching per missing appearance for even N, one closed tour per
    two missing appearances for odd N. Prefixes therefore stay balanced at
    every unit boundary, which is what makes truncation safe.
    """
    if appearances == 0:
        return []
    lex = [(a, b) for a in range(N) for b in range(a + 1, N)]
    q, r = divmod(appearances, N - 1)
    seq = lex * q
    if r:
        if N % 2 == 0:
            for matching in one_factorization(N)[:r]:
                seq.extend(matching)
        else:
            if r % 2:
                raise SchemeConstructionError(
                    f"odd remainder {r} cannot be balanced over {N} receivers"
                )
            for cycle in hamiltonian_cycles(N)[: r // 2]:
                seq.extend(cycle)
    return seq


def _phase2_pairs(M: int, N: int, case: SchemeCase, k: int):
    """Ordered (receiver, copy) pair list for phase 2 of each regime."""
    if case is SchemeCase.M_GE_N_GENERAL:
        return [((a, 0), (b, 0)) for a, b in _pair_sequence_m_ge_n(N, M - 1)]

    if case is SchemeCase.M_GE_N_EVEN_M_ODD_N:
        # Copies cannot stay segregated: per copy the pair-slot count would be
        # N(M-1)/2, a non-integer here. Alternating the copy on each successive
        # appearance of a receiver splits its 2(M-1) appearances evenly.
        pairs = []
        next_copy = [0] * N
        for a, b in _pair_sequence_m_ge_n(N, 2 * (M - 1)):
            ca, cb = next_copy[a], next_copy[b]
            next_copy[a] ^= 1
            next_copy[b] ^= 1
            pairs.append(((a, ca), (b, cb)))
        return pairs

    if case is SchemeCase.N_GE_M_EVEN_N:
        # Fixed disjoint pairing repeated M-1 times; fresh current-slot fading
        # makes repeated partners deliver independent combinations.
        base = [((i, 0), (i + 1, 0)) for i in range(0, N - 1, 2)]
        return base * (M - 1)

    # Odd N with doubling: pair the 2N (receiver, copy) units consecutively in
    # copy-major order. N odd makes one pair straddle the copy boundary.
    units = [(m % N, m // N) for m in range(2 * N)]
    base = [(units[2 * i], units[2 * i + 1]) for i in range(N)]
    return base * (M - 1)


def _check_balance(M: int, N: int, k: int, pairs) -> None:
    expected_slots, rem = divmod(k * N * (M - 1), 2)
    if rem:
        raise SchemeConstructionError(
            f"phase-2 slot count k*N*(M-1)/2 is fractional for M={M} N={N} k={k}"
        )
    if len(pairs) != expected_slots:
        raise SchemeConstructionError(
            f"phase 2 has {len(pairs)} slots, expected {expected_slots}"
        )
    counts: Counter = Counter()
    for (a, ca), (b, cb) in pairs:
        if a == b:
            raise SchemeConstructionError(f"pair slot reuses receiver {a}")
        counts[(a, ca)] += 1
        counts[(b, cb)] += 1
    for c in range(k):
        for i in range(N):
            got = counts.get((i, c), 0)
            if got != M - 1:
                raise SchemeConstructionError(
                    f"receiver {i} copy {c} appears in {got} pair slots, expected {M - 1}"
                )


def build_schedule(M: int, N: int) -> Schedule:
    """Construct the canonical schedule for M transmitters and N receivers.

    Raises
    ------
    UnsupportedConfigurationError
        If N < 2 (pairing needs at least two receivers).
    SchemeConstructionError
        If the built pair sequence fails the balance verification.
    """
    case = classify_case(M, N)
    if N < 2:
        raise UnsupportedConfigurationError(
            f"need at least 2 receivers to form phase-2 pairs, got N={N}"
        )
    k = replication_factor(case)
    phase1 = tuple(
        Phase1Slot(slot=c * N + i, receiver=i, copy=c)
        for c in range(k)
        for i in range(N)
    )
    pairs = _phase2_pairs(M, N, case, k)
    _check_balance(M, N, k, pairs)
    offset = k * N
    phase2 = tuple(
        Phase2Slot(slot=offset + s, pair=(pa, pb)) for s, (pa, pb) in enumerate(pairs)
    )
    T = offset + len(phase2)
    if 2 * T != k * N * (M + 1):
        raise SchemeConstructionError(
            f"total slot count {T} disagrees with k*N*(M+1)/2 for M={M} N={N}"
        )
    return Schedule(M=M, N=N, case=case, k=k, phase1=phase1, phase2=phase2, T=T)


def build_csit_table(schedule: Schedule) -> CsitTable:
    """Derive the per-slot CSIT states implied by a schedule.

    Phase-1 slots give the served receiver nothing and everyone else delayed
    knowledge; phase-2 slots give the two paired receivers perfect current
    knowledge and everyone else nothing.
    """
    rows = [["N"] * schedule.T for _ in range(schedule.N)]
    for p in schedule.phase1:
        for i in range(schedule.N):
            if i != p.receiver:
                rows[i][p.slot] = "D"
    for p in schedule.phase2:
        for i in p.receivers:
            rows[i][p.slot] = "P"
    return CsitTable(states=tuple("".join(r) for r in rows))


def _check_permutation(perm, length: int, label: str) -> list[int]:
    perm = list(perm)
    if sorted(perm) != list(range(length)):
        raise ValueError(f"{label} must be a permutation of 0..{length - 1}, got {perm}")
    return perm


def permute_schedule(schedule: Schedule, phase1_perm, phase2_perm) -> Schedule:
    """Reorder slot contents within each phase, keeping slot times fixed.

    Position p of the result carries what position phase_perm[p] carried in
    the input. Per-receiver appearance counts are untouched; the within-round
    disjointness of the N >= M regimes may be lost, which decoding tolerates.
    """
    p1 = _check_permutation(phase1_perm, len(schedule.phase1), "phase-1 permutation")
    p2 = _check_permutation(phase2_perm, len(schedule.phase2), "phase-2 permutation")
    phase1 = tuple(
        Phase1Slot(slot=dst.slot, receiver=src.receiver, copy=src.copy)
        for dst, src in zip(schedule.phase1, (schedule.phase1[i] for i in p1))
    )
    phase2 = tuple(
        Phase2Slot(slot=dst.slot, pair=src.pair)
        for dst, src in zip(schedule.phase2, (schedule.phase2[i] for i in p2))
    )
    return Schedule(
        M=schedule.M,
        N=schedule.N,
        case=schedule.case,
        k=schedule.k,
        phase1=phase1,
        phase2=phase2,
        T=schedule.T,
    )


def count_csit_variants(M: int, N: int) -> int:
    """Number of schedules reachable by permuting slots within each phase.

    Equals (kN)! * (kN(M-1)/2)! because any phase-1 order and any phase-2
    order yields a working schedule with identical slot budgets.
    """
    case = classify_case(M, N)
    if N < 2:
        raise UnsupportedConfigurationError(f"need N >= 2, got N={N}")
    k = replication_factor(case)
    pair_slots, rem = divmod(k * N * (M - 1), 2)
    if rem:
        raise SchemeConstructionError(f"fractional phase-2 length for M={M} N={N}")
    return math.factorial(k * N) * math.factorial(pair_slots)


def _phase_split_table(name_cells: list[str], body: list[list[str]], split: int) -> str:
    ncols = len(name_cells)
    widths = [
        max(len(row[c]) for row in [name_cells, *body]) for c in range(ncols)
    ]

    def segment(cells, lo, hi):
        return "  ".join(cells[c].rjust(widths[c]) for c in range(lo, hi))

    def line(cells):
        out = cells[0].ljust(widths[0]) + " | " + segment(cells, 1, 1 + split)
        if split < ncols - 1:
            out += " | " + segment(cells, 1 + split, ncols)
        return out

    header = line(name_cells)
    left_w = len(segment(name_cells, 1, 1 + split))
    banner = " " * (widths[0] + 3) + "Phase 1".center(left_w)
    if split < ncols - 1:
        right_w = len(segment(name_cells, 1 + split, ncols))
        banner += " | " + "Phase 2".center(right_w)
    lines = [banner, header] + [line(row) for row in body]
    return "\n".join(lines)


def _group_label(receiver: int, copy: int, k: int) -> str:
    if k == 1:
        return f"W{receiver + 1}"
    return f"W{receiver + 1}^{copy + 1}"


def format_schedule(schedule: Schedule) -> str:
    """Plain-text slot table: which message groups occupy each slot."""
    head = ["Time"] + [str(t + 1) for t in range(schedule.T)]
    row = ["Tx"]
    for p in schedule.phase1:
        row.append(_group_label(p.receiver, p.copy, schedule.k))
    for p in schedule.phase2:
        (a, ca), (b, cb) = p.pair
        row.append(
            _group_label(a, ca, schedule.k) + "," + _group_label(b, cb, schedule.k)
        )
    summary = (
        f"M={schedule.M} N={schedule.N} case={schedule.case.value} "
        f"k={schedule.k} T={schedule.T} messages={schedule.message_count}"
    )
    return summary + "\n" + _phase_split_table(head, [row], len(schedule.phase1))


def format_csit_table(table: CsitTable, phase1_len: int) -> str:
    """Plain-text state table with receivers as rows and slots as columns."""
    head = ["Time"] + [str(t + 1) for t in range(table.T)]
    body = [[f"R{i + 1}"] + list(table.states[i]) for i in range(table.N)]
    return _phase_split_table(head, body, phase1_len)
