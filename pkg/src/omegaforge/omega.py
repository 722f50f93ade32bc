"""Exact mass accounting over the program tree and what it certifies.

Every leaf of a closed exploration owns the mass 2**-len(program): halts
feed the halting mass, invalid and proven-divergent stems feed the
refuted mass, UNKNOWN stems stay in limbo. The three masses always sum
to exactly 1, so [halt, halt + unknown] is a rigorous enclosure of the
machine's halting probability, and every binary digit on which both
endpoints agree is certified for good: refinements only shrink the
enclosure.

Certification is conservative at dyadic boundaries on purpose: both
endpoints' floors must agree, so a bit is occasionally forfeited but
never wrong.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dyadic import Dyadic, ZERO
from .explorer import (
    EXPANDED,
    HALT,
    NODE_UNKNOWN,
    ExplorationStore,
    ExploreBudget,
    explore,
    read_checkpoint,
)


class LedgerError(Exception):
    """Mass accounting attempted on an exploration that is not closed."""


class OracleNotConverged(Exception):
    """The supplied bits cannot be (or were not) reached by halting mass."""


HALTS = "HALTS"
ORACLE_DIVERGES = "DIVERGES"


@dataclass(frozen=True)
class MassLedger:
    halt_mass: Dyadic
    refuted_mass: Dyadic
    unknown_mass: Dyadic

    def total(self) -> Dyadic:
        return self.halt_mass + self.refuted_mass + self.unknown_mass

    def lower(self) -> Dyadic:
        return self.halt_mass

    def upper(self) -> Dyadic:
        return self.halt_mass + self.unknown_mass


@dataclass(frozen=True)
class OmegaBits:
    certified: str
    lower: Dyadic
    upper: Dyadic


def ledger_from_store(store: ExplorationStore, *, require_closed: bool = True) -> MassLedger:
    """Fold the store's leaves into exact halting/refuted/unknown masses."""
    if require_closed and not store.is_closed():
        raise LedgerError("exploration is not closed: expanded nodes lack children")
    depth = max((len(p) for p in store.nodes), default=0)
    halt = refuted = unknown = 0
    for rec in store.nodes.values():
        if rec.status == EXPANDED:
            continue
        weight = 1 << (depth - len(rec.program))
        if rec.status == HALT:
            halt += weight
        elif rec.status == NODE_UNKNOWN:
            unknown += weight
        else:
            refuted += weight
    return MassLedger(Dyadic(halt, depth), Dyadic(refuted, depth), Dyadic(unknown, depth))


def certify_bits(ledger: MassLedger) -> OmegaBits:
    """Extract the leading halting-probability bits pinned by the ledger.

    Bit i is certified iff floor(lower * 2**i) == floor(upper * 2**i);
    certification stops at the first disagreement, so the result is a
    prefix. For a point enclosure the expansion is emitted down to the
    denominator, beyond which all bits are zero.
    """
    lower = ledger.lower()
    upper = ledger.upper()
    bits = []
    for i in range(1, max(lower.exp, upper.exp, 1) + 1):
        lo = lower.floor_shift(i)
        hi = upper.floor_shift(i)
        if lo != hi:
            break
        bits.append("01"[lo & 1])
    return OmegaBits("".join(bits), lower, upper)


def certified_value(bits: str) -> Dyadic:
    """The dyadic value 0.b1b2...bN of a certified prefix."""
    if bits == "":
        return ZERO
    return Dyadic(int(bits, 2), len(bits))


def _default_ladder(min_len: int, hard_max_len: int, hard_max_steps: int):
    max_len = max(min_len, 8)
    max_steps = 1000
    while True:
        yield ExploreBudget(min(max_len, hard_max_len), min(max_steps, hard_max_steps))
        if max_len >= hard_max_len and max_steps >= hard_max_steps:
            return
        max_len += 2
        max_steps *= 10


def halting_oracle(
    certified: OmegaBits | str,
    query: str,
    *,
    store: ExplorationStore | None = None,
    hard_max_len: int = 22,
    hard_max_steps: int = 10**7,
) -> str:
    """Decide the halting problem for a short program from certified bits.

    Dovetails exploration until the halting mass reaches the dyadic value
    of the certified prefix; at that point every program of at most that
    many bits which has not halted never will, because one more halt
    would push the halting probability past its known enclosure.

    Answers HALTS only for programs in the prefix-free accepted set;
    extensions of accepted programs, invalid decodes, proven divergers
    and never-asking stems all answer DIVERGES. Raises OracleNotConverged
    when the target provably cannot be reached (corrupted input bits) or
    the internal budget ladder runs out.
    """
    bits = certified.certified if isinstance(certified, OmegaBits) else certified
    if bits == "" or bits.strip("01") != "":
        raise ValueError("oracle needs a nonempty certified bit prefix")
    if len(query) > len(bits):
        raise ValueError(
            f"query of {len(query)} bits exceeds the {len(bits)} certified bits"
        )
    target = certified_value(bits)
    current = store

    def decided(st: ExplorationStore) -> bool:
        ledger = ledger_from_store(st)
        if ledger.halt_mass >= target and st.budget.max_len >= len(query):
            return True
        if ledger.upper() < target:
            raise OracleNotConverged(
                f"halting mass can never reach {target}: upper bound {ledger.upper()}"
            )
        return False

    if current is not None and current.is_closed() and decided(current):
        return HALTS if current.fate(query) == HALT else ORACLE_DIVERGES
    start_len = current.budget.max_len if current is not None else len(bits)
    for budget in _default_ladder(max(start_len, len(bits), len(query)),
                                  hard_max_len, hard_max_steps):
        if current is not None and not budget.covers(current.budget):
            continue
        current = explore(budget, resume=current)
        if decided(current):
            return HALTS if current.fate(query) == HALT else ORACLE_DIVERGES
    raise OracleNotConverged(
        f"halting mass did not reach {target} within the budget ladder"
    )


def block_frequencies(bits: str, block_size: int) -> dict[str, tuple[int, int]]:
    """Relative frequency of each block over overlapping windows.

    Report only: a finite prefix proves nothing about limiting behavior.
    Returns block -> (count, windows) for the blocks that occur.
    """
    if not 1 <= block_size <= 4:
        raise ValueError("block size must be between 1 and 4")
    if len(bits) < block_size:
        raise ValueError("prefix shorter than the block size")
    windows = len(bits) - block_size + 1
    counts: dict[str, int] = {}
    for i in range(windows):
        block = bits[i : i + block_size]
        counts[block] = counts.get(block, 0) + 1
    return {block: (count, windows) for block, count in sorted(counts.items())}


def progress_report(checkpoints) -> list[dict]:
    """Tabulate certified-bit progress over a sequence of checkpoints.

    Accepts paths or loaded stores; all must come from the same machine
    version. Rows are ordered by (max_len, max_steps).
    """
    stores = []
    for item in checkpoints:
        stores.append(item if isinstance(item, ExplorationStore) else read_checkpoint(item))
    if not stores:
        return []
    hashes = {st.machine_hash for st in stores}
    if len(hashes) > 1:
        raise ValueError(f"mixed machine versions in checkpoints: {sorted(hashes)}")
    rows = []
    for st in sorted(stores, key=lambda s: (s.budget.max_len, s.budget.max_steps)):
        ledger = ledger_from_store(st)
        omega = certify_bits(ledger)
        rows.append(
            {
                "max_len": st.budget.max_len,
                "max_steps": st.budget.max_steps,
                "certified_bits": omega.certified,
                "certified_count": len(omega.certified),
                "unknown_mass": str(ledger.unknown_mass),
            }
        )
    return rows
