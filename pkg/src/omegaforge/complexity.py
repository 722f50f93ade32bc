"""Program-size complexity bounds and the audits built on them.

H(X) is the length in bits of the shortest program making the machine
output X. Upper bounds come from constructed witnesses (always verified
by execution); exact values come from the exhaustive enumeration store
and are only claimed when nothing of at most the stated length is still
undecided.

Theories are finite lists of assertions "bit k of the halting
probability is b", shipped as a program whose output is the
self-delimiting encoding below, and audited against certified bits.

Assertion-list encoding (bit-exact, normative):

    gamma(m+1) ++ body        m = number of assertions

    dense body   exactly m bits: the asserted values of indices 1..m in
                 order. Used iff the index set is exactly {1..m}.
    sparse body  m pairs gamma(d_i) ++ value_i where d_i is the gap
                 k_i - k_{i-1} (k_0 = 0) over indices sorted increasing.

    A decoder distinguishes the two by length: a sparse body of m
    assertions needs at least 2m bits, a dense body exactly m. gamma(v)
    for v >= 1 is floor(log2 v) zeros, then v in binary MSB first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .explorer import ExplorationStore
from .machine import (
    GUEST_LITERAL,
    GUEST_UNARY,
    GUESTS,
    HALTED,
    check_bits,
    run,
    simulation_prefix,
)

UPPER = "UPPER"
EXACT_WITHIN = "EXACT_WITHIN"

_HALT = "000"
_OUT = {"0": "001", "1": "010"}
_DBL = "011"


class ExactnessError(Exception):
    """Exact complexity requested where undecided stems could interfere."""


class MalformedTheoryError(Exception):
    """A theory carrier or its output does not decode to its assertions."""


@dataclass(frozen=True)
class ComplexityBound:
    subject: str
    kind: str  # UPPER or EXACT_WITHIN
    value: int
    witness: str
    bound_len: int | None = None  # EXACT_WITHIN only


def gamma_encode(value: int) -> str:
    if value < 1:
        raise ValueError("gamma codes cover integers >= 1")
    binary = format(value, "b")
    return "0" * (len(binary) - 1) + binary


def gamma_decode(bits: str, start: int = 0) -> tuple[int, int]:
    """Returns (value, next_offset); raises ValueError on truncation."""
    i = start
    while i < len(bits) and bits[i] == "0":
        i += 1
    if i >= len(bits):
        raise ValueError("truncated gamma code")
    width = i - start + 1
    end = i + width
    if end > len(bits):
        raise ValueError("truncated gamma code")
    return int(bits[i:end], 2), end


def literal_program(payload: str) -> str:
    """A program that outputs exactly ``payload`` via the literal guest."""
    check_bits(payload)
    return simulation_prefix(GUEST_LITERAL) + gamma_encode(len(payload) + 1) + payload


def unary_program(count: int) -> str:
    """A program that outputs ``count`` ones via the unary guest."""
    return simulation_prefix(GUEST_UNARY) + "1" * count + "0"


def append_double_witness(target: str) -> str:
    """Cheapest OUT/DBL/HALT program for ``target``, by dynamic programming.

    Builds the output left to right: each step either appends one bit or
    doubles the whole prefix built so far. Cost is 3 bits per operation
    plus the final HALT.
    """
    n = len(target)
    INF = float("inf")
    cost = [INF] * (n + 1)
    prev = [None] * (n + 1)  # (source index, op bits)
    cost[0] = 0
    for i in range(n + 1):
        if cost[i] is INF:
            continue
        if i < n and cost[i] + 3 < cost[i + 1]:
            cost[i + 1] = cost[i] + 3
            prev[i + 1] = (i, _OUT[target[i]])
        j = 2 * i
        if i > 0 and j <= n and target[i:j] == target[:i] and cost[i] + 3 < cost[j]:
            cost[j] = cost[i] + 3
            prev[j] = (i, _DBL)
    ops = []
    i = n
    while i > 0:
        src, bits = prev[i]
        ops.append(bits)
        i = src
    return "".join(reversed(ops)) + _HALT


def _verify_witness(program: str, subject: str, step_budget: int) -> None:
    res = run(program, step_budget)
    if res.kind != HALTED or res.output != subject or res.bits_consumed != len(program):
        raise AssertionError(
            f"witness {program} does not produce {subject!r}: {res}"
        )


def complexity_upper(
    subject: str,
    *,
    store: ExplorationStore | None = None,
    search_bound: int | None = None,
    step_budget: int = 10**6,
) -> ComplexityBound:
    """Best verified upper bound on H(subject).

    Candidates: the literal-guest encoding (never longer than
    len + 2*floor(log2(len+1)) + 6), the append/double construction, the
    unary guest for all-ones strings, and any cached halting node with
    this output (within ``search_bound`` when given). Ties break to the
    lexicographically smallest witness.
    """
    check_bits(subject)
    candidates = [literal_program(subject), append_double_witness(subject)]
    if subject != "" and subject == "1" * len(subject):
        candidates.append(unary_program(len(subject)))
    if store is not None:
        best = store.halt_index().get(subject)
        if best is not None and (search_bound is None or best[0] <= search_bound):
            candidates.append(best[1])
    witness = min(candidates, key=lambda p: (len(p), p))
    _verify_witness(witness, subject, step_budget)
    return ComplexityBound(subject, UPPER, len(witness), witness)


def complexity_exact(
    subject: str, bound_len: int, store: ExplorationStore
) -> ComplexityBound | None:
    """Exact H(subject) over all programs of at most ``bound_len`` bits.

    Returns None (above bound) when no such program produces the subject.
    Requires the store to cover the bound and to hold no undecided stem
    of at most ``bound_len`` bits, since such a stem could hide a shorter
    witness.
    """
    check_bits(subject)
    if bound_len > store.budget.max_len:
        raise ValueError(
            f"bound {bound_len} exceeds the explored depth {store.budget.max_len}"
        )
    blocker = store.min_unknown_len()
    if blocker is not None and blocker <= bound_len:
        raise ExactnessError(
            f"undecided stems of {blocker} bits make exactness at {bound_len} unsound"
        )
    best = store.halt_index().get(subject)
    if best is None or best[0] > bound_len:
        return None
    length, witness = best
    return ComplexityBound(subject, EXACT_WITHIN, length, witness, bound_len=bound_len)


def enumerate_guest_halting(guest_id: str, max_len: int) -> list[tuple[str, str]]:
    """All halting guest programs of at most ``max_len`` bits, with outputs."""
    if guest_id not in GUESTS:
        raise ValueError(f"unknown guest id: {guest_id!r}")
    result = []
    if guest_id == GUEST_UNARY:
        for k in range(max_len):
            result.append(("1" * k + "0", "1" * k))
        return result
    n = 0
    while len(gamma_encode(n + 1)) + n <= max_len:
        code = gamma_encode(n + 1)
        for value in range(1 << n):
            payload = format(value, f"0{n}b") if n else ""
            result.append((code + payload, payload))
        n += 1
    return result


def invariance_audit(
    guest_id: str,
    max_len: int,
    *,
    store: ExplorationStore | None = None,
) -> dict:
    """Check H_host(X) <= H_guest(X) + 5 over a guest's reachable outputs.

    The 5 is the simulation prefix length, so the bound holds by
    construction once every prefixed program is verified to reproduce the
    guest run; the interesting number is the observed gap, which the
    enumeration often pulls below the prefix cost.
    """
    prefix = simulation_prefix(guest_id)
    h_guest: dict[str, int] = {}
    for stream, output in enumerate_guest_halting(guest_id, max_len):
        if output not in h_guest or len(stream) < h_guest[output]:
            h_guest[output] = len(stream)
        _verify_witness(prefix + stream, output, 10**6)
    rows = []
    max_gap = None
    for output in sorted(h_guest, key=lambda x: (len(x), x)):
        hg = h_guest[output]
        hu = min(complexity_upper(output, store=store).value, hg + len(prefix))
        gap = hu - hg
        if max_gap is None or gap > max_gap:
            max_gap = gap
        rows.append({"output": output, "h_guest": hg, "h_host": hu, "gap": gap})
    return {
        "guest": guest_id,
        "max_len": max_len,
        "outputs": len(rows),
        "max_gap": max_gap,
        "within_prefix_bound": all(r["gap"] <= len(prefix) for r in rows),
        "rows": rows,
    }


def counting_check(n: int, m: int, store: ExplorationStore) -> dict:
    """Count length-n outputs of complexity at most m against 2**(m+1)-1.

    There are only 2**(m+1)-1 programs of at most m bits, so no more
    distinct outputs can exist; the enumeration provides the exact count.
    """
    if n < 0 or m < 0:
        raise ValueError("n and m must be >= 0")
    if m > store.budget.max_len:
        raise ValueError(f"m={m} exceeds the explored depth {store.budget.max_len}")
    blocker = store.min_unknown_len()
    if blocker is not None and blocker <= m:
        raise ExactnessError(
            f"undecided stems of {blocker} bits make the count at {m} unsound"
        )
    count = sum(
        1
        for output, (length, _) in store.halt_index().items()
        if len(output) == n and length <= m
    )
    bound = (1 << (m + 1)) - 1
    return {"n": n, "m": m, "count": count, "bound": bound, "ok": count <= bound}


# -- theories ----------------------------------------------------------------


@dataclass(frozen=True)
class TheoryArtifact:
    """A finite set of halting-probability bit assertions and a program
    whose output is their canonical encoding."""

    assertions: tuple[tuple[int, int], ...]
    carrier: str


def _canonical_assertions(assertions) -> tuple[tuple[int, int], ...]:
    seen = set()
    for index, value in assertions:
        if index < 1:
            raise ValueError(f"assertion index must be positive: {index}")
        if value not in (0, 1):
            raise ValueError(f"assertion value must be a bit: {value}")
        if index in seen:
            raise ValueError(f"duplicate assertion index: {index}")
        seen.add(index)
    return tuple(sorted((int(k), int(v)) for k, v in assertions))


def encode_assertions(assertions) -> str:
    """Canonical self-delimiting encoding of an assertion list."""
    items = _canonical_assertions(assertions)
    m = len(items)
    head = gamma_encode(m + 1)
    if [k for k, _ in items] == list(range(1, m + 1)):
        return head + "".join(str(v) for _, v in items)
    body = []
    prev = 0
    for k, v in items:
        body.append(gamma_encode(k - prev))
        body.append(str(v))
        prev = k
    return head + "".join(body)


def decode_assertions(bits: str) -> tuple[tuple[int, int], ...]:
    check_bits(bits)
    try:
        head, pos = gamma_decode(bits)
    except ValueError as exc:
        raise MalformedTheoryError(str(exc)) from exc
    m = head - 1
    body = bits[pos:]
    if len(body) == m:
        return tuple((i + 1, int(b)) for i, b in enumerate(body))
    items = []
    k = 0
    offset = pos
    for _ in range(m):
        try:
            delta, offset = gamma_decode(bits, offset)
        except ValueError as exc:
            raise MalformedTheoryError(str(exc)) from exc
        if offset >= len(bits):
            raise MalformedTheoryError("missing assertion value bit")
        k += delta
        items.append((k, int(bits[offset])))
        offset += 1
    if offset != len(bits):
        raise MalformedTheoryError(f"{len(bits) - offset} trailing bits after decode")
    return tuple(items)


def make_theory(assertions) -> TheoryArtifact:
    """Package an assertion list with a literal-guest carrier program."""
    items = _canonical_assertions(assertions)
    return TheoryArtifact(items, literal_program(encode_assertions(items)))


def build_prefix_theory(certified_bits: str) -> TheoryArtifact:
    """The theory asserting every certified bit, carried by the literal
    guest; its size is the yardstick for the determinability ceiling."""
    check_bits(certified_bits)
    return make_theory([(i + 1, int(b)) for i, b in enumerate(certified_bits)])


def prefix_theory_size_bound(m: int) -> int:
    """Size budget for the constructed m-bit prefix theory's carrier."""
    if m < 1:
        raise ValueError("need at least one asserted bit")
    ceil_log = math.ceil(math.log2(m)) if m > 1 else 0
    return m + 2 * (m * (ceil_log + 1) + 1).bit_length() - 2 + 11


def theory_audit(
    theory: TheoryArtifact,
    certified_bits: str,
    *,
    store: ExplorationStore | None = None,
    step_budget: int = 10**6,
) -> dict:
    """Run the carrier, decode its output, and grade the theory.

    Soundness: every assertion whose index falls inside the certified
    prefix must match it; assertions beyond the prefix are flagged
    unverifiable, not wrong. The observed slack is the assertion count
    minus an upper bound on the complexity of the encoded theory.
    """
    res = run(theory.carrier, step_budget)
    if res.kind != HALTED:
        raise MalformedTheoryError(f"carrier did not halt within budget: {res.kind}")
    if res.bits_consumed != len(theory.carrier):
        raise MalformedTheoryError("carrier halts without reading all its bits")
    decoded = decode_assertions(res.output)
    if decoded != theory.assertions:
        raise MalformedTheoryError(
            f"carrier output decodes to {decoded}, not {theory.assertions}"
        )
    mismatches = []
    unverifiable = []
    for index, value in theory.assertions:
        if index <= len(certified_bits):
            if int(certified_bits[index - 1]) != value:
                mismatches.append(index)
        else:
            unverifiable.append(index)
    h_upper = complexity_upper(res.output, store=store)
    report = {
        "assertion_count": len(theory.assertions),
        "sound": not mismatches,
        "mismatched_indices": mismatches,
        "unverifiable_indices": unverifiable,
        "carrier_bits": len(theory.carrier),
        "h_upper": h_upper.value,
        "h_upper_witness": h_upper.witness,
        "c_prime_observed": len(theory.assertions) - h_upper.value,
    }
    if certified_bits:
        converse = build_prefix_theory(certified_bits)
        bound = prefix_theory_size_bound(len(certified_bits))
        report["converse"] = {
            "asserted_bits": len(certified_bits),
            "carrier_bits": len(converse.carrier),
            "size_bound": bound,
            "within_bound": len(converse.carrier) <= bound,
        }
    return report


def irreducibility_table(
    certified_bits: str, store: ExplorationStore, bound_len: int
) -> list[dict]:
    """(m, exact H of the first m certified bits) for every m in reach.

    Rows whose prefix has no witness within the bound carry a null h; the
    trend is published, never asserted against the true constant, which
    no finite search can produce.
    """
    rows = []
    for m in range(1, len(certified_bits) + 1):
        result = complexity_exact(certified_bits[:m], bound_len, store)
        rows.append(
            {
                "m": m,
                "prefix": certified_bits[:m],
                "h": None if result is None else result.value,
                "witness": None if result is None else result.witness,
            }
        )
    return rows
