"""Execution core: a self-delimiting universal binary counter machine.

Programs are finite bit strings read strictly on demand, so the machine
itself decides where a program ends: if it halts, it has consumed a
definite number of bits, and the set of accepted programs is prefix-free.
All fixed-width operand fields read their most significant bit first.

Instruction set (opcode = first 3 bits of the instruction):

    bits        asm           width  effect
    000         HALT          3      stop, keep the current output
    001         OUT0          3      append 0 to the output
    010         OUT1          3      append 1 to the output
    011         DBL           3      append a copy of the whole output
    100 r       INC r         4      register r += 1        (r: 0=A, 1=B)
    101 r kkk   DECJNZ r,k    7      if r > 0: r -= 1 and resume k+1
                                     instructions back from the
                                     fall-through position, i.e. at
                                     instruction index (pc - k); a target
                                     below instruction 0 is invalid.
                                     if r == 0: fall through.
    110 gg      SIM gg        5      hand every remaining bit read to
                                     guest machine gg; when the guest
                                     halts, halt with its output appended
    111         (reserved)    -      invalid

Guest machines reachable through SIM:

    00  literal machine: an Elias gamma code for n+1 (that is,
        floor(log2(n+1)) zeros, then n+1 in binary MSB first) followed by
        n payload bits; halts with output = payload.
    01  unary machine: reads bits up to and including the first 0; halts
        with one output 1 per 1 read.

Guest ids 10 and 11 are reserved and invalid.

A run is a pure function of (program bits, step budget). Cost model: one
step per executed instruction, one step per bit a guest consumes.
Divergence is only ever reported with a sound certificate:

    CYCLE           an exact machine state (pc, regA, regB, frontier)
                    recurred; output is excluded because no instruction's
                    control behavior reads it.
    MONOTONE_CYCLE  a control point (pc, frontier) recurred with both
                    registers >= their earlier values while every DECJNZ
                    executed in between took its register-positive
                    branch; that branch pattern then repeats forever.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, NamedTuple

OP_HALT = 0
OP_OUT0 = 1
OP_OUT1 = 2
OP_DBL = 3
OP_INC = 4
OP_DECJNZ = 5
OP_SIM = 6
OP_RESERVED = 7

OPCODE_NAMES = ("HALT", "OUT0", "OUT1", "DBL", "INC", "DECJNZ", "SIM", "INVALID")

# Outcome kinds.
HALTED = "HALTED"
NEEDS_BIT = "NEEDS_BIT"
INVALID = "INVALID"
DIVERGES = "DIVERGES"
UNKNOWN = "UNKNOWN"

# Divergence certificates.
CYCLE = "CYCLE"
MONOTONE_CYCLE = "MONOTONE_CYCLE"

GUEST_LITERAL = "00"
GUEST_UNARY = "01"

# Engineering guards, not semantics: no program small enough to matter at
# desk scale gets anywhere near these while still being decidable.
_OUTPUT_LIMIT = 1 << 22
_TRACK_LIMIT = 1 << 18

_VERSION_PAYLOAD = (
    "omegaforge-bitvm/1;"
    "opcodes=HALT:000,OUT0:001,OUT1:010,DBL:011,INC:100r,DECJNZ:101rkkk,SIM:110gg,RESERVED:111;"
    "decjnz-target=pc-minus-k,negative-invalid;"
    "guests=00:gamma-literal,01:unary;"
    "steps=1-per-instruction,1-per-guest-bit"
)


class MachineLimitError(RuntimeError):
    """An engineering cap (output size) was exceeded mid-run."""


def machine_version_hash() -> str:
    """16-hex-digit fingerprint of the machine semantics, used to guard
    checkpoints and reports against cross-version mixing."""
    return hashlib.sha256(_VERSION_PAYLOAD.encode("ascii")).hexdigest()[:16]


def check_bits(bits: str) -> str:
    if not isinstance(bits, str) or bits.strip("01") != "":
        raise ValueError(f"not a bit string: {bits!r}")
    return bits


class Instruction(NamedTuple):
    code: int
    reg: int | None = None
    jump: int | None = None
    guest: str | None = None

    @property
    def name(self) -> str:
        return OPCODE_NAMES[self.code]


@dataclass(frozen=True)
class RunOutcome:
    """The fully decided fate of one run.

    kind          HALTED, NEEDS_BIT, INVALID, DIVERGES or UNKNOWN
    output        bit string, HALTED only
    bits_consumed program bits committed when the run ended
    steps         steps executed when the run ended
    proof         CYCLE or MONOTONE_CYCLE, DIVERGES only
    """

    kind: str
    output: str | None = None
    bits_consumed: int = 0
    steps: int = 0
    proof: str | None = None


def decode_step(program: str, frontier: int = 0):
    """Decode the instruction starting at bit offset ``frontier``.

    Returns (None, instruction, width) on success, or
    (NEEDS_BIT | INVALID, None, 0) when the stream is short or the
    encoding is reserved (opcode 111, guest ids 10/11).
    """
    n = len(program)
    if frontier + 3 > n:
        return NEEDS_BIT, None, 0
    code = int(program[frontier : frontier + 3], 2)
    if code == OP_RESERVED:
        return INVALID, None, 0
    if code <= OP_DBL:
        return None, Instruction(code), 3
    if code == OP_INC:
        if frontier + 4 > n:
            return NEEDS_BIT, None, 0
        return None, Instruction(code, reg=int(program[frontier + 3])), 4
    if code == OP_DECJNZ:
        if frontier + 7 > n:
            return NEEDS_BIT, None, 0
        reg = int(program[frontier + 3])
        jump = int(program[frontier + 4 : frontier + 7], 2)
        return None, Instruction(code, reg=reg, jump=jump), 7
    # SIM
    if frontier + 5 > n:
        return NEEDS_BIT, None, 0
    gid = program[frontier + 3 : frontier + 5]
    if gid not in GUESTS:
        return INVALID, None, 0
    return None, Instruction(code, guest=gid), 5


class _NeedBitSignal(Exception):
    pass


class _BudgetSignal(Exception):
    pass


def _literal_guest(read: Callable[[], str]) -> str:
    zeros = 0
    while read() == "0":
        zeros += 1
    value = 1
    for _ in range(zeros):
        value = (value << 1) | (read() == "1")
    return "".join(read() for _ in range(value - 1))


def _unary_guest(read: Callable[[], str]) -> str:
    count = 0
    while read() == "1":
        count += 1
    return "1" * count


GUESTS = {GUEST_LITERAL: _literal_guest, GUEST_UNARY: _unary_guest}


def _guest_stream(gid: str, bits: str, pos: int, steps: int, budget: int):
    """Run guest ``gid`` on bits[pos:]. Returns (kind, output, pos, steps)."""
    cursor = [pos, steps]

    def read() -> str:
        if cursor[0] >= len(bits):
            raise _NeedBitSignal
        if cursor[1] >= budget:
            raise _BudgetSignal
        b = bits[cursor[0]]
        cursor[0] += 1
        cursor[1] += 1
        return b

    try:
        out = GUESTS[gid](read)
    except _NeedBitSignal:
        return NEEDS_BIT, None, cursor[0], cursor[1]
    except _BudgetSignal:
        return UNKNOWN, None, cursor[0], cursor[1]
    return HALTED, out, cursor[0], cursor[1]


def run_guest(guest_id: str, stream: str, step_budget: int = 10**6) -> RunOutcome:
    """Run a guest machine directly on a bit stream (no SIM prefix)."""
    if guest_id not in GUESTS:
        raise ValueError(f"unknown guest id: {guest_id!r}")
    check_bits(stream)
    kind, out, pos, steps = _guest_stream(guest_id, stream, 0, 0, step_budget)
    return RunOutcome(kind, output=out, bits_consumed=pos, steps=steps)


def simulation_prefix(guest_id: str) -> str:
    """The 5-bit prefix that makes the host behave as the given guest."""
    if guest_id not in GUESTS:
        raise ValueError(f"unknown guest id: {guest_id!r}")
    return "110" + guest_id


def run(
    program: str,
    step_budget: int,
    *,
    detect_divergence: bool = True,
    _trace: list | None = None,
) -> RunOutcome:
    """Execute a program against a step budget.

    Deterministic: identical (program, step_budget) always produces an
    identical outcome, step counts included. A pending bit request wins
    over budget exhaustion, so NEEDS_BIT is reported even at the budget
    boundary; UNKNOWN means the budget ran out with no bit pending.
    """
    check_bits(program)
    if step_budget < 1:
        raise ValueError("step budget must be >= 1")
    decoded: list[Instruction] = []
    frontier = 0
    pc = 0
    rega = 0
    regb = 0
    out = ""
    steps = 0
    seen: set = set()
    mono: dict = {}
    tracked = 0
    while True:
        if pc == len(decoded):
            status, instr, width = decode_step(program, frontier)
            if status is not None:
                return RunOutcome(status, bits_consumed=frontier, steps=steps)
            decoded.append(instr)
            frontier += width
        if detect_divergence or _trace is not None:
            state = (pc, rega, regb, frontier)
            if _trace is not None:
                _trace.append([pc, rega, regb, frontier, False])
            if detect_divergence:
                if state in seen:
                    return RunOutcome(
                        DIVERGES, bits_consumed=frontier, steps=steps, proof=CYCLE
                    )
                key = (pc, frontier)
                cands = mono.get(key)
                if cands:
                    for pa, pb in cands:
                        if rega >= pa and regb >= pb:
                            return RunOutcome(
                                DIVERGES,
                                bits_consumed=frontier,
                                steps=steps,
                                proof=MONOTONE_CYCLE,
                            )
                if tracked < _TRACK_LIMIT:
                    seen.add(state)
                    mono.setdefault(key, []).append((rega, regb))
                    tracked += 1
        if steps >= step_budget:
            return RunOutcome(UNKNOWN, bits_consumed=frontier, steps=steps)
        steps += 1
        code, reg, jump, guest = decoded[pc]
        if code == OP_OUT0:
            out += "0"
            pc += 1
        elif code == OP_OUT1:
            out += "1"
            pc += 1
        elif code == OP_DBL:
            out += out
            if len(out) > _OUTPUT_LIMIT:
                raise MachineLimitError("output grew past the engineering cap")
            pc += 1
        elif code == OP_INC:
            if reg == 0:
                rega += 1
            else:
                regb += 1
            pc += 1
        elif code == OP_DECJNZ:
            value = rega if reg == 0 else regb
            if value:
                target = pc - jump
                if target < 0:
                    return RunOutcome(INVALID, bits_consumed=frontier, steps=steps)
                if reg == 0:
                    rega -= 1
                else:
                    regb -= 1
                pc = target
            else:
                pc += 1
                if detect_divergence:
                    mono.clear()
                if _trace is not None:
                    _trace[-1][4] = True
        elif code == OP_HALT:
            return RunOutcome(HALTED, output=out, bits_consumed=frontier, steps=steps)
        else:  # OP_SIM
            kind, gout, pos, steps = _guest_stream(
                guest, program, frontier, steps, step_budget
            )
            if kind == HALTED:
                return RunOutcome(
                    HALTED, output=out + gout, bits_consumed=pos, steps=steps
                )
            return RunOutcome(kind, bits_consumed=pos, steps=steps)


def run_with_trace(program: str, step_budget: int):
    """Like run(), also returning the per-step state trace.

    Trace entries are (pc, regA, regB, frontier, zero_branch) where
    zero_branch marks steps whose DECJNZ saw a zero register.
    """
    trace: list = []
    outcome = run(program, step_budget, _trace=trace)
    return outcome, [tuple(entry) for entry in trace]


def prove_divergence(trace) -> str | None:
    """Scan a recorded trace for a divergence certificate.

    Reference implementation of the two certificate rules; run() applies
    the same rules online. The trace must come from a run that requested
    no further bits.
    """
    seen = set()
    visits: dict = {}
    last_zero = -1
    for i, (pc, rega, regb, frontier, zero) in enumerate(trace):
        state = (pc, rega, regb, frontier)
        if state in seen:
            return CYCLE
        key = (pc, frontier)
        for j, pa, pb in visits.get(key, ()):
            if j > last_zero and rega >= pa and regb >= pb:
                return MONOTONE_CYCLE
        seen.add(state)
        visits.setdefault(key, []).append((i, rega, regb))
        if zero:
            last_zero = i
    return None
