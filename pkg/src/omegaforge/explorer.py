"""Breadth-first exploration of the program prefix tree.

Stems grow bit by bit, 0-child before 1-child. A stem that asks for a
bit beyond its own length is EXPANDED and gets two children; everything
else is a leaf: HALT (with its output), a proven divergence, INVALID, or
UNKNOWN. UNKNOWN covers both budget exhaustion and stems cut off at the
length bound; neither is expanded, since a run that requested no new bit
behaves identically under every extension.

The final store is a pure function of the budget: worker count,
scheduling and interruption points cannot change a single byte of the
checkpoint.

Checkpoint format (normative for golden tests)::

    OMEGAFORGE/1
    machine <16-hex machine version hash>
    budget max_len=<n> max_steps=<m>
    <bits> <STATUS> <output|-> <steps>      one line per node, sorted
    ...                                     lexicographically by bits
    checksum <sha256 hex of the record lines>

The empty program's bits are written as ``-``; a ``-`` output means the
empty string for HALT records and "no output" for every other status.
Writes are atomic (write to a temp file, then rename).
"""

from __future__ import annotations

import hashlib
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .machine import (
    CYCLE,
    DIVERGES,
    HALTED,
    INVALID,
    NEEDS_BIT,
    check_bits,
    machine_version_hash,
    run,
)

# Node statuses.
HALT = "HALT"
DIVERGE_CYCLE = "DIVERGE_CYCLE"
DIVERGE_MONO = "DIVERGE_MONO"
NODE_INVALID = "INVALID"
NODE_UNKNOWN = "UNKNOWN"
EXPANDED = "EXPANDED"

DECIDED = (HALT, DIVERGE_CYCLE, DIVERGE_MONO, NODE_INVALID)

CHECKPOINT_MAGIC = "OMEGAFORGE/1"


class CheckpointError(Exception):
    """Unreadable, corrupt, or incompatible checkpoint."""


@dataclass(frozen=True)
class ExploreBudget:
    max_len: int
    max_steps: int

    def __post_init__(self):
        if self.max_len < 0:
            raise ValueError("max_len must be >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def covers(self, other: "ExploreBudget") -> bool:
        return self.max_len >= other.max_len and self.max_steps >= other.max_steps


@dataclass(slots=True)
class NodeRecord:
    program: str
    status: str
    output: str | None
    steps: int


def classify_node(program: str, max_steps: int, max_len: int | None = None) -> NodeRecord:
    """Run the machine on a stem and fold the outcome into a node status.

    A halt that did not consume the whole stem is rejected as INVALID:
    such a stem extends a shorter accepted program and has no place in
    the prefix-free set. With ``max_len`` given, a bit request at the
    cutoff length becomes UNKNOWN instead of EXPANDED.
    """
    res = run(program, max_steps)
    if res.kind == HALTED:
        if res.bits_consumed == len(program):
            return NodeRecord(program, HALT, res.output, res.steps)
        return NodeRecord(program, NODE_INVALID, None, res.steps)
    if res.kind == NEEDS_BIT:
        if max_len is not None and len(program) >= max_len:
            return NodeRecord(program, NODE_UNKNOWN, None, res.steps)
        return NodeRecord(program, EXPANDED, None, res.steps)
    if res.kind == INVALID:
        return NodeRecord(program, NODE_INVALID, None, res.steps)
    if res.kind == DIVERGES:
        status = DIVERGE_CYCLE if res.proof == CYCLE else DIVERGE_MONO
        return NodeRecord(program, status, None, res.steps)
    return NodeRecord(program, NODE_UNKNOWN, None, res.steps)


class ExplorationStore:
    """All classified nodes of one exploration, plus its provenance."""

    def __init__(self, nodes: dict[str, NodeRecord], budget: ExploreBudget,
                 machine_hash: str | None = None):
        self.nodes = nodes
        self.budget = budget
        self.machine_hash = machine_hash or machine_version_hash()
        self._halt_index: dict[str, tuple[int, str]] | None = None
        self._min_unknown_len: int | None = -1  # -1: not computed yet

    def __len__(self) -> int:
        return len(self.nodes)

    def leaves(self):
        return (rec for rec in self.nodes.values() if rec.status != EXPANDED)

    def halting(self):
        return (rec for rec in self.nodes.values() if rec.status == HALT)

    def is_closed(self) -> bool:
        """True when every EXPANDED node has both children in the store."""
        nodes = self.nodes
        return all(
            rec.program + "0" in nodes and rec.program + "1" in nodes
            for rec in nodes.values()
            if rec.status == EXPANDED
        )

    def fate(self, program: str) -> str:
        """Status governing an arbitrary bit string under this store.

        Returns the exact node's status when present; the ancestor leaf's
        status when the string extends a leaf; UNKNOWN when it runs past
        the explored depth of a still-open branch.
        """
        check_bits(program)
        rec = self.nodes.get(program)
        if rec is not None:
            return rec.status
        for cut in range(len(program) - 1, -1, -1):
            anc = self.nodes.get(program[:cut])
            if anc is not None:
                return anc.status if anc.status != EXPANDED else NODE_UNKNOWN
        return NODE_UNKNOWN

    def halt_index(self) -> dict[str, tuple[int, str]]:
        """output -> (length, program) of its best halting witness,
        shortest first, then lexicographically smallest."""
        if self._halt_index is None:
            index: dict[str, tuple[int, str]] = {}
            for rec in self.halting():
                key = (len(rec.program), rec.program)
                prev = index.get(rec.output)
                if prev is None or key < prev:
                    index[rec.output] = key
            self._halt_index = index
        return self._halt_index

    def min_unknown_len(self) -> int | None:
        """Length of the shortest UNKNOWN node, None when fully decided."""
        if self._min_unknown_len == -1:
            lens = [len(r.program) for r in self.nodes.values()
                    if r.status == NODE_UNKNOWN]
            self._min_unknown_len = min(lens) if lens else None
        return self._min_unknown_len


def _pending_children(nodes: dict[str, NodeRecord]) -> list[str]:
    pending = []
    for prog, rec in nodes.items():
        if rec.status == EXPANDED:
            for child in (prog + "0", prog + "1"):
                if child not in nodes:
                    pending.append(child)
    pending.sort()
    return pending


def _explore_serial(nodes, pending, budget, node_limit=None):
    processed = 0
    while pending:
        if node_limit is not None and processed >= node_limit:
            break
        prog = pending.popleft()
        rec = classify_node(prog, budget.max_steps, budget.max_len)
        nodes[prog] = rec
        processed += 1
        if rec.status == EXPANDED:
            pending.append(prog + "0")
            pending.append(prog + "1")
    return processed


def _subtree_worker(args):
    stem, budget = args
    nodes: dict[str, NodeRecord] = {}
    _explore_serial(nodes, deque([stem]), budget)
    return nodes


def _prepare_resume(store: ExplorationStore, budget: ExploreBudget):
    """Carry a previous store forward under an equal or larger budget.

    Decided statuses are final. UNKNOWN nodes that ended on a bit request
    (steps below the old step budget) become EXPANDED when the length
    bound grew; UNKNOWN nodes that exhausted the old step budget are
    re-run when the step budget grew. The result is byte-identical to a
    fresh run at the new budget.
    """
    if store.machine_hash != machine_version_hash():
        raise CheckpointError(
            f"checkpoint machine version {store.machine_hash} does not match "
            f"current machine {machine_version_hash()}"
        )
    if not budget.covers(store.budget):
        raise ValueError(
            f"resume budget {budget} does not cover checkpoint budget {store.budget}"
        )
    nodes: dict[str, NodeRecord] = {}
    rerun = []
    for prog, rec in store.nodes.items():
        if rec.status != NODE_UNKNOWN:
            nodes[prog] = rec
            continue
        hit_budget = rec.steps >= store.budget.max_steps
        if hit_budget and budget.max_steps > store.budget.max_steps:
            rerun.append(prog)
        elif not hit_budget and budget.max_len > len(prog):
            nodes[prog] = NodeRecord(prog, EXPANDED, None, rec.steps)
        else:
            nodes[prog] = rec
    pending = sorted(set(_pending_children(nodes)) | set(rerun))
    return nodes, deque(pending)


def explore(
    budget: ExploreBudget,
    *,
    resume: ExplorationStore | None = None,
    threads: int = 1,
    node_limit: int | None = None,
) -> ExplorationStore:
    """Classify every stem of the program tree up to the budget.

    ``resume`` continues from an earlier store whose budget the new one
    covers. ``node_limit`` stops after that many classifications (a clean
    interruption point; serial only). ``threads`` partitions disjoint
    subtrees across workers; results do not depend on the count.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if node_limit is not None and threads != 1:
        raise ValueError("node_limit requires threads=1")
    if resume is not None:
        nodes, pending = _prepare_resume(resume, budget)
    else:
        nodes = {}
        pending = deque([""])
    if threads == 1:
        _explore_serial(nodes, pending, budget, node_limit)
    else:
        # Serial warmup until there is enough work to split.
        while pending and len(pending) < threads * 8:
            prog = pending.popleft()
            rec = classify_node(prog, budget.max_steps, budget.max_len)
            nodes[prog] = rec
            if rec.status == EXPANDED:
                pending.append(prog + "0")
                pending.append(prog + "1")
        tasks = sorted(pending)
        if tasks:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for part in pool.map(_subtree_worker, [(t, budget) for t in tasks]):
                    nodes.update(part)
    return ExplorationStore(nodes, budget)


def halting_prefix_violations(store: ExplorationStore) -> list[tuple[str, str]]:
    """Pairs (p, q) of halting programs where p is a proper prefix of q."""
    halting = sorted(rec.program for rec in store.halting())
    bad = []
    for prev, cur in zip(halting, halting[1:]):
        if cur.startswith(prev):
            bad.append((prev, cur))
    return bad


def _record_lines(store: ExplorationStore) -> list[str]:
    lines = []
    for prog in sorted(store.nodes):
        rec = store.nodes[prog]
        out = rec.output if rec.output else "-"
        lines.append(f"{prog or '-'} {rec.status} {out} {rec.steps}")
    return lines


def _checksum(record_lines: list[str]) -> str:
    h = hashlib.sha256()
    for line in record_lines:
        h.update(line.encode("ascii"))
        h.update(b"\n")
    return h.hexdigest()


def serialize_checkpoint(store: ExplorationStore) -> str:
    records = _record_lines(store)
    head = [
        CHECKPOINT_MAGIC,
        f"machine {store.machine_hash}",
        f"budget max_len={store.budget.max_len} max_steps={store.budget.max_steps}",
    ]
    return "\n".join(head + records + [f"checksum {_checksum(records)}"]) + "\n"


def write_checkpoint(store: ExplorationStore, path) -> str:
    """Atomically write the checkpoint; returns its checksum."""
    path = Path(path)
    text = serialize_checkpoint(store)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="ascii")
    os.replace(tmp, path)
    return text.rsplit("checksum ", 1)[1].strip()


def read_checkpoint(path) -> ExplorationStore:
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if len(lines) < 4 or lines[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_MAGIC} checkpoint")
    if not lines[1].startswith("machine "):
        raise CheckpointError(f"{path}: missing machine line")
    machine_hash = lines[1].split(" ", 1)[1].strip()
    try:
        fields = dict(part.split("=") for part in lines[2].split(" ")[1:])
        budget = ExploreBudget(int(fields["max_len"]), int(fields["max_steps"]))
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: bad budget line: {lines[2]!r}") from exc
    if not lines[-1].startswith("checksum "):
        raise CheckpointError(f"{path}: missing checksum line")
    records = lines[3:-1]
    expected = lines[-1].split(" ", 1)[1].strip()
    actual = _checksum(records)
    if actual != expected:
        raise CheckpointError(
            f"{path}: checksum failure (stored {expected}, computed {actual})"
        )
    nodes: dict[str, NodeRecord] = {}
    for line in records:
        try:
            bits, status, out, steps = line.split(" ")
        except ValueError as exc:
            raise CheckpointError(f"{path}: bad record line: {line!r}") from exc
        prog = "" if bits == "-" else bits
        if status == HALT:
            output = "" if out == "-" else out
        else:
            output = None
        nodes[prog] = NodeRecord(prog, status, output, int(steps))
    return ExplorationStore(nodes, budget, machine_hash)


def checkpoint_filename(budget: ExploreBudget) -> str:
    return f"explore_len{budget.max_len}_steps{budget.max_steps}.ckpt"
