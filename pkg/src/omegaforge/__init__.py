"""omegaforge: exact halting-probability and program-size workbench on a
self-delimiting binary counter machine."""

from .dyadic import Dyadic
from .explorer import (
    ExplorationStore,
    ExploreBudget,
    NodeRecord,
    classify_node,
    explore,
    read_checkpoint,
    write_checkpoint,
)
from .machine import (
    RunOutcome,
    machine_version_hash,
    prove_divergence,
    run,
    run_guest,
    run_with_trace,
    simulation_prefix,
)
from .omega import (
    MassLedger,
    OmegaBits,
    block_frequencies,
    certify_bits,
    halting_oracle,
    ledger_from_store,
    progress_report,
)

__version__ = "0.1.0"

__all__ = [
    "Dyadic",
    "ExplorationStore",
    "ExploreBudget",
    "MassLedger",
    "NodeRecord",
    "OmegaBits",
    "RunOutcome",
    "block_frequencies",
    "certify_bits",
    "classify_node",
    "explore",
    "halting_oracle",
    "ledger_from_store",
    "machine_version_hash",
    "progress_report",
    "prove_divergence",
    "read_checkpoint",
    "run",
    "run_guest",
    "run_with_trace",
    "simulation_prefix",
    "write_checkpoint",
]
