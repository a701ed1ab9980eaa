"""Linear-programming outer bounds for exact-repair distributed storage.

The pipeline: :mod:`model` fixes the random variables of an instance,
:mod:`entset` and :mod:`constraints` produce the Shannon and system
constraints, :mod:`reduce` shrinks the column space by closure and node
relabelling, and :mod:`lp` builds and solves the programs with exact
certificates.  :mod:`verify` checks the symmetry statements on explicit
distributions and code tables.
"""
from .lp import build_rate_lp, build_tradeoff_lp, export_lp, solve, verify_certificate
from .model import DssParams, enumerate_universe, max_flow_bound

__version__ = "0.1.0"

__all__ = [
    "DssParams", "enumerate_universe", "max_flow_bound",
    "build_rate_lp", "build_tradeoff_lp", "solve", "verify_certificate", "export_lp",
]
