"""Exact-arithmetic branch-and-cut laboratory.

Rational LPs, cut and branching scores, best-bound branch-and-bound with full
tree records, a minimum-tree-size oracle and the instance families used to
separate scoring rules from tree size.
"""

from .branching import PolicySpec
from .engine import TreeRecord, run_bnb
from .instances import FamilySpec, build
from .lp import solve_lp
from .model import Cut, Fixings, Instance
from .oracle import min_tree_size

__all__ = ["Cut", "FamilySpec", "Fixings", "Instance", "PolicySpec", "TreeRecord", "build", "min_tree_size",
           "run_bnb", "solve_lp"]
__version__ = "0.1.0"
