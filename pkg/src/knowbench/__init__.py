"""Workbench for a propositional knowledge logic with non-Kripkean semantics."""

from .syntax import Atom, Not, And, Or, Implies, K, parse, to_text, kn, iff
from .theory import Theory, Schema, close, union, schemas, finite, kn_family, contains
from .entailment import entails, entails_finite, is_valid, check_proof

__version__ = "0.1.0"
