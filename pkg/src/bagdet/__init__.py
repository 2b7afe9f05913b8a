"""Bag-semantics determinacy of conjunctive queries: decision, counterexamples, path queries."""

__version__ = "0.1.0"
