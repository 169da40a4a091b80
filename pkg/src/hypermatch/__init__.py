"""Exact perfect-matching counting for r-uniform hypergraphs, plus the
random-process simulators, property evaluators, entropy decompositions and
concentration-bound audits built on top of it."""

__version__ = "0.1.0"
