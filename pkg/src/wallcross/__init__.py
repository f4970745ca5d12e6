"""Wall-and-chamber structure, weight cones and moment-map zeros for graded bundles."""

__version__ = "0.1.0"
