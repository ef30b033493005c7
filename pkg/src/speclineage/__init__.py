"""Corpus genealogy toolkit.

Turns per-item lists of feature-description sentences into equivalence
classes (exact matching, similarity candidates, human adjudication), then
computes commonality matrices, hierarchical clusterings, characteristic-spec
tables, and genealogy visuals.
"""

__version__ = "0.1.0"
