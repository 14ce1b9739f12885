"""mdbs: a federated multidatabase engine.

One global schema over autonomous heterogeneous sites: queries written
against virtual classes are decomposed into per-site sub-queries,
executed at site agents and composed back into a single answer.
"""

__version__ = "0.1.0"
