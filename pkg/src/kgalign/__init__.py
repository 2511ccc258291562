"""Multi-modal knowledge-graph entity alignment.

Trains a product-of-experts model over relational, latent, numerical and
visual evidence to answer sameAs completion queries between two knowledge
graphs, with seeded splits, cross-KG horn-rule mining, unfiltered ranking
evaluation, and Concat/Ensemble baselines.
"""

__version__ = "0.1.0"

from .store import KnowledgeGraphStore  # noqa: F401
