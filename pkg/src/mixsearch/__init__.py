"""Mixed-initiative interactive item retrieval with an RL interaction arbiter."""

from .catalog import Catalog, Item, SplitAssignment, generate_synthetic, load_catalog
from .relevance import (
    AttributeCompare,
    LikelihoodParams,
    Polarity,
    RelevanceState,
    Sketch,
    default_params,
)
from .session import SearchSession

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "Item",
    "SplitAssignment",
    "generate_synthetic",
    "load_catalog",
    "AttributeCompare",
    "LikelihoodParams",
    "Polarity",
    "RelevanceState",
    "Sketch",
    "default_params",
    "SearchSession",
    "__version__",
]
