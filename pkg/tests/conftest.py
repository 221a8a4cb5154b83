import json

import numpy as np
import pytest

from mixsearch.catalog import Catalog, generate_synthetic
from mixsearch.relevance import LikelihoodParams, default_params


@pytest.fixture
def tiny_catalog() -> Catalog:
    """3 items, d=2, m=1, hand-placed."""
    return Catalog(
        features=np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]]),
        attrs=np.array([[0.1], [0.5], [0.9]]),
        attribute_names=("glossy",),
    )


@pytest.fixture
def line_catalog() -> Catalog:
    """7 items whose single attribute scores are exactly 1..7 (ids 0..6)."""
    scores = np.arange(1.0, 8.0)
    return Catalog(
        features=scores[:, None].repeat(2, axis=1),
        attrs=scores[:, None],
        attribute_names=("size",),
    )


@pytest.fixture
def small_catalog() -> Catalog:
    return generate_synthetic(50, 8, 4, clusters=3, seed=101)


@pytest.fixture
def small_params(small_catalog) -> LikelihoodParams:
    return default_params(small_catalog)


@pytest.fixture
def catalog_file(tmp_path, tiny_catalog):
    doc = {
        "d": 2,
        "m": 1,
        "attribute_names": ["glossy"],
        "items": [
            {"id": int(i), "features": list(tiny_catalog.features[i]),
             "attrs": list(tiny_catalog.attrs[i]), "image_uri": None}
            for i in range(3)
        ],
    }
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps(doc))
    return path
