"""Item catalogs: loading, synthesis, cluster reduction, splits and neighbor queries.

A catalog is an immutable set of items, each carrying a feature embedding
(dimension ``d``) and per-attribute strength scores (``m`` attributes).
All downstream machinery (ranking, pivot trees, simulated users, the RL
agent) works against this one structure.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CatalogError",
    "Item",
    "Catalog",
    "SplitAssignment",
    "load_catalog",
    "save_catalog",
    "generate_synthetic",
    "cluster_representatives",
    "cluster_reduce",
    "split",
    "knn",
]


class CatalogError(ValueError):
    """Raised for malformed catalog files or invariant violations."""


@dataclass(frozen=True)
class Item:
    """One catalog entry. ``features`` has length d, ``attrs`` length m."""

    id: int
    features: np.ndarray
    attrs: np.ndarray
    image_uri: str | None = None


@dataclass(frozen=True)
class Catalog:
    """Immutable item collection.

    ``features`` and ``attrs`` are indexed by item id (row i = item id i),
    regardless of the order items appeared in the source file; ``item_order``
    preserves that source order for round-tripping.
    """

    features: np.ndarray  # (N, d) float64
    attrs: np.ndarray  # (N, m) float64
    attribute_names: tuple[str, ...]
    image_uris: tuple[str | None, ...] = field(default=())
    item_order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        ats = np.asarray(self.attrs, dtype=np.float64)
        if feats.ndim != 2 or ats.ndim != 2:
            raise CatalogError("features and attrs must be 2-d arrays")
        n = feats.shape[0]
        if n < 2:
            raise CatalogError(f"catalog needs at least 2 items, got {n}")
        if ats.shape[0] != n:
            raise CatalogError("features and attrs row counts differ")
        if ats.shape[1] < 1:
            raise CatalogError("catalog needs at least 1 attribute")
        if len(self.attribute_names) != ats.shape[1]:
            raise CatalogError(
                f"attribute_names length {len(self.attribute_names)} != m={ats.shape[1]}"
            )
        uris = self.image_uris if self.image_uris else (None,) * n
        if len(uris) != n:
            raise CatalogError("image_uris length mismatch")
        order = self.item_order if self.item_order else tuple(range(n))
        if sorted(order) != list(range(n)):
            raise CatalogError("item_order must be a permutation of 0..N-1")
        feats = feats.copy()
        ats = ats.copy()
        feats.flags.writeable = False
        ats.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "attrs", ats)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "image_uris", tuple(uris))
        object.__setattr__(self, "item_order", tuple(order))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def m(self) -> int:
        return self.attrs.shape[1]

    def item(self, item_id: int) -> Item:
        if not 0 <= item_id < self.n:
            raise CatalogError(f"unknown item id {item_id}")
        return Item(
            id=item_id,
            features=self.features[item_id],
            attrs=self.attrs[item_id],
            image_uri=self.image_uris[item_id],
        )

    @property
    def items(self) -> list[Item]:
        """Items in source-file order."""
        return [self.item(i) for i in self.item_order]


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/val/test id sets covering the whole catalog."""

    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]

    def __post_init__(self):
        all_ids = sorted(self.train + self.val + self.test)
        if all_ids != list(range(len(all_ids))):
            raise CatalogError("split must partition 0..N-1")


def _build_from_records(records: list[dict], d: int, m: int,
                        attribute_names: list[str]) -> Catalog:
    n = len(records)
    if n == 0:
        raise CatalogError("catalog needs at least 2 items, got 0")
    ids = [r["id"] for r in records]
    seen: set[int] = set()
    for r in records:
        if r["id"] in seen:
            raise CatalogError(f"item {r['id']}: duplicate id")
        seen.add(r["id"])
    if sorted(ids) != list(range(n)):
        raise CatalogError("item ids must be exactly 0..N-1")

    features = np.zeros((n, d))
    attrs = np.zeros((n, m))
    uris: list[str | None] = [None] * n
    for r in records:
        i = r["id"]
        f = np.asarray(r["features"], dtype=np.float64)
        a = np.asarray(r["attrs"], dtype=np.float64)
        if f.shape != (d,):
            raise CatalogError(f"item {i}: feature length {f.shape[0] if f.ndim == 1 else '?'} != {d}")
        if a.shape != (m,):
            raise CatalogError(f"item {i}: attrs length {a.shape[0] if a.ndim == 1 else '?'} != {m}")
        if not (np.isfinite(f).all() and np.isfinite(a).all()):
            raise CatalogError(f"item {i}: non-finite values")
        features[i] = f
        attrs[i] = a
        uris[i] = r.get("image_uri")
    return Catalog(
        features=features,
        attrs=attrs,
        attribute_names=tuple(attribute_names),
        image_uris=tuple(uris),
        item_order=tuple(ids),
    )


def load_catalog(path: str | Path) -> Catalog:
    """Load a catalog from JSON (or the CSV variant, by extension).

    JSON schema::

        {"d": int, "m": int, "attribute_names": [...],
         "items": [{"id": int, "features": [...], "attrs": [...],
                    "image_uri": null | str}]}

    CSV variant: header row ``id,f0..f{d-1},a0..a{m-1}``.
    """
    path = Path(path)
    if not path.exists():
        raise CatalogError(f"no such catalog file: {path}")
    if path.suffix.lower() == ".csv":
        return _load_csv(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed JSON in {path}: {exc}") from exc
    for key in ("d", "m", "attribute_names", "items"):
        if key not in doc:
            raise CatalogError(f"catalog file missing key '{key}'")
    d, m = int(doc["d"]), int(doc["m"])
    names = list(doc["attribute_names"])
    if len(names) != m:
        raise CatalogError(f"attribute_names length {len(names)} != m={m}")
    records = []
    for idx, rec in enumerate(doc["items"]):
        if not isinstance(rec, dict) or "id" not in rec:
            raise CatalogError(f"items[{idx}]: missing id")
        records.append(
            {
                "id": int(rec["id"]),
                "features": rec.get("features", []),
                "attrs": rec.get("attrs", []),
                "image_uri": rec.get("image_uri"),
            }
        )
    return _build_from_records(records, d, m, names)


def _load_csv(path: Path) -> Catalog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CatalogError(f"empty CSV file: {path}") from None
        rows = list(reader)
    if not header or header[0] != "id":
        raise CatalogError("CSV header must start with 'id'")
    fcols = [c for c in header if c.startswith("f") and c[1:].isdigit()]
    acols = [c for c in header if c.startswith("a") and c[1:].isdigit()]
    d, m = len(fcols), len(acols)
    if header != ["id"] + [f"f{i}" for i in range(d)] + [f"a{i}" for i in range(m)]:
        raise CatalogError("CSV header must be id,f0..f{d-1},a0..a{m-1}")
    records = []
    for row in rows:
        if not row:
            continue
        if len(row) != 1 + d + m:
            raise CatalogError(f"item {row[0]}: expected {1 + d + m} columns, got {len(row)}")
        records.append(
            {
                "id": int(row[0]),
                "features": [float(x) for x in row[1 : 1 + d]],
                "attrs": [float(x) for x in row[1 + d :]],
                "image_uri": None,
            }
        )
    return _build_from_records(records, d, m, [f"a{i}" for i in range(m)])


def save_catalog(catalog: Catalog, path: str | Path) -> None:
    """Write a catalog as JSON (or CSV when the path ends in .csv)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["id"] + [f"f{i}" for i in range(catalog.d)] + [f"a{i}" for i in range(catalog.m)]
        )
        for it in catalog.items:
            writer.writerow([it.id] + [repr(float(x)) for x in it.features]
                            + [repr(float(x)) for x in it.attrs])
        path.write_text(buf.getvalue())
        return
    doc = {
        "d": catalog.d,
        "m": catalog.m,
        "attribute_names": list(catalog.attribute_names),
        "items": [
            {
                "id": it.id,
                "features": list(it.features),
                "attrs": list(it.attrs),
                "image_uri": it.image_uri,
            }
            for it in catalog.items
        ],
    }
    path.write_text(json.dumps(doc))


def generate_synthetic(n: int, d: int, m: int, clusters: int, seed: int) -> Catalog:
    """Seeded synthetic catalog: Gaussian-mixture features, attrs correlated to them.

    Features are drawn from ``clusters`` Gaussian components; attribute scores
    are fixed random linear projections of the features plus Gaussian noise,
    so attributes correlate with the embedding the way learned attribute
    predictors do. Pure function of its arguments.
    """
    if n < 2:
        raise CatalogError(f"n must be >= 2, got {n}")
    if clusters < 1:
        raise CatalogError(f"clusters must be >= 1, got {clusters}")
    rng = np.random.default_rng([int(seed), 0x5EED])
    centers = rng.normal(0.0, 2.0, size=(clusters, d))
    assign = rng.integers(0, clusters, size=n)
    features = centers[assign] + rng.normal(0.0, 1.0, size=(n, d))
    # fixed projection: attrs live on roughly the same scale as features
    proj = rng.normal(0.0, 1.0, size=(d, m)) / np.sqrt(d)
    attrs = features @ proj + rng.normal(0.0, 0.1, size=(n, m))
    names = tuple(f"attr_{j}" for j in range(m))
    return Catalog(features=features, attrs=attrs, attribute_names=names)


def cluster_representatives(catalog: Catalog, k: int, seed: int) -> tuple[int, ...]:
    """k-means (seeded Lloyd's, max 100 rounds) over attrs; one real item per cluster.

    Each cluster contributes the member nearest its centroid (distance ties
    broken by smaller id). Returns ascending original ids, length exactly k.
    """
    n = catalog.n
    if not 1 <= k <= n:
        raise CatalogError(f"k must be in [1, {n}], got {k}")
    if k == n:
        return tuple(range(n))

    x = catalog.attrs
    rng = np.random.default_rng([int(seed), 0xC145])
    centroids = x[rng.choice(n, size=k, replace=False)].copy()
    x_sq = np.sum(x * x, axis=1)
    labels = None
    for _round in range(100):
        # squared distances via the expansion ||a-b||^2 = a.a + b.b - 2 a.b
        dists = x_sq[:, None] + np.sum(centroids * centroids, axis=1)[None, :] - 2.0 * (x @ centroids.T)
        np.maximum(dists, 0.0, out=dists)
        new_labels = np.argmin(dists, axis=1)
        # re-seed empty clusters at the point worst-served by its centroid
        for c in range(k):
            if not np.any(new_labels == c):
                worst = int(np.argmax(dists[np.arange(n), new_labels]))
                centroids[c] = x[worst]
                new_labels[worst] = c
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = x[members].mean(axis=0)

    reps: list[int] = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        dist = np.linalg.norm(x[members] - centroids[c], axis=1)
        best = members[np.lexsort((members, dist))[0]]
        reps.append(int(best))
    reps.sort()  # new ids ascend in original-id order
    return tuple(reps)


def cluster_reduce(catalog: Catalog, k: int, seed: int) -> tuple[Catalog, tuple[int, ...]]:
    """Catalog of the k cluster representatives, ids re-densified.

    Returns the reduced catalog plus the id mapping new_id -> original id.
    """
    if k < 2:
        raise CatalogError(f"k must be at least 2 for a valid catalog, got {k}")
    reps = cluster_representatives(catalog, k, seed)
    return Catalog(
        features=catalog.features[list(reps)],
        attrs=catalog.attrs[list(reps)],
        attribute_names=catalog.attribute_names,
        image_uris=tuple(catalog.image_uris[i] for i in reps),
    ), reps


def split(catalog: Catalog, ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
          seed: int = 0) -> SplitAssignment:
    """Seeded shuffle then partition into train/val/test by the given ratios."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CatalogError(f"ratios must sum to 1, got {ratios}")
    n = catalog.n
    rng = np.random.default_rng([int(seed), 0x5137])
    ids = rng.permutation(n)
    # largest-remainder apportionment keeps every part within 1 of its share
    exact = [r * n for r in ratios]
    counts = [int(np.floor(e)) for e in exact]
    rema = [e - c for e, c in zip(exact, counts)]
    while sum(counts) < n:
        j = int(np.argmax(rema))
        counts[j] += 1
        rema[j] = -1.0
    a, b = counts[0], counts[0] + counts[1]
    return SplitAssignment(
        train=tuple(int(i) for i in ids[:a]),
        val=tuple(int(i) for i in ids[a:b]),
        test=tuple(int(i) for i in ids[b:]),
    )


def knn(catalog: Catalog, anchor_id: int, k: int, direction: str = "nearest") -> list[int]:
    """k ids ordered by Euclidean feature distance from the anchor (anchor excluded).

    ``direction`` is "nearest" or "furthest"; distance ties break toward the
    smaller id.
    """
    if not 0 <= anchor_id < catalog.n:
        raise CatalogError(f"unknown anchor id {anchor_id}")
    if k > catalog.n - 1:
        raise CatalogError(f"k={k} exceeds N-1={catalog.n - 1}")
    if direction not in ("nearest", "furthest"):
        raise CatalogError(f"direction must be nearest|furthest, got {direction!r}")
    dists = np.linalg.norm(catalog.features - catalog.features[anchor_id], axis=1)
    ids = np.arange(catalog.n)
    mask = ids != anchor_id
    ids, dists = ids[mask], dists[mask]
    key = dists if direction == "nearest" else -dists
    order = np.lexsort((ids, key))
    return [int(i) for i in ids[order[:k]]]
