"""Embedding tables, bag-of-words distributions, and point clouds.

Two text formats are handled here.

Embedding table (word2vec text format)::

    <count> <dim>        # optional header
    token v1 v2 ... vd
    ...

Point cloud::

    <n> <d>
    x1 x2 ... xd         # n rows follow
    ...

Point weights are uniform ``1/n``.  Documents become normalized bag-of-words
distributions over their in-vocabulary tokens; out-of-vocabulary tokens are
dropped and the remaining weights renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AllTokensOOVError,
    EmptyCloudError,
    EmptyTableError,
    ParseError,
)


@dataclass(frozen=True)
class WeightedPointCloud:
    """Points in R^d with nonnegative weights summing to 1."""

    points: np.ndarray  # shape (n, d)
    weights: np.ndarray  # shape (n,)

    def __post_init__(self) -> None:
        if self.points.ndim != 2:
            raise ParseError("points must be a 2-D array")
        if len(self.weights) != len(self.points):
            raise ParseError("one weight per point required")

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class EmbeddingTable:
    """Token -> vector lookup with optional case folding.

    When ``case_fold`` is true (the default) keys are stored lowercased and
    lookups are lowercased, so 'RAIN' and 'rain' resolve identically.
    """

    vectors: dict[str, np.ndarray]
    dim: int
    case_fold: bool = True

    def lookup(self, token: str) -> np.ndarray | None:
        if self.case_fold:
            token = token.lower()
        return self.vectors.get(token)

    def __contains__(self, token: str) -> bool:
        return self.lookup(token) is not None

    def __len__(self) -> int:
        return len(self.vectors)


def _is_int(field: str) -> bool:
    try:
        int(field)
    except ValueError:
        return False
    return True


def load_embedding_table(path: str | Path, case_fold: bool = True) -> EmbeddingTable:
    """Parse a word2vec-style text table.

    The header line is optional; it is recognized when the first line has
    exactly two integer fields.  Every data line must carry the same number
    of coordinates.  Duplicate tokens keep the first occurrence.  Raises
    ParseError on ragged or non-numeric rows and EmptyTableError when no
    entries remain.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [ln for ln in lines if ln.strip()]
    if rows:
        first = rows[0].split()
        if len(first) == 2 and _is_int(first[0]) and _is_int(first[1]):
            rows = rows[1:]

    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, row in enumerate(rows, start=1):
        fields = row.split()
        if len(fields) < 2:
            raise ParseError(f"line {lineno}: token and coordinates expected")
        token, coords = fields[0], fields[1:]
        if dim is None:
            dim = len(coords)
        elif len(coords) != dim:
            raise ParseError(
                f"line {lineno}: {len(coords)} coordinates, expected {dim}"
            )
        try:
            vec = np.array([float(c) for c in coords])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-numeric coordinate") from exc
        key = token.lower() if case_fold else token
        if key not in vectors:
            vectors[key] = vec
    if not vectors or dim is None:
        raise EmptyTableError("embedding table has no entries")
    return EmbeddingTable(vectors=vectors, dim=dim, case_fold=case_fold)


def doc_to_nbow(tokens: list[str] | tuple[str, ...], table: EmbeddingTable) -> WeightedPointCloud:
    """Embed a document as a normalized bag-of-words point cloud.

    Repeated tokens accumulate weight on a single point, ordered by first
    occurrence.  Out-of-vocabulary tokens are dropped and the remaining
    weights renormalized.  Raises AllTokensOOVError when nothing survives.
    """
    order: list[str] = []
    counts: dict[str, int] = {}
    points: dict[str, np.ndarray] = {}
    for token in tokens:
        vec = table.lookup(token)
        if vec is None:
            continue
        key = token.lower() if table.case_fold else token
        if key not in counts:
            order.append(key)
            points[key] = vec
            counts[key] = 0
        counts[key] += 1
    if not order:
        raise AllTokensOOVError("no document token is in the embedding table")
    total = sum(counts[k] for k in order)
    pts = np.stack([points[k] for k in order])
    wts = np.array([counts[k] / total for k in order])
    return WeightedPointCloud(points=pts, weights=wts)


def embed_tokens(tokens: list[str] | tuple[str, ...], table: EmbeddingTable) -> np.ndarray:
    """Look up one vector per in-vocabulary token occurrence, in order.

    Unlike :func:`doc_to_nbow` multiplicity is kept row by row; the result is
    the raw sample of embedded words used by the bootstrap test.  Raises
    AllTokensOOVError when every token is out of vocabulary.
    """
    rows = [table.lookup(t) for t in tokens]
    rows = [r for r in rows if r is not None]
    if not rows:
        raise AllTokensOOVError("no document token is in the embedding table")
    return np.stack(rows)


def parse_point_cloud_text(text: str, require_header: bool = True) -> WeightedPointCloud:
    """Parse point-cloud text into a uniformly weighted cloud.

    With ``require_header`` the first line must be ``n d`` and exactly n rows
    of d reals must follow.  Without it a bare matrix is also accepted; model
    adapters use that form so composed responses do not need to carry a count.
    A leading two-integer line then counts as a header only when it agrees
    with the number of rows that follow, otherwise it is read as a data row
    (a bare integer cloud shaped exactly like header-plus-rows stays
    ambiguous; files avoid this by always carrying the header).  Raises
    ParseError on malformed input and EmptyCloudError when no points remain.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyCloudError("point cloud has no points")

    first = lines[0].split()
    has_header = len(first) == 2 and _is_int(first[0]) and _is_int(first[1])
    if require_header and not has_header:
        raise ParseError("point cloud must start with an 'n d' header")

    if has_header:
        n, d = int(first[0]), int(first[1])
        rows = lines[1:]
        if require_header:
            if n == 0:
                raise EmptyCloudError("point cloud has no points")
            if len(rows) != n:
                raise ParseError(f"header promises {n} rows, found {len(rows)}")
        elif n == 0 or len(rows) != n:
            has_header = False
    if not has_header:
        n, d = len(lines), len(first)
        rows = lines

    points = np.empty((n, d))
    for i, row in enumerate(rows):
        fields = row.split()
        if len(fields) != d:
            raise ParseError(f"row {i + 1}: {len(fields)} coordinates, expected {d}")
        try:
            points[i] = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"row {i + 1}: non-numeric coordinate") from exc
    weights = np.full(n, 1.0 / n)
    return WeightedPointCloud(points=points, weights=weights)


def load_point_cloud(path: str | Path) -> WeightedPointCloud:
    """Read a point-cloud file (header required, uniform weights)."""
    return parse_point_cloud_text(Path(path).read_text(encoding="utf-8"), require_header=True)
