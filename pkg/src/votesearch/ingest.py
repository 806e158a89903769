"""Dataset ingest: ratings CSV -> global approval election, plus a binary cache.

The expected input is the common two-file layout: a ratings table with header
``userId,movieId,rating,timestamp`` and a movie table with header
``movieId,title,genres`` (genres pipe-separated). A rating approves its movie
iff it is at or above the approval threshold (default 4.0). Movies with fewer
than ``min_approvals`` approvers after thresholding are dropped. Every
distinct rater counts as an agent, including raters whose every rating falls
below the threshold: the agent count feeds IDF damping later and must reflect
the whole population.

Repeated (user, movie) pairs are tolerated: the last occurrence wins and a
duplicate count is reported. Row order is otherwise irrelevant.

The cache is a little-endian, length-prefixed binary snapshot of the election
plus catalog (format documented in ``_write_payload``), protected by a CRC so
corruption is an error rather than a silent partial load.
"""

from __future__ import annotations

import csv
import io
import struct
import zlib
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

import numpy as np

from .elections import ApprovalElection

RATINGS_HEADER = ["userId", "movieId", "rating", "timestamp"]
MOVIES_HEADER = ["movieId", "title", "genres"]

_MAGIC = b"VSRCH\x00"
_VERSION = 1


class IngestError(ValueError):
    """Malformed input data."""


class CacheError(ValueError):
    """Unreadable, corrupt, or incompatible cache file."""


@dataclass(frozen=True)
class MovieInfo:
    title: str
    genres: tuple[str, ...]


class Catalog:
    """Display metadata: resource id -> title and genres."""

    def __init__(self, entries: Mapping[int, MovieInfo]):
        self._entries = dict(entries)
        self._lower = {mid: info.title.lower() for mid, info in self._entries.items()}

    def get(self, movie_id: int) -> MovieInfo:
        return self._entries[movie_id]

    def __contains__(self, movie_id: int) -> bool:
        return movie_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def ids(self):
        return self._entries.keys()

    def items(self):
        return self._entries.items()

    def search(self, text: str) -> list[int]:
        """Ids whose title contains `text` case-insensitively, ascending."""
        needle = text.lower()
        return sorted(mid for mid, low in self._lower.items() if needle in low)

    def exact(self, title: str) -> int | None:
        """Smallest id whose title equals `title` exactly, or None."""
        hits = sorted(
            mid for mid, info in self._entries.items() if info.title == title
        )
        return hits[0] if hits else None

    def restrict(self, ids: Iterable[int]) -> "Catalog":
        keep = set(ids)
        return Catalog({m: info for m, info in self._entries.items() if m in keep})


@dataclass(frozen=True)
class IngestReport:
    election: ApprovalElection
    ratings_parsed: int
    duplicate_ratings: int
    resources_dropped: int


@dataclass(frozen=True)
class CachedDataset:
    election: ApprovalElection
    catalog: Catalog
    threshold: float
    min_approvals: int


def _open_text(source) -> tuple[IO[str], bool]:
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def _check_header(row, expected, what):
    if row != expected:
        raise IngestError(
            f"{what} header must be {','.join(expected)!r}, got {','.join(row or [])!r}"
        )


def load_ratings(source) -> Iterator[tuple[int, int, float]]:
    """Yield (user, movie, rating) from a ratings CSV; validates as it goes."""
    f, owned = _open_text(source)
    try:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("ratings file is empty") from None
        _check_header(header, RATINGS_HEADER, "ratings")
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise IngestError(
                    f"ratings line {reader.line_num}: expected 4 fields, got {len(row)}"
                )
            try:
                yield int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise IngestError(
                    f"ratings line {reader.line_num}: cannot parse {row!r}"
                ) from None
    finally:
        if owned:
            f.close()


def load_movies(source) -> Catalog:
    """Parse a movie table into a Catalog."""
    f, owned = _open_text(source)
    try:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("movies file is empty") from None
        _check_header(header, MOVIES_HEADER, "movies")
        entries: dict[int, MovieInfo] = {}
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise IngestError(
                    f"movies line {reader.line_num}: expected 3 fields, got {len(row)}"
                )
            try:
                mid = int(row[0])
            except ValueError:
                raise IngestError(
                    f"movies line {reader.line_num}: bad movie id {row[0]!r}"
                ) from None
            entries[mid] = MovieInfo(title=row[1], genres=tuple(row[2].split("|")))
        return Catalog(entries)
    finally:
        if owned:
            f.close()


def build_global_election(
    rows: Iterable[tuple[int, int, float]],
    threshold: float = 4.0,
    min_approvals: int = 20,
) -> IngestReport:
    """Threshold ratings into approvals and drop under-approved resources.

    ``rows`` is any iterable of (user, movie, rating). The agent count of the
    resulting election is the number of distinct raters, approvals or not.
    """
    approved: dict[int, set[int]] = defaultdict(set)
    rated: dict[int, set[int]] = defaultdict(set)
    parsed = 0
    duplicates = 0
    for user, movie, rating in rows:
        parsed += 1
        seen = rated[user]
        if movie in seen:
            duplicates += 1
        else:
            seen.add(movie)
        if rating >= threshold:
            approved[user].add(movie)
        else:
            approved[user].discard(movie)

    counts: dict[int, int] = defaultdict(int)
    for items in approved.values():
        for m in items:
            counts[m] += 1
    kept = {m for m, c in counts.items() if c >= min_approvals}
    dropped = len(counts) - len(kept)

    approvals = {
        user: items & kept for user, items in approved.items() if items & kept
    }
    election = ApprovalElection(approvals, num_agents=len(rated), resources=kept)
    return IngestReport(
        election=election,
        ratings_parsed=parsed,
        duplicate_ratings=duplicates,
        resources_dropped=dropped,
    )


def ingest_dataset(
    ratings_path,
    movies_path,
    threshold: float = 4.0,
    min_approvals: int = 20,
) -> tuple[IngestReport, Catalog]:
    """Ingest the two-file dataset; the catalog is restricted to the election.

    Every resource surviving the filter must resolve to a catalog entry.
    """
    report = build_global_election(
        load_ratings(ratings_path), threshold=threshold, min_approvals=min_approvals
    )
    catalog = load_movies(movies_path)
    missing = sorted(r for r in report.election.resources if r not in catalog)
    if missing:
        raise IngestError(
            f"{len(missing)} rated resources missing from catalog, e.g. {missing[:5]}"
        )
    return report, catalog.restrict(report.election.resources)


# --- binary cache -----------------------------------------------------------


def _write_payload(out: io.BytesIO, election: ApprovalElection, catalog: Catalog,
                   threshold: float, min_approvals: int) -> None:
    """Payload layout (all little-endian):

    f64 threshold, u32 min_approvals,
    u64 num_agents, u64 agents_with_approvals, u64 num_resources, u64 num_catalog,
    num_resources * u64          sorted resource ids
    per agent, ascending id:     u64 agent_id, u64 count, count * u64 sorted items
    per catalog entry, asc id:   u64 movie_id, u32 title_len, title utf-8,
                                 u32 genre_count, (u32 len, utf-8) per genre
    """
    out.write(struct.pack("<dI", threshold, min_approvals))
    out.write(
        struct.pack(
            "<QQQQ",
            election.num_agents,
            len(election.approvals),
            len(election.resources),
            len(catalog),
        )
    )
    out.write(np.asarray(sorted(election.resources), dtype="<u8").tobytes())
    for agent in sorted(election.approvals):
        items = np.asarray(sorted(election.approvals[agent]), dtype="<u8")
        out.write(struct.pack("<QQ", agent, items.size))
        out.write(items.tobytes())
    for mid in sorted(catalog.ids()):
        info = catalog.get(mid)
        title = info.title.encode("utf-8")
        out.write(struct.pack("<QI", mid, len(title)))
        out.write(title)
        out.write(struct.pack("<I", len(info.genres)))
        for g in info.genres:
            raw = g.encode("utf-8")
            out.write(struct.pack("<I", len(raw)))
            out.write(raw)


def save_cache(path, election: ApprovalElection, catalog: Catalog, *,
               threshold: float, min_approvals: int) -> None:
    """Write the versioned binary cache (deterministic bytes for equal input)."""
    buf = io.BytesIO()
    _write_payload(buf, election, catalog, threshold, min_approvals)
    payload = buf.getvalue()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<H", _VERSION))
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CacheError("cache truncated")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals

    def take_u64_array(self, count: int) -> np.ndarray:
        size = 8 * count
        if self.pos + size > len(self.data):
            raise CacheError("cache truncated")
        arr = np.frombuffer(self.data, dtype="<u8", count=count, offset=self.pos)
        self.pos += size
        return arr

    def take_bytes(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise CacheError("cache truncated")
        raw = self.data[self.pos : self.pos + count]
        self.pos += count
        return raw


def load_cache(path) -> CachedDataset:
    """Read a cache written by save_cache; raises CacheError on any damage."""
    raw = Path(path).read_bytes()
    if len(raw) < len(_MAGIC) + 2 + 4 or raw[: len(_MAGIC)] != _MAGIC:
        raise CacheError(f"{path}: not a votesearch cache file")
    (version,) = struct.unpack_from("<H", raw, len(_MAGIC))
    if version != _VERSION:
        raise CacheError(
            f"{path}: unsupported cache version {version}, expected {_VERSION}"
        )
    payload = raw[len(_MAGIC) + 2 : -4]
    (crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(payload) != crc:
        raise CacheError(f"{path}: checksum mismatch, cache is corrupt")

    r = _Reader(payload)
    threshold, min_approvals = r.take("<dI")
    num_agents, with_approvals, num_resources, num_catalog = r.take("<QQQQ")
    resources = frozenset(int(x) for x in r.take_u64_array(int(num_resources)))
    approvals: dict[int, frozenset[int]] = {}
    for _ in range(int(with_approvals)):
        agent, count = r.take("<QQ")
        items = r.take_u64_array(int(count))
        approvals[int(agent)] = frozenset(int(x) for x in items)
    entries: dict[int, MovieInfo] = {}
    for _ in range(int(num_catalog)):
        mid, title_len = r.take("<QI")
        title = r.take_bytes(int(title_len)).decode("utf-8")
        (genre_count,) = r.take("<I")
        genres = tuple(
            r.take_bytes(r.take("<I")[0]).decode("utf-8") for _ in range(genre_count)
        )
        entries[int(mid)] = MovieInfo(title=title, genres=genres)
    if r.pos != len(payload):
        raise CacheError("cache has trailing bytes")

    election = ApprovalElection(
        approvals, num_agents=int(num_agents), resources=resources
    )
    return CachedDataset(
        election=election,
        catalog=Catalog(entries),
        threshold=float(threshold),
        min_approvals=int(min_approvals),
    )
