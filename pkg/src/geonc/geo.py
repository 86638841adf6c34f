"""File-backed store of geo-tagged link erasure statistics.

Records are keyed by ``(node_id, peer_id)``. Ingesting a newer record for a
known link blends its erasure estimate into the stored one with an
exponential moving average; older or equally old records are ignored.
"""
import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, replace

from .analytics import PathProfile
from .exceptions import DomainError, MissingLink

COLUMNS = ("node_id", "peer_id", "lat", "lon", "eps_est", "samples", "updated_at")
ALPHA_EMA = 0.2


@dataclass(frozen=True)
class GeoRecord:
    node_id: str
    peer_id: str
    lat: float
    lon: float
    eps_est: float
    samples: int
    updated_at: float

    def __post_init__(self):
        if not self.node_id or not self.peer_id:
            raise DomainError("node_id and peer_id must be nonempty")
        if not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            raise DomainError(f"coordinates out of range: ({self.lat}, {self.lon})")
        if not 0.0 <= self.eps_est <= 1.0:
            raise DomainError(f"eps_est must lie in [0, 1], got {self.eps_est}")
        if self.samples < 1:
            raise DomainError(f"samples must be >= 1, got {self.samples}")
        if not math.isfinite(self.updated_at):
            raise DomainError("updated_at must be finite")

    @property
    def key(self):
        return (self.node_id, self.peer_id)

    @classmethod
    def from_row(cls, row):
        try:
            return cls(
                node_id=row["node_id"].strip(),
                peer_id=row["peer_id"].strip(),
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                eps_est=float(row["eps_est"]),
                samples=int(row["samples"]),
                updated_at=float(row["updated_at"]),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise DomainError(f"missing field {exc}") from None
        except ValueError as exc:
            raise DomainError(str(exc)) from None

    def to_row(self):
        return {
            "node_id": self.node_id,
            "peer_id": self.peer_id,
            "lat": repr(self.lat),
            "lon": repr(self.lon),
            "eps_est": repr(self.eps_est),
            "samples": str(self.samples),
            "updated_at": repr(self.updated_at),
        }


def merge_records(old, new, alpha=ALPHA_EMA):
    """Blend ``new`` into ``old``; ``None`` when ``new`` is not newer."""
    if old is None:
        return new
    if new.updated_at <= old.updated_at:
        return None
    eps = (1.0 - alpha) * old.eps_est + alpha * new.eps_est
    return replace(new, eps_est=min(max(eps, 0.0), 1.0), samples=old.samples + new.samples)


@dataclass(frozen=True)
class IngestReport:
    accepted: int
    rejected: int
    stale: int = 0
    errors: tuple = ()


class GeoStore:
    """Single-writer link-statistics store with snapshot reads.

    ``ingest`` builds a new table and swaps it in at the end, so a query
    sees either the state before or after a whole ingest.
    """

    def __init__(self, alpha=ALPHA_EMA):
        if not 0.0 < alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
        self.alpha = alpha
        self._table = {}

    def __len__(self):
        return len(self._table)

    def __contains__(self, key):
        return key in self._table

    def get(self, node_id, peer_id):
        return self._table.get((node_id, peer_id))

    def records(self):
        return [self._table[k] for k in sorted(self._table)]

    def upsert(self, rec):
        """Apply one record; returns False if it was stale."""
        merged = merge_records(self._table.get(rec.key), rec, self.alpha)
        if merged is None:
            return False
        table = dict(self._table)
        table[rec.key] = merged
        self._table = table
        return True

    def ingest(self, source):
        """Read GeoRecord CSV rows from a path, text stream or string.

        Malformed rows are skipped and reported with their line number.
        :returns: :class:`IngestReport`.
        """
        fh, close = _open_text(source)
        try:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return IngestReport(0, 0)
            missing = [c for c in COLUMNS if c not in [f.strip() for f in reader.fieldnames]]
            if missing:
                raise DomainError(f"CSV header lacks columns {missing}")
            table = dict(self._table)
            accepted = rejected = stale = 0
            errors = []
            for row in reader:
                line = reader.line_num
                if None in row or any(v is None for v in row.values()):
                    rejected += 1
                    errors.append((line, "wrong number of fields"))
                    continue
                row = {k.strip(): v for k, v in row.items()}
                try:
                    rec = GeoRecord.from_row(row)
                except DomainError as exc:
                    rejected += 1
                    errors.append((line, str(exc)))
                    continue
                accepted += 1
                merged = merge_records(table.get(rec.key), rec, self.alpha)
                if merged is None:
                    stale += 1
                else:
                    table[rec.key] = merged
            self._table = table
            return IngestReport(accepted, rejected, stale, tuple(errors))
        finally:
            if close:
                fh.close()

    def eps(self, a, b):
        """Erasure estimate of link ``a -> b``, falling back to ``b -> a``."""
        rec = self._table.get((a, b)) or self._table.get((b, a))
        if rec is None:
            raise MissingLink(a, b)
        return rec.eps_est

    def query_path(self, nodes):
        """Per-hop erasure rates along a node sequence.

        :raises MissingLink: for the first consecutive pair without a record.
        """
        nodes = list(nodes)
        if len(nodes) < 2:
            raise DomainError("a path needs at least two nodes")
        table = self._table
        out = []
        for a, b in zip(nodes, nodes[1:]):
            rec = table.get((a, b)) or table.get((b, a))
            if rec is None:
                raise MissingLink(a, b)
            out.append(rec.eps_est)
        return PathProfile(tuple(out))

    def dumps(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in self.records():
            w.writerow(rec.to_row())
        return buf.getvalue()

    def save(self, path):
        """Write the compacted table atomically."""
        path = os.fspath(path)
        d = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.dumps())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, alpha=ALPHA_EMA):
        store = cls(alpha)
        if os.path.exists(path):
            report = store.ingest(path)
            if report.rejected:
                raise DomainError(f"store file {path} has malformed rows: {report.errors}")
        return store


def _open_text(source):
    if isinstance(source, (str, os.PathLike)) and (isinstance(source, os.PathLike) or "\n" not in source) and os.path.exists(source):
        return open(source, encoding="utf-8", newline=""), True
    if isinstance(source, str):
        return io.StringIO(source), False
    return source, False
