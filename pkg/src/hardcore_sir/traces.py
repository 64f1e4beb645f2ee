"""Motorway snapshot ingestion, per-lane headway fitting and multi-lane geometry.

Snapshot files are CSV with header ``t,lane,pos_m``: one row per vehicle,
``t`` an integer timestamp in seconds, ``lane`` a lane label and ``pos_m``
the horizontal position in metres along the road segment.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientData, ParseError, ValidationError
from .pointproc import LaneSnapshot, OriginKind, ScenarioParams

HEADER = ("t", "lane", "pos_m")
MIN_VEHICLES = 30
GUARD_FRACTION = 0.01


@dataclass
class TraceSnapshot:
    timestamp: int
    lanes: dict
    road_length: float
    unsorted_rows: int = 0

    def __post_init__(self):
        for lane_id, snap in self.lanes.items():
            pos = snap.positions
            if pos.size and (pos[0] < 0 or pos[-1] > self.road_length):
                raise ValidationError(f"lane {lane_id}: positions outside [0, {self.road_length}]")


def _read_rows(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"expected header {','.join(HEADER)}, got {header}", line=1)
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}: {row}", line=line_no)
            try:
                t = int(row[0])
                pos = float(row[2])
            except ValueError as exc:
                raise ParseError(f"bad value in {row}: {exc}", line=line_no) from None
            if not math.isfinite(pos):
                raise ParseError(f"non-finite position {row[2]}", line=line_no)
            rows.append((t, row[1].strip(), pos, line_no))
    return rows


def parse_snapshot(path, format: str = "csv", timestamp: int | None = None, road_length: float | None = None) -> TraceSnapshot:
    """Read one snapshot.

    Files holding several timestamps need ``timestamp``.  Rows are sorted per
    lane; the number of rows found out of order is kept in
    ``unsorted_rows``.  ``road_length`` defaults to the largest position.
    """
    if format != "csv":
        raise DomainError(f"unsupported trace format {format!r}")
    rows = _read_rows(path)
    stamps = sorted({r[0] for r in rows})
    if timestamp is None:
        if len(stamps) > 1:
            raise ValidationError(f"file holds {len(stamps)} timestamps; select one")
        timestamp = stamps[0] if stamps else 0
    rows = [r for r in rows if r[0] == timestamp]
    if not rows:
        raise ValidationError(f"no rows at timestamp {timestamp}")

    by_lane, unsorted = {}, 0
    for _, lane, pos, line_no in rows:
        if pos < 0:
            raise ValidationError(f"line {line_no}: negative position {pos}")
        seq = by_lane.setdefault(lane, [])
        if seq and pos < seq[-1][0]:
            unsorted += 1
        seq.append((pos, line_no))

    lanes = {}
    for lane, seq in by_lane.items():
        seq.sort()
        for (a, _), (b, line_no) in zip(seq, seq[1:]):
            if b == a:
                raise ValidationError(f"line {line_no}: duplicate position {b} in lane {lane}")
        pos = np.array([p for p, _ in seq])
        lanes[lane] = LaneSnapshot(pos, OriginKind.REFERENCE_RECEIVER, {"lane": lane, "t": timestamp})
    top = max(float(s.positions[-1]) for s in lanes.values())
    return TraceSnapshot(int(timestamp), lanes, road_length if road_length is not None else top, unsorted)


@dataclass
class HeadwayFit:
    lambda_hat: float
    c_hat: float
    n_gaps: int
    gaps: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.gaps = np.sort(np.asarray(self.gaps, dtype=float))
        if not self.lambda_hat * self.c_hat < 1:
            raise ValidationError("fitted lambda * c must be below 1")

    @property
    def ecdf_knots(self):
        """Distinct gap values and the empirical CDF at each."""
        vals, counts = np.unique(self.gaps, return_counts=True)
        return vals, np.cumsum(counts) / self.gaps.size

    def ecdf(self, x):
        return np.searchsorted(self.gaps, np.asarray(x), side="right") / self.gaps.size

    def sample(self, n: int, rng) -> np.ndarray:
        """Inverse-CDF sampling from the empirical step CDF."""
        return rng.choice(self.gaps, size=n)

    def params(self, eta: float = 3.0, xi: float = 0.5, q: float = 0.02) -> ScenarioParams:
        return ScenarioParams(self.lambda_hat, self.c_hat, eta, xi, q)

    def to_dict(self) -> dict:
        x, f = self.ecdf_knots
        return {
            "lambda_hat": self.lambda_hat,
            "c_hat": self.c_hat,
            "n_gaps": self.n_gaps,
            "ecdf_knots": {"x": x.tolist(), "F": f.tolist()},
        }

    def to_json(self, path_or_file):
        text = json.dumps(self.to_dict(), indent=1) + "\n"
        if isinstance(path_or_file, (str, os.PathLike)):
            with open(path_or_file, "w") as fh:
                fh.write(text)
        else:
            path_or_file.write(text)

    @classmethod
    def from_dict(cls, doc) -> "HeadwayFit":
        x = np.asarray(doc["ecdf_knots"]["x"], dtype=float)
        f = np.asarray(doc["ecdf_knots"]["F"], dtype=float)
        n = int(doc["n_gaps"])
        counts = np.rint(np.diff(np.concatenate(([0.0], f))) * n).astype(int)
        return cls(float(doc["lambda_hat"]), float(doc["c_hat"]), n, np.repeat(x, counts))


def fit_gaps(gaps, override_c: float | None = None, override_lambda: float | None = None) -> HeadwayFit:
    g = np.asarray(gaps, dtype=float)
    if g.size + 1 < MIN_VEHICLES:
        raise InsufficientData(f"need at least {MIN_VEHICLES} vehicles, got {g.size + 1}")
    if np.any(g <= 0):
        raise ValidationError("gaps must be positive")
    mean = float(g.mean())
    lam = 1.0 / mean if override_lambda is None else float(override_lambda)
    c = max(0.0, float(g.min()) - GUARD_FRACTION * mean) if override_c is None else float(override_c)
    return HeadwayFit(lam, c, int(g.size), g)


def fit_headways(snapshot: TraceSnapshot, lane_id, override_c=None, override_lambda=None) -> HeadwayFit:
    """lambda_hat = 1 / mean gap, c_hat = min gap minus 1% of the mean gap.

    Overrides replace the estimates (e.g. to inject externally fitted values)
    while keeping the empirical CDF of the observed gaps.
    """
    try:
        lane = snapshot.lanes[lane_id]
    except KeyError:
        raise ValidationError(f"no lane {lane_id!r}; have {sorted(snapshot.lanes)}") from None
    if len(lane) < MIN_VEHICLES:
        raise InsufficientData(f"lane {lane_id}: need at least {MIN_VEHICLES} vehicles, got {len(lane)}")
    return fit_gaps(lane.gaps, override_c, override_lambda)


def multilane_geometry(beamwidth: float, lane_sep: float, q: float, eta: float):
    """Shadow distance r0 of a directional beam and the far-field split for other lanes.

    r0 = lane_sep / tan(beamwidth / 2); R_other = (1/q)^(1/(eta-1)) r0.
    """
    if not 0 < beamwidth < math.pi:
        raise DomainError("beamwidth must lie in (0, pi)")
    if not lane_sep > 0:
        raise DomainError("lane separation must be positive")
    r0 = lane_sep / math.tan(beamwidth / 2.0)
    return r0, (1.0 / q) ** (1.0 / (eta - 1.0)) * r0


def write_snapshot_csv(path, lanes: dict, t: int = 0):
    """Write {lane: positions} as a ``t,lane,pos_m`` snapshot file."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for lane, pos in lanes.items():
            for x in pos:
                w.writerow([t, lane, f"{float(x):.17g}"])


def convert_public_trace(src, dst, columns=None, delimiter=None, time_scale: float = 1.0):
    """Map a third-party trace table to the ``t,lane,pos_m`` layout.

    Assumptions, none of which can be checked against the source format:
    one row per vehicle and time step; a header row naming the columns;
    positions already in metres along the road.  ``columns`` maps our
    fields to source column names and defaults to
    ``{"t": "time", "lane": "lane", "pos_m": "x"}``.  Timestamps are
    multiplied by ``time_scale`` and rounded to whole seconds.  Other
    columns (vehicle id, speed) are dropped.
    """
    columns = columns or {"t": "time", "lane": "lane", "pos_m": "x"}
    with open(src, newline="") as fin:
        sample = fin.read(4096)
        fin.seek(0)
        if delimiter is None:
            delimiter = csv.Sniffer().sniff(sample, delimiters=",;\t ").delimiter
        reader = csv.DictReader(fin, delimiter=delimiter)
        missing = [v for v in columns.values() if v not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"source lacks columns {missing}; found {reader.fieldnames}", line=1)
        with open(dst, "w", newline="") as fout:
            w = csv.writer(fout, lineterminator="\n")
            w.writerow(HEADER)
            for line_no, row in enumerate(reader, start=2):
                try:
                    t = round(float(row[columns["t"]]) * time_scale)
                    pos = float(row[columns["pos_m"]])
                except (TypeError, ValueError) as exc:
                    raise ParseError(str(exc), line=line_no) from None
                w.writerow([t, row[columns["lane"]].strip(), f"{pos:.17g}"])
