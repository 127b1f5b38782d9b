"""Dataset representation, file ingestion, validation, and sampling-scheme classification.

A functional dataset is a collection of subjects, each carrying a length-p
covariate vector and an irregular series of (time, value) observations.
Values round-trip losslessly through the CSV/NDJSON formats: floats are
serialized as decimal text with 17 significant digits.
"""

import json
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import DimensionMismatchError, ParseError
from .textio import fmt_float, open_text


@dataclass(frozen=True)
class Subject:
    """One subject: covariate vector ``z`` and observations ``(t, y)``.

    Observation times are kept sorted ascending; duplicate times are allowed
    (the covariance estimator excludes pairs by index, not by time value).
    """

    id: str
    z: np.ndarray
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=float)))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.t.shape != self.y.shape:
            raise DimensionMismatchError(
                f"subject {self.id!r}: t and y lengths differ "
                f"({self.t.size} vs {self.y.size})", subject_id=self.id)
        for a in (self.z, self.t, self.y):
            a.setflags(write=False)

    @property
    def n_obs(self) -> int:
        return self.t.size

    @property
    def covariance_eligible(self) -> bool:
        return self.n_obs >= 2

    def __eq__(self, other):
        if not isinstance(other, Subject):
            return NotImplemented
        return (self.id == other.id and np.array_equal(self.z, other.z)
                and np.array_equal(self.t, other.t) and np.array_equal(self.y, other.y))


class SchemeKind(Enum):
    DENSE = "dense"
    SPARSE = "sparse"


@dataclass(frozen=True)
class SamplingScheme:
    kind: SchemeKind
    min_obs: int
    median_obs: float
    max_obs: int


@dataclass(frozen=True)
class FunctionalDataset:
    """Immutable collection of subjects sharing a time domain and covariate dimension."""

    subjects: Tuple[Subject, ...]
    time_domain: Tuple[float, float]
    covariate_dim: int

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        lo, hi = self.time_domain
        object.__setattr__(self, "time_domain", (float(lo), float(hi)))

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def n_obs_per_subject(self) -> np.ndarray:
        return np.array([s.n_obs for s in self.subjects], dtype=np.int64)

    def covariate_matrix(self) -> np.ndarray:
        return np.array([s.z for s in self.subjects], dtype=float)

    def replace_subjects(self, subjects) -> "FunctionalDataset":
        return FunctionalDataset(tuple(subjects), self.time_domain, self.covariate_dim)

    def default_z_axes(self, points_per_axis: int = 26):
        """Uniform per-coordinate grids spanning the observed covariate range."""
        zmat = self.covariate_matrix()
        axes = []
        for k in range(self.covariate_dim):
            lo, hi = float(zmat[:, k].min()), float(zmat[:, k].max())
            if hi <= lo:
                hi = lo + 1.0
            axes.append(np.linspace(lo, hi, points_per_axis))
        return axes


@dataclass(frozen=True)
class Violation:
    subject_id: Optional[str]
    rule: str
    detail: str


def make_dataset(subjects, time_domain=None, covariate_dim=None) -> FunctionalDataset:
    """Assemble a dataset, inferring the time domain / covariate dim when omitted."""
    subjects = tuple(subjects)
    if covariate_dim is None:
        if not subjects:
            raise ValueError("cannot infer covariate_dim from an empty dataset")
        covariate_dim = subjects[0].z.size
    if time_domain is None:
        ts = [s.t for s in subjects if s.n_obs > 0]
        if not ts:
            raise ValueError("cannot infer time domain: no observations")
        time_domain = (min(float(t.min()) for t in ts), max(float(t.max()) for t in ts))
    return FunctionalDataset(subjects, time_domain, int(covariate_dim))


def validate(d: FunctionalDataset) -> List[Violation]:
    """Check every dataset invariant; an empty report means the dataset is valid.

    Violations are data, not errors: the function never raises on a dataset
    that parsed successfully.
    """
    out = []
    lo, hi = d.time_domain
    for s in d.subjects:
        if s.z.size != d.covariate_dim:
            out.append(Violation(s.id, "covariate-dim",
                                 f"expected p={d.covariate_dim}, got {s.z.size}"))
        if s.n_obs < 1:
            out.append(Violation(s.id, "min-observations", "subject has no observations"))
        if not np.all(np.isfinite(s.z)):
            out.append(Violation(s.id, "non-finite", "covariate contains NaN/inf"))
        if s.n_obs > 0:
            if not np.all(np.isfinite(s.t)):
                out.append(Violation(s.id, "non-finite", "observation time contains NaN/inf"))
            elif np.any(s.t < lo) or np.any(s.t > hi):
                out.append(Violation(s.id, "time-domain",
                                     f"observation time outside [{lo}, {hi}]"))
            if not np.all(np.isfinite(s.y)):
                out.append(Violation(s.id, "non-finite", "observation value contains NaN/inf"))
            if np.any(np.diff(s.t) < 0):
                out.append(Violation(s.id, "time-order", "observation times not sorted ascending"))
    return out


def classify_scheme(d: FunctionalDataset, dense_threshold: int = 20) -> SamplingScheme:
    """Dense iff the median number of observations per subject reaches the threshold.

    The threshold boundary is inclusive. Default 20 cleanly separates
    longitudinal designs with a handful of points per curve from densely
    recorded functional designs.
    """
    if d.n_subjects == 0:
        raise ValueError("classify_scheme: dataset has no subjects")
    counts = d.n_obs_per_subject
    med = float(np.median(counts))
    kind = SchemeKind.DENSE if med >= dense_threshold else SchemeKind.SPARSE
    return SamplingScheme(kind, int(counts.min()), med, int(counts.max()))


def save_dataset(d: FunctionalDataset, path, fmt: str = "csv") -> None:
    """Write a dataset as CSV (one row per observation) or NDJSON (one object per subject)."""
    if fmt == "csv":
        with open_text(path, "w") as f:
            zcols = ",".join(f"z_{k + 1}" for k in range(d.covariate_dim))
            f.write(f"subject_id,{zcols},t,y\n")
            for s in d.subjects:
                zs = ",".join(fmt_float(v) for v in s.z)
                for t, y in zip(s.t, s.y):
                    f.write(f"{s.id},{zs},{fmt_float(t)},{fmt_float(y)}\n")
    elif fmt == "ndjson":
        with open_text(path, "w") as f:
            for s in d.subjects:
                rec = {"id": s.id,
                       "z": [fmt_float(v) for v in s.z],
                       "t": [fmt_float(v) for v in s.t],
                       "y": [fmt_float(v) for v in s.y]}
                f.write(json.dumps(rec) + "\n")
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")


def load_dataset(path, fmt: str = "csv", time_domain=None) -> FunctionalDataset:
    """Read a dataset written by save_dataset (or by hand, same schema).

    Subject order is preserved from the file. The time domain defaults to
    [min t, max t] over the whole file unless given explicitly.
    """
    if fmt == "csv":
        subjects = _load_csv(path)
    elif fmt == "ndjson":
        subjects = _load_ndjson(path)
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")
    if not subjects:
        raise ParseError("file contains no subjects", path=str(path))
    p = subjects[0].z.size
    for s in subjects:
        if s.z.size != p:
            raise DimensionMismatchError(
                f"subject {s.id!r} has covariate length {s.z.size}, expected {p}",
                subject_id=s.id)
    return make_dataset(subjects, time_domain=time_domain, covariate_dim=p)


def _parse_float(tok, path, lineno, col):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"column {col!r}: not a number: {tok!r}",
                         line=lineno, path=str(path)) from None


def _load_csv(path):
    with open_text(path, "r") as f:
        header = f.readline()
        if not header:
            raise ParseError("empty file", line=1, path=str(path))
        cols = [c.strip() for c in header.rstrip("\n").split(",")]
        if len(cols) < 4 or cols[0] != "subject_id" or cols[-2] != "t" or cols[-1] != "y":
            raise ParseError("header must be 'subject_id,z_1,...,z_p,t,y'",
                             line=1, path=str(path))
        p = len(cols) - 3
        order = []
        rows = {}
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            toks = line.split(",")
            if len(toks) != len(cols):
                raise ParseError(f"expected {len(cols)} fields, got {len(toks)}",
                                 line=lineno, path=str(path))
            sid = toks[0]
            ztoks = toks[1:1 + p]
            z = [_parse_float(ztoks[k], path, lineno, cols[1 + k]) for k in range(p)]
            t = _parse_float(toks[-2], path, lineno, "t")
            y = _parse_float(toks[-1], path, lineno, "y")
            if sid not in rows:
                rows[sid] = (ztoks, z, [], [])
                order.append(sid)
            elif rows[sid][0] != ztoks:
                raise DimensionMismatchError(
                    f"subject {sid!r}: covariate changed between rows (line {lineno})",
                    subject_id=sid)
            rows[sid][2].append(t)
            rows[sid][3].append(y)
        subjects = []
        for sid in order:
            _, z, t, y = rows[sid]
            idx = np.argsort(np.asarray(t), kind="stable")
            subjects.append(Subject(sid, np.asarray(z),
                                    np.asarray(t)[idx], np.asarray(y)[idx]))
        return subjects


def _load_ndjson(path):
    subjects = []
    with open_text(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=lineno, path=str(path)) from None
            try:
                sid = str(rec["id"])
                z = [float(v) for v in rec["z"]]
                t = [float(v) for v in rec["t"]]
                y = [float(v) for v in rec["y"]]
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad subject record: {e}", line=lineno, path=str(path)) from None
            if len(t) != len(y):
                raise ParseError(f"subject {sid!r}: t and y lengths differ",
                                 line=lineno, path=str(path))
            idx = np.argsort(np.asarray(t), kind="stable")
            subjects.append(Subject(sid, np.asarray(z),
                                    np.asarray(t)[idx], np.asarray(y)[idx]))
    return subjects
