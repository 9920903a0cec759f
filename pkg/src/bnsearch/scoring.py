"""Discrete datasets and the BDeu marginal likelihood.

The local score of a family with child arity ``r`` and ``q`` parent
configurations spreads the equivalent sample size evenly over the cells:

    sum_j [ lgamma(a_j) - lgamma(a_j + N_j)
            + sum_k ( lgamma(a_jk + N_jk) - lgamma(a_jk) ) ]

with ``a_j = ess / q`` and ``a_jk = ess / (q r)``. A uniform structure prior
adds nothing, so the network score is the plain sum of local scores.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .dag import Dag, _bits
from .errors import DimensionMismatch, ParseError, ValidationError
from .neighbourhoods import ADD, REMOVE, REVERSE, Move

DEFAULT_ESS = 1.0


@dataclass(frozen=True, eq=False)
class Dataset:
    """Complete discrete data; ``data[row, var]`` is a state index."""

    labels: tuple
    arities: tuple
    data: np.ndarray
    states: tuple | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.int64)
        if data.ndim != 2:
            if data.size == 0:
                data = data.reshape(0, len(self.labels))
            else:
                raise ValidationError("data must be a 2-D table")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "arities", tuple(int(a) for a in self.arities))
        if data.shape[1] != len(self.labels) or len(self.arities) != len(self.labels):
            raise DimensionMismatch("labels, arities and data columns disagree")
        for j, r in enumerate(self.arities):
            if r < 2:
                raise ValidationError(f"variable {self.labels[j]!r} has arity {r} < 2")
        if data.size:
            if data.min() < 0:
                raise ValidationError("negative state index")
            over = data.max(axis=0) >= np.asarray(self.arities)
            if over.any():
                j = int(np.flatnonzero(over)[0])
                raise ValidationError(f"variable {self.labels[j]!r} has a state beyond its arity {self.arities[j]}")
        data.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return len(self.labels)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def head(self, rows: int) -> "Dataset":
        return Dataset(self.labels, self.arities, self.data[:rows], self.states)


@dataclass(frozen=True)
class FamilyStats:
    """Counts ``N_jk`` shaped (parent configurations, child states).

    Parent configurations are mixed-radix indices with the last parent
    varying fastest.
    """

    child: int
    parents: tuple
    counts: np.ndarray


def config_index(data: np.ndarray, parents, arities) -> np.ndarray:
    idx = np.zeros(data.shape[0], dtype=np.int64)
    for p in parents:
        idx = idx * arities[p] + data[:, p]
    return idx


def family_counts(d: Dataset, child: int, parents) -> FamilyStats:
    parents = tuple(parents)
    for v in (child, *parents):
        if not 0 <= v < d.n_vars:
            raise IndexError(f"variable {v} outside 0..{d.n_vars - 1}")
    if child in parents:
        raise ValueError("child cannot be its own parent")
    r = d.arities[child]
    q = 1
    for p in parents:
        q *= d.arities[p]
    idx = config_index(d.data, parents, d.arities) * r + d.data[:, child]
    counts = np.bincount(idx, minlength=q * r).reshape(q, r)
    return FamilyStats(child, parents, counts)


def local_bdeu(stats: FamilyStats, arities, ess: float = DEFAULT_ESS) -> float:
    if ess <= 0:
        raise ValueError("equivalent sample size must be positive")
    q, r = stats.counts.shape
    a_j = ess / q
    a_jk = a_j / r
    n_jk = stats.counts
    # configurations never observed contribute exactly zero
    seen = n_jk.sum(axis=1) > 0
    n_jk = n_jk[seen].astype(float)
    n_j = n_jk.sum(axis=1)
    per_config = (
        gammaln(a_j) - gammaln(a_j + n_j)
        + (gammaln(a_jk + n_jk) - gammaln(a_jk)).sum(axis=1)
    )
    return float(per_config.sum())


class ScoreCache:
    """Local scores keyed by (child, parent bitmask) for one dataset."""

    def __init__(self, ess: float = DEFAULT_ESS):
        self.ess = ess
        self._store = {}
        self._dataset = None
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def bind(self, d: Dataset):
        if self._dataset is None:
            with self._lock:
                if self._dataset is None:
                    self._dataset = d
        elif self._dataset is not d:
            raise ValueError("score cache is already bound to another dataset")

    def __len__(self):
        return len(self._store)

    def local(self, d: Dataset, child: int, parents) -> float:
        return self.local_mask(d, child, _to_mask(parents))

    def local_mask(self, d: Dataset, child: int, pmask: int) -> float:
        key = (child, pmask)
        val = self._store.get(key)
        if val is None:
            self.bind(d)
            self.misses += 1
            val = local_bdeu(family_counts(d, child, tuple(_bits(pmask))), d.arities, self.ess)
            self._store.setdefault(key, val)
        else:
            self.hits += 1
        return val


def _to_mask(parents) -> int:
    m = 0
    for p in parents:
        m |= 1 << p
    return m


def _local(d: Dataset, child: int, pmask: int, cache, ess) -> float:
    if cache is not None:
        return cache.local_mask(d, child, pmask)
    return local_bdeu(family_counts(d, child, tuple(_bits(pmask))), d.arities, ess)


def local_score(d: Dataset, child: int, parents, cache: ScoreCache | None = None, ess: float = DEFAULT_ESS) -> float:
    """Local BDeu score; parents are canonicalised to ascending order."""
    return _local(d, child, _to_mask(parents), cache, ess)


def _check_dims(g: Dag, d: Dataset):
    if g.n != d.n_vars:
        raise DimensionMismatch(f"DAG has {g.n} nodes but dataset has {d.n_vars} variables")


def score(g: Dag, d: Dataset, cache: ScoreCache | None = None, ess: float = DEFAULT_ESS) -> float:
    """Log marginal likelihood of ``d`` under ``g`` (log prior taken as 0)."""
    _check_dims(g, d)
    total = 0.0
    for i in range(g.n):
        total += _local(d, i, g.parents[i], cache, ess)
    return total


def score_delta(g: Dag, m: Move, d: Dataset, cache: ScoreCache | None = None, ess: float = DEFAULT_ESS) -> float:
    """score(apply_move(g, m)) - score(g), touching only the affected families."""
    if g.n != d.n_vars:
        _check_dims(g, d)
    t, h = m.arc
    par = g.parents
    pa_h = par[h]
    bt = 1 << t
    if m.kind == ADD:
        if pa_h & bt or par[t] >> h & 1:
            raise ValidationError(f"stale move {m}")
        return _local(d, h, pa_h | bt, cache, ess) - _local(d, h, pa_h, cache, ess)
    if not pa_h & bt:
        raise ValidationError(f"stale move {m}")
    if m.kind == REMOVE:
        return _local(d, h, pa_h & ~bt, cache, ess) - _local(d, h, pa_h, cache, ess)
    if m.kind == REVERSE:
        pa_t = par[t]
        return (
            _local(d, t, pa_t | (1 << h), cache, ess) - _local(d, t, pa_t, cache, ess)
        ) + (
            _local(d, h, pa_h & ~bt, cache, ess) - _local(d, h, pa_h, cache, ess)
        )
    raise ValueError(f"unknown move kind {m.kind!r}")


# CSV interchange


def read_arities(path) -> dict:
    """Sidecar ``label:arity`` lines."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        label, sep, val = line.rpartition(":")
        try:
            if not sep:
                raise ValueError
            out[label.strip()] = int(val)
        except ValueError:
            raise ParseError(f"expected 'label:arity', got {line!r}", lineno, str(path)) from None
    return out


def write_arities(d: Dataset, path) -> None:
    Path(path).write_text("".join(f"{lab}:{r}\n" for lab, r in zip(d.labels, d.arities)), encoding="utf-8")


def read_csv(path, integer_states: bool = False, arities=None) -> Dataset:
    """Load a complete-data CSV; see :func:`read_arities` for declared arities."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file (no header row)", 1, str(path)) from None
        if len(set(header)) != len(header) or any(not h for h in header):
            raise ParseError("header labels must be unique and non-empty", 1, str(path))
        p = len(header)
        codes = [dict() for _ in range(p)]
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != p:
                raise ParseError(f"expected {p} cells, got {len(row)}", lineno, str(path))
            vals = []
            for j, cell in enumerate(row):
                cell = cell.strip()
                if cell in ("", "?", "NA", "NaN", "nan"):
                    raise ParseError(f"missing value in column {header[j]!r}", lineno, str(path))
                if integer_states:
                    try:
                        v = int(cell)
                    except ValueError:
                        raise ParseError(f"non-integer state {cell!r}", lineno, str(path)) from None
                    if v < 0:
                        raise ParseError(f"negative state {cell!r}", lineno, str(path))
                else:
                    v = codes[j].setdefault(cell, len(codes[j]))
                vals.append(v)
            rows.append(vals)
    data = np.array(rows, dtype=np.int64).reshape(len(rows), p)
    if integer_states:
        observed = [int(data[:, j].max()) + 1 if len(rows) else 0 for j in range(p)]
        states = None
    else:
        observed = [len(c) for c in codes]
        states = tuple(tuple(c) for c in codes)
    declared = arities or {}
    unknown = set(declared) - set(header)
    if unknown:
        raise ValidationError(f"arity declared for unknown variables: {sorted(unknown)}")
    ar = []
    for j, lab in enumerate(header):
        r = declared.get(lab, max(observed[j], 2))
        if r < observed[j]:
            raise ValidationError(f"variable {lab!r}: declared arity {r} but {observed[j]} states observed")
        ar.append(r)
    if states is not None:
        states = tuple(s + tuple(f"s{k}" for k in range(len(s), r)) for s, r in zip(states, ar))
    return Dataset(tuple(header), tuple(ar), data, states)


def write_csv(d: Dataset, path, integer_states: bool = False) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(d.labels)
        if integer_states or d.states is None:
            w.writerows(d.data.tolist())
        else:
            st = d.states
            for row in d.data.tolist():
                w.writerow([st[j][v] for j, v in enumerate(row)])
