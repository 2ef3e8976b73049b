"""Datasets, key order, oracle families and query accounting.

Every oracle here is a predicate over the (padded) index register.  The
classical method :meth:`Oracle.marks` is free and exists for tests and for
the simulator's bookkeeping; quantum-side use goes through
:func:`evaluate` or :func:`qkmin.sim.apply_oracle_phase`, both of which
charge the oracle's :class:`QueryLedger`.

Register indices at or beyond the dataset size are padding.  They behave
like values of ``+inf`` that no oracle ever marks, whatever the key
direction.
"""
import csv
import io
from contextlib import contextmanager
from typing import Iterable, Optional

import numpy as np

from .sim import register_qubits

DIRECTIONS = ("ascending", "descending")
STRATEGIES = ("random", "max", "min")
DISTRIBUTIONS = ("uniform", "gaussian", "permutation", "adversarial")

# rejection-sampling attempts before falling back to enumeration
_REJECTION_TRIES = 32


class QueryLedger:
    """Monotone count of oracle applications.

    ``phase`` attributes increments to a named stage so that per-stage
    totals always add up to ``count``.
    """

    def __init__(self):
        self.count = 0
        self.phases = {}
        self._phase = None

    def charge(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("query charges must be nonnegative")
        self.count += n
        if self._phase is not None:
            self.phases[self._phase] = self.phases.get(self._phase, 0) + n

    @contextmanager
    def phase(self, name: str):
        outer = self._phase
        self._phase = name
        self.phases.setdefault(name, 0)
        try:
            yield self
        finally:
            self._phase = outer

    def __repr__(self):
        return f"QueryLedger(count={self.count})"


class KeyOrder:
    """Strict total order on ``(value, index)`` pairs."""

    def __init__(self, direction: str = "ascending"):
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        self.direction = direction

    def less(self, a, b) -> bool:
        """True iff key ``a`` comes strictly before key ``b``."""
        a = (float(a[0]), int(a[1]))
        b = (float(b[0]), int(b[1]))
        return a < b if self.direction == "ascending" else a > b

    def reversed(self) -> "KeyOrder":
        return KeyOrder("descending" if self.direction == "ascending" else "ascending")

    def argsort(self, values: np.ndarray) -> np.ndarray:
        idx = np.arange(len(values))
        order = np.lexsort((idx, values))
        return order if self.direction == "ascending" else order[::-1].copy()


class Dataset:
    """Immutable values ``g(0..N-1)`` with their rank under a key order.

    ``rank[x]`` is the number of indices strictly before ``x``, so the
    threshold oracle at ``t`` marks exactly ``rank[t]`` indices.
    """

    def __init__(self, values, direction: str = "ascending"):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] < 1:
            raise ValueError("dataset needs a nonempty 1-D sequence of values")
        if np.isnan(values).any():
            raise ValueError("NaN values have no place in a total order")
        values.setflags(write=False)
        self.values = values
        self.key_order = KeyOrder(direction)
        order = self.key_order.argsort(values)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.shape[0])
        order.setflags(write=False)
        rank.setflags(write=False)
        self.order = order
        self.rank = rank

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n_qubits(self) -> int:
        return register_qubits(self.N)

    @property
    def size(self) -> int:
        """Padded register size."""
        return 1 << self.n_qubits

    @property
    def direction(self) -> str:
        return self.key_order.direction

    def key(self, x: int):
        return float(self.values[x]), int(x)

    def less(self, x: int, y: int) -> bool:
        return bool(self.rank[x] < self.rank[y])

    def smallest(self, k: int) -> set:
        """The first ``k`` indices under the key order (the classical answer)."""
        return {int(x) for x in self.order[:k]}

    def reversed(self) -> "Dataset":
        return Dataset(self.values, self.key_order.reversed().direction)

    def __len__(self):
        return self.N

    def __repr__(self):
        return f"Dataset(N={self.N}, direction={self.direction!r})"


def generate_dataset(N: int, dist: str = "permutation", seed=None) -> Dataset:
    """Synthetic data; ``adversarial`` is sorted descending."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        values = rng.random(N)
    elif dist == "gaussian":
        values = rng.standard_normal(N)
    elif dist == "permutation":
        values = rng.permutation(N).astype(float)
    elif dist == "adversarial":
        values = np.arange(N - 1, -1, -1, dtype=float)
    else:
        raise ValueError(f"unknown distribution {dist!r}; choose from {DISTRIBUTIONS}")
    return Dataset(values)


def load_dataset(path) -> Dataset:
    """Read an ``index,value`` CSV; indices must cover ``0..N-1`` exactly once."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["index", "value"]:
            raise ValueError(f"{path}: header must be 'index,value', got {header}")
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                idx, val = int(row[0]), float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if idx in rows:
                raise ValueError(f"{path}:{lineno}: duplicate index {idx}")
            rows[idx] = val
    N = len(rows)
    if N == 0:
        raise ValueError(f"{path}: no data rows")
    if set(rows) != set(range(N)):
        missing = sorted(set(range(N)) - set(rows))[:5]
        raise ValueError(f"{path}: indices are not contiguous 0..{N - 1} (missing e.g. {missing})")
    return Dataset([rows[i] for i in range(N)])


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "value"])
    for i, v in enumerate(dataset.values):
        writer.writerow([i, repr(float(v))])
    return buf.getvalue()


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dataset_to_csv(dataset))


def marked_set(dataset: Dataset, t: int) -> set:
    """Indices strictly before ``t`` in key order.  Classical; never charged."""
    if not 0 <= t < dataset.N:
        raise IndexError(f"threshold index {t} outside [0, {dataset.N})")
    return {int(x) for x in dataset.order[: dataset.rank[t]]}


class Oracle:
    """Base class for counted predicates over a padded index register.

    Subclasses implement :meth:`marks` and :meth:`count`; the vectorized and
    sampling helpers below fall back to enumeration and can be overridden
    with something cheaper.
    """

    size: int
    N: int

    def __init__(self, N: int, ledger: Optional[QueryLedger] = None):
        self.N = N
        self.size = 1 << register_qubits(N)
        self.ledger = ledger if ledger is not None else QueryLedger()
        self._mask = None

    @property
    def n_qubits(self) -> int:
        return self.size.bit_length() - 1

    def marks(self, x: int) -> bool:
        raise NotImplementedError

    def count(self) -> int:
        raise NotImplementedError

    def _build_mask(self) -> np.ndarray:
        return np.fromiter((self.marks(x) for x in range(self.size)), dtype=bool, count=self.size)

    def mask(self) -> np.ndarray:
        if self._mask is None:
            self._mask = self._build_mask()
            self._mask.setflags(write=False)
        return self._mask

    def _invalidate(self):
        self._mask = None

    def marked_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask())

    def sample_marked(self, rng: np.random.Generator) -> int:
        idx = self.marked_indices()
        if idx.shape[0] == 0:
            raise ValueError("no marked index to sample")
        return int(idx[rng.integers(idx.shape[0])])

    def sample_unmarked(self, rng: np.random.Generator) -> int:
        for _ in range(_REJECTION_TRIES):
            x = int(rng.integers(self.size))
            if not self.marks(x):
                return x
        idx = np.flatnonzero(~self.mask())
        if idx.shape[0] == 0:
            raise ValueError("no unmarked index to sample")
        return int(idx[rng.integers(idx.shape[0])])

    def _check(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.size:
            raise IndexError(f"index {x} outside register [0, {self.size})")
        return x


def evaluate(oracle: Oracle, x: int) -> int:
    """One counted application of ``oracle`` to a basis index."""
    x = oracle._check(x)
    oracle.ledger.charge(1)
    return int(oracle.marks(x))


class IndexSetOracle(Oracle):
    """Arbitrary predicate given by an explicit marked set."""

    def __init__(self, N: int, marked: Iterable[int], ledger: Optional[QueryLedger] = None):
        super().__init__(N, ledger)
        self.marked = frozenset(int(x) for x in marked)
        bad = [x for x in self.marked if not 0 <= x < N]
        if bad:
            raise IndexError(f"marked indices {sorted(bad)[:5]} outside [0, {N})")
        self._marked_arr = np.array(sorted(self.marked), dtype=np.int64)

    def marks(self, x: int) -> bool:
        return x in self.marked

    def count(self) -> int:
        return len(self.marked)

    def _build_mask(self):
        m = np.zeros(self.size, dtype=bool)
        m[self._marked_arr] = True
        return m

    def marked_indices(self):
        return self._marked_arr


class ThresholdOracle(Oracle):
    """``f_t(x) = 1`` iff ``x`` comes strictly before ``t`` in key order.

    ``t=None`` is the virtual threshold with value ``+inf``: it marks every
    real index.
    """

    def __init__(self, dataset: Dataset, t: Optional[int], ledger: Optional[QueryLedger] = None):
        super().__init__(dataset.N, ledger)
        if t is not None and not 0 <= t < dataset.N:
            raise IndexError(f"threshold index {t} outside [0, {dataset.N})")
        self.dataset = dataset
        self.t = None if t is None else int(t)
        self._h = dataset.N if t is None else int(dataset.rank[t])

    def marks(self, x: int) -> bool:
        return x < self.N and int(self.dataset.rank[x]) < self._h

    def count(self) -> int:
        return self._h

    def _build_mask(self):
        m = np.zeros(self.size, dtype=bool)
        m[: self.N] = self.dataset.rank < self._h
        return m

    def marked_indices(self):
        return self.dataset.order[: self._h]

    def sample_marked(self, rng):
        if self._h == 0:
            raise ValueError("no marked index to sample")
        return int(self.dataset.order[rng.integers(self._h)])

    def sample_unmarked(self, rng):
        r = int(rng.integers(self.size - self._h))
        if r < self.N - self._h:
            return int(self.dataset.order[self._h + r])
        return self.N + r - (self.N - self._h)


class ExclusionOracle(Oracle):
    """``f'(x) = base(x) and x not in T``; ``T`` grows via :meth:`exclude`."""

    def __init__(self, base: Oracle, T: Iterable[int] = (), ledger: Optional[QueryLedger] = None):
        super().__init__(base.N, ledger if ledger is not None else base.ledger)
        self.base = base
        self.T = set()
        self._count = base.count()
        for x in T:
            self.exclude(x)

    def exclude(self, x: int) -> None:
        x = int(x)
        if x in self.T:
            return
        if self.base.marks(x):
            self._count -= 1
        self.T.add(x)
        self._invalidate()

    def marks(self, x: int) -> bool:
        return x not in self.T and self.base.marks(x)

    def count(self) -> int:
        return self._count

    def _build_mask(self):
        m = self.base.mask().copy()
        if self.T:
            m[np.fromiter(self.T, dtype=np.int64)] = False
        return m

    def marked_indices(self):
        idx = self.base.marked_indices()
        if not self.T:
            return idx
        return idx[~np.isin(idx, np.fromiter(self.T, dtype=np.int64))]

    def sample_marked(self, rng):
        if self._count == 0:
            raise ValueError("no marked index to sample")
        for _ in range(_REJECTION_TRIES):
            x = self.base.sample_marked(rng)
            if x not in self.T:
                return x
        return super().sample_marked(rng)


def select_threshold(T: Iterable[int], strategy: str, rng: np.random.Generator, dataset: Dataset) -> int:
    """Pick one member of ``T``: the key-order maximum, minimum, or a uniform draw."""
    members = sorted(int(x) for x in T)
    if not members:
        raise ValueError("threshold set is empty")
    if strategy == "max":
        return max(members, key=lambda x: dataset.rank[x])
    if strategy == "min":
        return min(members, key=lambda x: dataset.rank[x])
    if strategy == "random":
        return members[int(rng.integers(len(members)))]
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


class MultiThresholdOracle(ExclusionOracle):
    """Threshold oracle over a set ``T`` of thresholds.

    Marking is decided against a single member ``selected`` chosen by
    ``strategy``; members of ``T`` are never marked so the set stays free of
    duplicates.
    """

    def __init__(self, dataset: Dataset, T: Iterable[int], strategy: str, rng: np.random.Generator,
                 ledger: Optional[QueryLedger] = None):
        T = set(int(x) for x in T)
        self.strategy = strategy
        self.selected = select_threshold(T, strategy, rng, dataset)
        super().__init__(ThresholdOracle(dataset, self.selected, ledger), T)
        self.dataset = dataset

