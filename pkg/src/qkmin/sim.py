"""Simulation of the index register under amplitude amplification.

Two interchangeable backends are provided:

* :class:`StateVector` stores all ``2**n`` amplitudes and applies the oracle
  phase flip and the diffusion operator literally.
* :class:`RotationState` keeps only the rotation angle and the iteration
  count.  Starting from the uniform superposition, Grover iterations never
  leave the plane spanned by the uniform marked and uniform unmarked
  states, so the closed form ``sin((2j+1)theta)`` describes the state
  exactly and large registers become cheap.

Oracles are anything exposing ``size``, ``mask()``, ``count()``,
``marks(x)``, ``sample_marked(rng)``, ``sample_unmarked(rng)`` and a
``ledger`` (see :mod:`qkmin.oracle`).
"""
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import CapacityError, SimulationError

MAX_QUBITS = 22
NORM_TOL = 1e-9


def register_qubits(N: int) -> int:
    """Number of qubits needed to index ``N`` items (at least one)."""
    if N < 1:
        raise ValueError(f"register needs at least one index, got N={N}")
    return max(1, (N - 1).bit_length())


class StateVector:
    """Full amplitude vector of an ``n``-qubit index register."""

    def __init__(self, amplitudes):
        amps = np.array(amplitudes, dtype=np.complex128)
        size = amps.shape[0]
        n = size.bit_length() - 1
        if amps.ndim != 1 or size < 2 or (1 << n) != size:
            raise ValueError(f"amplitude count must be a power of two >= 2, got {size}")
        self.n = n
        self.amplitudes = amps

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))

    def marked_probability(self, oracle) -> float:
        return float(np.sum(self.probabilities()[oracle.mask()]))

    def __repr__(self):
        return f"StateVector(n={self.n})"


@dataclass(frozen=True)
class RotationState:
    """Closed-form Grover state: ``j`` iterations applied to the uniform state.

    ``size`` is the register size and ``marked`` the number of marked
    indices.  ``oracle`` is only needed to turn a measurement into a concrete
    index; without one, indices ``0..marked-1`` are taken as the marked ones.
    """

    size: int
    marked: int
    j: int = 0
    oracle: object = None

    def __post_init__(self):
        if not 0 <= self.marked <= self.size:
            raise ValueError(f"marked count {self.marked} outside [0, {self.size}]")
        if self.j < 0:
            raise ValueError("iteration count must be nonnegative")

    @property
    def theta(self) -> float:
        return math.asin(math.sqrt(self.marked / self.size))

    @property
    def angle(self) -> float:
        return (2 * self.j + 1) * self.theta

    @property
    def weights(self):
        """Amplitudes of the normalized marked and unmarked class states."""
        if self.marked == 0:
            return 0.0, 1.0
        if self.marked == self.size:
            # every iteration is a pure sign flip of the whole register
            return (-1.0) ** self.j, 0.0
        return math.sin(self.angle), math.cos(self.angle)

    def marked_probability(self) -> float:
        return self.weights[0] ** 2

    def norm(self) -> float:
        a, b = self.weights
        return math.hypot(a, b)

    def to_statevector(self) -> StateVector:
        """Expand into a full vector (marked indices taken from the oracle)."""
        a, b = self.weights
        if self.oracle is not None:
            mask = self.oracle.mask()
        else:
            mask = np.zeros(self.size, dtype=bool)
            mask[: self.marked] = True
        amps = np.empty(self.size)
        if self.marked:
            amps[mask] = a / math.sqrt(self.marked)
        if self.size - self.marked:
            amps[~mask] = b / math.sqrt(self.size - self.marked)
        return StateVector(amps)


@dataclass(frozen=True)
class MeasurementOutcome:
    index: int
    was_marked: Optional[bool]


State = Union[StateVector, RotationState]


def init_uniform(n: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    if n > max_qubits:
        raise CapacityError(f"{n} qubits exceeds the statevector limit of {max_qubits}")
    size = 1 << n
    return StateVector(np.full(size, 1.0 / math.sqrt(size)))


def uniform_rotation(oracle) -> RotationState:
    return RotationState(size=oracle.size, marked=oracle.count(), j=0, oracle=oracle)


def apply_oracle_phase(state: StateVector, oracle) -> StateVector:
    """Negate the amplitude of every marked index; costs one query."""
    mask = oracle.mask()
    if mask.shape[0] != state.size:
        raise ValueError(f"oracle covers {mask.shape[0]} indices, state has {state.size}")
    oracle.ledger.charge(1)
    return StateVector(np.where(mask, -state.amplitudes, state.amplitudes))


def diffusion(amplitudes: np.ndarray) -> np.ndarray:
    """Inversion about the mean."""
    return 2.0 * amplitudes.mean() - amplitudes


def grover_iterate(state: State, oracle, j: int) -> State:
    """Apply ``j`` rounds of diffusion after oracle phase flip."""
    if j < 0:
        raise ValueError("iteration count must be nonnegative")
    if isinstance(state, RotationState):
        oracle.ledger.charge(j)
        return replace(state, j=state.j + j, oracle=state.oracle if state.oracle is not None else oracle)
    for _ in range(j):
        state = apply_oracle_phase(state, oracle)
        state = StateVector(diffusion(state.amplitudes))
    return state


def success_probability(N: int, k: int, j: int) -> float:
    """Probability of measuring a marked index after ``j`` iterations."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if not 0 <= k <= N:
        raise ValueError(f"marked count k={k} outside [0, {N}]")
    if j < 0:
        raise ValueError("iteration count must be nonnegative")
    if k == 0:
        return 0.0
    if k == N:
        return 1.0
    theta = math.asin(math.sqrt(k / N))
    return math.sin((2 * j + 1) * theta) ** 2


def measure(state: State, rng: np.random.Generator, oracle=None) -> MeasurementOutcome:
    """Sample a basis index from ``state``.

    ``was_marked`` is filled in from the oracle when one is known (for a
    rotation state it follows from which class was sampled).  It is a
    bookkeeping field; algorithms confirm markedness with a charged query.
    """
    if isinstance(state, RotationState):
        if abs(state.norm() - 1.0) > NORM_TOL:
            raise SimulationError(f"rotation state norm {state.norm()} is not 1")
        hit = rng.random() < state.marked_probability()
        src = state.oracle if state.oracle is not None else oracle
        if src is None:
            if hit:
                index = int(rng.integers(state.marked))
            else:
                index = state.marked + int(rng.integers(state.size - state.marked))
        else:
            index = int(src.sample_marked(rng) if hit else src.sample_unmarked(rng))
        return MeasurementOutcome(index, hit)

    probs = state.probabilities()
    total = probs.sum()
    if abs(math.sqrt(total) - 1.0) > NORM_TOL:
        raise SimulationError(f"state norm {math.sqrt(total)} is not 1")
    index = int(rng.choice(state.size, p=probs / total))
    return MeasurementOutcome(index, None if oracle is None else bool(oracle.marks(index)))


def phase_kernel(d, p: int) -> np.ndarray:
    """Probability that a ``p``-qubit phase register reads ``d`` away from the true phase.

    ``K(d) = sin^2(pi d) / (4**p sin^2(pi d / 2**p))``, equal to 1 where
    ``d`` is a multiple of ``2**p``.
    """
    m = float(1 << p)
    d = np.asarray(d, dtype=float)
    den = np.sin(np.pi * d / m) ** 2
    r = np.mod(d, m)
    exact = (np.abs(r) < 1e-9) | (np.abs(r - m) < 1e-9)
    safe = np.where(exact, 1.0, den)
    return np.where(exact, 1.0, np.sin(np.pi * d) ** 2 / (m * m * safe))


@lru_cache(maxsize=256)
def _phase_distribution(N: int, k: int, p: int) -> np.ndarray:
    theta = math.asin(math.sqrt(k / N))
    centre = (1 << p) * theta / math.pi
    y = np.arange(1 << p, dtype=float)
    probs = 0.5 * phase_kernel(y - centre, p) + 0.5 * phase_kernel(y + centre, p)
    probs = probs / probs.sum()
    probs.setflags(write=False)
    return probs


def phase_distribution(N: int, k: int, p: int) -> np.ndarray:
    """Distribution of the raw ``p``-bit reading when counting ``k`` of ``N``.

    The Grover operator's eigenphases are ``+-2 theta``; the uniform start is
    an equal superposition of the two eigenvectors, so the reading is an equal
    mixture of two phase-estimation kernels.
    """
    if p < 1:
        raise ValueError("need at least one counting qubit")
    if not 0 <= k <= N:
        raise ValueError(f"marked count k={k} outside [0, {N}]")
    return _phase_distribution(N, k, p)


def folded_phase_distribution(N: int, k: int, p: int) -> np.ndarray:
    """Distribution of ``min(y, 2**p - y)``, indexed ``0..2**(p-1)``."""
    raw = phase_distribution(N, k, p)
    half = 1 << (p - 1)
    out = raw[: half + 1].copy()
    out[1:half] += raw[:half:-1]
    return out


def phase_estimate_grover(N: int, k: int, p: int, rng: np.random.Generator, ledger=None) -> int:
    """Run quantum phase estimation on the Grover operator.

    Returns the reading folded onto ``[0, 2**(p-1)]``: readings ``y`` and
    ``2**p - y`` estimate the same ``theta`` (the two eigenphases are
    mirror images), and folding makes dyadic phases deterministic.
    Charges ``2**p - 1`` queries for the controlled Grover powers.
    """
    probs = folded_phase_distribution(N, k, p)
    if ledger is not None:
        ledger.charge((1 << p) - 1)
    return int(rng.choice(probs.shape[0], p=probs))
