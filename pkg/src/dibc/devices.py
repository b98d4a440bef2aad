"""Black-box device pairs.

A :class:`DevicePair` is a pair of stateful boxes answering one output bit per
measure request.  Isolation is structural: a box's answer is computed only
from its own input, its own use history, and randomness fixed at preparation,
so the marginal behavior of one box can never depend on what was fed into the
other.

The catalog covers the device kinds the protocol engines and estimators need:
honest (noisy) entangled pairs, the midpoint cheating pair, Bob's
deterministically programmed box, use-counter triggered pairs, PR boxes, and
arbitrary classical tables.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from . import quantum
from .analysis import phi_opt

# Knob-to-angle maps of the honest devices.  Inputs i on box 0 and i+2 mod 4 on
# box 1 address the same axis, which is what makes the commit/reveal
# correlation check possible.
HONEST_ANGLES_BOX0 = (math.pi / 2.0, 0.0, math.pi / 4.0, 3.0 * math.pi / 4.0)
HONEST_ANGLES_BOX1 = (math.pi / 4.0, 3.0 * math.pi / 4.0, math.pi / 2.0, 0.0)

_MIDPOINT_SETTING = 2


@dataclass(frozen=True)
class MeasureRequest:
    """One measurement call: which box, which knob setting, which use round."""

    box: int
    setting: int
    round_index: int


class DevicePair(ABC):
    """Common bookkeeping for a pair of single-output black boxes.

    Subclasses implement :meth:`_respond`; the public :meth:`measure` enforces
    the usage contract: settings must be supported, rounds must strictly
    increase per box, and every call produces exactly one bit while advancing
    that box's use counter by one.
    """

    def __init__(self):
        self._uses = [0, 0]
        self._last_round = [0, 0]

    def measure(self, box: int, setting: int, round_index: int) -> int:
        if box not in (0, 1):
            raise ValueError(f"box must be 0 or 1, got {box!r}")
        if setting not in self.supported_settings(box):
            raise ValueError(
                f"setting {setting!r} not supported by box {box} of {type(self).__name__}"
            )
        if round_index < 1 or round_index <= self._last_round[box]:
            raise ValueError(
                f"round {round_index} does not advance box {box} "
                f"(last round {self._last_round[box]})"
            )
        outcome = int(self._respond(box, setting, round_index))
        self._uses[box] += 1
        self._last_round[box] = round_index
        return outcome

    def supported_settings(self, box: int):
        return range(4)

    @property
    def uses(self) -> tuple[int, int]:
        """Number of completed measure calls per box."""
        return tuple(self._uses)

    @abstractmethod
    def _respond(self, box: int, setting: int, round_index: int) -> int:
        ...


def measure(pair: DevicePair, request: MeasureRequest) -> int:
    """Feed one request into a pair and return the displayed bit."""
    return pair.measure(request.box, request.setting, request.round_index)


# ---------------------------------------------------------------------------
# Quantum-backed pairs
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _measurement_ops(angles0: tuple, angles1: tuple) -> tuple:
    """Per-box, per-setting 4x4 projector pairs (outcome 0, outcome 1)."""
    ops = ([], [])
    for theta in angles0:
        obs = quantum.ZxObservable(theta)
        ops[0].append(
            tuple(np.kron(obs.projector(r), quantum.IDENTITY_2) for r in (0, 1))
        )
    for theta in angles1:
        obs = quantum.ZxObservable(theta)
        ops[1].append(
            tuple(np.kron(quantum.IDENTITY_2, obs.projector(r)) for r in (0, 1))
        )
    return tuple(tuple(box_ops) for box_ops in ops)


@lru_cache(maxsize=64)
def _werner_matrix(v: float) -> np.ndarray:
    return quantum.werner_state(v).matrix


class EntangledPair(DevicePair):
    """A pair holding a fresh two-qubit state per round index.

    The first box measured in a round samples from the state's marginal and
    collapses it; the other box's later measurement in the same round uses the
    conditional state.  Which box goes first does not change the joint
    distribution (the two projectors commute).
    """

    def __init__(self, state_matrix: np.ndarray, angles0, angles1, rng=None):
        super().__init__()
        self._fresh = state_matrix
        self._angles = (tuple(angles0), tuple(angles1))
        self._ops = _measurement_ops(self._angles[0], self._angles[1])
        self._rng = np.random.default_rng(rng)
        self._open: dict[int, tuple[np.ndarray, int]] = {}

    def supported_settings(self, box: int):
        return range(len(self._angles[box]))

    def angle(self, box: int, setting: int) -> float:
        """Measurement axis addressed by a knob setting."""
        return self._angles[box][setting]

    def _respond(self, box, setting, round_index):
        entry = self._open.pop(round_index, None)
        if entry is None:
            rho, measured = self._fresh, 0
        else:
            rho, measured = entry
        proj0, proj1 = self._ops[box][setting]
        p0 = np.einsum("ij,ji->", rho, proj0).real
        if self._rng.random() < p0:
            outcome, proj, prob = 0, proj0, p0
        else:
            outcome, proj, prob = 1, proj1, 1.0 - p0
        measured |= 1 << box
        if measured != 0b11:
            self._open[round_index] = (proj @ rho @ proj / prob, measured)
        return outcome


def honest_pair(noise_v: float = 1.0, rng=None) -> EntangledPair:
    """The protocol's intended devices at visibility ``noise_v``.

    Each round holds a fresh Werner state; the knob maps are the honest ones,
    so inputs {0, 1} on both boxes realize the maximal CHSH configuration and
    inputs (i, i + 2 mod 4) measure a common axis.
    """
    if not 0.0 <= noise_v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {noise_v}")
    return EntangledPair(_werner_matrix(noise_v), HONEST_ANGLES_BOX0, HONEST_ANGLES_BOX1, rng)


class AliceCheatPair(EntangledPair):
    """Devices prepared for the midpoint cheating strategy at angle ``theta``.

    Bob's knobs: box 0 measures (2 theta, 0), box 1 measures
    (2 theta - phi, 4 theta - phi) with phi the violation-maximizing offset.
    Settings 2 and 3 on either box perform the holder's midpoint measurement
    (3 theta - phi on box 0, theta on box 1), the axis midway between the
    other box's two knob axes.
    """

    def __init__(self, theta: float, rng=None):
        if not 0.0 <= theta <= math.pi / 4.0:
            raise ValueError(f"theta must lie in [0, pi/4], got {theta}")
        phi = phi_opt(theta)
        mid0 = 3.0 * theta - phi
        mid1 = theta
        super().__init__(
            _werner_matrix(1.0),
            (2.0 * theta, 0.0, mid0, mid0),
            (2.0 * theta - phi, 4.0 * theta - phi, mid1, mid1),
            rng,
        )
        self.theta = theta
        self.phi = phi

    def measure_midpoint(self, box: int, round_index: int) -> int:
        """Measure the midpoint axis on the held box, whatever the nominal input."""
        return self.measure(box, _MIDPOINT_SETTING, round_index)


def alice_cheat_pair(theta: float, rng=None) -> AliceCheatPair:
    return AliceCheatPair(theta, rng)


# ---------------------------------------------------------------------------
# Programmed pairs
# ---------------------------------------------------------------------------

class BobCheatPair(DevicePair):
    """Boxes programmed to echo the commit input: settings 2 and 3 output
    setting - 2, every other setting outputs 0.  Memoryless and deterministic."""

    def _respond(self, box, setting, round_index):
        return setting - 2 if setting in (2, 3) else 0


def bob_cheat_pair() -> BobCheatPair:
    return BobCheatPair()


class CounterCheatPair(DevicePair):
    """Honest maximal-violation devices with per-box use counters.

    Uses 1 .. trigger_round - 1 of each box are delegated verbatim to an
    internal honest pair (bit-identical to :func:`honest_pair` under the same
    seed); from use ``trigger_round`` on, the box answers from a fixed bit
    table and touches no randomness.
    """

    def __init__(self, trigger_round: int, rng=None, table=None):
        if trigger_round < 1:
            raise ValueError("trigger round must be at least 1")
        super().__init__()
        self._trigger = trigger_round
        self._inner = honest_pair(1.0, rng)
        if table is None:
            table = ((0, 0, 0, 0), (0, 0, 0, 0))
        self._table = _validated_tables(table[0], table[1])

    def _respond(self, box, setting, round_index):
        if self._uses[box] + 1 < self._trigger:
            return self._inner.measure(box, setting, round_index)
        return self._table[box][setting]


def counter_cheat_pair(trigger_round: int, rng=None, table=None) -> CounterCheatPair:
    return CounterCheatPair(trigger_round, rng, table)


class PrPair(DevicePair):
    """A fresh PR box per round: joint outputs satisfy r0 xor r1 = s0 * s1.

    The first box queried in a round outputs a preparation-time uniform bit;
    the second box's output then follows the PR relation.  Individual
    marginals are uniform, so neither box's statistics reveal the other's
    input.  Only settings {0, 1} exist.
    """

    def __init__(self, rng=None):
        super().__init__()
        self._rng = np.random.default_rng(rng)
        self._open: dict[int, tuple[int, int, int]] = {}

    def supported_settings(self, box: int):
        return range(2)

    def _respond(self, box, setting, round_index):
        entry = self._open.pop(round_index, None)
        if entry is None:
            u = int(self._rng.integers(2))
            self._open[round_index] = (box, setting, u)
            return u
        first_box, first_setting, u = entry
        if first_box == 0:
            s0, s1 = first_setting, setting
        else:
            s0, s1 = setting, first_setting
        return u ^ (s0 & s1)


def pr_pair(rng=None) -> PrPair:
    return PrPair(rng)


class ClassicalPair(DevicePair):
    """Deterministic memoryless boxes answering from per-box lookup tables."""

    def __init__(self, table0, table1):
        super().__init__()
        self._table = _validated_tables(table0, table1)

    def supported_settings(self, box: int):
        return range(len(self._table[box]))

    def _respond(self, box, setting, round_index):
        return self._table[box][setting]


def classical_pair(table0, table1) -> ClassicalPair:
    """Build a deterministic pair; each table maps settings (by position) to bits
    and must cover either the two-setting or the four-setting interface."""
    return ClassicalPair(table0, table1)


def _validated_tables(table0, table1) -> tuple[tuple[int, ...], tuple[int, ...]]:
    tables = []
    for box, table in enumerate((table0, table1)):
        entries = tuple(table)
        if len(entries) not in (2, 4):
            raise ValueError(
                f"box {box} table must cover 2 or 4 settings, got {len(entries)}"
            )
        if any(bit not in (0, 1) for bit in entries):
            raise ValueError(f"box {box} table must contain bits only")
        tables.append(entries)
    return tuple(tables)
