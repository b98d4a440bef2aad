"""Exact two-qubit math for measurements in the zx-plane.

Everything here is closed-form 4x4 linear algebra: density matrices, the
one-parameter family of +-1-valued observables

    sigma(theta) = cos(theta) sigma_z + sin(theta) sigma_x,

joint outcome distributions Tr(rho P_{r0} (x) P_{r1}), two-point correlators,
and CHSH values.  All functions are pure; all values are immutable after
construction.

Conventions: basis ordering |00>, |01>, |10>, |11> with |0> (|1>) the +1 (-1)
eigenstate of sigma_z; outcome bit 0 maps to the +1 eigenspace, bit 1 to the
-1 eigenspace.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-10
DISTRIBUTION_TOL = 1e-12

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ZxObservable:
    """A +-1-valued qubit observable along the angle ``theta`` in the zx-plane.

    theta = 0 is sigma_z, theta = pi/2 is sigma_x.  Outcome bit 0 corresponds
    to the +1 eigenvalue, bit 1 to -1.
    """

    theta: float

    def matrix(self) -> np.ndarray:
        return math.cos(self.theta) * PAULI_Z + math.sin(self.theta) * PAULI_X

    def projector(self, outcome: int) -> np.ndarray:
        """Rank-1 eigenprojector (I +- sigma_theta) / 2 for the given outcome bit."""
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        sign = 1.0 if outcome == 0 else -1.0
        return (IDENTITY_2 + sign * self.matrix()) / 2.0


@dataclass(frozen=True)
class TwoQubitState:
    """A validated 4x4 density matrix (Hermitian, unit trace, PSD up to tolerance)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("state matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError("state matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -EIGENVALUE_TOL:
            raise ValueError("state matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True)
class OutcomePair:
    """Output bits (r0, r1) of the two boxes."""

    r0: int
    r1: int

    def __post_init__(self):
        if self.r0 not in (0, 1) or self.r1 not in (0, 1):
            raise ValueError("outcomes must be bits")


def epr_state() -> TwoQubitState:
    """The maximally entangled state (|00> + |11>) / sqrt(2) as a density matrix."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1.0 / math.sqrt(2.0)
    return TwoQubitState(np.outer(psi, psi.conj()))


def werner_state(v: float) -> TwoQubitState:
    """Mixture v * EPR + (1 - v) * I/4; scales every two-point correlator by v."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return TwoQubitState(v * epr_state().matrix + (1.0 - v) * np.eye(4, dtype=complex) / 4.0)


@lru_cache(maxsize=256)
def _joint_projectors(theta0: float, theta1: float) -> tuple[np.ndarray, ...]:
    obs0, obs1 = ZxObservable(theta0), ZxObservable(theta1)
    return tuple(
        np.kron(obs0.projector(r0), obs1.projector(r1))
        for r0 in (0, 1)
        for r1 in (0, 1)
    )


def joint_distribution(state: TwoQubitState, obs0: ZxObservable, obs1: ZxObservable) -> np.ndarray:
    """Outcome distribution P(r0, r1) = Tr(rho P_{r0} (x) P_{r1}) as a 2x2 array [r0, r1]."""
    ops = _joint_projectors(obs0.theta, obs1.theta)
    p = np.array(
        [np.einsum("ij,ji->", state.matrix, op).real for op in ops]
    ).reshape(2, 2)
    # Clip float dust so downstream samplers see a true distribution.
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum()


def correlator(state: TwoQubitState, obs0: ZxObservable, obs1: ZxObservable) -> float:
    """Two-point correlator E = sum_{r0,r1} (-1)^(r0 xor r1) P(r0, r1), in [-1, 1]."""
    p = joint_distribution(state, obs0, obs1)
    return float(p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0])


def chsh_value(
    state: TwoQubitState,
    settings0: tuple[ZxObservable, ZxObservable],
    settings1: tuple[ZxObservable, ZxObservable],
) -> float:
    """CHSH combination E(A0,B0) + E(A0,B1) + E(A1,B0) - E(A1,B1), in [-4, 4].

    The sign pattern matches the indicator (-1)^(r0 xor r1 xor s0*s1): the
    correlator with both second settings enters negatively.
    """
    a0, a1 = settings0
    b0, b1 = settings1
    return (
        correlator(state, a0, b0)
        + correlator(state, a0, b1)
        + correlator(state, a1, b0)
        - correlator(state, a1, b1)
    )


def collapse(
    state: TwoQubitState, box: int, obs: ZxObservable, outcome: int
) -> tuple[float, TwoQubitState]:
    """Probability of ``outcome`` when measuring one qubit, and the conditional state.

    ``box`` 0 measures the first tensor factor, 1 the second.  Raises if the
    outcome has zero probability (no conditional state exists).
    """
    if box not in (0, 1):
        raise ValueError(f"box must be 0 or 1, got {box!r}")
    proj = obs.projector(outcome)
    op = np.kron(proj, IDENTITY_2) if box == 0 else np.kron(IDENTITY_2, proj)
    prob = float(np.einsum("ij,ji->", state.matrix, op).real)
    if prob <= 0.0:
        raise ValueError("cannot condition on a zero-probability outcome")
    return prob, TwoQubitState(op @ state.matrix @ op / prob)
