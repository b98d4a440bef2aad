"""Security quantities for the commitment protocol.

Covers the CHSH indicator and running violation computed from round records,
the asymptotic control curve C(I) traced out by the midpoint cheating
strategy, the finite-round control bound with its epsilon search, the
martingale tail bound, and vertex maximization over the two-input/two-output
no-signaling polytope (the information-gain bound and the PR-protocol control
bound, both 3/4).

Everything here is a pure function of its arguments.
"""

from dataclasses import dataclass, field
import io
import math

import numpy as np
from scipy.optimize import brentq

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
CLASSICAL_BOUND = 2.0

# Worst-case per-round martingale increment: 4 from the indicator itself plus
# 2*sqrt(2) from the conditional expectation it is centered on.
MARTINGALE_INCREMENT = 4.0 + 2.0 * math.sqrt(2.0)

_SUPRA_QUANTUM_TOL = 1e-9
_ARCCOS_CLAMP_TOL = 1e-12


# ---------------------------------------------------------------------------
# CHSH statistics over protocol rounds
# ---------------------------------------------------------------------------

def chsh_indicator(record) -> float:
    """Per-round CHSH indicator 4 * (-1)^(r0 xor r1 xor s0*s1), either +4 or -4.

    ``record`` is any object with bit attributes s0, s1, r0, r1; the factor 4
    compensates for the four equiprobable input pairs, so the expectation of
    the indicator equals the ordinary CHSH combination.
    """
    values = []
    for name in ("s0", "s1", "r0", "r1"):
        value = getattr(record, name)
        if value is None:
            raise ValueError(f"round record is missing field {name!r}")
        if value not in (0, 1):
            raise ValueError(f"field {name!r} must be a bit, got {value!r}")
        values.append(value)
    s0, s1, r0, r1 = values
    return 4.0 * (-1.0) ** (r0 ^ r1 ^ (s0 & s1))


def running_violation(rounds) -> float:
    """Arithmetic mean of the CHSH indicator over a nonempty list of rounds."""
    rounds = list(rounds)
    if not rounds:
        raise ValueError("cannot compute a running violation over zero rounds")
    return math.fsum(chsh_indicator(w) for w in rounds) / len(rounds)


# ---------------------------------------------------------------------------
# Asymptotic control curve
# ---------------------------------------------------------------------------

def phi_opt(theta: float) -> float:
    """Box-1 offset angle maximizing the CHSH value of the midpoint cheat.

    phi_opt = arccos( 2 (cos 2theta + sin^2 2theta) / sqrt(6 - 2 cos 4theta) ),
    with the arccos argument clamped against float drift at the endpoints.
    """
    _check_theta(theta)
    arg = 2.0 * (math.cos(2.0 * theta) + math.sin(2.0 * theta) ** 2) / math.sqrt(
        6.0 - 2.0 * math.cos(4.0 * theta)
    )
    if abs(arg) > 1.0 + _ARCCOS_CLAMP_TOL:
        raise ValueError(f"arccos argument {arg} out of range")
    return math.acos(min(1.0, max(-1.0, arg)))


def cheat_violation(theta: float, phi: float) -> float:
    """CHSH value 2 cos(2theta - phi) - cos(4theta - phi) + cos(phi) of the cheat settings."""
    return 2.0 * math.cos(2.0 * theta - phi) - math.cos(4.0 * theta - phi) + math.cos(phi)


def strategy_point(theta: float) -> tuple[float, float]:
    """(CHSH value, control) reached by the midpoint cheat at angle ``theta``.

    The CHSH value uses the optimal offset phi_opt(theta); the control is
    cos^2(theta / 2), the probability that measurements theta apart on an EPR
    pair agree.
    """
    _check_theta(theta)
    i = cheat_violation(theta, phi_opt(theta))
    return i, math.cos(theta / 2.0) ** 2


def control_of_violation(i: float) -> float:
    """Alice's asymptotic control C(I) as a function of the certified CHSH value.

    Inverts the strictly increasing map theta -> I(theta) on [0, pi/4] by
    bracketed root-finding.  Below the classical bound the curve clamps to 1;
    requests above the quantum maximum (beyond tolerance) are rejected.
    """
    if i > TSIRELSON_BOUND + _SUPRA_QUANTUM_TOL:
        raise ValueError(f"CHSH value {i} exceeds the quantum maximum {TSIRELSON_BOUND}")
    i = min(i, TSIRELSON_BOUND)
    if i <= CLASSICAL_BOUND:
        return 1.0
    theta = brentq(lambda t: strategy_point(t)[0] - i, 0.0, math.pi / 4.0, xtol=1e-10)
    return math.cos(theta / 2.0) ** 2


@dataclass(frozen=True)
class ControlCurve:
    """Sampled control curve: CHSH values (nondecreasing) with their control values."""

    i_values: np.ndarray
    control_values: np.ndarray

    def __post_init__(self):
        i = np.asarray(self.i_values, dtype=float)
        c = np.asarray(self.control_values, dtype=float)
        if i.shape != c.shape or i.ndim != 1 or i.size < 2:
            raise ValueError("curve needs matching 1-d arrays of at least two samples")
        if np.any(np.diff(i) < 0) or np.any(np.diff(c) > 1e-12):
            raise ValueError("control curve must be nonincreasing in the CHSH value")
        if abs(i[0] - CLASSICAL_BOUND) > 1e-9 or abs(c[0] - 1.0) > 1e-9:
            raise ValueError("curve must start at (2, 1)")
        if (
            abs(i[-1] - TSIRELSON_BOUND) > 1e-9
            or abs(c[-1] - math.cos(math.pi / 8.0) ** 2) > 1e-9
        ):
            raise ValueError("curve must end at (2*sqrt(2), cos^2(pi/8))")
        object.__setattr__(self, "i_values", i)
        object.__setattr__(self, "control_values", c)

    def interpolate(self, i: float) -> float:
        """Piecewise-linear interpolation of the sampled curve."""
        return float(np.interp(i, self.i_values, self.control_values))


def control_curve(points: int = 200) -> ControlCurve:
    """Trace the control curve from the cheat strategy over a theta grid.

    Returns ``points`` samples with CHSH values spanning [2, 2*sqrt(2)]
    (ascending) and control spanning [1, cos^2(pi/8)] (descending).
    """
    if points < 2:
        raise ValueError("need at least two samples")
    thetas = np.linspace(0.0, math.pi / 4.0, points)
    samples = [strategy_point(float(t)) for t in thetas]
    return ControlCurve(
        np.array([s[0] for s in samples]), np.array([s[1] for s in samples])
    )


# ---------------------------------------------------------------------------
# Finite-round bound
# ---------------------------------------------------------------------------

def k0(n: int, i_threshold: float) -> int:
    """Crossover round count ceil((N - 1) * C(I_th)) used in the finite bound."""
    if n <= 1:
        raise ValueError("need at least two candidate rounds")
    return math.ceil((n - 1) * control_of_violation(i_threshold))


def azuma_tail(k: int, epsilon: float) -> float:
    """Tail bound exp(-k eps^2 / (2 D^2)) on the observed violation exceeding
    its conditional expectation by ``epsilon`` after ``k`` rounds."""
    if k < 1:
        raise ValueError("k must be a positive round count")
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    return math.exp(-k * epsilon**2 / (2.0 * MARTINGALE_INCREMENT**2))


def q_epsilon(n: int, k_0: int, epsilon: float) -> float:
    """Closed geometric sum of azuma_tail(k, epsilon) for k = K0 .. N-1.

    Equals [exp(-K0 x) - exp(-N x)] / (1 - exp(-x)) with x = eps^2 / (2 D^2);
    the epsilon = 0 singularity is removable with limit N - K0.
    """
    if not 1 <= k_0 <= n - 1:
        raise ValueError(f"K0 must lie in [1, N-1], got K0={k_0}, N={n}")
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    x = epsilon**2 / (2.0 * MARTINGALE_INCREMENT**2)
    if x == 0.0:
        return float(n - k_0)
    # expm1 keeps both factors accurate when x underflows toward 0.
    numerator = math.exp(-k_0 * x) * -math.expm1(-(n - k_0) * x)
    denominator = -math.expm1(-x)
    return numerator / denominator


@dataclass(frozen=True)
class BoundInputs:
    """Inputs for the finite-round control bound: N, I_th, and epsilon search grid."""

    n: int
    i_threshold: float
    coarse_step: float = 1e-3
    refine_tol: float = 1e-6

    def __post_init__(self):
        if self.n <= 1:
            raise ValueError("N must exceed 1")
        if self.i_threshold > TSIRELSON_BOUND + _SUPRA_QUANTUM_TOL:
            raise ValueError("threshold cannot exceed the quantum maximum")
        if self.coarse_step <= 0.0 or self.refine_tol <= 0.0:
            raise ValueError("search grid parameters must be positive")


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimizer of a unimodal f on [lo, hi] to width ``tol``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def pcont_bound_detail(inputs: BoundInputs) -> tuple[float, float]:
    """Finite-round control bound together with the minimizing epsilon.

    Minimizes C(I_th - eps) + (1 - C(I_th - eps)) Q(eps) over eps >= 0 by a
    coarse grid plus golden-section refinement, then applies the (N-1)/N
    prefactor, the 1/N term for the final-use attack, and the clamp at 1.
    """
    n, i_th = inputs.n, inputs.i_threshold
    k_0 = k0(n, i_th)

    def objective(eps: float) -> float:
        c = control_of_violation(min(i_th - eps, TSIRELSON_BOUND))
        return c + (1.0 - c) * q_epsilon(n, k_0, eps)

    hi = max(i_th, inputs.coarse_step)
    grid = np.arange(0.0, hi + inputs.coarse_step, inputs.coarse_step)
    values = [objective(float(e)) for e in grid]
    best = int(np.argmin(values))
    lo = float(grid[max(best - 1, 0)])
    up = float(grid[min(best + 1, len(grid) - 1)])
    eps_star = _golden_section(objective, lo, up, inputs.refine_tol) if up > lo else lo
    if objective(float(grid[best])) < objective(eps_star):
        eps_star = float(grid[best])
    raw = (n - 1) / n * objective(eps_star) + 1.0 / n
    return min(1.0, raw), eps_star


def pcont_bound(inputs: BoundInputs) -> float:
    """Upper bound on Alice's control for a finite number of candidate rounds."""
    return pcont_bound_detail(inputs)[0]


def threshold_schedule(n: int, kind: str = "caption") -> float:
    """Threshold scaling used for bound tables: 2*sqrt(2)(1 - 1/sqrt(N)) for the
    ``caption`` form or 2*sqrt(2) - 1/sqrt(N) for the ``body`` form."""
    if n <= 1:
        raise ValueError("N must exceed 1")
    if kind == "caption":
        return TSIRELSON_BOUND * (1.0 - 1.0 / math.sqrt(n))
    if kind == "body":
        return TSIRELSON_BOUND - 1.0 / math.sqrt(n)
    raise ValueError(f"unknown schedule {kind!r}")


def free_reveal_control(p: float) -> float:
    """Control after lifting the fixed reveal time: p -> (p + 1) / 2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("control must lie in [0, 1]")
    return (p + 1.0) / 2.0


# ---------------------------------------------------------------------------
# No-signaling polytope
# ---------------------------------------------------------------------------

NS_TOL = 1e-12


@dataclass(frozen=True)
class NsBox:
    """A bipartite two-input/two-output conditional distribution P(r0, r1 | s0, s1).

    Stored as a (2, 2, 2, 2) array indexed [r0, r1, s0, s1]; validated to be
    normalized per input pair and no-signaling in both directions.
    """

    p: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 2, 2, 2):
            raise ValueError("expected a (2, 2, 2, 2) probability table")
        if p.min() < -NS_TOL:
            raise ValueError("probabilities must be nonnegative")
        totals = p.sum(axis=(0, 1))
        if np.max(np.abs(totals - 1.0)) > NS_TOL:
            raise ValueError("each conditional distribution must sum to 1")
        marg0 = p.sum(axis=1)  # [r0, s0, s1]
        marg1 = p.sum(axis=0)  # [r1, s0, s1]
        if np.max(np.abs(marg0[:, :, 0] - marg0[:, :, 1])) > NS_TOL:
            raise ValueError("box 0 marginals depend on box 1's input")
        if np.max(np.abs(marg1[:, 0, :] - marg1[:, 1, :])) > NS_TOL:
            raise ValueError("box 1 marginals depend on box 0's input")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def local_deterministic(cls, alpha: int, beta: int, gamma: int, delta: int) -> "NsBox":
        """Deterministic box r0 = alpha*s0 xor beta, r1 = gamma*s1 xor delta."""
        p = np.zeros((2, 2, 2, 2))
        for s0 in (0, 1):
            for s1 in (0, 1):
                p[(alpha * s0) ^ beta, (gamma * s1) ^ delta, s0, s1] = 1.0
        return cls(p, label=f"local-{alpha}{beta}{gamma}{delta}")

    @classmethod
    def pr_type(cls, alpha: int, beta: int, gamma: int) -> "NsBox":
        """Extremal nonlocal box r0 xor r1 = s0*s1 xor alpha*s0 xor beta*s1 xor gamma."""
        p = np.zeros((2, 2, 2, 2))
        for s0 in (0, 1):
            for s1 in (0, 1):
                for r0 in (0, 1):
                    r1 = r0 ^ (s0 & s1) ^ (alpha * s0) ^ (beta * s1) ^ gamma
                    p[r0, r1, s0, s1] = 0.5
        return cls(p, label=f"pr-{alpha}{beta}{gamma}")

    @classmethod
    def uniform(cls) -> "NsBox":
        return cls(np.full((2, 2, 2, 2), 0.25), label="uniform")


def ns_vertices() -> list[NsBox]:
    """The 24 extreme points of the no-signaling polytope: 16 local deterministic
    boxes and the 8 input/output relabelings of the PR box."""
    boxes = [
        NsBox.local_deterministic(a, b, g, d)
        for a in (0, 1)
        for b in (0, 1)
        for g in (0, 1)
        for d in (0, 1)
    ]
    boxes += [
        NsBox.pr_type(a, b, g) for a in (0, 1) for b in (0, 1) for g in (0, 1)
    ]
    return boxes


def gain_objective(box: NsBox) -> float:
    """The eavesdropping payoff whose no-signaling maximum bounds Bob's gain.

    The first party holds the committed box (inputs relabeled 2 -> 0, 3 -> 1),
    the second is Bob's token-conditioned guess measurement:

        (1/4) [ 2 P(0,0|0,0) + 2 P(1,0|0,1) + P(0,1|1,0)
                + P(1,1|1,1) + P(0,1|1,1) + P(1,1|1,0) ].
    """
    p = box.p
    return 0.25 * (
        2.0 * p[0, 0, 0, 0]
        + 2.0 * p[1, 0, 0, 1]
        + p[0, 1, 1, 0]
        + p[1, 1, 1, 1]
        + p[0, 1, 1, 1]
        + p[1, 1, 1, 0]
    )


def max_gain_objective() -> tuple[float, NsBox]:
    """Maximize the information-gain payoff over the 24 no-signaling vertices."""
    return max(((gain_objective(b), b) for b in ns_vertices()), key=lambda t: t[0])


def pr_control_objective(box: NsBox) -> float:
    """Alice's control payoff in the PR-box protocol.

    Two marginal terms cover revealing 0 (box 1 must output 0) and four joint
    terms cover revealing 1 (the PR relation must hold for s0 = 1):

        (1/4) [ P(r1=0|s1=0) + P(r1=0|s1=1) + P(0,0|1,0) + P(0,1|1,1)
                + P(1,1|1,0) + P(1,0|1,1) ].
    """
    p = box.p
    marg1 = p.sum(axis=0)  # [r1, s0, s1]; no-signaling makes s0 irrelevant
    return 0.25 * (
        marg1[0, 0, 0]
        + marg1[0, 0, 1]
        + p[0, 0, 1, 0]
        + p[0, 1, 1, 1]
        + p[1, 1, 1, 0]
        + p[1, 0, 1, 1]
    )


def max_pr_control_objective() -> tuple[float, NsBox]:
    """Maximize the PR-protocol control payoff over the 24 no-signaling vertices."""
    return max(
        ((pr_control_objective(b), b) for b in ns_vertices()), key=lambda t: t[0]
    )


# ---------------------------------------------------------------------------
# Table output
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_curve_csv(curve: ControlCurve, stream: io.TextIOBase) -> None:
    """Emit the control curve as CSV with header ``I,control``."""
    stream.write("I,control\n")
    for i, c in zip(curve.i_values, curve.control_values):
        stream.write(f"{_fmt(i)},{_fmt(c)}\n")


def write_bound_csv(rows, stream: io.TextIOBase) -> None:
    """Emit finite-round bound rows (n, i_th, bound, eps_star) as CSV with
    header ``N,I_th,bound,epsilon_star``."""
    stream.write("N,I_th,bound,epsilon_star\n")
    for n, i_th, bound, eps in rows:
        stream.write(f"{n},{_fmt(i_th)},{_fmt(bound)},{_fmt(eps)}\n")


def _check_theta(theta: float) -> None:
    if not 0.0 <= theta <= math.pi / 4.0 + 1e-12:
        raise ValueError(f"theta must lie in [0, pi/4], got {theta}")
