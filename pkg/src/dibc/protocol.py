"""Message-driven engines for the commitment protocol and its variants.

Four engines share one transcript format:

* ``run_main`` - sequential CHSH testing, then commit and reveal at the next
  fixed round.
* ``run_free_reveal`` - the verifier feeds a second private coin into his
  remaining box at the fixed round, which frees the reveal time at the cost
  of only checking correlations half the time.
* ``run_large_office`` - one pair per candidate round, measured in parallel
  during the reveal phase.
* ``run_pr`` - the post-quantum variant played on a single PR box pair, with
  no testing phase.

Party behavior is pluggable.  An Alice strategy implements ``commit`` and
``reveal``; the honest one inputs her bit (offset to the commit settings),
sends the masked token, and reveals truthfully, while cheating ones may
measure off-script, fabricate claims, pick the revealed bit after committing,
or decline to reveal (modeled as a timeout).  Engines require an honest Bob;
his two cheating strategies do not follow the protocol flow and are estimated
separately by :func:`bob_gain_cheat_main`.
"""

from dataclasses import dataclass, field, asdict
import json

import numpy as np

from . import devices
from .analysis import running_violation

VARIANTS = ("main", "free_reveal", "large_office", "pr")

ACCEPTED = "accepted"
ABORT_LOW_VIOLATION = "abort_low_violation"
ABORT_TOKEN_MISMATCH = "abort_token_mismatch"
ABORT_CORRELATION_MISMATCH = "abort_correlation_mismatch"
ABORT_TIMEOUT = "abort_timeout"


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters: candidate round count N, violation threshold, variant, seed."""

    n_rounds: int
    i_threshold: float
    variant: str = "main"
    rng_seed: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant in ("main", "free_reveal") and self.n_rounds <= 1:
            raise ValueError("N must exceed 1")
        if self.variant == "large_office" and self.n_rounds < 1:
            raise ValueError("N must be positive")


@dataclass
class RoundRecord:
    """Inputs and outputs of one round; fields stay None for a box not queried."""

    s0: int | None = None
    s1: int | None = None
    r0: int | None = None
    r1: int | None = None


@dataclass(frozen=True)
class BobPrivate:
    """Bob's private draws: test count n, box choice c, and (free reveal) coin d."""

    n: int
    c: int | None = None
    d: int | None = None


@dataclass(frozen=True)
class CommitRecord:
    """What the commit phase produced: Alice's bound bit (None when she is
    keeping her options open), her mask coin a, and the token q she sent."""

    b_committed: int | None
    a: int
    q: int


@dataclass(frozen=True)
class RevealRecord:
    """Alice's reveal message: the claimed bit and the claimed box outcome."""

    b_revealed: int
    r_c: int


@dataclass
class Transcript:
    """Complete history of one protocol execution."""

    variant: str
    config: ProtocolConfig
    rounds: list
    bob_private: BobPrivate
    commit: CommitRecord | None
    reveal: RevealRecord | None
    verdict: str
    observed_violation: float | None

    @property
    def accepted_bit(self) -> int | None:
        if self.verdict == ACCEPTED:
            return self.reveal.b_revealed
        return None

    def recompute_violation(self) -> float | None:
        """Recompute the observed violation from the stored test rounds."""
        if self.variant == "pr":
            return None
        if self.variant == "large_office":
            if len(self.rounds) != self.config.n_rounds + 1:
                return None
            return running_violation(self.rounds[: self.config.n_rounds])
        return running_violation(self.rounds[: self.bob_private.n])

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "config": asdict(self.config),
            "rounds": [asdict(w) for w in self.rounds],
            "bob_private": asdict(self.bob_private),
            "commit": None if self.commit is None else asdict(self.commit),
            "reveal": None if self.reveal is None else asdict(self.reveal),
            "verdict": self.verdict,
            "observed_violation": self.observed_violation,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def transcript_from_dict(data: dict) -> Transcript:
    return Transcript(
        variant=data["variant"],
        config=ProtocolConfig(**data["config"]),
        rounds=[RoundRecord(**w) for w in data["rounds"]],
        bob_private=BobPrivate(**data["bob_private"]),
        commit=None if data["commit"] is None else CommitRecord(**data["commit"]),
        reveal=None if data["reveal"] is None else RevealRecord(**data["reveal"]),
        verdict=data["verdict"],
        observed_violation=data["observed_violation"],
    )


def transcript_from_json(text: str) -> Transcript:
    return transcript_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Party strategies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _CommitState:
    """Private carry-over from commit to reveal within one run."""

    b_committed: int | None
    a: int
    q: int
    r_c: int | None
    s_c: int | None


@dataclass
class HonestAlice:
    """Commits the given bit, masks the token with a fresh coin, reveals truthfully."""

    bit: int
    kind = "honest"

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError("committed bit must be 0 or 1")

    def commit(self, pair, box, round_index, rng):
        r = pair.measure(box, self.bit + 2, round_index)
        a = int(rng.integers(2))
        return _CommitState(self.bit, a, r ^ (a & self.bit), r, self.bit + 2)

    def reveal(self, state, rng):
        return self.bit, state.r_c


@dataclass
class MidpointCheatAlice:
    """Measures the received box midway between the verifier's two reveal axes,
    sends that outcome as the token, and picks the revealed bit afterwards
    (uniformly unless ``reveal_bit`` pins it).  Needs a midpoint-capable pair."""

    reveal_bit: int | None = None
    kind = "optimal_cheat"

    def commit(self, pair, box, round_index, rng):
        if not hasattr(pair, "measure_midpoint"):
            raise ValueError("midpoint cheat needs a pair exposing measure_midpoint")
        r = pair.measure_midpoint(box, round_index)
        a = int(rng.integers(2))  # drawn so the traffic matches an honest commit
        return _CommitState(None, a, r, r, devices._MIDPOINT_SETTING)

    def reveal(self, state, rng):
        b = self.reveal_bit if self.reveal_bit is not None else int(rng.integers(2))
        return b, state.r_c


@dataclass
class ScriptedAlice:
    """Table-driven cheat: feed a fixed commit setting, echo the outcome as the
    token, then reveal a post-hoc bit - or decline to reveal (``respond=False``),
    which the engine records as a timeout abort."""

    commit_setting: int = 2
    reveal_bit: int | None = None
    respond: bool = True
    kind = "custom"

    def commit(self, pair, box, round_index, rng):
        r = pair.measure(box, self.commit_setting, round_index)
        a = int(rng.integers(2))
        return _CommitState(None, a, r, r, self.commit_setting)

    def reveal(self, state, rng):
        if not self.respond:
            return None
        b = self.reveal_bit if self.reveal_bit is not None else int(rng.integers(2))
        return b, state.r_c


@dataclass
class HonestPrAlice:
    """Honest committer for the PR variant: inputs her bit, masks the token."""

    bit: int
    kind = "honest"

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError("committed bit must be 0 or 1")

    def commit(self, pair, rng):
        r0 = pair.measure(0, self.bit, 1)
        a = int(rng.integers(2))
        return _CommitState(self.bit, a, r0 ^ (a & self.bit), r0, self.bit)

    def reveal(self, state, rng):
        return self.bit, state.r_c


@dataclass
class PrCheatAlice:
    """Optimal PR-variant cheat: never touches her box, sends token 0, and claims
    (b, r0 = 0) for a bit chosen after the commit phase.  Pairs naturally with a
    classical box on the verifier's side that always outputs 0."""

    reveal_bit: int | None = None
    kind = "custom"

    def commit(self, pair, rng):
        a = int(rng.integers(2))
        return _CommitState(None, a, 0, None, None)

    def reveal(self, state, rng):
        b = self.reveal_bit if self.reveal_bit is not None else int(rng.integers(2))
        return b, 0


@dataclass(frozen=True)
class BobStrategy:
    """Marker for Bob's behavior; engines accept only the honest kind."""

    kind: str = "honest"


HONEST_BOB = BobStrategy("honest")
GAIN_CHEAT_DETERMINISTIC = "gain_cheat_deterministic"
GAIN_CHEAT_DEVICE_DEPENDENT = "gain_cheat_device_dependent"


def _require_honest(bob: BobStrategy) -> None:
    if bob.kind != "honest":
        raise ValueError(
            "engines model an honest verifier; estimate cheating verifiers with "
            "bob_gain_cheat_main"
        )


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------

def _selection_phase(config, pair, rng):
    n = int(rng.integers(1, config.n_rounds + 1))
    rounds = []
    for k in range(1, n + 1):
        s0 = int(rng.integers(2))
        s1 = int(rng.integers(2))
        rounds.append(RoundRecord(s0, s1, pair.measure(0, s0, k), pair.measure(1, s1, k)))
    return n, rounds, running_violation(rounds)


def _set_box(record: RoundRecord, box: int, setting: int, outcome: int) -> None:
    if box == 0:
        record.s0, record.r0 = setting, outcome
    else:
        record.s1, record.r1 = setting, outcome


def run_main(config: ProtocolConfig, pair, alice, bob: BobStrategy = HONEST_BOB, *, rng=None) -> Transcript:
    """Execute the sequential protocol once and return the full transcript.

    Flow: Bob privately draws the test count n, uniform inputs, and measures
    both boxes for n rounds; aborts below the threshold; otherwise hands box c
    to Alice.  Alice commits at round n+1 and sends the token; she then
    reveals (bit, outcome).  Bob checks the token, measures his box at round
    n+1 with the revealed bit, and accepts only if the outcomes agree.
    """
    if config.variant != "main":
        raise ValueError(f"config variant is {config.variant!r}, expected 'main'")
    _require_honest(bob)
    rng = np.random.default_rng(config.rng_seed if rng is None else rng)

    n, rounds, violation = _selection_phase(config, pair, rng)
    if violation < config.i_threshold:
        return Transcript(
            "main", config, rounds, BobPrivate(n), None, None, ABORT_LOW_VIOLATION, violation
        )
    c = int(rng.integers(2))
    private = BobPrivate(n, c)

    state = alice.commit(pair, c, n + 1, rng)
    commit = CommitRecord(state.b_committed, state.a, state.q)
    record = RoundRecord()
    _set_box(record, c, state.s_c, state.r_c)
    rounds.append(record)

    message = alice.reveal(state, rng)
    if message is None:
        return Transcript("main", config, rounds, private, commit, None, ABORT_TIMEOUT, violation)
    b_rev, r_claim = message
    reveal = RevealRecord(b_rev, r_claim)
    if not (state.q == r_claim or state.q == r_claim ^ b_rev):
        return Transcript(
            "main", config, rounds, private, commit, reveal, ABORT_TOKEN_MISMATCH, violation
        )
    r_check = pair.measure(1 - c, b_rev, n + 1)
    _set_box(record, 1 - c, b_rev, r_check)
    verdict = ACCEPTED if r_check == r_claim else ABORT_CORRELATION_MISMATCH
    return Transcript("main", config, rounds, private, commit, reveal, verdict, violation)


def run_free_reveal(config: ProtocolConfig, pair, alice, bob: BobStrategy = HONEST_BOB, *, rng=None) -> Transcript:
    """Execute the free-reveal variant once.

    As :func:`run_main`, except Bob flips a second coin d, feeds it into his
    remaining box at round n+1 before the reveal arrives, and applies the
    correlation check only when d happens to equal the revealed bit; otherwise
    the token check alone decides.
    """
    if config.variant != "free_reveal":
        raise ValueError(f"config variant is {config.variant!r}, expected 'free_reveal'")
    _require_honest(bob)
    rng = np.random.default_rng(config.rng_seed if rng is None else rng)

    n, rounds, violation = _selection_phase(config, pair, rng)
    if violation < config.i_threshold:
        return Transcript(
            "free_reveal", config, rounds, BobPrivate(n), None, None,
            ABORT_LOW_VIOLATION, violation,
        )
    c = int(rng.integers(2))
    d = int(rng.integers(2))
    private = BobPrivate(n, c, d)

    record = RoundRecord()
    r_check = pair.measure(1 - c, d, n + 1)
    _set_box(record, 1 - c, d, r_check)

    state = alice.commit(pair, c, n + 1, rng)
    commit = CommitRecord(state.b_committed, state.a, state.q)
    _set_box(record, c, state.s_c, state.r_c)
    rounds.append(record)

    message = alice.reveal(state, rng)
    if message is None:
        return Transcript(
            "free_reveal", config, rounds, private, commit, None, ABORT_TIMEOUT, violation
        )
    b_rev, r_claim = message
    reveal = RevealRecord(b_rev, r_claim)
    if not (state.q == r_claim or state.q == r_claim ^ b_rev):
        verdict = ABORT_TOKEN_MISMATCH
    elif d == b_rev and r_check != r_claim:
        verdict = ABORT_CORRELATION_MISMATCH
    else:
        verdict = ACCEPTED
    return Transcript("free_reveal", config, rounds, private, commit, reveal, verdict, violation)


def run_large_office(config: ProtocolConfig, pairs, alice, bob: BobStrategy = HONEST_BOB, *, rng=None) -> Transcript:
    """Execute the many-pairs variant once.

    Bob privately picks a pair n and box c, and sends that box to Alice.  After
    the commit token and reveal message arrive and the token checks out, he
    measures everything at once: uniform inputs into both boxes of the other N
    pairs, and the revealed bit into the held box of pair n.  He accepts only
    if the pair-n outcomes agree and the N-pair violation clears the threshold.

    Transcript layout: the N test-pair records in pair order, then the
    commitment pair's record last.
    """
    if config.variant != "large_office":
        raise ValueError(f"config variant is {config.variant!r}, expected 'large_office'")
    _require_honest(bob)
    pairs = list(pairs)
    if len(pairs) != config.n_rounds + 1:
        raise ValueError(f"need N+1 = {config.n_rounds + 1} pairs, got {len(pairs)}")
    rng = np.random.default_rng(config.rng_seed if rng is None else rng)

    n = int(rng.integers(1, config.n_rounds + 2))
    c = int(rng.integers(2))
    private = BobPrivate(n, c)

    state = alice.commit(pairs[n - 1], c, 1, rng)
    commit = CommitRecord(state.b_committed, state.a, state.q)
    record = RoundRecord()
    _set_box(record, c, state.s_c, state.r_c)

    message = alice.reveal(state, rng)
    if message is None:
        return Transcript(
            "large_office", config, [record], private, commit, None, ABORT_TIMEOUT, None
        )
    b_rev, r_claim = message
    reveal = RevealRecord(b_rev, r_claim)
    if not (state.q == r_claim or state.q == r_claim ^ b_rev):
        return Transcript(
            "large_office", config, [record], private, commit, reveal,
            ABORT_TOKEN_MISMATCH, None,
        )

    test_rounds = []
    for k, pair in enumerate(pairs, start=1):
        if k == n:
            continue
        s0 = int(rng.integers(2))
        s1 = int(rng.integers(2))
        test_rounds.append(
            RoundRecord(s0, s1, pair.measure(0, s0, 1), pair.measure(1, s1, 1))
        )
    r_check = pairs[n - 1].measure(1 - c, b_rev, 1)
    _set_box(record, 1 - c, b_rev, r_check)
    violation = running_violation(test_rounds)

    if r_check != r_claim:
        verdict = ABORT_CORRELATION_MISMATCH
    elif violation < config.i_threshold:
        verdict = ABORT_LOW_VIOLATION
    else:
        verdict = ACCEPTED
    return Transcript(
        "large_office", config, test_rounds + [record], private, commit, reveal,
        verdict, violation,
    )


def run_pr(pair, alice, bob: BobStrategy = HONEST_BOB, rng_seed: int | None = None, *, rng=None) -> Transcript:
    """Execute the PR-box variant once.

    No testing phase: Alice commits by feeding her bit into box 0 and masking
    the outcome; Bob checks the token against the revealed (bit, outcome),
    then feeds a uniform input into box 1 and requires the PR relation
    r0 xor r1 = s0 * s1 to hold on the claims.
    """
    _require_honest(bob)
    config = ProtocolConfig(1, -4.0, "pr", rng_seed)
    rng = np.random.default_rng(rng_seed if rng is None else rng)

    state = alice.commit(pair, rng)
    commit = CommitRecord(state.b_committed, state.a, state.q)
    record = RoundRecord()
    if state.s_c is not None:
        record.s0, record.r0 = state.s_c, state.r_c
    private = BobPrivate(0)

    message = alice.reveal(state, rng)
    if message is None:
        return Transcript("pr", config, [record], private, commit, None, ABORT_TIMEOUT, None)
    s0_claim, r0_claim = message
    reveal = RevealRecord(s0_claim, r0_claim)
    if not (state.q == r0_claim or state.q == r0_claim ^ s0_claim):
        return Transcript(
            "pr", config, [record], private, commit, reveal, ABORT_TOKEN_MISMATCH, None
        )
    s1 = int(rng.integers(2))
    record.s1 = s1
    record.r1 = pair.measure(1, s1, 1)
    verdict = ACCEPTED if (r0_claim ^ record.r1) == (s0_claim & s1) else ABORT_CORRELATION_MISMATCH
    return Transcript("pr", config, [record], private, commit, reveal, verdict, None)


# ---------------------------------------------------------------------------
# Bob's information-gain strategies
# ---------------------------------------------------------------------------

def bob_gain_cheat_main(strategy, trials: int, seed: int = 0):
    """Guess accuracy of a cheating verifier against an honest committer.

    ``strategy`` names one of the two attacks (a :class:`BobStrategy` or its
    kind string): the deterministic one programs the committer's box to echo
    her input and guesses the token; the device-dependent one keeps honest
    devices, measures his box on the axis shared with commit setting 2, and
    guesses 0 exactly when his outcome matches the token.  Honest devices are
    fresh per round, so each trial simulates the commit/reveal round directly.
    Returns a Bernoulli :class:`~dibc.montecarlo.Estimate` of P(guess = b).
    """
    from .montecarlo import Estimate, coin_bits  # deferred: montecarlo imports this module

    kind = strategy.kind if isinstance(strategy, BobStrategy) else str(strategy)
    if trials < 1:
        raise ValueError("need at least one trial")
    successes = 0
    if kind in ("deterministic", GAIN_CHEAT_DETERMINISTIC):
        pair = devices.bob_cheat_pair()
        coins = coin_bits(seed, 0, trials, 3)
        for i in range(trials):
            b, a, c = (int(x) for x in coins[i])
            r = pair.measure(c, b + 2, i + 1)
            guess = r ^ (a & b)  # the token q, taken at face value
            successes += guess == b
    elif kind in ("device_dependent", GAIN_CHEAT_DEVICE_DEPENDENT):
        for i in range(trials):
            rng = np.random.default_rng((seed, i))
            pair = devices.honest_pair(1.0, rng)
            b = int(rng.integers(2))
            a = int(rng.integers(2))
            c = int(rng.integers(2))
            r_c = pair.measure(c, b + 2, 1)
            q = r_c ^ (a & b)
            r_bar = pair.measure(1 - c, 0, 1)
            guess = 0 if r_bar == q else 1
            successes += guess == b
    else:
        raise ValueError(f"unknown gain strategy {kind!r}")
    return Estimate.from_bernoulli(successes, trials)
