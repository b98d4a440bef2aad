"""Seeded experiment harness with confidence intervals.

Every estimator derives each trial's randomness from (master seed, trial
index) alone - a counter-based derivation, so splitting a run across workers
and merging the tallies reproduces the sequential result bit for bit.  Coin
flips without device randomness come from a vectorized 64-bit mix of the
trial index; trials that drive devices get a per-trial numpy generator.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from . import devices, protocol
from .analysis import azuma_tail, free_reveal_control

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class Estimate:
    """A Bernoulli estimate with its normal-approximation 99% interval."""

    mean: float
    stderr: float
    trials: int
    ci99: tuple[float, float]

    @classmethod
    def from_bernoulli(cls, successes: int, trials: int) -> "Estimate":
        if trials < 1:
            raise ValueError("need at least one trial")
        mean = successes / trials
        stderr = math.sqrt(mean * (1.0 - mean) / trials)
        return cls(mean, stderr, trials, (mean - Z99 * stderr, mean + Z99 * stderr))


@dataclass(frozen=True)
class ExperimentSpec:
    """What to estimate: scenario id, trial count, master seed, scenario parameters."""

    scenario: str
    trials: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")


# ---------------------------------------------------------------------------
# Per-trial randomness derivation
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)


def coin_bits(master_seed: int, start: int, stop: int, n_bits: int) -> np.ndarray:
    """Independent coin flips per trial index, derived counter-style.

    Trial i's word is splitmix64 evaluated at counter i offset by the master
    seed; the low ``n_bits`` bits come back as a (stop - start, n_bits) uint8
    array.  A pure function of (master_seed, index), so any partition of the
    index range reproduces the same flips.
    """
    idx = np.arange(start, stop, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (idx + np.uint64(1)) * _GOLDEN + np.uint64(master_seed & (2**64 - 1))
        x = (x ^ (x >> np.uint64(30))) * _MIX_1
        x = (x ^ (x >> np.uint64(27))) * _MIX_2
        x ^= x >> np.uint64(31)
    shifts = np.arange(n_bits, dtype=np.uint64)
    return ((x[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for one trial, seeded from (master seed, trial index)."""
    return np.random.default_rng((master_seed, index))


# ---------------------------------------------------------------------------
# Tally loops (one per scenario; each covers an index range and is mergeable)
# ---------------------------------------------------------------------------

def _control_params(params: dict) -> tuple[float, str, int, float]:
    theta = params["theta"]
    variant = params.get("variant", "main")
    n_rounds = int(params.get("n_rounds", 2))
    # Threshold defaults below any attainable violation: the cheat devices are
    # fresh per round, so conditioning on the selection outcome cannot skew
    # the commit round, and an always-passing filter maximizes statistics.
    i_threshold = float(params.get("i_threshold", -4.0))
    return float(theta), variant, n_rounds, i_threshold


def _control_tallies(spec: ExperimentSpec, start: int, stop: int) -> dict:
    theta, variant, n_rounds, i_threshold = _control_params(spec.params)
    tally = dict.fromkeys(("passed", "success", "target0", "success0"), 0)
    for i in range(start, stop):
        rng = trial_rng(spec.seed, i)
        alice = protocol.MidpointCheatAlice()
        if variant == "main":
            pair = devices.alice_cheat_pair(theta, rng)
            config = protocol.ProtocolConfig(n_rounds, i_threshold, "main")
            t = protocol.run_main(config, pair, alice, rng=rng)
        elif variant == "free_reveal":
            pair = devices.alice_cheat_pair(theta, rng)
            config = protocol.ProtocolConfig(n_rounds, i_threshold, "free_reveal")
            t = protocol.run_free_reveal(config, pair, alice, rng=rng)
        elif variant == "large_office":
            pairs = [devices.alice_cheat_pair(theta, rng) for _ in range(n_rounds + 1)]
            config = protocol.ProtocolConfig(n_rounds, i_threshold, "large_office")
            t = protocol.run_large_office(config, pairs, alice, rng=rng)
        else:
            raise ValueError(f"unknown control variant {variant!r}")
        if t.verdict == protocol.ABORT_LOW_VIOLATION:
            continue
        tally["passed"] += 1
        success = t.verdict == protocol.ACCEPTED
        tally["success"] += success
        if t.reveal is not None and t.reveal.b_revealed == 0:
            tally["target0"] += 1
            tally["success0"] += success
    return tally


def _completeness_tallies(spec: ExperimentSpec, start: int, stop: int) -> dict:
    params = spec.params
    noise_v = float(params.get("noise_v", 1.0))
    variant = params.get("variant", "main")
    n_rounds = int(params.get("n_rounds", 3))
    i_threshold = float(params.get("i_threshold", 2.5))
    tally = dict.fromkeys(("selection_aborts", "accepted_correct"), 0)
    for i in range(start, stop):
        rng = trial_rng(spec.seed, i)
        bit = int(rng.integers(2))
        alice = protocol.HonestAlice(bit)
        if variant == "main":
            pair = devices.honest_pair(noise_v, rng)
            config = protocol.ProtocolConfig(n_rounds, i_threshold, "main")
            t = protocol.run_main(config, pair, alice, rng=rng)
        elif variant == "free_reveal":
            pair = devices.honest_pair(noise_v, rng)
            config = protocol.ProtocolConfig(n_rounds, i_threshold, "free_reveal")
            t = protocol.run_free_reveal(config, pair, alice, rng=rng)
        elif variant == "large_office":
            pairs = [devices.honest_pair(noise_v, rng) for _ in range(n_rounds + 1)]
            config = protocol.ProtocolConfig(n_rounds, i_threshold, "large_office")
            t = protocol.run_large_office(config, pairs, alice, rng=rng)
        elif variant == "pr":
            pair = devices.pr_pair(rng)
            t = protocol.run_pr(pair, protocol.HonestPrAlice(bit), rng=rng)
        else:
            raise ValueError(f"unknown completeness variant {variant!r}")
        if t.verdict == protocol.ABORT_LOW_VIOLATION:
            tally["selection_aborts"] += 1
        else:
            tally["accepted_correct"] += t.accepted_bit == bit
    return tally


def _gain_pr_tallies(spec: ExperimentSpec, start: int, stop: int) -> dict:
    successes = 0
    for i in range(start, stop):
        rng = trial_rng(spec.seed, i)
        pair = devices.pr_pair(rng)
        b = int(rng.integers(2))
        a = int(rng.integers(2))
        r0 = pair.measure(0, b, 1)
        q = r0 ^ (a & b)
        r1 = pair.measure(1, 1, 1)
        successes += (q ^ r1) == b  # reads q as r0 and inverts the PR relation
    return {"success": successes}


def _gain_uniform_tallies(spec: ExperimentSpec, start: int, stop: int) -> dict:
    coins = coin_bits(spec.seed, start, stop, 2)
    return {"success": int(np.sum(coins[:, 0] == coins[:, 1]))}


def _counter_cheat_tallies(spec: ExperimentSpec, start: int, stop: int) -> dict:
    n_rounds = int(spec.params["n_rounds"])
    # Selection is disabled (threshold below -4): otherwise statistical aborts
    # before the trigger round would mask the final-use attack being shown.
    config = protocol.ProtocolConfig(n_rounds, -5.0, "main")
    tally = dict.fromkeys(("success", "trigger_draws", "trigger_successes"), 0)
    for i in range(start, stop):
        rng = trial_rng(spec.seed, i)
        pair = devices.counter_cheat_pair(n_rounds + 1, rng)
        t = protocol.run_main(config, pair, protocol.ScriptedAlice(), rng=rng)
        success = t.verdict == protocol.ACCEPTED
        tally["success"] += success
        if t.bob_private.n == n_rounds:
            tally["trigger_draws"] += 1
            tally["trigger_successes"] += success
    return tally


_TALLY_FNS = {
    "control": _control_tallies,
    "completeness": _completeness_tallies,
    "gain-pr": _gain_pr_tallies,
    "gain-uniform": _gain_uniform_tallies,
    "counter-cheat": _counter_cheat_tallies,
}


def merge_tallies(parts) -> dict:
    """Merge per-range tallies; associative and commutative by construction."""
    merged: dict = {}
    for part in parts:
        for key, value in part.items():
            merged[key] = merged.get(key, 0) + value
    return merged


def _tally_worker(args):
    spec, start, stop = args
    return _TALLY_FNS[spec.scenario](spec, start, stop)


def collect_tallies(spec: ExperimentSpec, jobs: int = 1) -> dict:
    """Run a scenario's trials, optionally fanned out over processes."""
    if spec.scenario not in _TALLY_FNS:
        raise ValueError(f"unknown scenario {spec.scenario!r}")
    if jobs <= 1:
        return _TALLY_FNS[spec.scenario](spec, 0, spec.trials)
    bounds = np.linspace(0, spec.trials, jobs + 1, dtype=int)
    chunks = [(spec, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return merge_tallies(pool.map(_tally_worker, chunks))


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def estimate_gain(spec: ExperimentSpec, jobs: int = 1) -> Estimate:
    """P(guess = committed bit) for a named eavesdropping scenario.

    Scenarios: ``gain-deterministic`` and ``gain-device-dependent`` (the two
    attacks on the sequential protocol), ``gain-pr`` (read the token as the
    committer's outcome and invert the PR relation), and ``gain-uniform``
    (no attack, uniform guessing).
    """
    if spec.scenario == "gain-deterministic":
        return protocol.bob_gain_cheat_main("deterministic", spec.trials, spec.seed)
    if spec.scenario == "gain-device-dependent":
        return protocol.bob_gain_cheat_main("device_dependent", spec.trials, spec.seed)
    if spec.scenario in ("gain-pr", "gain-uniform"):
        tally = collect_tallies(spec, jobs)
        return Estimate.from_bernoulli(tally["success"], spec.trials)
    raise ValueError(f"unknown gain scenario {spec.scenario!r}")


def estimate_control(spec: ExperimentSpec, jobs: int = 1) -> Estimate:
    """Reveal success of the midpoint cheat, conditional on surviving selection.

    The revealed target is drawn uniformly per trial, so the mean estimates
    the average of the two per-target success rates.
    """
    if spec.scenario != "control":
        raise ValueError(f"expected the control scenario, got {spec.scenario!r}")
    tally = collect_tallies(spec, jobs)
    if tally["passed"] == 0:
        raise ValueError("no trial passed random selection; nothing to condition on")
    return Estimate.from_bernoulli(tally["success"], tally["passed"])


def honest_completeness(spec: ExperimentSpec, jobs: int = 1) -> tuple[Estimate, Estimate]:
    """(selection abort rate, conditional correctness) for honest executions.

    Correctness conditions on passing random selection and counts runs that
    end accepted with the bit Alice committed.
    """
    if spec.scenario != "completeness":
        raise ValueError(f"expected the completeness scenario, got {spec.scenario!r}")
    tally = collect_tallies(spec, jobs)
    abort_rate = Estimate.from_bernoulli(tally["selection_aborts"], spec.trials)
    survivors = spec.trials - tally["selection_aborts"]
    if survivors == 0:
        raise ValueError("every trial aborted in random selection")
    correctness = Estimate.from_bernoulli(tally["accepted_correct"], survivors)
    return abort_rate, correctness


def azuma_empirical(spec: ExperimentSpec) -> tuple[Estimate, float]:
    """Empirical tail P(observed violation - conditional mean >= epsilon) vs. bound.

    Only devices with an analytic per-round conditional expectation qualify;
    the honest Werner family is memoryless with expectation 2*sqrt(2)*v, so a
    k-round history's statistic depends on the indicator counts alone and each
    trial draws them binomially from its own derived generator.
    """
    if spec.scenario != "azuma":
        raise ValueError(f"expected the azuma scenario, got {spec.scenario!r}")
    params = spec.params
    kind = params.get("device", "honest")
    if kind != "honest":
        raise ValueError(f"no analytic conditional expectation for device kind {kind!r}")
    k = int(params["k"])
    epsilon = float(params["epsilon"])
    noise_v = float(params.get("noise_v", 1.0))
    if k < 1 or epsilon < 0.0:
        raise ValueError("need k >= 1 and epsilon >= 0")
    p_plus = 0.5 * (1.0 + noise_v / math.sqrt(2.0))
    expectation = 2.0 * math.sqrt(2.0) * noise_v
    hits = 0
    for i in range(spec.trials):
        plus_rounds = int(trial_rng(spec.seed, i).binomial(k, p_plus))
        delta = 4.0 * (2.0 * plus_rounds - k) / k - expectation
        hits += delta >= epsilon
    return Estimate.from_bernoulli(hits, spec.trials), azuma_tail(k, epsilon)


def counter_cheat_demo(n_rounds: int, trials: int, seed: int = 0, jobs: int = 1) -> Estimate:
    """Overall success of the use-counter attack: devices honest for N uses and
    deterministic on use N+1, against a committer who picks her bit after the
    token is out.  Succeeds with certainty whenever the verifier draws n = N,
    pricing the final-use loophole at 1/N."""
    if n_rounds <= 1:
        raise ValueError("N must exceed 1")
    spec = ExperimentSpec("counter-cheat", trials, seed, {"n_rounds": n_rounds})
    tally = collect_tallies(spec, jobs)
    return Estimate.from_bernoulli(tally["success"], trials)


# ---------------------------------------------------------------------------
# CLI-facing driver
# ---------------------------------------------------------------------------

def _estimate_fields(est: Estimate) -> dict:
    return {
        "mean": est.mean,
        "stderr": est.stderr,
        "trials": est.trials,
        "ci99": list(est.ci99),
    }


def run_scenario(spec: ExperimentSpec, jobs: int = 1) -> dict:
    """Execute a scenario and package the result with its analytic reference."""
    out = {"scenario": spec.scenario, "params": dict(spec.params), "seed": spec.seed}
    if spec.scenario.startswith("gain-"):
        est = estimate_gain(spec, jobs)
        out.update(_estimate_fields(est))
        out["analytic_reference"] = 0.5 if spec.scenario == "gain-uniform" else 0.75
    elif spec.scenario == "control":
        theta, variant, _, _ = _control_params(spec.params)
        tally = collect_tallies(spec, jobs)
        est = Estimate.from_bernoulli(tally["success"], tally["passed"])
        out.update(_estimate_fields(est))
        reference = math.cos(theta / 2.0) ** 2
        if variant == "free_reveal":
            reference = free_reveal_control(reference)
        out["analytic_reference"] = reference
        out["unconditional_mean"] = tally["success"] / spec.trials
        if 0 < tally["target0"] < tally["passed"]:
            out["p0"] = tally["success0"] / tally["target0"]
            out["p1"] = (tally["success"] - tally["success0"]) / (
                tally["passed"] - tally["target0"]
            )
    elif spec.scenario == "completeness":
        abort_rate, correctness = honest_completeness(spec, jobs)
        out.update(_estimate_fields(correctness))
        out["analytic_reference"] = (
            1.0 if float(spec.params.get("noise_v", 1.0)) == 1.0 else None
        )
        out["abort_rate"] = _estimate_fields(abort_rate)
    elif spec.scenario == "azuma":
        est, bound = azuma_empirical(spec)
        out.update(_estimate_fields(est))
        out["analytic_reference"] = bound
        out["bound"] = bound
    elif spec.scenario == "counter-cheat":
        est = counter_cheat_demo(
            int(spec.params["n_rounds"]), spec.trials, spec.seed, jobs
        )
        out.update(_estimate_fields(est))
        out["analytic_reference"] = 1.0 / int(spec.params["n_rounds"])
    else:
        raise ValueError(f"unknown scenario {spec.scenario!r}")
    return out
