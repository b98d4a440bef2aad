"""Command-line front end.

One subcommand per reproducible artifact:

* ``curve``      - the asymptotic control curve as a (I, control) table.
* ``bound``      - the finite-round control bound over a list of N values.
* ``simulate``   - one protocol run, emitted as a transcript JSON.
* ``montecarlo`` - a named estimation scenario with confidence intervals.
* ``azuma``      - empirical tail of the violation martingale vs. the bound.
* ``polytope``   - the two no-signaling vertex maximizations.

Tables go to ``--out`` (or stdout) as CSV or JSON; everything else is JSON.
All commands are deterministic under ``--seed``.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, devices, montecarlo, protocol


def _parse_n_list(text: str) -> list[int]:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        values.append(int(float(part)))
    if not values:
        raise ValueError("empty N list")
    return values


def _open_out(path):
    return open(path, "w") if path else sys.stdout


def _emit_json(payload, path) -> None:
    stream = _open_out(path)
    try:
        json.dump(payload, stream, indent=2)
        stream.write("\n")
    finally:
        if stream is not sys.stdout:
            stream.close()


def cmd_curve(args) -> int:
    curve = analysis.control_curve(args.points)
    if args.format == "csv":
        stream = _open_out(args.out)
        try:
            analysis.write_curve_csv(curve, stream)
        finally:
            if stream is not sys.stdout:
                stream.close()
    else:
        _emit_json(
            {
                "table": [
                    {"I": float(i), "control": float(c)}
                    for i, c in zip(curve.i_values, curve.control_values)
                ]
            },
            args.out,
        )
    return 0


def cmd_bound(args) -> int:
    rows = []
    for n in _parse_n_list(args.N):
        i_th = args.ith if args.ith is not None else analysis.threshold_schedule(n, args.ith_schedule)
        bound, eps_star = analysis.pcont_bound_detail(analysis.BoundInputs(n, i_th))
        if not (0.0 <= bound <= 1.0 and eps_star >= 0.0):
            raise ValueError(f"bound row failed validation: {(n, i_th, bound, eps_star)}")
        rows.append((n, i_th, bound, eps_star))
    if args.format == "csv":
        stream = _open_out(args.out)
        try:
            analysis.write_bound_csv(rows, stream)
        finally:
            if stream is not sys.stdout:
                stream.close()
    else:
        _emit_json(
            {
                "table": [
                    {"N": n, "I_th": i, "bound": b, "epsilon_star": e}
                    for n, i, b, e in rows
                ]
            },
            args.out,
        )
    return 0


def _build_simulation(args):
    device_rng = np.random.default_rng((args.seed, 1))
    if args.variant == "pr":
        if args.alice == "cheat":
            pair = devices.classical_pair((0, 0), (0, 0))
            alice = protocol.PrCheatAlice()
        else:
            pair = devices.pr_pair(device_rng)
            alice = protocol.HonestPrAlice(args.bit)
        return lambda: protocol.run_pr(pair, alice, rng_seed=args.seed)

    config = protocol.ProtocolConfig(args.N, args.ith, args.variant, args.seed)
    if args.alice == "cheat":
        factory = lambda: devices.alice_cheat_pair(args.theta, device_rng)
        alice = protocol.MidpointCheatAlice()
    else:
        factory = lambda: devices.honest_pair(args.noise, device_rng)
        alice = protocol.HonestAlice(args.bit)
    if args.variant == "main":
        return lambda: protocol.run_main(config, factory(), alice)
    if args.variant == "free_reveal":
        return lambda: protocol.run_free_reveal(config, factory(), alice)
    if args.variant == "large_office":
        pairs = [factory() for _ in range(args.N + 1)]
        return lambda: protocol.run_large_office(config, pairs, alice)
    raise ValueError(f"unknown variant {args.variant!r}")


def cmd_simulate(args) -> int:
    transcript = _build_simulation(args)()
    text = transcript.to_json(indent=2)
    if protocol.transcript_from_json(text) != transcript:
        raise ValueError("transcript did not survive a serialization round trip")
    stream = _open_out(args.out)
    try:
        stream.write(text + "\n")
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0


def cmd_montecarlo(args) -> int:
    params = {}
    if args.theta is not None:
        params["theta"] = args.theta
    if args.variant is not None:
        params["variant"] = args.variant
    if args.noise is not None:
        params["noise_v"] = args.noise
    if args.N is not None:
        params["n_rounds"] = args.N
    if args.ith is not None:
        params["i_threshold"] = args.ith
    spec = montecarlo.ExperimentSpec(args.scenario, args.trials, args.seed, params)
    result = montecarlo.run_scenario(spec, jobs=args.jobs)
    if not 0.0 <= result["mean"] <= 1.0:
        raise ValueError("estimate failed validation")
    _emit_json(result, args.out)
    return 0


def cmd_azuma(args) -> int:
    spec = montecarlo.ExperimentSpec(
        "azuma",
        args.trials,
        args.seed,
        {"k": args.k, "epsilon": args.epsilon, "noise_v": args.noise},
    )
    result = montecarlo.run_scenario(spec)
    _emit_json(result, args.out)
    return 0


def cmd_polytope(args) -> int:
    gain_max, gain_box = analysis.max_gain_objective()
    pr_max, pr_box = analysis.max_pr_control_objective()
    payload = {
        "gain_max": gain_max,
        "pr_control_max": pr_max,
        "vertices": len(analysis.ns_vertices()),
        "gain_argmax": gain_box.label,
        "pr_control_argmax": pr_box.label,
    }
    _emit_json(payload, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dibc",
        description="Simulate and analyze CHSH-tested device-independent bit commitment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("curve", help="asymptotic control curve table")
    p.add_argument("--points", type=int, default=200)
    common(p, fmt=True)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("bound", help="finite-round control bound table")
    p.add_argument("--N", required=True, help="comma-separated list, e.g. 1e3,1e4,1e5")
    p.add_argument("--ith", type=float, default=None, help="fixed threshold (overrides schedule)")
    p.add_argument("--ith-schedule", choices=("caption", "body"), default="caption",
                   dest="ith_schedule")
    common(p, fmt=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="run one protocol execution")
    p.add_argument("--variant", choices=protocol.VARIANTS, default="main")
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--ith", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--alice", choices=("honest", "cheat"), default="honest")
    p.add_argument("--theta", type=float, default=math.pi / 4.0)
    p.add_argument("--bit", type=int, choices=(0, 1), default=0)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="run an estimation scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--variant", choices=protocol.VARIANTS, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--ith", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("azuma", help="empirical martingale tail vs. analytic bound")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100000)
    common(p)
    p.set_defaults(func=cmd_azuma)

    p = sub.add_parser("polytope", help="no-signaling vertex maximizations")
    common(p)
    p.set_defaults(func=cmd_polytope)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
