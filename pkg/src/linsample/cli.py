"""Experiment runner: sampling, solving, query benchmarks, and two demos.

Every command is seeded and reproducible: the same arguments produce a
byte-identical report data section (timestamps live in the metadata
section only).  Reports are JSON, optionally flattened to CSV for
plotting.  Exit codes: 0 on success, 1 on usage or data errors, 2 when a
command's built-in assertion fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field, fields as dc_fields
from datetime import datetime, timezone

import numpy as np

from .algorithms import (
    beta_for_problem,
    evaluate_density,
    greedy_densest,
    sparsify_and_solve,
)
from .decompose import DecomposeConstants
from .exact import exact_average, exact_densest, exact_hypermatching, exact_maxcut
from .oracle import (
    EUCLIDEAN_FAMILIES,
    HiddenHubInstance,
    QueryBudgetExhausted,
    QueryLedger,
    RecordingInstance,
    ZeroInstance,
    make_euclidean_family,
    make_star,
    parse_instance_spec,
)
from .pairs import ensure_rng
from .sampler import (
    DegenerateInstanceError,
    SamplerConfig,
    build_h_alpha,
    build_h_beta,
    uniform_sample,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSERTION = 2


@dataclass
class ExperimentReport:
    """Machine-readable record of one experiment run."""

    experiment: str
    instance: str
    parameters: dict
    trials: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    guarantee_void: bool = False

    @staticmethod
    def summarize(trials: list[dict], value_key: str, success_key: str | None) -> dict:
        values = [t[value_key] for t in trials if t.get(value_key) is not None]
        agg = {
            "mean": float(np.mean(values)) if values else None,
            "stddev": float(np.std(values)) if values else None,
        }
        if success_key is None:
            agg["success_rate"] = None
        else:
            flags = [t[success_key] for t in trials if t.get(success_key) is not None]
            agg["success_rate"] = float(np.mean(flags)) if flags else None
        return agg

    def validate(self) -> None:
        requested = self.parameters.get("trials")
        if requested is not None and len(self.trials) != requested:
            raise ValueError(
                f"report holds {len(self.trials)} trials, {requested} were requested"
            )
        rate = self.aggregates.get("success_rate")
        if rate is not None and not (0.0 <= rate <= 1.0):
            raise ValueError(f"success_rate {rate} outside [0, 1]")
        value_key = self.parameters.get("value_key")
        success_key = self.parameters.get("success_key")
        if value_key:
            recomputed = self.summarize(self.trials, value_key, success_key)
            for key, expected in recomputed.items():
                if self.aggregates.get(key) != expected:
                    raise ValueError(
                        f"stored aggregate {key!r} does not match per-trial records"
                    )

    def data_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "instance": self.instance,
            "parameters": self.parameters,
            "trials": self.trials,
            "aggregates": self.aggregates,
            "guarantee_void": self.guarantee_void,
        }

    def write_json(self, path) -> None:
        payload = {
            "meta": {"created": datetime.now(timezone.utc).isoformat()},
            "data": self.data_dict(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        keys: list[str] = []
        for t in self.trials:
            for key in t:
                if key not in keys:
                    keys.append(key)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(self.trials)


def parse_constants(text: str | None) -> DecomposeConstants:
    """Parse ``key=value`` overrides like ``c_sample=4,threshold_frac=0.375``."""
    if not text:
        return DecomposeConstants()
    valid = {f.name for f in dc_fields(DecomposeConstants)}
    kwargs = {}
    for item in text.replace(" ", "").split(","):
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep or key not in valid:
            raise ValueError(f"bad constants override {item!r}; known keys: {sorted(valid)}")
        kwargs[key] = value.lower() in ("1", "true", "yes") if key == "force_sampling" else float(value)
    return DecomposeConstants(**kwargs)


def _warn_if_void(constants: DecomposeConstants) -> bool:
    if constants.is_default():
        return False
    print(
        "warning: decomposition constants deviate from defaults; "
        "stated success probabilities are void",
        file=sys.stderr,
    )
    return True


def cmd_sample(args) -> int:
    instance = parse_instance_spec(args.instance)
    constants = parse_constants(args.constants)
    void = _warn_if_void(constants)
    ledger = QueryLedger()
    rng = ensure_rng(args.seed)
    try:
        if args.alpha is not None:
            h = build_h_alpha(instance, args.alpha, constants, rng, ledger)
        elif args.beta is not None:
            config = SamplerConfig(
                beta=args.beta, gamma=args.gamma, constants=constants, seed=args.seed
            )
            h = build_h_beta(instance, config, rng, ledger)
        else:
            print("error: sample needs --beta or --alpha", file=sys.stderr)
            return EXIT_USAGE
    except DegenerateInstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    h.seed = args.seed
    h.write_csv(args.out)
    print(
        f"sampled {h.edge_count} edges, total weight {h.total_weight:.6g}, "
        f"alpha {h.alpha:.6g}, {h.queries_used} queries"
        + (" [guarantee void]" if void else "")
    )
    return EXIT_OK


def _exact_value(instance, problem: str, k: int | None):
    try:
        if problem == "avg" and instance.n <= 4096:
            return exact_average(instance)
        if problem == "densest" and instance.n <= 20:
            return exact_densest(instance).density
        if problem == "maxcut" and instance.n <= 22:
            return exact_maxcut(instance).value
        if problem == "hypermatching" and instance.n <= 12:
            return exact_hypermatching(instance, k).value
    except ValueError:
        return None
    return None


def cmd_solve(args) -> int:
    instance = parse_instance_spec(args.instance)
    constants = parse_constants(args.constants)
    void = _warn_if_void(constants)
    config = SamplerConfig(gamma=args.gamma, constants=constants, seed=args.seed)
    exact = _exact_value(instance, args.problem, args.k)
    trial_rngs = ensure_rng(args.seed).spawn(args.trials)

    trials = []
    for i, rng in enumerate(trial_rngs):
        ledger = QueryLedger()
        try:
            result = sparsify_and_solve(
                instance, args.problem, args.epsilon, config, rng, ledger, k=args.k
            )
        except DegenerateInstanceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if args.problem == "avg":
            value = result.solution
            success = None
            if exact is not None:
                err = abs(value - exact) if exact == 0 else abs(value - exact) / exact
                success = bool(err <= args.epsilon)
        else:
            value = result.value_in_g
            success = None
            if exact is not None:
                success = bool(value >= (0.5 - 2.0 * args.epsilon) * exact - 1e-9)
        trials.append(
            {
                "trial": i,
                "queries_algorithm": result.queries_algorithm,
                "queries_evaluation": result.queries_evaluation,
                "value_in_G": value if args.problem != "avg" else None,
                "value_in_H": result.value_in_h,
                "estimate": value if args.problem == "avg" else None,
                "value": value,
                "exact_value": exact,
                "success": success,
            }
        )
    report = ExperimentReport(
        experiment=f"solve:{args.problem}",
        instance=args.instance,
        parameters={
            "problem": args.problem,
            "epsilon": args.epsilon,
            "gamma": args.gamma,
            "k": args.k,
            "beta": beta_for_problem(args.problem, instance.n, args.epsilon, args.k),
            "seed": args.seed,
            "trials": args.trials,
            "constants": vars(constants).copy(),
            "value_key": "value",
            "success_key": "success",
        },
        trials=trials,
        guarantee_void=void,
    )
    report.aggregates = report.summarize(trials, "value", "success")
    report.validate()
    _write_outputs(report, args)
    rate = report.aggregates["success_rate"]
    print(
        f"{args.problem}: mean value {report.aggregates['mean']:.6g}"
        + (f", success rate {rate:.2f} vs exact {exact:.6g}" if rate is not None else "")
    )
    return EXIT_OK


def cmd_bench_queries(args) -> int:
    constants = parse_constants(args.constants)
    void = _warn_if_void(constants)
    sizes = [int(s) for s in args.sizes.split(",")]
    if sorted(sizes) != sizes or len(sizes) < 2:
        print("error: --sizes must be an increasing list of at least two sizes", file=sys.stderr)
        return EXIT_USAGE
    rows = []
    trials = []
    for n in sizes:
        instance = make_euclidean_family(args.family, n, seed=np.random.SeedSequence((args.seed, n)))
        if args.beta_rule == "nlogn":
            beta = n * math.log(n)
        else:
            beta = float(args.beta_rule)
        counts = []
        for rep, rng in enumerate(ensure_rng((args.seed, n, 1)).spawn(args.repeats)):
            ledger = QueryLedger()
            config = SamplerConfig(beta=beta, gamma=args.gamma, constants=constants, seed=args.seed)
            build_h_beta(instance, config, rng, ledger)
            counts.append(ledger.count)
            trials.append({"n": n, "rep": rep, "beta": beta, "queries": ledger.count})
        rows.append((n, float(np.mean(counts))))

    ratios = [rows[i + 1][1] / rows[i][1] for i in range(len(rows) - 1)]
    report = ExperimentReport(
        experiment="bench-queries",
        instance=f"{args.family}:{args.sizes}",
        parameters={
            "family": args.family,
            "sizes": sizes,
            "beta_rule": args.beta_rule,
            "repeats": args.repeats,
            "seed": args.seed,
            "constants": vars(constants).copy(),
            "trials": len(trials),
            "value_key": "queries",
            "success_key": None,
        },
        trials=trials,
        guarantee_void=void,
    )
    report.aggregates = report.summarize(trials, "queries", None)
    report.aggregates["per_size_mean"] = {str(n): q for n, q in rows}
    report.aggregates["doubling_ratios"] = ratios
    report.validate()
    _write_outputs(report, args)
    if args.out and args.out.endswith(".json"):
        csv_path = args.out[:-5] + ".sizes.csv"
    else:
        csv_path = (args.out or "bench") + ".sizes.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mean_queries"])
        writer.writerows(rows)
    for (n, q), ratio in zip(rows[1:], ratios):
        print(f"n={n}: mean queries {q:.0f} (ratio {ratio:.2f})")
    if any(q2 <= q1 for (_, q1), (_, q2) in zip(rows, rows[1:])):
        print("warning: query counts are not monotone across sizes", file=sys.stderr)
    if args.beta_rule == "nlogn" and any(r > 3.0 for r in ratios):
        print(
            f"assertion failed: doubling ratio {max(ratios):.2f} exceeds 3 "
            "(a quadratic scan doubles to 4)",
            file=sys.stderr,
        )
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_star_demo(args) -> int:
    """Uniform sampling misses the star's weight; linear sampling does not."""
    constants = parse_constants(args.constants)
    void = _warn_if_void(constants)
    star = make_star(args.n)
    optimum = args.n - 1.0  # full-graph density of the heavy star
    uniform_bound = (0.5 + 4.0 * args.p) * args.n + 0.5
    linear_bound = (0.5 - 2.0 * args.epsilon) * (args.n - 1.0)
    config = SamplerConfig(gamma=args.gamma, constants=constants, seed=args.seed)

    trials = []
    for i, rng in enumerate(ensure_rng(args.seed).spawn(args.trials)):
        u_rng, l_rng = rng.spawn(2)
        ledger = QueryLedger()
        sample = uniform_sample(star, args.p, u_rng, ledger)
        if sample.edge_count:
            eval_ledger = QueryLedger()
            picked = greedy_densest(sample)
            uniform_value = evaluate_density(star, picked.vertices, eval_ledger)
        else:
            uniform_value = 0.0
        result = sparsify_and_solve(star, "densest", args.epsilon, config, l_rng)
        trials.append(
            {
                "trial": i,
                "uniform_value_in_G": uniform_value,
                "uniform_ok": bool(uniform_value <= uniform_bound + 1e-9),
                "linear_value_in_G": result.value_in_g,
                "linear_ok": bool(result.value_in_g >= linear_bound - 1e-9),
                "queries_algorithm": result.queries_algorithm,
                "value": result.value_in_g - uniform_value,
                "success": bool(
                    uniform_value <= uniform_bound + 1e-9
                    and result.value_in_g >= linear_bound - 1e-9
                ),
            }
        )
    report = ExperimentReport(
        experiment="star-demo",
        instance=f"star:{args.n}",
        parameters={
            "n": args.n,
            "p": args.p,
            "epsilon": args.epsilon,
            "seed": args.seed,
            "trials": args.trials,
            "uniform_bound": uniform_bound,
            "linear_bound": linear_bound,
            "optimum": optimum,
            "constants": vars(constants).copy(),
            "value_key": "value",
            "success_key": "success",
        },
        trials=trials,
        guarantee_void=void,
    )
    report.aggregates = report.summarize(trials, "value", "success")
    report.validate()
    _write_outputs(report, args)

    uniform_rate = float(np.mean([t["uniform_ok"] for t in trials]))
    linear_rate = float(np.mean([t["linear_ok"] for t in trials]))
    mean_uniform = float(np.mean([t["uniform_value_in_G"] for t in trials]))
    mean_linear = float(np.mean([t["linear_value_in_G"] for t in trials]))
    print(
        f"uniform sampling: mean density {mean_uniform:.2f} "
        f"(bound {uniform_bound:.2f}, ok in {uniform_rate:.0%}); "
        f"linear sampling: mean density {mean_linear:.2f} "
        f"(bound {linear_bound:.2f}, ok in {linear_rate:.0%}); optimum {optimum:.0f}"
    )
    if uniform_rate < 0.9 or linear_rate < 0.9:
        print("assertion failed: separation did not hold in 90% of trials", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_hardness_demo(args) -> int:
    """Distinguishing game against the hidden-hub pair under a query budget."""
    n = args.n
    budget = max(0, int(math.floor(args.delta * n)) - 1)
    trials = []
    correct = 0
    for i, rng in enumerate(ensure_rng(args.seed).spawn(args.trials)):
        coin_rng, inst_rng, est_rng = rng.spawn(3)
        is_hub = bool(coin_rng.random() < 0.5)
        inst = HiddenHubInstance(n, inst_rng) if is_hub else ZeroInstance(n)
        recorder = RecordingInstance(inst)
        ledger = QueryLedger(limit=budget)
        config = SamplerConfig(beta=beta_for_problem("avg", n, 0.1), seed=args.seed)
        try:
            build_h_beta(recorder, config, est_rng, ledger)
        except (QueryBudgetExhausted, DegenerateInstanceError):
            pass
        guess_hub = recorder.max_seen > 0.0
        ok = guess_hub == is_hub
        correct += ok
        trials.append(
            {
                "trial": i,
                "truth_hub": is_hub,
                "guess_hub": guess_hub,
                "queries": ledger.count,
                "value": float(ok),
                "success": bool(ok),
            }
        )
    accuracy = correct / args.trials
    sigma = math.sqrt(0.25 / args.trials)
    bound = 0.5 + args.delta + 3.0 * sigma
    report = ExperimentReport(
        experiment="hardness-demo",
        instance=f"g1/g2:{n}",
        parameters={
            "n": n,
            "delta": args.delta,
            "budget": budget,
            "seed": args.seed,
            "trials": args.trials,
            "accuracy_bound": bound,
            "value_key": "value",
            "success_key": "success",
        },
        trials=trials,
    )
    report.aggregates = report.summarize(trials, "value", "success")
    report.validate()
    _write_outputs(report, args)
    print(
        f"distinguishing accuracy {accuracy:.3f} with budget {budget} "
        f"(bound {bound:.3f} = 0.5 + delta + 3 sigma)"
    )
    if accuracy > bound:
        print("assertion failed: estimator distinguished better than the bound", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def _write_outputs(report: ExperimentReport, args) -> None:
    if getattr(args, "out", None):
        report.write_json(args.out)
    if getattr(args, "csv", None):
        report.write_csv(args.csv)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linsample", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p, trials_default=100):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=trials_default)
        p.add_argument("--out", type=str, default=None, help="JSON report path")
        p.add_argument("--csv", type=str, default=None, help="optional CSV flattening")
        p.add_argument("--constants", type=str, default=None, help="e.g. c_sample=4")
        p.add_argument("--gamma", type=float, default=2.0)

    p = sub.add_parser("sample", help="write a sampled graph as CSV plus sidecar")
    p.add_argument("--instance", required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    add_common(p)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("solve", help="sparsify-and-solve experiment")
    p.add_argument("--instance", required=True)
    p.add_argument("--problem", required=True, choices=["avg", "densest", "maxcut", "hypermatching"])
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--k", type=int, default=None, help="group size for hypermatching")
    add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("bench-queries", help="query counts across instance sizes")
    p.add_argument("--family", default="sphere128", choices=list(EUCLIDEAN_FAMILIES))
    p.add_argument("--sizes", default="512,1024,2048")
    p.add_argument("--beta-rule", default="nlogn", help="'nlogn' or a fixed value")
    p.add_argument("--repeats", type=int, default=5)
    add_common(p)
    p.set_defaults(fn=cmd_bench_queries)

    p = sub.add_parser("star-demo", help="uniform vs linear sampling on the heavy star")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.1)
    add_common(p)
    p.set_defaults(fn=cmd_star_demo)

    p = sub.add_parser("hardness-demo", help="budgeted distinguishing game")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--delta", type=float, default=0.1)
    add_common(p, trials_default=1000)
    p.set_defaults(fn=cmd_hardness_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
