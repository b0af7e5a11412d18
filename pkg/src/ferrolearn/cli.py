"""Batch front door: generate instances, run the learner, emit certified reports.

Subcommands
-----------
gen        draw a promise instance and write it to a JSON file
learn      run the two-stage learner, certify the result, write the learned
           description with a certificate CSV and figures
diagnose   exact-mode re-certification of a stored instance
hierarchy  probe hierarchy membership of the odd-angle witness or a circuit
budgets    tabulate per-entry shot budgets and their epsilon/delta scaling

Every run emits a self-contained JSON report embedding the config, seeds and
library version, so exact-mode numbers can be reproduced bit for bit.  Report
paths also render matplotlib figures next to the delimited output unless
--no-plots is given.

Exit codes: 0 all certificates pass, 2 a certificate failed its bound,
1 operational error (bad flags, missing file, infeasible parameters).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__, diagnostics, instances, learner, oracle
from .hierarchy import hierarchy_iterate, witness_outside_hierarchy


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for certificate
    # failure here, so route usage problems to the operational-error code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _stem(path: str) -> str:
    for ext in (".json", ".csv"):
        if path.endswith(ext):
            return path[: -len(ext)]
    return path


def _config_dict(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _load_spec(path: str) -> instances.CircuitSpec:
    with open(path) as fh:
        return instances.deserialize(fh.read())


def _rows_doc(rows) -> list[dict]:
    return [
        {"name": r.name, "measured": float(r.measured), "bound": float(r.bound),
         "passed": bool(r.passed)}
        for r in rows
    ]


def _print_rows(rows) -> None:
    width = max(len(r.name) for r in rows)
    print(f"{'certificate':<{width}}  {'measured':>12}  {'bound':>12}  status")
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {r.measured:>12.4e}  {r.bound:>12.4e}  {status}")


# -- figures -----------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _fig_spectrum(path: str, sigma: np.ndarray, cut: int) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    idx = np.arange(1, len(sigma) + 1)
    ax.plot(idx, sigma, "o", ms=4)
    ax.axhline(1.0, color="0.6", lw=0.8, ls="--")
    if 0 < cut < len(sigma):
        # everything right of the line is promised to sit on 1
        ax.axvline(cut + 0.5, color="tab:red", lw=0.8)
    ax.set_xlabel("singular value index (ascending)")
    ax.set_ylabel("singular value")
    ax.set_title("generator-correlation spectrum")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fig_certificates(path: str, rows) -> None:
    plt = _pyplot()
    names = [r.name for r in rows]
    floor = 1e-18
    measured = [max(abs(float(r.measured)), floor) for r in rows]
    bounds = [max(float(r.bound), floor) for r in rows]
    y = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(6.4, 0.5 * len(rows) + 1.4))
    ax.barh(y + 0.18, measured, height=0.34, label="measured")
    ax.barh(y - 0.18, bounds, height=0.34, color="0.7", label="bound")
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("value (log scale)")
    ax.invert_yaxis()
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fig_decay(path: str, levels, measured, predicted) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(levels, measured, "o", ms=5, label="weight-1 coefficient")
    ax.plot(levels, predicted, "x", ms=7, color="tab:red", label="|cos(2^j theta)|")
    ax.set_xlabel("hierarchy level j")
    ax.set_ylabel("magnitude")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fig_budget_scaling(path: str, n: int, m: int, delta: float) -> None:
    plt = _pyplot()
    eps = np.logspace(-2.0, -0.5, 25)
    curves = [
        ("generator, qubit", [oracle.budget_c_qubit(n, e, delta).per_state_copies for e in eps]),
        ("generator, fermionic", [oracle.budget_c_fermionic(n, e, delta).per_state_copies for e in eps]),
        ("pauli, qubit", [oracle.budget_f_qubit(m, e, delta).per_state_copies for e in eps]),
        ("pauli, fermionic", [oracle.budget_f_fermionic(m, e, delta).per_state_copies for e in eps]),
    ]
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for label, shots in curves:
        ax.loglog(eps, shots, label=label)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("copies per entry")
    ax.set_title(f"shot budgets at n={n}, m={m}, delta={delta}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# -- subcommands -------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    spec = instances.random_instance(args.n, args.t, args.kappa, args.path, args.seed)
    problems = instances.validate(spec)
    if problems:
        raise ValueError("generated instance failed validation: " + "; ".join(problems))
    with open(args.out, "w") as fh:
        fh.write(instances.serialize(spec))
    print(f"wrote {args.out}: n={spec.n} t={spec.t} kappa={spec.kappa} "
          f"path={spec.path} seed={args.seed} (M={spec.M}, m={spec.m})")
    return 0


def _spec_from_args(args: argparse.Namespace) -> instances.CircuitSpec:
    if args.infile is not None:
        return _load_spec(args.infile)
    if args.n is None or args.t is None or args.kappa is None:
        raise ValueError("need --in, or all of --n/--t/--kappa to generate an instance")
    return instances.random_instance(args.n, args.t, args.kappa, args.path, args.seed)


def cmd_learn(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    if args.trials < 1:
        raise ValueError("--trials must be at least 1")
    if args.trials > 1 and args.mode != "sampled":
        raise ValueError("--trials above 1 only makes sense with --mode sampled")

    trials = []
    for k in range(args.trials):
        # run_pipeline consumes seed and seed+1 for its two stages
        seed_k = args.seed + 2 * k if args.mode == "sampled" else None
        res = learner.run_pipeline(
            spec, mode=args.mode, epsilon=args.epsilon, delta=args.delta, seed=seed_k
        )
        rows = diagnostics.certify(res)
        trials.append((seed_k, res, rows))

    passes = sum(1 for _, _, rows in trials if all(r.passed for r in rows))
    if args.trials == 1:
        required = 1
    else:
        required = math.floor((1.0 - args.delta) * args.trials)
    ok = passes >= required

    _, res0, rows0 = trials[0]
    csv_path = args.csv or _stem(args.out) + "_certificates.csv"
    diagnostics.write_certificates_csv(csv_path, rows0)

    report = {
        "version": __version__,
        "command": "learn",
        "config": _config_dict(args),
        "instance": json.loads(instances.serialize(spec)),
        "budgets": None,
        "trials": [
            {"trial": k, "seed": seed_k, "passed": all(r.passed for r in rows),
             "certificates": _rows_doc(rows)}
            for k, (seed_k, _, rows) in enumerate(trials)
        ],
        "passes": passes,
        "required": required,
        "description": json.loads(learner.serialize_description(res0.description)),
    }
    if res0.budget_c is not None:
        report["budgets"] = {
            "generator": {"epsilon": res0.budget_c.epsilon, "delta": res0.budget_c.delta,
                          "per_state_copies": res0.budget_c.per_state_copies},
            "pauli": {"epsilon": res0.budget_f.epsilon, "delta": res0.budget_f.delta,
                      "per_state_copies": res0.budget_f.per_state_copies},
        }
    _write_json(args.out, report)

    if not args.no_plots:
        _fig_spectrum(_stem(args.out) + "_spectrum.png", res0.correctors.sigma, spec.M)
        _fig_certificates(_stem(csv_path) + ".png", rows0)

    _print_rows(rows0)
    if args.trials > 1:
        for k, (seed_k, _, rows) in enumerate(trials):
            worst = min(rows, key=lambda r: r.bound - abs(r.measured))
            verdict = "pass" if all(r.passed for r in rows) else f"FAIL ({worst.name})"
            print(f"trial {k:2d} seed={seed_k}: {verdict}")
        print(f"passed {passes}/{args.trials} trials (required {required})")
    print(f"wrote {args.out}")
    return 0 if ok else 2


def cmd_diagnose(args: argparse.Namespace) -> int:
    spec = _load_spec(args.infile)
    res = learner.run_pipeline(spec, mode="exact")
    rows = diagnostics.certify(res)

    csv_path = args.csv or _stem(args.out) + "_certificates.csv"
    diagnostics.write_certificates_csv(csv_path, rows)
    report = {
        "version": __version__,
        "command": "diagnose",
        "config": _config_dict(args),
        "instance": json.loads(instances.serialize(spec)),
        "certificates": _rows_doc(rows),
        "all_passed": all(r.passed for r in rows),
    }
    _write_json(args.out, report)
    if not args.no_plots:
        _fig_spectrum(_stem(args.out) + "_spectrum.png", res.correctors.sigma, spec.M)
        _fig_certificates(_stem(csv_path) + ".png", rows)

    _print_rows(rows)
    print(f"wrote {args.out}")
    return 0 if all(r.passed for r in rows) else 2


def _weight_one_magnitude(entry: dict) -> float:
    for label, (re, im) in entry["leading_coeffs"].items():
        if "*" not in label:
            return abs(complex(re, im))
    return 0.0


def cmd_hierarchy(args: argparse.Namespace) -> int:
    if args.infile is not None:
        spec = _load_spec(args.infile)
        trace = hierarchy_iterate(spec, mu=args.mu, k_max=args.k_max)
        levels = list(range(1, len(trace.weights) + 1))
        report = {
            "version": __version__,
            "command": "hierarchy",
            "config": _config_dict(args),
            "mode": "circuit",
            "instance": json.loads(instances.serialize(spec)),
            "levels": [
                {"level": j, "weight": w, "gaussian": g}
                for j, w, g in zip(levels, trace.weights, trace.gaussian)
            ],
            "gaussian_at_every_level": all(trace.gaussian),
        }
        _write_json(args.out, report)
        csv_path = args.csv or _stem(args.out) + "_levels.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "weight", "gaussian"])
            for j, w, g in zip(levels, trace.weights, trace.gaussian):
                writer.writerow([j, w, g])
        for j, w, g in zip(levels, trace.weights, trace.gaussian):
            print(f"level {j}: weight {w}, gaussian={g}")
        print(f"wrote {args.out}")
        return 0

    if args.p is None:
        raise ValueError("hierarchy needs --p (witness mode) or --in (circuit mode)")
    report = witness_outside_hierarchy(args.p, k_max=args.k_max, mu=args.mu)
    report["version"] = __version__
    report["command"] = "hierarchy"
    report["config"] = _config_dict(args)
    _write_json(args.out, report)

    levels = [e["level"] for e in report["iterates"]]
    measured = [_weight_one_magnitude(e) for e in report["iterates"]]
    predicted = [abs(math.cos(2.0**j * report["theta"])) for j in levels]
    csv_path = args.csv or _stem(args.out) + "_levels.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "weight", "gaussian", "weight1_coeff", "predicted"])
        for e, c, pr in zip(report["iterates"], measured, predicted):
            writer.writerow([e["level"], e["weight"], e["gaussian"], f"{c:.12e}", f"{pr:.12e}"])
    if not args.no_plots:
        _fig_decay(_stem(csv_path) + ".png", levels, measured, predicted)

    for e, c, pr in zip(report["iterates"], measured, predicted):
        print(f"level {e['level']}: weight {e['weight']}, gaussian={e['gaussian']}, "
              f"|weight-1 coeff|={c:.6f} (predicted {pr:.6f})")
    print(f"wrote {args.out}")
    return 0 if report["all_non_gaussian"] else 2


def cmd_budgets(args: argparse.Namespace) -> int:
    M = args.kappa * args.t
    if M % 2:
        raise ValueError(f"kappa*t = {M} must be even")
    if M > 2 * args.n:
        raise ValueError(f"kappa*t = {M} exceeds the 2n = {2 * args.n} generators")
    m = M // 2
    eps, delta = args.epsilon, args.delta
    builders = [
        ("generator", "qubit", lambda e, d: oracle.budget_c_qubit(args.n, e, d)),
        ("generator", "fermionic", lambda e, d: oracle.budget_c_fermionic(args.n, e, d)),
        ("pauli", "qubit", lambda e, d: oracle.budget_f_qubit(m, e, d)),
        ("pauli", "fermionic", lambda e, d: oracle.budget_f_fermionic(m, e, d)),
    ]
    rows = []
    for quantity, path, fn in builders:
        rows.append({
            "quantity": quantity,
            "path": path,
            "n": args.n,
            "m": m,
            "epsilon": eps,
            "delta": delta,
            "shots": fn(eps, delta).per_state_copies,
            "shots_eps_half": fn(eps / 2.0, delta).per_state_copies,
            "shots_delta_half": fn(eps, delta / 2.0).per_state_copies,
        })

    fields = ["quantity", "path", "n", "m", "epsilon", "delta",
              "shots", "shots_eps_half", "shots_delta_half"]
    with open(args.csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    if args.out is not None:
        _write_json(args.out, {
            "version": __version__,
            "command": "budgets",
            "config": _config_dict(args),
            "rows": rows,
        })
    if not args.no_plots:
        _fig_budget_scaling(_stem(args.csv) + ".png", args.n, m, delta)

    print(f"{'quantity':<10} {'path':<10} {'shots':>14} {'at eps/2':>14} {'at delta/2':>14}")
    for r in rows:
        print(f"{r['quantity']:<10} {r['path']:<10} {r['shots']:>14d} "
              f"{r['shots_eps_half']:>14d} {r['shots_delta_half']:>14d}")
    print(f"wrote {args.csv}")
    return 0


# -- parser ------------------------------------------------------------------


def _add_instance_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--n", type=int, required=required, help="number of fermionic modes")
    p.add_argument("--t", type=int, required=required, help="number of non-Gaussian gates")
    p.add_argument("--kappa", type=int, required=required,
                   help="even weight cap for non-Gaussian supports")
    p.add_argument("--path", choices=instances.PATHS, default="fermionic",
                   help="promise flavour (default: fermionic)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ferrolearn",
                     description="Learn unitaries with few non-Gaussian gates at desk scale.")
    parser.add_argument("--version", action="version", version=f"ferrolearn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="draw a promise instance and write it to JSON")
    _add_instance_flags(p, required=True)
    p.add_argument("--out", default="circuit.json", help="output path (default: circuit.json)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("learn", help="run the two-stage learner and certify the result")
    p.add_argument("--in", dest="infile", default=None, metavar="FILE",
                   help="circuit JSON to learn; omit to generate from --n/--t/--kappa")
    _add_instance_flags(p, required=False)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--epsilon", type=float, default=0.05, help="target accuracy (default: 0.05)")
    p.add_argument("--delta", type=float, default=0.1,
                   help="failure probability (default: 0.1)")
    p.add_argument("--trials", type=int, default=1,
                   help="sampled-mode repetitions with derived seeds (default: 1)")
    p.add_argument("--out", default="learned.json", help="report path (default: learned.json)")
    p.add_argument("--csv", default=None, help="certificate CSV (default: <out>_certificates.csv)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("diagnose", help="exact-mode re-certification of a stored instance")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE", help="circuit JSON")
    p.add_argument("--out", default="diagnose.json", help="report path (default: diagnose.json)")
    p.add_argument("--csv", default=None, help="certificate CSV (default: <out>_certificates.csv)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("hierarchy", help="probe hierarchy membership")
    p.add_argument("--p", type=int, default=None,
                   help="odd integer >= 3; witness angle is pi/p")
    p.add_argument("--k-max", type=int, default=8, help="levels to probe (default: 8)")
    p.add_argument("--mu", type=int, default=2, help="seed generator index (default: 2)")
    p.add_argument("--in", dest="infile", default=None, metavar="FILE",
                   help="probe this circuit instead of the witness")
    p.add_argument("--out", default="hierarchy.json", help="report path (default: hierarchy.json)")
    p.add_argument("--csv", default=None, help="per-level CSV (default: <out>_levels.csv)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("budgets", help="tabulate shot budgets for both paths")
    p.add_argument("--n", type=int, required=True, help="number of fermionic modes")
    p.add_argument("--t", type=int, required=True, help="number of non-Gaussian gates")
    p.add_argument("--kappa", type=int, required=True, help="non-Gaussian weight cap")
    p.add_argument("--epsilon", type=float, default=0.1, help="target accuracy (default: 0.1)")
    p.add_argument("--delta", type=float, default=0.05,
                   help="failure probability (default: 0.05)")
    p.add_argument("--csv", default="budgets.csv", help="table path (default: budgets.csv)")
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_budgets)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"ferrolearn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
