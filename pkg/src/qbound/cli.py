"""Command-line front end.

Exit status: 0 on success, 1 when a check ran and failed (the report is still
written), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds, constants, lemma, montecarlo, report
from .constants import BIASED, UNBIASED, KappaResult
from .errors import NoResources, QBoundError
from .rng import substream
from .scenarios import ScenarioSpec, build_scenario
from .speed_limit import BETA_SQUARED, AlphaModel, alpha, beta, qsl_min_separation
from .states import fidelity, joint_fidelity, random_mixed_state, resources, tensor_power

FIDELITY_TOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qbound", description="Precision bounds for quantum parameter estimation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--output", "-o", help="write to FILE instead of stdout")
        return sp

    k = add("kappa", "optimize the prefactor kappa")
    k.add_argument("--mode", choices=(UNBIASED, BIASED), default=UNBIASED)
    k.add_argument("--alpha-table", metavar="FILE")
    k.add_argument("--curve", action="store_true", help="also tabulate the objective over lambda")
    k.add_argument("--lambda-max", type=float, default=50.0)
    k.add_argument("--lambda-step", type=float, default=0.01)

    b = add("bounds-plot", "bound curves against nu, as CSV")
    b.add_argument("--gap", type=float, required=True)
    b.add_argument("--delta-h", type=float, required=True)
    b.add_argument("--nu-max", type=_positive_int, required=True)
    km = b.add_mutually_exclusive_group()
    km.add_argument("--kappa-mode", choices=(UNBIASED, BIASED))
    km.add_argument("--kappa-value", type=float)
    b.add_argument("--alpha-table", metavar="FILE")
    b.add_argument("--qfi-convention", type=int, choices=(1, 4), default=1)

    q = add("qsl", "minimum parameter separation for a joint fidelity")
    q.add_argument("--fidelity", type=float, required=True)
    q.add_argument("--nu", type=_positive_int, required=True)
    q.add_argument("--gap", type=float, required=True)
    q.add_argument("--delta-h", type=float, required=True)
    q.add_argument("--alpha-table", metavar="FILE")

    s = add("simulate", "Monte Carlo RMSE of a scenario with a bound-compliance verdict")
    s.add_argument("--scenario", required=True, metavar="FILE")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--trials", type=_positive_int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--kappa-mode", choices=(UNBIASED, BIASED), default=UNBIASED)
    s.add_argument("--against", choices=("envelope", "ev", "cr"), default="ev")
    s.add_argument("--sigma-slack", type=float, default=3.0)
    s.add_argument("--qfi-convention", type=int, choices=(1, 4), default=1)
    s.add_argument("--workers", type=_positive_int, default=1)

    v = add("verify-lemma", "check the inequality chain on random instances, as CSV")
    v.add_argument("--trials", type=_positive_int, required=True)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--dim", type=int, choices=(2, 3, 4))
    v.add_argument("--lambda", dest="lam", type=float)
    v.add_argument("--outcomes", type=int, choices=range(2, 9), metavar="2..8")
    v.add_argument("--unbiased", action="store_true")

    f = add("verify-fidelity", "compare joint_fidelity with explicit tensor powers, as CSV")
    f.add_argument("--dim", type=int, required=True)
    f.add_argument("--nu", type=_positive_int, required=True)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--pairs", type=_positive_int, default=1000)
    return p


def _alpha_model(path) -> AlphaModel:
    return AlphaModel.from_csv(path) if path else BETA_SQUARED


def _cmd_kappa(args, argv):
    model = _alpha_model(args.alpha_table)
    res = constants.optimize_kappa(args.mode, model)
    ref = constants.exact_alpha_reference(args.mode)
    note = (f"exact-alpha reference {ref}: compare with this table" if args.alpha_table
            else f"exact-alpha reference {ref}: out of scope for alpha model {model.label}")
    header = report.header_line(argv, res.kappa, res.alpha_model_id)
    if args.curve:
        if args.lambda_step <= 0 or args.lambda_max <= 2:
            raise UsageError("--lambda-step must be positive and --lambda-max above 2")
        n = int(round((args.lambda_max - 2.0) / args.lambda_step))
        grid = 2.0 + args.lambda_step * np.arange(n + 1)
        curve = constants.kappa_curve(args.mode, model, grid)
        comments = [note, f"sup {report.fmt(res.kappa)} at lambda* = {report.fmt(res.lambda_star)}"]
        rows = [[lam, v, res.mode, res.alpha_model_id] for lam, v in curve]
        return report.csv_text(["lambda", "objective", "mode", "alpha_model"], rows, header, comments), 0
    text = report.csv_text(
        ["mode", "kappa", "lambda_star", "alpha_model"],
        [[res.mode, res.kappa, res.lambda_star, res.alpha_model_id]],
        header,
        [note],
    )
    return text, 0


def _bounds_kappa(args, model) -> KappaResult:
    if args.kappa_value is not None:
        if args.kappa_value <= 0:
            raise UsageError("--kappa-value must be positive")
        return KappaResult.fixed(args.kappa_value)
    return constants.optimize_kappa(args.kappa_mode or UNBIASED, model)


def _cmd_bounds_plot(args, argv):
    if args.gap < 0 or args.delta_h < 0:
        raise UsageError("--gap and --delta-h must be non-negative")
    if args.gap == 0 and args.delta_h == 0:
        raise NoResources("--gap and --delta-h are both zero")
    model = _alpha_model(args.alpha_table)
    kappa = _bounds_kappa(args, model)
    rows = []
    for nu in range(1, args.nu_max + 1):
        r = bounds.bound_report(nu, args.gap, args.delta_h, kappa, args.qfi_convention)
        dominant = "ev" if r.ev_bound > r.cr_bound else "cr"
        rows.append([nu, r.cr_bound, r.ev_bound, r.envelope, kappa.kappa, kappa.alpha_model_id,
                     args.gap, args.delta_h, dominant])
    # with Q = c (Delta H)^2 the crossover moves to c (kappa dH / gap)^2
    cross = args.qfi_convention * bounds.crossover_nu(args.gap, args.delta_h, kappa)
    text = report.csv_text(
        ["nu", "cr_bound", "ev_bound", "envelope", "kappa", "alpha_model", "gap", "delta_h", "dominant"],
        rows,
        report.header_line(argv, kappa.kappa, kappa.alpha_model_id),
        [f"crossover nu* = {report.fmt(cross)}"],
    )
    return text, 0


def _cmd_qsl(args, argv):
    model = _alpha_model(args.alpha_table)
    sep = qsl_min_separation(args.fidelity, args.nu, args.gap, args.delta_h, model)
    text = report.csv_text(
        ["fidelity", "nu", "gap", "delta_h", "alpha", "beta", "min_separation"],
        [[args.fidelity, args.nu, args.gap, args.delta_h, alpha(args.fidelity, model),
          beta(args.fidelity), sep]],
        report.header_line(argv, None, model.label),
    )
    return text, 0


def _cmd_simulate(args, argv):
    spec = ScenarioSpec.from_json(args.scenario)
    strategy = build_scenario(spec)
    res = resources(strategy.probe, strategy.gen)
    kappa = constants.optimize_kappa(args.kappa_mode)
    bound = bounds.bound_report(spec.nu, res.gap, res.delta_h, kappa, args.qfi_convention)
    config = montecarlo.TrialConfig(strategy, args.x, args.trials, args.seed)
    emp = montecarlo.simulate(config, workers=args.workers)
    verdict = montecarlo.compliance(emp, bound, args.sigma_slack, args.against)
    out = {
        "command": report.header_line(argv, kappa.kappa, kappa.alpha_model_id)[2:],
        "config": {
            "scenario": {"kind": spec.kind, "parameters": spec.parameters, "nu": spec.nu,
                         "estimator_kind": spec.estimator_kind},
            "x_true": args.x, "trials": args.trials, "seed": args.seed,
            "sigma_slack": args.sigma_slack, "against": args.against,
            "qfi_convention": args.qfi_convention,
        },
        "delta_x_hat": emp.delta_x_hat,
        "std_error": emp.std_error,
        "verdict": verdict.value,
        "bounds": {"ev_bound": bound.ev_bound, "cr_bound": bound.cr_bound,
                   "envelope": bound.envelope, "gap": res.gap, "delta_h": res.delta_h},
        "kappa": {"value": kappa.kappa, "lambda_star": kappa.lambda_star, "mode": kappa.mode,
                  "alpha_model": kappa.alpha_model_id},
    }
    return report.json_text(out), 1 if verdict == montecarlo.Verdict.VIOLATION else 0


def _cmd_verify_lemma(args, argv):
    if args.lam is not None and args.lam <= 1:
        raise UsageError("--lambda must exceed 1")
    dims = (args.dim, args.dim) if args.dim else (2, 4)
    outcomes = (args.outcomes, args.outcomes) if args.outcomes else (2, 8)
    lam_range = (args.lam, args.lam) if args.lam else (1.1, 10.0)
    batch = lemma.run_batch(args.trials, args.seed, dims, outcomes, lam_range, not args.unbiased)
    rows = []
    for inst, r in batch.reports:
        rows.append([args.seed, inst.index, inst.lam, inst.dim, inst.nu,
                     r.bhattacharyya, r.inlier_mass_x, r.outlier_mass_xp, r.classical_fidelity_bound,
                     4.0 / inst.lam**2, r.quantum_fidelity, min(r.margins.values()), r.all_steps_hold])
    comments = [f"accepted {len(batch.reports)} of {len(batch.reports) + len(batch.rejected)} "
                f"candidates; violations {batch.violations}"]
    if len(batch.reports) < args.trials:
        comments.append(f"only {len(batch.reports)} instances accepted within the attempt budget")
    text = report.csv_text(
        ["seed", "index", "lambda", "dim", "nu", "bhattacharyya", "inlier_mass_x", "outlier_mass_xp",
         "fidelity_bound", "four_over_lambda_sq", "quantum_fidelity", "min_margin", "all_steps_hold"],
        rows,
        report.header_line(argv),
        comments,
    )
    failed = batch.violations > 0 or len(batch.reports) < args.trials
    return text, 1 if failed else 0


def _cmd_verify_fidelity(args, argv):
    if args.dim < 1:
        raise UsageError("--dim must be positive")
    if args.dim**args.nu > 64:
        raise UsageError("dim**nu above 64 makes the explicit tensor check impractical")
    rows = []
    worst = 0.0
    for i in range(args.pairs):
        rng = substream(args.seed, "test", i)
        a, b = random_mixed_state(args.dim, rng), random_mixed_state(args.dim, rng)
        joint = joint_fidelity(a, b, args.nu)
        explicit = fidelity(tensor_power(a, args.nu), tensor_power(b, args.nu))
        err = abs(joint - explicit)
        worst = max(worst, err)
        rows.append([i, joint, explicit, err])
    ok = worst <= FIDELITY_TOL
    text = report.csv_text(
        ["pair", "joint_fidelity", "explicit_fidelity", "abs_error"],
        rows,
        report.header_line(argv),
        [f"max abs error {report.fmt(worst)} (tolerance {report.fmt(FIDELITY_TOL)}): "
         + ("pass" if ok else "FAIL")],
    )
    return text, 0 if ok else 1


_COMMANDS = {
    "kappa": _cmd_kappa,
    "bounds-plot": _cmd_bounds_plot,
    "qsl": _cmd_qsl,
    "simulate": _cmd_simulate,
    "verify-lemma": _cmd_verify_lemma,
    "verify-fidelity": _cmd_verify_fidelity,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        text, code = _COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (QBoundError, OSError) as exc:
        print(f"qbound: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
