#!/usr/bin/env python3
# SaddleKit - Command Line

"""
saddlekit {matrix,solve,turnbased,sweep,safety,probe}

Exit codes: 0 success, 2 success with warnings (inconclusive or exploratory
results), 1 refutation or error, 64 usage error.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from src import __version__
from src.cli import game_file, writer
from src.core.continuous_game import (
    GrowthStatus, lopsided_report, player_two_view, probe_coercivity, solve, verify_saddle,
)
from src.core.domains import PlayerTag
from src.core.errors import (
    AssumptionRefuted, BudgetExhausted, DimensionMismatch, SaddleKitError,
    StructuralViolation, UsageError,
)
from src.core.matrix_game import MatrixGame, solve_fictitious_play, solve_lp
from src.core.measures import SafetyClass, classify_safety, strategy_from_json
from src.core.paramlab import PROFILES, classify_sequential_a_lsc, sweep, sweep_sequential
from src.core.settings import SettingsManager
from src.core.turnbased import check_pure_sufficiency, minimax
from src.utils.logger import ENV_LEVEL, configure_logging, get_logger

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_WARNINGS = 2
EXIT_USAGE = 64

logger = get_logger("cli")


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage problems as UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


class Context:
    """Settings, output target and provenance of one invocation."""

    def __init__(self, args, settings):
        self.args = args
        self.settings = settings
        self.command = args.command
        self.seed = args.seed
        self.jobs = max(1, args.jobs)

    def setting(self, key, override=None):
        return override if override is not None else self.settings.get_setting(key)

    def emit(self, document, summary, csv=None):
        """Machine output to --out (or stdout), summary to stdout (or stderr)."""
        if self.args.format == "csv":
            if csv is None:
                raise UsageError(f"--format csv is not available for {self.command}")
            text = writer.csv_text(*csv)
        else:
            text = writer.dumps(writer.with_provenance(document, self.command, self.seed)) + "\n"
        writer.write_text(text, self.args.out)
        stream = sys.stdout if self.args.out not in (None, "-") else sys.stderr
        print(summary, file=stream)


# ----------------------------------------------------------------------
# Commands


def _read_matrix(path):
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, "r") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"Cannot read matrix {path}: {e}") from None


def cmd_matrix(ctx):
    args = ctx.args
    try:
        game = MatrixGame.from_text(_read_matrix(args.file))
    except ValueError as e:
        raise DimensionMismatch(f"Unreadable matrix: {e}") from None

    if args.method == "fictitious":
        solution = solve_fictitious_play(game, int(ctx.setting("fictitious_iters", args.iters)))
    else:
        solution = solve_lp(game, float(ctx.setting("lp_tol")))

    rows = [
        [solution.value, solution.gap, side, i, p]
        for side, strategy in (("row", solution.row_strategy), ("col", solution.col_strategy))
        for i, p in enumerate(strategy)
    ]
    ctx.emit(
        solution,
        f"{game.shape[0]}x{game.shape[1]} game: value {solution.value:.10g}, gap {solution.gap:.3g} ({solution.method})",
        (["value", "gap", "side", "index", "probability"], rows),
    )
    return EXIT_OK


def _state(args, spec):
    return args.x if args.x is not None else spec.x


def cmd_solve(ctx):
    args = ctx.args
    spec = game_file.load(args.game)
    x = _state(args, spec)
    c, A, B = spec.game_at(x)
    tol = float(ctx.setting("tol", args.tol))
    budget = ctx.settings.refinement_budget()
    if args.max_refine is not None:
        budget = dataclasses.replace(budget, max_refine=args.max_refine)

    status = EXIT_OK
    try:
        cert = solve(c, A, B, tol=tol, budget=budget, x=x, lambda0=args.lambda0)
    except BudgetExhausted as e:
        if e.best is None:
            raise
        logger.warning(str(e))
        cert, status = e.best, EXIT_WARNINGS

    document = {"game": spec.source, "x": x, "certificate": cert}
    if status == EXIT_OK and not verify_saddle(c, cert, A, B, tol, budget.search, x):
        logger.warning("Denser verification search found a larger duality gap")
        document["verified"] = False
        status = EXIT_WARNINGS
    if args.lopsided:
        document["lopsided"] = lopsided_report(c, A, B, cert, tol, budget, x)

    rows = [[cert.value, cert.eps, "A", p, w] for p, w in cert.piA.atoms]
    rows += [[cert.value, cert.eps, "B", p, w] for p, w in cert.piB.atoms]
    ctx.emit(
        document,
        f"value {cert.value:.10g}, eps {cert.eps:.3g}, "
        f"{'converged' if cert.converged else 'not converged'} after {cert.iterations} iterations",
        (["value", "eps", "side", "point", "weight"], rows),
    )
    return status


def cmd_safety(ctx):
    args = ctx.args
    spec = game_file.load(args.game)
    x = _state(args, spec)
    c, A, B = spec.game_at(x)
    try:
        strategy = strategy_from_json(json.loads(args.strategy))
    except json.JSONDecodeError as e:
        raise UsageError(f"--strategy is not JSON: {e}") from None
    side = PlayerTag.parse(args.side)
    own, opponent = (A, B) if side is PlayerTag.A else (B, A)

    report = classify_safety(
        c, strategy, side, opponent,
        probes=int(ctx.setting("probe_budget", args.probes)),
        x=x, own_domain=own, budget=ctx.settings.search_budget(),
        tol=float(ctx.setting("series_tol")), max_terms=int(ctx.setting("series_max_terms")),
    )
    ctx.emit(
        {"game": spec.source, "side": side.value, "strategy": strategy, "report": report},
        f"{side.value} strategy {strategy}: {report.status.value} ({report.reason})",
    )
    return EXIT_WARNINGS if report.status is SafetyClass.INCONCLUSIVE else EXIT_OK


def cmd_probe(ctx):
    args = ctx.args
    spec = game_file.load(args.game)
    x = _state(args, spec)
    c, A, B = spec.game_at(x)
    side = PlayerTag.parse(args.side)
    if side is PlayerTag.B:
        c, A, B = player_two_view(c), B, A

    cert = probe_coercivity(c, A, B, x=x, max_doublings=int(ctx.setting("max_doublings")))
    statuses = [report.status for report in cert.ends.values()]
    ctx.emit(
        {"game": spec.source, "side": side.value, "coercivity": cert},
        f"{side.value} side over {A}: " + (", ".join(f"{e} {r.status.value}" for e, r in sorted(cert.ends.items())) or "compact"),
    )
    if cert.confirmed:
        return EXIT_OK
    if GrowthStatus.REFUTED in statuses:
        return EXIT_REFUTED
    return EXIT_WARNINGS


def _states(args, spec):
    if args.x is not None and args.x_grid is not None:
        raise UsageError("--x and --x-grid are exclusive")
    if args.x_grid is not None:
        return game_file.parse_grid(args.x_grid)
    if args.x is not None:
        return np.array([args.x])
    if spec.x_grid is not None:
        return spec.x_grid
    return np.array([spec.x if spec.x is not None else 0.0])


def cmd_turnbased(ctx):
    args = ctx.args
    spec = game_file.load(args.game)
    game = spec.sequential_game()
    budget = ctx.settings.search_budget()
    tie_tol = float(ctx.setting("tie_tol"))

    def one(x):
        x = float(x)
        try:
            record = minimax(game, x, budget, tie_tol)
        except BudgetExhausted as e:
            logger.warning(str(e))
            return {"x": x, "v_sharp": None, "error": str(e)}, None
        document = record.to_json()
        pure = None
        if args.check_pure and record.v_sharp.is_finite:
            pure = check_pure_sufficiency(game, x, args.samples, ctx.seed, budget)
            document["pure_sufficiency"] = pure.to_json()
        return document, pure

    results = [one(x) for x in _states(args, spec)]
    documents = [d for d, _ in results]

    status = EXIT_OK
    if any("error" in d for d in documents):
        status = EXIT_WARNINGS
    if any(p is not None and not p.passed for _, p in results):
        status = EXIT_REFUTED

    summary = f"{len(documents)} states, v# range " + _range(
        [d["v_sharp"] for d in documents if d.get("v_sharp")]
    )
    if args.format == "csv":
        rows = [
            [d["x"], _scalar(d.get("v_sharp")), ";".join(f"{a:.17g}" for a in d.get("argmin_a_set", [])),
             ";".join(f"{b:.17g}" for b in d.get("argmax_b_for_best_a", []))]
            for d in documents
        ]
        ctx.emit(None, summary, (["x", "v_sharp", "argmin_a", "argmax_b"], rows))
    else:
        lines = documents + [{"provenance": writer.provenance(ctx.command, ctx.seed)}]
        writer.write_text(writer.json_lines(lines), args.out)
        print(summary, file=sys.stdout if args.out not in (None, "-") else sys.stderr)
    return status


def _scalar(extended):
    if extended is None:
        return None
    value = extended.get("value")
    return value if value is not None else extended.get("kind")


def _range(extended_values):
    values = [_scalar(v) for v in extended_values]
    values = [v for v in values if isinstance(v, float)]
    if not values:
        return "empty"
    return f"[{min(values):.6g}, {max(values):.6g}]"


def _a_lsc(game, x):
    try:
        return classify_sequential_a_lsc(game, x).to_json()
    except SaddleKitError as e:
        return {"x0": x, "status": "error", "reason": str(e), "witness": None}


def cmd_sweep(ctx):
    args = ctx.args
    spec = game_file.load(args.game)
    tol = float(ctx.setting("tol", args.tol))
    diagnostics = ctx.settings.diagnostics_budget()

    if spec.shape == "sequential":
        xs = _states(args, spec)
        report = sweep_sequential(
            spec.sequential, xs, tol, ctx.settings.search_budget(), diagnostics,
            float(ctx.setting("tie_tol")), ctx.jobs,
        )
        document = report.to_json()
        document["a_lsc"] = [_a_lsc(spec.sequential, float(x)) for x in xs]
        if any(entry["status"] in ("refuted", "error") for entry in document["a_lsc"]):
            report.exploratory = True
            document["exploratory"] = True
    elif spec.shape == "family":
        family = spec.family
        if args.x_grid is not None:
            family = dataclasses.replace(family, x_grid=game_file.parse_grid(args.x_grid))
        profile = args.profile or spec.profile or "lsc"
        if profile not in PROFILES:
            raise UsageError(f"Unknown profile {profile!r}; choose from {', '.join(PROFILES)}")
        report = sweep(
            family, tol, profile, ctx.settings.refinement_budget(), diagnostics,
            args.exploratory, int(ctx.setting("probe_budget")), ctx.jobs,
        )
        document = report.to_json()
    else:
        raise UsageError("sweep needs a [family] or [sequential] game file")

    if args.csv:
        writer.write_text(writer.csv_text(["x", "v", "eps", "gapA", "gapB", "flags"], report.csv_rows()), args.csv)

    summary = (
        f"{report.profile} sweep over {len(report.records)} states: lsc {report.lsc_verdict}, "
        f"continuity {report.continuity_verdict}"
        + (" (exploratory)" if report.exploratory else "")
    )
    ctx.emit(document, summary, (["x", "v", "eps", "gapA", "gapB", "flags"], report.csv_rows()))

    if report.exploratory:
        return EXIT_WARNINGS
    refuted = bool(report.lsc_violations)
    if report.profile == "continuity":
        refuted = refuted or bool(report.continuity_failures or report.multifunction_usc_violations)
    if refuted:
        return EXIT_REFUTED
    if report.errors:
        return EXIT_WARNINGS
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser


def build_parser():
    common = _ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed, recorded in the output")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--config", help="JSON settings file")
    common.add_argument("--out", help="machine output file (default: standard output)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--log-level", choices=("error", "warn", "info", "debug"))

    parser = _ArgumentParser(prog="saddlekit", description="Values and saddle points of zero-sum games.")
    parser.add_argument("--version", action="version", version=f"saddlekit {__version__}")
    commands = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    commands.required = True

    p = commands.add_parser("matrix", parents=[common], help="solve a finite matrix game")
    p.add_argument("file", help="matrix file, or - for standard input")
    p.add_argument("--method", choices=("lp", "fictitious"), default="lp")
    p.add_argument("--iters", type=int, help="fictitious play iterations")
    p.set_defaults(handler=cmd_matrix)

    p = commands.add_parser("solve", parents=[common], help="epsilon-saddle certificate of a game")
    p.add_argument("game")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-refine", type=int)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--x", type=float, help="state of a family")
    p.add_argument("--lopsided", action="store_true", help="add the lopsided value report")
    p.set_defaults(handler=cmd_solve)

    p = commands.add_parser("safety", parents=[common], help="classify a mixed strategy as safe or unsafe")
    p.add_argument("game")
    p.add_argument("--strategy", required=True, help='JSON, e.g. {"kind":"geometric","ratio":"1/12"}')
    p.add_argument("--side", required=True, choices=("A", "B"))
    p.add_argument("--probes", type=int)
    p.add_argument("--x", type=float)
    p.set_defaults(handler=cmd_safety)

    p = commands.add_parser("probe", parents=[common], help="probe coercivity of one side")
    p.add_argument("game")
    p.add_argument("--side", choices=("A", "B"), default="A")
    p.add_argument("--x", type=float)
    p.set_defaults(handler=cmd_probe)

    p = commands.add_parser("turnbased", parents=[common], help="minimax of the turn-based game")
    p.add_argument("game")
    p.add_argument("--x", type=float)
    p.add_argument("--x-grid", help="lo:hi:n")
    p.add_argument("--check-pure", action="store_true", help="sample mixed strategies against the pure optimum")
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(handler=cmd_turnbased)

    p = commands.add_parser("sweep", parents=[common], help="value of a family over a state grid")
    p.add_argument("game")
    p.add_argument("--profile", choices=tuple(PROFILES))
    p.add_argument("--x-grid", help="lo:hi:n")
    p.add_argument("--x", type=float, help=argparse.SUPPRESS)
    p.add_argument("--tol", type=float)
    p.add_argument("--csv", help="values table")
    p.add_argument("--exploratory", action="store_true", help="run although profile assumptions are unmet")
    p.set_defaults(handler=cmd_sweep)

    return parser


def _settings(args):
    if args.config and not os.path.exists(args.config):
        raise UsageError(f"No settings file at {args.config}")
    settings = SettingsManager(args.config)
    settings.load_settings()
    return settings


def run(argv=None):
    """Run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _settings(args)
        configure_logging(
            args.log_level or os.environ.get(ENV_LEVEL) or settings.get_setting("log_level"),
            bool(settings.get_setting("log_to_file")),
        )
        return args.handler(Context(args, settings))

    except UsageError as e:
        print(str(e).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (StructuralViolation, AssumptionRefuted) as e:
        logger.error(str(e))
        if e.report is not None:
            print(writer.dumps(e.report), file=sys.stderr)
        return EXIT_REFUTED
    except (SaddleKitError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_REFUTED
