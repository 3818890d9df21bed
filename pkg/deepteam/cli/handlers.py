import argparse
from pathlib import Path
from typing import Callable

from loguru import logger
from pydantic import ValidationError

from deepteam.bounds.dao import BoundsDAO
from deepteam.bounds.estimator import estimate_lipschitz
from deepteam.bounds.recursions import epsilon_discounted, epsilon_finite, h_recursions
from deepteam.dao.session_maker import OutputSession, OutputSessionManager
from deepteam.dss.dao import write_solution
from deepteam.dss.schemas import DPSolution
from deepteam.dss.solver import solve_dss_finite, solve_dss_quantized, value_iteration_dss
from deepteam.exceptions import ModelValidationError
from deepteam.model.dao import ModelDAO
from deepteam.model.models import Horizon, TeamModel
from deepteam.model.utils import space_report, validate_model
from deepteam.pdss.dao import write_tree
from deepteam.pdss.schemas import GridMixedPolicy
from deepteam.pdss.solver import (solve_pdss_exact_small, solve_pdss_quantized_finite,
                                  value_iteration_pdss_quantized)
from deepteam.pdss.tracking import observed_subpops
from deepteam.scheduler.pool import run_ordered
from deepteam.service.figures import reproduce_figures
from deepteam.service.model import service_schema
from deepteam.service.schemas import ServiceParams
from deepteam.sim.dao import SummaryDAO, TrajectoryCostDAO, TrajectoryStateDAO
from deepteam.sim.evaluation import empirical_gap, evaluate_strategy
from deepteam.sim.rollout import simulate_rollout
from deepteam.sim.strategies import ConstantStrategy, MixedStrategy, Strategy, TableStrategy
from deepteam.statespace.laws import LawSpace

# флаги, которые не влияют на результат и не попадают в заголовок CSV
_VOLATILE = {"func", "workers", "out", "force", "cap"}


def _comment(args: argparse.Namespace) -> str:
    items = sorted((k, v) for k, v in vars(args).items() if k not in _VOLATILE and v is not None)
    return "deepteam " + " ".join(f"{k}={v}" for k, v in items)


def _refs(text: str | None) -> list[str] | None:
    if text is None:
        return None
    refs = [part.strip() for part in text.split(",") if part.strip()]
    if not refs:
        raise ModelValidationError("empty sub-population list")
    return refs


def _write(args: argparse.Namespace, writer: Callable[[OutputSession], list[Path]]) -> list[Path]:
    manager = OutputSessionManager(args.out, args.force)

    @manager.connection()
    def run(session: OutputSession) -> list[Path]:
        return writer(session)

    written = run()
    for path in written:
        print(f"wrote {path}")
    return written


def load_model(path: str, beta: float | None = None) -> TeamModel:
    """Загружает модель; --beta заменяет горизонт на дисконтированный."""
    model = ModelDAO.load(path)
    if beta is None:
        return model
    try:
        horizon = Horizon(beta=beta)
    except ValidationError:
        raise ModelValidationError(f"--beta must lie in (0, 1), got {beta}") from None
    logger.info(f"Горизонт заменён: beta={beta}")
    return model.model_copy(update={"horizon": horizon})


def _levels(args: argparse.Namespace, what: str) -> int:
    if args.levels is None:
        raise ModelValidationError(f"{what} needs --levels")
    if args.levels < 1:
        raise ModelValidationError(f"--levels must be >= 1, got {args.levels}")
    return args.levels


def _quantized(model: TeamModel, args: argparse.Namespace) -> frozenset[int]:
    refs = _refs(args.quantize_subpops)
    if refs is None:
        return frozenset(k for k, sp in enumerate(model.subpops) if not sp.major)
    return model.resolve(refs)


def _solve(model: TeamModel, kind: str, args: argparse.Namespace) -> DPSolution:
    discounted = model.horizon.discounted
    if kind == "dss":
        if discounted:
            return value_iteration_dss(model, tol=args.tol, cap=args.cap, workers=args.workers)
        return solve_dss_finite(model, cap=args.cap, workers=args.workers, route=getattr(args, "route", "kernel"))
    if kind == "dss-quantized":
        return solve_dss_quantized(model, _levels(args, kind), _quantized(model, args), cap=args.cap,
                                   workers=args.workers)
    observed = observed_subpops(model, _refs(args.observed))
    if discounted:
        return value_iteration_pdss_quantized(model, observed, _levels(args, kind), tol=args.tol, cap=args.cap,
                                              workers=args.workers)
    return solve_pdss_quantized_finite(model, observed, _levels(args, kind), cap=args.cap, workers=args.workers)


def _strategy(model: TeamModel, kind: str, gamma: int, args: argparse.Namespace,
              solved: dict[str, DPSolution]) -> Strategy:
    if kind == "constant":
        size = LawSpace(model, args.cap).size
        if not 0 <= gamma < size:
            raise ModelValidationError(f"profile index {gamma} is out of range 0..{size - 1}")
        return ConstantStrategy(gamma, name=f"constant_{gamma}")
    if kind not in solved:
        solved[kind] = _solve(model, kind, args)
    solution = solved[kind]
    if kind == "pdss-quantized":
        observed = frozenset(range(model.K)) - solution.quantized
        return MixedStrategy(model, GridMixedPolicy(solution, observed), name="pdss_quantized")
    return TableStrategy(solution)


def cmd_validate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    report = validate_model(model, args.probes, args.seed)
    print(f"valid={str(report.valid).lower()} probes={report.probes} violations={len(report.violations)}")
    for violation in report.violations:
        print(f"violation {violation}")
    for note in report.notes:
        print(f"note {note}")
    for name, value in space_report(model, args.levels).items():
        print(f"{name}={value}")
    if not report.valid:
        raise ModelValidationError(f"{len(report.violations)} violations; first: {report.violations[0]}")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    model = load_model(args.model, args.beta)
    comment = _comment(args)
    if args.solver == "pdss-exact":
        tree = solve_pdss_exact_small(model, observed_subpops(model, _refs(args.observed)), cap=args.cap,
                                      workers=args.workers, seed=args.seed)
        print(f"optimal_cost={tree.initial_value:.17g} nodes={len(tree.values)}")
        if not tree.initial_exact:
            print(f"sampled_roots={tree.samples} ci95_half_width={tree.initial_half_width:.17g}")
        _write(args, lambda session: [write_tree(session, tree, comment)])
        return 0
    if args.solver == "stationary":
        solution = value_iteration_dss(model, tol=args.tol, cap=args.cap, workers=args.workers)
    else:
        solution = _solve(model, args.solver, args)
    print(f"optimal_cost={solution.optimal_cost:.17g} states={solution.space.size} profiles={solution.laws.size}")
    if solution.iterations:
        print(f"iterations={solution.iterations} final_delta={solution.deltas[-1]:.17g}")
    _write(args, lambda session: write_solution(session, model, solution, comment))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = load_model(args.model, args.beta)
    strategy = _strategy(model, args.strategy, args.gamma, args, {})
    evaluation = evaluate_strategy(model, strategy, reps=args.reps, seed=args.seed, horizon=args.horizon,
                                   exact=False, cap=args.cap, workers=args.workers)
    laws = LawSpace(model, args.cap)
    trajectories = run_ordered(
        lambda j: simulate_rollout(model, strategy, evaluation.horizon, args.seed, j, laws=laws),
        list(range(args.reps)), args.workers)
    print(f"strategy={evaluation.strategy} J_mean={evaluation.mean:.17g} CI_half={evaluation.ci_half:.17g} "
          f"horizon={evaluation.horizon}")
    comment = _comment(args)
    _write(args, lambda session: [
        TrajectoryStateDAO.write_rows(session, TrajectoryStateDAO.rows_for(model, trajectories), comment=comment),
        TrajectoryCostDAO.write_rows(session, TrajectoryCostDAO.rows_for(trajectories), comment=comment),
        SummaryDAO.write_rows(session, SummaryDAO.rows_for([evaluation]), comment=comment),
    ])
    return 0


def cmd_gap(args: argparse.Namespace) -> int:
    model = load_model(args.model, args.beta)
    solved: dict[str, DPSolution] = {}
    a = _strategy(model, args.a_strategy, args.a_gamma, args, solved)
    b = _strategy(model, args.b_strategy, args.b_gamma, args, solved)
    options = dict(reps=args.reps, seed=args.seed, horizon=args.horizon, cap=args.cap, workers=args.workers)
    gap = empirical_gap(model, a, b, **options)
    evaluations = [evaluate_strategy(model, s, exact=gap.exact, **options) for s in (a, b)]
    rows = [(f"{label}_{e.strategy}", e.mean, e.ci_half, e.reps, e.seed) for label, e in zip("ab", evaluations)]
    rows.append(("gap", gap.gap, gap.ci_half, gap.reps, gap.seed))
    print(f"gap={gap.gap:.17g} CI_half={gap.ci_half:.17g} exact={str(gap.exact).lower()}")
    _write(args, lambda session: [SummaryDAO.write_rows(session, rows, comment=_comment(args))])
    return 0


def cmd_bounds(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    overrides = {name: value for name, value in (("H3", args.h3), ("H4", args.h4)) if value is not None}
    profile = estimate_lipschitz(model, r_probe=args.r_probe, pairs=args.pairs, seed=args.seed,
                                 overrides=overrides, workers=args.workers)
    n = args.n or min((sp.size for sp in model.subpops if not sp.major), default=1)
    rows = []
    if model.T is not None:
        profile = h_recursions(profile)
        for mode in ("poi", "poc", "both"):
            value = epsilon_finite(profile, n, args.levels, mode)
            rows.append(BoundsDAO.row("epsilon_finite", value, mode, n, profile, r=args.levels))
    beta = args.beta if args.beta is not None else model.beta
    if beta is not None:
        rows.append(BoundsDAO.row("epsilon_discounted", epsilon_discounted(profile, n, beta), "poi", n, profile,
                                  beta=beta))
    for name in ("H1", "H2", "H3", "H4"):
        rows.append(BoundsDAO.row(name, max(getattr(profile, name)), "constant", n, profile))
    for row in rows:
        print(f"{row.quantity} mode={row.mode} value={row.value:.17g}")
    _write(args, lambda session: [BoundsDAO.write_rows(session, rows, comment=_comment(args))])
    return 0


def _ns(text: str) -> list[int]:
    try:
        ns = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ModelValidationError(f"--ns must be comma-separated integers, got {text!r}") from None
    if not ns or min(ns) < 1:
        raise ModelValidationError(f"--ns needs positive user counts, got {text!r}")
    return ns


def cmd_example(args: argparse.Namespace) -> int:
    try:
        params = ServiceParams(n=args.n)
    except ValidationError as e:
        raise ModelValidationError(f"service parameters: {e.errors()[0]['msg']}") from None
    if args.emit_model:
        _write(args, lambda session: [ModelDAO.dump(session, args.emit_model, service_schema(params))])
        return 0
    ns = _ns(args.ns)
    _write(args, lambda session: reproduce_figures(session, params, ns, rule=args.levels, tol=args.tol,
                                                   reps=args.reps, seed=args.seed, cap=args.cap,
                                                   workers=args.workers))
    return 0
