import argparse

from deepteam.cli import handlers

SOLVERS = ("dss", "dss-quantized", "pdss-exact", "pdss-quantized", "stationary")
STRATEGIES = ("dss", "dss-quantized", "pdss-quantized", "constant")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="output directory for CSV files")
    parser.add_argument("--force", action="store_true", help="overwrite existing output files")
    parser.add_argument("--cap", type=int, default=None,
                        help="enumeration cap for any space (default: DEEPTEAM_CAP or 50000000)")
    parser.add_argument("--workers", type=int, default=None, help="worker threads (default: DEEPTEAM_WORKERS or 1)")


def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--levels", type=int, default=None, help="quantization levels r")
    parser.add_argument("--observed", default=None,
                        help="comma-separated sub-populations whose deep states are shared (names or 1-based numbers)")
    parser.add_argument("--quantize-subpops", default=None,
                        help="comma-separated sub-populations quantized in dss-quantized (names or 1-based numbers)")
    parser.add_argument("--beta", type=float, default=None, help="override the discount factor of the model")
    parser.add_argument("--tol", type=float, default=1e-6, help="value-iteration tolerance on the final value")


def _strategy_flags(parser: argparse.ArgumentParser, prefix: str = "") -> None:
    name = f"--{prefix}strategy" if prefix else "--strategy"
    parser.add_argument(name, choices=STRATEGIES, default="dss", help="strategy to evaluate")
    parser.add_argument(f"--{prefix}gamma", type=int, default=0, help="profile index for the constant strategy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepteam", description="Deep structured team solver and simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--probes", type=int, default=None, help="random hypercube probes (default: DEEPTEAM_PROBE_COUNT)")
    p.add_argument("--seed", type=int, default=0, help="seed of the probe points")
    p.add_argument("--levels", type=int, default=None, help="also report the size of a grid with r levels")
    p.set_defaults(func=handlers.cmd_validate)

    p = sub.add_parser("solve", help="solve a model by dynamic programming")
    p.add_argument("solver", choices=SOLVERS, help="solver to run")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--route", choices=("kernel", "noise"), default="kernel",
                   help="successor law for dss: multinomial convolution or noise enumeration")
    p.add_argument("--seed", type=int, default=0,
                   help="seed of sampled initial states when pdss-exact has too many of them")
    _solver_flags(p)
    _common(p)
    p.set_defaults(func=handlers.cmd_solve)

    p = sub.add_parser("simulate", help="simulate a strategy on the finite-agent system")
    p.add_argument("model", help="model JSON file")
    _strategy_flags(p)
    _solver_flags(p)
    p.add_argument("--reps", type=int, default=100, help="replications")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--horizon", type=int, default=None, help="rollout length for discounted models")
    _common(p)
    p.set_defaults(func=handlers.cmd_simulate)

    p = sub.add_parser("gap", help="paired cost gap between two strategies")
    p.add_argument("model", help="model JSON file")
    _strategy_flags(p, "a-")
    _strategy_flags(p, "b-")
    _solver_flags(p)
    p.add_argument("--reps", type=int, default=100, help="replications")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--horizon", type=int, default=None, help="rollout length for discounted models")
    _common(p)
    p.set_defaults(func=handlers.cmd_gap)

    p = sub.add_parser("bounds", help="Lipschitz constants and error bounds")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--n", type=int, default=None, help="population size in the bound (default: smallest n_k > 1)")
    p.add_argument("--levels", type=int, default=None, help="quantization levels r (default: infinity)")
    p.add_argument("--beta", type=float, default=None, help="discount factor for the discounted bound")
    p.add_argument("--pairs", type=int, default=64, help="probe pairs per step")
    p.add_argument("--r-probe", type=int, default=2, help="grid resolution of the probe points")
    p.add_argument("--seed", type=int, default=0, help="seed of the probe points")
    p.add_argument("--h3", type=float, default=None, help="supplied H3 (overrides the estimate)")
    p.add_argument("--h4", type=float, default=None, help="supplied H4 (overrides the estimate)")
    _common(p)
    p.set_defaults(func=handlers.cmd_bounds)

    p = sub.add_parser("example", help="built-in examples")
    p.add_argument("name", choices=("service",), help="example to run")
    p.add_argument("--n", type=int, default=200, help="number of users")
    p.add_argument("--ns", default="10,20,50,100,200", help="comma-separated user counts for fig3")
    p.add_argument("--levels", default="n", help="quantization rule for fig3: n, sqrt or an integer")
    p.add_argument("--tol", type=float, default=1e-6, help="value-iteration tolerance")
    p.add_argument("--reps", type=int, default=200, help="replications per fig3 point")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--emit-model", default=None, help="only write the model JSON to this file name in --out")
    _common(p)
    p.set_defaults(func=handlers.cmd_example)
    return parser
