"""Command-line front end.

    python -m phase_transfer all --config configs/smoke.ini
    python -m phase_transfer classify --method qnn --output-dir output
    python -m phase_transfer circuit-demo --input 0010
"""

import argparse
import logging
import sys

from . import __version__
from .config import config_hash, load_config, parse_kappas
from .errors import PipelineError, UsageError
from .pipeline import (
    run_pipeline,
    run_stage,
    stage_boundary,
    stage_classify,
    stage_encode,
    stage_gen,
    stage_rank,
    stage_report,
)
from .qnn import (
    RegisterLayout,
    analytic_probabilities,
    build_training_superposition,
    circuit_operations,
    extract_probabilities,
    format_state,
    run_circuit,
    sample_probabilities,
    worked_instance,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CLI_METHODS = ("qnn", "knn-pre", "knn-raw")


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage problems as UsageError instead of exiting with 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def setup_logging(verbose=False, quiet=False):
    """Configure root logging from the verbosity flags"""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def _common_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="INI config file; flags override its values")
    parent.add_argument("--output-dir", help="Directory for every artifact")
    parent.add_argument("--n-sites", type=int, help="Chain length N (even, 4..16)")
    parent.add_argument("--g-count", type=int, help="Grid points per kappa line")
    parent.add_argument("--g-max", type=float, help="Largest transverse field on the grid")
    parent.add_argument("--test-kappas", type=parse_kappas, help="Comma-separated test kappa values")
    parent.add_argument("--trees", type=int, dest="n_trees", help="Extra-trees ensemble size")
    parent.add_argument("--seed", type=int, dest="forest_seed", help="Extra-trees random seed")
    parent.add_argument("--top-k", type=int, help="Number of selected features")
    parent.add_argument("--knn-k", help="KNN neighbors, or 'auto' for a cross-validated choice")
    parent.add_argument("--threads", type=int, help="Worker cap (does not change outputs)")
    parent.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    return parent


def build_parser():
    """Top-level parser with one subcommand per stage"""
    parser = ArgumentParser(
        prog="phase_transfer",
        description="Detect ANNNI phase transitions by transfer learning with a quantum nearest-neighbor classifier",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    sub.required = True

    sub.add_parser("gen", parents=[common], help="Solve ground states and write the correlation datasets")
    sub.add_parser("rank", parents=[common], help="Rank features with extra trees")
    sub.add_parser("encode", parents=[common], help="Fit k-means bins and write the binarized datasets")
    classify = sub.add_parser("classify", parents=[common], help="Predict class probabilities on every kappa")
    classify.add_argument("--method", choices=CLI_METHODS, required=True)
    sub.add_parser("boundary", parents=[common], help="Locate probability crossings")
    sub.add_parser("report", parents=[common], help="Write the score table and the phase-diagram table")
    sub.add_parser("all", parents=[common], help="Run every stage in order")

    demo = sub.add_parser("circuit-demo", parents=[common], help="Walk through the 10-qubit worked instance")
    demo.add_argument("--input", default="0010", help="4-bit input string")
    demo.add_argument("--shots", type=int, default=0, help="Also estimate by sampling this many shots")
    return parser


def config_from_args(args):
    """Merge the config file with command-line overrides"""
    progress = not args.no_progress and sys.stderr.isatty()
    return load_config(
        args.config,
        output_dir=args.output_dir,
        n_sites=args.n_sites,
        g_count=args.g_count,
        g_max=args.g_max,
        test_kappas=args.test_kappas,
        n_trees=args.n_trees,
        forest_seed=args.forest_seed,
        top_k=args.top_k,
        knn_k=args.knn_k,
        threads=args.threads,
        progress=progress,
    )


def circuit_demo(input_bits="0010", shots=0, seed=None):
    """Print the register layout, gates, intermediate states and readout of the worked instance."""
    sample, training = worked_instance(input_bits)
    layout = RegisterLayout(len(sample.bits))
    print(f"Training set: {', '.join(f'{t.key}/{t.label}' for t in training)}   input: {sample.key}")
    print(f"Registers: input {list(layout.input)}, training {list(layout.training)}, "
          f"class {layout.class_qubit}, ancilla {layout.ancilla} ({layout.total} qubits)")
    ops = circuit_operations(layout)
    print(f"Gates after state preparation ({len(ops)}): " + " ".join(f"{g.name}{list(g.qubits)}" for g in ops))

    n = layout.n_bits
    checkpoints = {0: "prepared", 1: "H(ancilla)", 1 + n: "CNOTs", 1 + 2 * n: "phases", 2 + 2 * n: "final H"}

    def show(step, gate, state):
        if step in checkpoints:
            print(f"\n-- after {checkpoints[step]} (norm {state.norm():.12f})")
            for line in format_state(state, layout):
                print("   " + line)

    psi4 = run_circuit(sample, build_training_superposition(training), on_step=show)
    exact = extract_probabilities(psi4, layout)
    oracle = analytic_probabilities(sample, training)
    print(f"\nP(ancilla=0) = {exact.p_postselect:.6f}")
    print(f"circuit : p0={exact.p0:.6f} p1={exact.p1:.6f}")
    print(f"formula : p0={oracle.p0:.6f} p1={oracle.p1:.6f}")
    if shots:
        sampled = sample_probabilities(psi4, layout, shots=shots, seed=seed)
        print(f"sampled : p0={sampled.p0:.6f} p1={sampled.p1:.6f} ({shots} shots, "
              f"{sampled.p_postselect:.3f} kept)")
    return exact


def dispatch(args):
    """Run the requested subcommand and return its exit code"""
    if args.command == "circuit-demo":
        circuit_demo(args.input, args.shots, args.forest_seed)
        return 0

    config = config_from_args(args)
    logger.info(f"Config hash {config_hash(config)}, output in {config.output_dir}")
    if args.command == "all":
        return run_pipeline(config)
    stages = {
        "gen": stage_gen,
        "rank": stage_rank,
        "encode": stage_encode,
        "boundary": stage_boundary,
        "report": stage_report,
    }
    if args.command == "classify":
        run_stage("classify", stage_classify, config, args.method)
    else:
        run_stage(args.command, stages[args.command], config)
    return 0


def main(argv=None):
    """Entry point; maps PipelineError subclasses to exit codes"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return e.exit_code
    setup_logging(args.verbose, args.quiet)
    try:
        return dispatch(args)
    except PipelineError as e:
        if e.stage is None:
            logger.error(str(e))
        return e.exit_code
