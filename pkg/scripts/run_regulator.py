"""
Run Regulator Script
====================
CLI entry point for designing, verifying, simulating and stress-testing
robust output regulators.

Usage:
    python scripts/run_regulator.py heat-demo
    python scripts/run_regulator.py design --plant heat --family minimal --epsilon 0.25
    python scripts/run_regulator.py verify --plant plant.json --exosystem exo.json --controller out/controller.json
    python scripts/run_regulator.py simulate --problem problems/scalar.json
    python scripts/run_regulator.py sweep --plant heat --delta 0.01 --samples 50 --seed 0

Exit codes: 0 ok, 1 IO/parse error, 2 precondition error, 3 synthesis or
stability failure.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from controllers.controller_factory import REDUCED_FAMILIES, create_controller
from controllers.minimal import minimal_controller, prestabilize_output_feedback
from heat2d.heat_plant import (
    BENCHMARK_V0,
    HeatModelConfig,
    benchmark_exosystem,
    build_heat_plant,
    temperature_field,
    transfer_convergence,
)
from internal_model.builders import retune_frequency
from internal_model.certificate import certify_class, certify_rorp
from numerics.errors import EXIT_FAILURE, EXIT_OK, ParseError, RegulatorError, exit_code_for
from numerics.linalg import RankTolerance
from reports.report_generator import ReportGenerator
from simulation.robustness import robustness_sweep
from simulation.simulator import simulate
from sysmodel.problem import FAMILIES, ProblemLoader
from sysmodel.serialization import (
    controller_to_dict,
    load_controller,
    load_exosystem,
    load_state_space,
    write_json,
)
from sysmodel.state_space import Controller, Exosystem, PlantVariant, StateSpace, assemble_closed_loop

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config.yaml")

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger(__name__)


def load_config(config_path: str = DEFAULT_CONFIG) -> dict:
    """Load configuration from YAML file."""
    with open(config_path, "r") as f:
        try:
            return yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ParseError(f"Invalid YAML in {config_path}: {exc}") from exc


def _pick(*values):
    """First value that is not None."""
    return next((v for v in values if v is not None), None)


class Setup:
    """Plant, exosystem and parameters resolved from flags, problem file and config."""

    def __init__(self, args: argparse.Namespace, config: Dict[str, Any]):
        self.config = config
        self.tol = RankTolerance(float(config.get("numerics", {}).get("rank_tolerance", 1e-9)))
        self.problem = ProblemLoader(args.problem) if getattr(args, "problem", None) else None
        self.heat = None
        self.plant = self._resolve_plant(args)
        self.exo = self._resolve_exosystem(args)
        self.family = _pick(
            getattr(args, "family", None),
            self.problem.family if self.problem else None,
            config.get("design", {}).get("family"),
            "minimal",
        )
        self.parameters = self._resolve_parameters(args)
        self.members = self._resolve_members()

    @property
    def is_heat(self) -> bool:
        return self.heat is not None

    def _resolve_plant(self, args) -> StateSpace:
        source = getattr(args, "plant", None)
        if source is None and self.problem is None:
            source = "heat"
        if source == "heat" or (source is None and self.problem.plant_source == "heat"):
            options = dict(self.config.get("heat", {}))
            if self.problem is not None:
                options.update(self.problem.heat_options)
            modes = _pick(getattr(args, "modes", None), options.get("modes"), 10)
            kappa = _pick(getattr(args, "kappa", None), options.get("kappa"), 1.0)
            self.heat = build_heat_plant(HeatModelConfig(int(modes), float(kappa)))
            return self.heat.stabilized
        plant = load_state_space(source) if source else self.problem.load_plant()
        kappa = getattr(args, "kappa", None)
        if kappa is None and self.problem is not None:
            kappa = self.problem.parameters.get("kappa")
        if kappa:
            plant = prestabilize_output_feedback(plant, float(kappa))
        return plant

    def _resolve_exosystem(self, args) -> Exosystem:
        source = getattr(args, "exosystem", None)
        if source:
            return load_exosystem(source)
        if self.problem is not None and self.problem.exosystem_source != "heat":
            return self.problem.load_exosystem()
        return benchmark_exosystem(self.plant.n)

    def _resolve_parameters(self, args) -> Dict[str, Any]:
        params = dict(self.config.get("minimal", {}))
        if "epsilon_max" in params:
            params["eps_max"] = params.pop("epsilon_max")
        if self.problem is not None:
            params.update(self.problem.parameters)
        if getattr(args, "epsilon", None) is not None:
            params["epsilon"] = args.epsilon
            params["tune_epsilon"] = False
        if getattr(args, "tune_epsilon", False):
            params["tune_epsilon"] = True
        return params

    def _resolve_members(self) -> Optional[List[PlantVariant]]:
        if self.problem is None:
            return None
        return self.problem.load_members(self.plant, self.exo)

    def simulation_options(self, args) -> Dict[str, Any]:
        options = dict(self.config.get("simulation", {}))
        if self.problem is not None:
            options.update(self.problem.simulation)
        t_final = float(_pick(getattr(args, "tfinal", None), options.get("t_final"), 16.0))
        dt = float(_pick(getattr(args, "dt", None), options.get("dt"), 0.01))
        v0 = options.get("v0")
        if v0 is None:
            v0 = BENCHMARK_V0 if self.is_heat else np.ones(self.exo.r)
        return {
            "t_final": t_final,
            "dt": dt,
            "v0": np.asarray(v0, dtype=float),
            "window": options.get("window"),
            "terminal_fraction": float(options.get("terminal_fraction", 0.75)),
        }

    def design(self) -> Tuple[Controller, Any]:
        return create_controller(
            self.family, self.plant, self.exo, self.parameters, self.members, tol=self.tol
        )


def _controller_for(setup: Setup, args) -> Controller:
    if getattr(args, "controller", None):
        return load_controller(args.controller)
    ctrl, _ = setup.design()
    return ctrl


def _output_dir(args, config: Dict[str, Any]) -> str:
    return args.output or config.get("reports", {}).get("output_dir", "reports/output")


# ── Subcommands ──

def cmd_design(args, config) -> int:
    """Synthesize a controller and write controller, synthesis record and certificate."""
    setup = Setup(args, config)
    ctrl, record = setup.design()
    output_dir = _output_dir(args, config)

    cert = certify_rorp(setup.plant, ctrl, setup.exo, setup.tol)
    certificate = cert.to_dict()
    passed = cert.solves_rorp
    if setup.family in REDUCED_FAMILIES:
        members = setup.members or [PlantVariant.nominal(setup.plant, setup.exo)]
        class_cert = certify_class(members, ctrl, setup.exo)
        certificate["class"] = class_cert.to_dict()
        passed = cert.hurwitz and class_cert.passed

    write_json(os.path.join(output_dir, "controller.json"), controller_to_dict(ctrl))
    if record is not None:
        write_json(os.path.join(output_dir, "synthesis.json"), record.to_dict())
    write_json(os.path.join(output_dir, "certificate.json"), certificate)

    logger.info("\n" + cert.summary())
    if "epsilon" in ctrl.parameters:
        logger.info(f"epsilon = {ctrl.parameters['epsilon']:.6g}")
    if not passed:
        logger.warning("Controller does not pass its certificate")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_verify(args, config) -> int:
    """Check a stored controller against a plant and exosystem."""
    setup = Setup(args, config)
    ctrl = load_controller(args.controller)
    cert = certify_rorp(setup.plant, ctrl, setup.exo, setup.tol)
    write_json(os.path.join(_output_dir(args, config), "verify.json"), cert.to_dict())
    logger.info("\n" + cert.summary())
    return EXIT_OK if cert.solves_rorp else EXIT_FAILURE


def cmd_simulate(args, config) -> int:
    """Simulate the closed loop and write trajectory, charts and summary."""
    setup = Setup(args, config)
    ctrl = _controller_for(setup, args)
    options = setup.simulation_options(args)
    cl = assemble_closed_loop(setup.plant, ctrl, setup.exo)
    summary: Dict[str, Any] = {"family": ctrl.family, "hurwitz": cl.is_hurwitz}
    generator = ReportGenerator(config, _output_dir(args, config))
    if not cl.is_hurwitz:
        summary["abscissa"] = cl.abscissa
        generator.generate_all(summary)
        logger.warning(f"Closed loop is not Hurwitz (abscissa {cl.abscissa:.4e})")
        return EXIT_FAILURE

    result = simulate(cl, setup.exo, v0=options["v0"], t_final=options["t_final"],
                      dt=options["dt"], window=options["window"],
                      terminal_fraction=options["terminal_fraction"])
    summary["simulation"] = result.to_dict()
    generator.generate_all(summary, result=result)
    logger.info("\n" + result.summary())
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    """Seeded perturbation sweep around the nominal plant."""
    setup = Setup(args, config)
    ctrl = _controller_for(setup, args)
    options = setup.simulation_options(args)
    sweep_config = dict(config.get("sweep", {}))
    if setup.problem is not None:
        sweep_config.update({k: v for k, v in setup.problem.perturbations.items() if k != "members"})

    report = robustness_sweep(
        setup.plant,
        ctrl,
        setup.exo,
        delta=float(_pick(args.delta, sweep_config.get("delta"), 0.01)),
        samples=int(_pick(args.samples, sweep_config.get("samples"), 50)),
        seed=_pick(args.seed, sweep_config.get("seed"), 0),
        v0=options["v0"],
        t_final=options["t_final"],
        dt=options["dt"],
        threshold=float(_pick(args.threshold, sweep_config.get("terminal_threshold"), 0.05)),
        workers=int(_pick(args.workers, sweep_config.get("workers"), 1)),
        progress=not args.quiet,
    )
    ReportGenerator(config, _output_dir(args, config)).generate_all(report.to_dict(), sweep=report)
    logger.info("\n" + report.summary())
    return EXIT_OK if report.status == "PASS" else EXIT_FAILURE


def cmd_heat_demo(args, config) -> int:
    """Heat benchmark: minimal controller, simulation, charts and summary."""
    heat_config = config.get("heat", {})
    modes = int(_pick(args.modes, heat_config.get("modes"), 10))
    kappa = float(_pick(args.kappa, heat_config.get("kappa"), 1.0))
    epsilon = float(_pick(args.epsilon, config.get("minimal", {}).get("epsilon"), 0.25))
    sim_config = config.get("simulation", {})
    t_final = float(_pick(args.tfinal, sim_config.get("t_final"), 16.0))
    dt = float(_pick(args.dt, sim_config.get("dt"), 0.01))

    heat = build_heat_plant(HeatModelConfig(modes, kappa))
    exo = benchmark_exosystem(heat.stabilized.n)
    ctrl = minimal_controller(heat.stabilized, exo, epsilon)
    if args.detune is not None:
        ctrl = retune_frequency(ctrl, np.pi, args.detune * np.pi)
        ctrl = retune_frequency(ctrl, -np.pi, -args.detune * np.pi)

    tables = {}
    if args.modes_check is not None:
        table = transfer_convergence(modes, args.modes_check, kappa=kappa)
        tables["convergence"] = table
        logger.info("\nTransfer convergence:\n" + table.to_string(index=False))

    cl = assemble_closed_loop(heat.stabilized, ctrl, exo)
    summary: Dict[str, Any] = {
        "modes": modes,
        "kappa": kappa,
        "epsilon": epsilon,
        "detune": args.detune,
        "hurwitz": cl.is_hurwitz,
        "abscissa": cl.abscissa,
    }
    generator = ReportGenerator(config, _output_dir(args, config))
    if not cl.is_hurwitz:
        generator.generate_all(summary, tables=tables)
        logger.warning(f"Closed loop is not Hurwitz for epsilon={epsilon} (abscissa {cl.abscissa:.4e})")
        return EXIT_FAILURE

    result = simulate(cl, exo, v0=BENCHMARK_V0, t_final=t_final, dt=dt,
                      terminal_fraction=float(sim_config.get("terminal_fraction", 0.75)))
    summary["simulation"] = result.to_dict()
    xi1, xi2, T = temperature_field(np.real(result.states[-1, :heat.stabilized.n]), modes)
    generator.generate_all(summary, result=result, field=(xi1, xi2, T, t_final), tables=tables)
    logger.info("\n" + result.summary())
    return EXIT_OK


# ── Argument parsing ──

def _add_system_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", default=None, help="Problem JSON file")
    parser.add_argument("--plant", default=None, help="'heat' or a plant JSON file")
    parser.add_argument("--exosystem", default=None, help="Exosystem JSON file (benchmark exosystem by default)")
    parser.add_argument("--modes", type=int, default=None, help="Heat model modes per axis")
    parser.add_argument("--kappa", type=float, default=None, help="Output feedback gain applied before design")


def _global_arguments(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Options accepted both before and after the subcommand."""
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--config", default=default(DEFAULT_CONFIG), help="Config file path")
    parser.add_argument("--output", default=default(None), help="Output directory")
    parser.add_argument("--seed", type=int, default=default(None), help="Seed for stochastic steps")
    parser.add_argument("--verbose", action="store_true", default=default(False), help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Robust output regulator design and verification")
    _global_arguments(parser, suppress=False)
    shared = argparse.ArgumentParser(add_help=False)
    _global_arguments(shared, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    design = sub.add_parser("design", parents=[shared], help="Synthesize a controller")
    _add_system_arguments(design)
    design.add_argument("--family", choices=FAMILIES, default=None, help="Controller family")
    design.add_argument("--epsilon", type=float, default=None, help="Low-gain parameter")
    design.add_argument("--tune-epsilon", action="store_true", help="Search the largest stabilizing epsilon")

    verify = sub.add_parser("verify", parents=[shared], help="Verify a stored controller")
    _add_system_arguments(verify)
    verify.add_argument("--controller", required=True, help="Controller JSON file")

    for name, help_text in (("simulate", "Simulate the closed loop"), ("sweep", "Perturbation sweep")):
        cmd = sub.add_parser(name, parents=[shared], help=help_text)
        _add_system_arguments(cmd)
        cmd.add_argument("--controller", default=None, help="Controller JSON file (designed on the fly otherwise)")
        cmd.add_argument("--family", choices=FAMILIES, default=None, help="Family for on-the-fly design")
        cmd.add_argument("--epsilon", type=float, default=None, help="Low-gain parameter")
        cmd.add_argument("--tune-epsilon", action="store_true", help="Search the largest stabilizing epsilon")
        cmd.add_argument("--tfinal", type=float, default=None, help="Final time")
        cmd.add_argument("--dt", type=float, default=None, help="Sampling step")

    sweep = sub.choices["sweep"]
    sweep.add_argument("--delta", type=float, default=None, help="Relative perturbation size")
    sweep.add_argument("--samples", type=int, default=None, help="Number of samples")
    sweep.add_argument("--threshold", type=float, default=None, help="Terminal error threshold")
    sweep.add_argument("--workers", type=int, default=None, help="Parallel workers")
    sweep.add_argument("--quiet", action="store_true", help="No progress bar")

    demo = sub.add_parser("heat-demo", parents=[shared], help="Heat benchmark end to end")
    demo.add_argument("--modes", type=int, default=None, help="Modes per axis")
    demo.add_argument("--kappa", type=float, default=None, help="Output feedback gain")
    demo.add_argument("--epsilon", type=float, default=None, help="Low-gain parameter")
    demo.add_argument("--tfinal", type=float, default=None, help="Final time")
    demo.add_argument("--dt", type=float, default=None, help="Sampling step")
    demo.add_argument("--modes-check", type=int, default=None, help="Second truncation for the convergence table")
    demo.add_argument("--detune", type=float, default=None,
                      help="Move the internal model frequency pi to detune * pi")
    return parser


COMMANDS = {
    "design": cmd_design,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "heat-demo": cmd_heat_demo,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the exit code."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        config = load_config(args.config) if os.path.exists(args.config) else {}
        if args.config != DEFAULT_CONFIG and not os.path.exists(args.config):
            raise FileNotFoundError(f"Config file not found: {args.config}")
        logger.info("=" * 60)
        logger.info(f"Robust regulator: {args.command}")
        logger.info("=" * 60)
        return COMMANDS[args.command](args, config)
    except (RegulatorError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        code = exit_code_for(exc)
        logger.error(f"{type(exc).__name__}: {exc}")
        return code


if __name__ == "__main__":
    sys.exit(main())
