"""Command-line front end.

    qcap info        --problem FILE [--bits]
    qcap ea-capacity --problem FILE [--bits] [--seed N] [--cutoffs a,b,c]
    qcap holevo      --problem FILE --m M [--bits] [--seed N]
    qcap sweep       --problem FILE [--energies a,b,c] [--out FILE]
    qcap verify      SUITE [--seed N]

Exit codes: 0 success (results may carry flags), 2 infeasible input or
parse failure, 3 internal invariant violation. All internal computation
is in nats; --bits converts at the output boundary only.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time

from . import __version__
from .entropy import (
    entropy,
    entropy_exchange,
    free_energy_residual,
    mutual_information,
    mutual_information_via_relent,
)
from .errors import (
    ConsistencyError,
    InfeasibleError,
    ProblemFormatError,
    QcapError,
    ValidationError,
)
from .gaussian import GaussianNoiseSpec, gaussian_classical_noise
from .operators import expected_value, number_operator
from .optimize import ConstraintSpec, maximize_chi, maximize_mutual_info, truncation_sweep
from .problem import Problem, ResultRecord, convert_units, load_problem
from .verify import run_suite

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVARIANT = 3

ROUTE_TOL = 1e-7


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ProblemFormatError(f"{flag}: expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise ProblemFormatError(f"{flag}: empty list")
    return values


def _parse_int_list(text: str, flag: str) -> list[int]:
    return [int(v) for v in _parse_float_list(text, flag)]


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _units(problem: Problem, bits_flag: bool) -> str:
    return "bits" if bits_flag else problem.units


def cmd_info(args) -> int:
    problem = load_problem(args.problem)
    if problem.state is None:
        raise ProblemFormatError("info requires a 'state' section in the problem file")
    units = _units(problem, args.bits)
    start = time.perf_counter()
    state, channel = problem.state, problem.channel
    observable = problem.constraint.observable
    h_in = entropy(state)
    h_out = entropy(channel.apply(state))
    h_exch = entropy_exchange(state, channel)
    mi = mutual_information(state, channel)
    mi_relent = mutual_information_via_relent(state, channel)
    route_gap = abs(mi - mi_relent)
    values = {
        "entropy_input": convert_units(h_in, units),
        "entropy_output": convert_units(h_out, units),
        "entropy_exchange": convert_units(h_exch, units),
        "mutual_information": convert_units(mi, units),
        "mutual_information_relent": convert_units(mi_relent, units),
        "route_gap": convert_units(route_gap, units),
        "expected_cost": expected_value(state, observable),
        "free_energy_residual": free_energy_residual(state, observable, problem.info_beta),
        "info_beta": problem.info_beta,
    }
    record = ResultRecord(
        command="info",
        inputs_digest=problem.digest(),
        values=values,
        units=units,
        flags=(),
        wall_time_s=time.perf_counter() - start,
    )
    _emit(record.to_json(), args.out)
    if route_gap > ROUTE_TOL:
        sys.stderr.write(
            f"mutual-information routes disagree by {route_gap:.3e} > {ROUTE_TOL:.1e}\n"
        )
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_ea_capacity(args) -> int:
    problem = load_problem(args.problem)
    units = _units(problem, args.bits)
    opts = dataclasses.replace(problem.solver, seed=args.seed if args.seed is not None else problem.solver.seed)
    start = time.perf_counter()
    values: dict = {}
    flags: tuple[str, ...] = ()
    if args.cutoffs:
        cutoffs = _parse_int_list(args.cutoffs, "--cutoffs")
        base = problem.raw.get("channel", {})
        if base.get("kind") != "gaussian":
            raise ProblemFormatError("--cutoffs requires a gaussian channel problem")
        energy = problem.constraint.energy

        def channel_builder(cutoff: int):
            return gaussian_classical_noise(
                GaussianNoiseSpec(
                    noise_mean_photons=float(base["noise_mean_photons"]),
                    cutoff=cutoff,
                    buffer=int(base.get("buffer", 8)),
                    radial_nodes=int(base.get("radial_nodes", 24)),
                    angular_nodes=int(base.get("angular_nodes", 32)),
                )
            )

        series = truncation_sweep(
            channel_builder,
            lambda cutoff: ConstraintSpec(number_operator(cutoff), energy),
            cutoffs,
            opts,
        )
        values["capacity_by_cutoff"] = {
            str(p.cutoff): convert_units(p.value, units) for p in series.points
        }
        values["ea_capacity"] = convert_units(series.points[-1].value, units)
        values["duality_gap"] = convert_units(series.points[-1].duality_gap, units)
        values["monotone_ok"] = series.monotone_ok
        values["final_increment"] = convert_units(series.final_increment, units)
        flags = series.points[-1].flags
    else:
        result = maximize_mutual_info(problem.channel, problem.constraint, opts)
        attainment = result.diagnostics.get("attainment")
        values = {
            "ea_capacity": convert_units(result.value, units),
            "duality_gap": convert_units(result.duality_gap, units),
            "iterations": result.iterations,
            "constraint_slack": result.constraint_slack,
        }
        if attainment is not None:
            values["attainment_certified"] = attainment.certified
            values["attainment_margin_at_unit"] = attainment.margin_at_unit
            values["attainment_best_scale"] = attainment.best_scale
        flags = result.flags
    record = ResultRecord(
        command="ea-capacity",
        inputs_digest=problem.digest(),
        values=values,
        units=units,
        flags=flags,
        wall_time_s=time.perf_counter() - start,
    )
    _emit(record.to_json(), args.out)
    if flags:
        sys.stderr.write(f"warning: result flagged {','.join(flags)}\n")
    return EXIT_OK


def cmd_holevo(args) -> int:
    problem = load_problem(args.problem)
    units = _units(problem, args.bits)
    opts = dataclasses.replace(problem.solver, seed=args.seed if args.seed is not None else problem.solver.seed)
    start = time.perf_counter()
    result = maximize_chi(problem.channel, problem.constraint, args.m, opts)
    values = {
        "holevo_chi_lower_bound": convert_units(result.value, units),
        "ensemble_size": args.m,
        "restart_rounds": result.iterations,
        "constraint_slack": result.constraint_slack,
    }
    record = ResultRecord(
        command="holevo",
        inputs_digest=problem.digest(),
        values=values,
        units=units,
        flags=result.flags,
        wall_time_s=time.perf_counter() - start,
    )
    _emit(record.to_json(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    problem = load_problem(args.problem)
    units = _units(problem, args.bits)
    if args.energies:
        energies = _parse_float_list(args.energies, "--energies")
    elif problem.sweep_energies:
        energies = list(problem.sweep_energies)
    else:
        raise ProblemFormatError("sweep needs --energies or a sweep.energies problem field")
    if energies != sorted(energies) or min(energies) <= 0.0:
        raise ProblemFormatError("sweep energies must be ascending and positive")
    opts = dataclasses.replace(problem.solver, seed=args.seed if args.seed is not None else problem.solver.seed)
    rows = [
        f"energy,ea_capacity_{units},chi_lower_bound_{units},G_lower_bound_based,status"
    ]
    for energy in energies:
        try:
            cspec = ConstraintSpec(problem.constraint.observable, energy)
            ea = maximize_mutual_info(problem.channel, cspec, opts)
            chi = maximize_chi(problem.channel, cspec, args.m, opts)
            gain = ea.value / chi.value if chi.value > 0.0 else math.inf
            status = ",".join(ea.flags + chi.flags) or "ok"
            rows.append(
                f"{energy:.17g},{convert_units(ea.value, units):.17g},"
                f"{convert_units(chi.value, units):.17g},{gain:.17g},{status}"
            )
        except QcapError as exc:
            rows.append(f"{energy:.17g},,,,error: {exc}")
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_suite(args.suite, seed=args.seed or 0, corrupt=args.inject_corruption)
    for check in results:
        print(check.line())
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_INVARIANT if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcap",
        description="Constrained classical and entanglement-assisted channel capacities",
    )
    parser.add_argument("--version", action="version", version=f"qcap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_problem=True):
        if needs_problem:
            p.add_argument("--problem", required=True, help="problem file (JSON, schema 1)")
        p.add_argument("--bits", action="store_true", help="report in bits instead of nats")
        p.add_argument("--seed", type=int, default=None, help="override the solver seed")
        p.add_argument("--out", default=None, help="write the record to a file")

    p_info = sub.add_parser("info", help="entropies and costs of a supplied state")
    add_common(p_info)
    p_info.set_defaults(func=cmd_info)

    p_ea = sub.add_parser("ea-capacity", help="entanglement-assisted capacity")
    add_common(p_ea)
    p_ea.add_argument("--cutoffs", default=None, help="truncation ladder a,b,c (gaussian only)")
    p_ea.set_defaults(func=cmd_ea_capacity)

    p_chi = sub.add_parser("holevo", help="heuristic one-shot Holevo lower bound")
    add_common(p_chi)
    p_chi.add_argument("--m", type=int, required=True, help="ensemble size")
    p_chi.set_defaults(func=cmd_holevo)

    p_sweep = sub.add_parser("sweep", help="capacity and gain versus input energy (CSV)")
    add_common(p_sweep)
    p_sweep.add_argument("--energies", default=None, help="ascending energies a,b,c")
    p_sweep.add_argument("--m", type=int, default=2, help="ensemble size for the chi column")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run an invariant suite")
    p_verify.add_argument("suite", choices=["entropy", "channels", "optimize", "gaussian", "all"])
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--inject-corruption", action="store_true", help=argparse.SUPPRESS)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFormatError, InfeasibleError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INFEASIBLE
    except (ConsistencyError, ValidationError) as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return EXIT_INVARIANT
    except QcapError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
