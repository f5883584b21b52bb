"""
Aperiodica - Command Line Entry Point
Diffraction, autocorrelation and dynamical-spectrum toolkit for weighted
Dirac combs.

Exit codes: 0 pass, 1 gate failure, 2 usage or validation error.
"""

import argparse
import json
import sys

import numpy as np
from colorama import just_fix_windows_console
from dotenv import load_dotenv

from src import tools
from src.autocorrelation import VanHoveSequence, autocorr_van_hove, autocorrelation_of, cauchy_residuals
from src.config import PRESETS, load_config, parse_grid, preset
from src.diffraction import peak_scan, purity, spectral_mass_check
from src.dynamics import dworkin_identity_report, eigenvalue_group_check, spectral_measure_zero_check
from src.errors import AperiodicaError, AtomRejected, NotPurePoint
from src.generators import EXAMPLES, CombGenerator, example
from src.geometry import Box, BoxUnion
from src.measures import TestFunction
from src.pipeline import EXIT_FAILED, EXIT_INVALID, EXIT_PASSED, run_pipeline
from src.topology import (
    PointSetWindowed,
    UKVParams,
    fell_lemma_trials,
    flc_check,
    repetitivity_scan,
    ukv_related,
)
from src.utils.logger import ActionType, _to_jsonable, log_experiment

# Load environment variables
load_dotenv()


# =============================================================================
# HELPERS
# =============================================================================

def _emit(record: dict):
    """Prints a JSON verdict record on standard output."""
    print(json.dumps(_to_jsonable(record), indent=2, ensure_ascii=False))


def _generator(args) -> CombGenerator:
    if args.spec:
        return tools.read_generator(args.spec)
    return example(args.example)


def _sequence(args, gen: CombGenerator) -> VanHoveSequence:
    return VanHoveSequence.geometric(args.base, args.factor, args.n_max, gen.dim)


def _phi(args, gen: CombGenerator) -> TestFunction:
    return TestFunction.parse(args.phi, gen.dim)


def _log(stage: str, action: ActionType, inputs: dict, outputs: dict, passed: bool = True):
    log_experiment(
        stage=stage,
        action=action,
        details={"inputs": inputs, "outputs": outputs},
        status="SUCCESS" if passed else "FAILURE",
    )


def _ukv(args, dim: int = 1) -> UKVParams:
    return UKVParams(BoxUnion.of(Box.parse(args.K)), Box.symmetric(args.V, dim))


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_generate(args) -> int:
    gen = _generator(args)
    comb = gen.produce(Box.parse(args.window))
    tools.write_comb(comb, args.out)
    if args.spec_out:
        tools.write_generator(gen, args.spec_out)
    print(f"✅ {len(comb)} points written to {args.out}")
    _log("generate", ActionType.GENERATE, {"generator": gen.to_spec(), "window": args.window},
         {"count": len(comb), "path": args.out})
    return EXIT_PASSED


def cmd_autocorr(args) -> int:
    if args.comb:
        gamma = autocorrelation_of(tools.read_comb(args.comb), args.epsilon, args.R, workers=args.workers)
        residuals = []
    else:
        gen = _generator(args)
        gammas = autocorr_van_hove(gen, _sequence(args, gen), args.epsilon, args.R, args.workers)
        gamma = gammas[-1]
        residuals = cauchy_residuals(gammas)
    tools.write_autocorrelation(gamma, args.out)
    record = {"support": len(gamma), "hermitian_defect": gamma.hermitian_defect(), "cauchy_residuals": residuals}
    _emit(record)
    _log("autocorr", ActionType.AUTOCORRELATE, {"epsilon": args.epsilon, "R": args.R}, record)
    return EXIT_PASSED


def cmd_diffract(args) -> int:
    gen = _generator(args)
    spectrum = peak_scan(
        gen, _sequence(args, gen), Box.parse(args.k_range),
        refine_tol=args.refine_tol, residual_tol=args.residual_tol, workers=args.workers,
    )
    tools.write_spectrum(spectrum, args.out)
    print(f"✅ {len(spectrum.atoms)} atoms written to {args.out}")
    for atom in spectrum.top(10):
        print(f"   k = {atom.k}  I = {atom.intensity:.6g}  residual = {atom.residual:.2e}")
    _log("diffract", ActionType.DIFFRACT, {"k_range": args.k_range},
         {"atoms": len(spectrum.atoms), "max_candidate_intensity": spectrum.scan["max_candidate_intensity"]})
    return EXIT_PASSED


def cmd_purity(args) -> int:
    gamma = tools.read_autocorrelation(args.gamma)
    spectrum = tools.read_spectrum(args.spectrum)
    phi = TestFunction.parse(args.phi, gamma.dim)
    value = purity(gamma, spectrum, phi)
    record = {"purity": value, "phi": args.phi}
    passed = True
    if args.min is not None:
        passed = value >= args.min
        record["gate"] = {"value": value, "tolerance": args.min, "gate": ">=", "passed": passed}
    _emit(record)
    _log("purity", ActionType.DIFFRACT, {"gamma": args.gamma, "spectrum": args.spectrum}, record, passed)
    return EXIT_PASSED if passed else EXIT_FAILED


def cmd_topology(args) -> int:
    if args.check == "fell":
        rng = np.random.default_rng(args.seed)
        reports = [fell_lemma_trials(d, args.samples, rng, args.probes)
                   for d in ("fell-refines-ukv", "ukv-refines-fell")]
        record = {r.direction: {"samples": r.samples, "members": r.members, "failures": r.failures,
                                "passed": r.passed} for r in reports}
        passed = all(r.passed for r in reports)
    else:
        P = PointSetWindowed.from_comb(tools.read_comb(args.input))
        if args.check == "ukv":
            Q = PointSetWindowed.from_comb(tools.read_comb(args.other))
            passed = ukv_related(P, Q, _ukv(args, P.dim))
            record = {"related": passed}
        elif args.check == "repetitivity":
            report = repetitivity_scan(P, _ukv(args, P.dim), list(parse_grid(args.t_grid)), args.R)
            passed = report.dense
            record = {"dense": report.dense, "max_gap": report.max_gap, "witnesses": len(report.witnesses)}
        else:
            report = flc_check(P, args.radius, args.resolution)
            passed = report.flc
            record = {"flc": report.flc, "counts": report.counts}
    _emit(record)
    _log(f"topology-{args.check}", ActionType.TOPOLOGY, {"check": args.check}, record, passed)
    return EXIT_PASSED if passed else EXIT_FAILED


def _verdict(args, gen: CombGenerator, record: dict) -> int:
    _emit(record)
    passed = record["passed"]
    _log(f"verify-{args.check}", ActionType.VERIFY, {"generator": gen.to_spec(), "phi": args.phi}, record, passed)
    return EXIT_PASSED if passed else EXIT_FAILED


def cmd_verify(args) -> int:
    gen = _generator(args)
    seq = _sequence(args, gen)
    phi = _phi(args, gen)

    if args.check == "dworkin":
        report = dworkin_identity_report(gen, phi, phi, list(parse_grid(args.t_grid)), seq,
                                         epsilon=args.epsilon, workers=args.workers)
        passed = report.max_rel_error <= args.tol
        record = {"max_rel_error": report.max_rel_error, "tolerance": args.tol, "gate": "<=", "passed": passed}
    elif args.check == "spectralmass":
        try:
            report = spectral_mass_check(gen, phi, float(args.k), seq)
        except AtomRejected as e:
            print(f"⚠️ {e}", file=sys.stderr)
            record = {"k": float(args.k), "rejected": True, "tolerance": args.tol, "gate": "<=", "passed": False}
            return _verdict(args, gen, record)
        passed = report.rel_error <= args.tol
        record = {"k": report.k, "lhs": report.lhs, "rhs": report.rhs, "rel_error": report.rel_error,
                  "tolerance": args.tol, "gate": "<=", "passed": passed}
    elif args.check == "eigengroup":
        spectrum = tools.read_spectrum(args.spectrum)
        if spectrum.purity is None and args.gamma:
            spectrum = spectrum.with_purity(purity(tools.read_autocorrelation(args.gamma), spectrum, phi))
        phis = [TestFunction(phi.shape, phi.center, phi.h * s) for s in (0.5, 1.0, 1.5)]
        try:
            report = eigenvalue_group_check(spectrum, gen, phis, M=args.M, top=args.top)
        except NotPurePoint as e:
            print(f"⚠️ {e}", file=sys.stderr)
            record = {"purity": spectrum.purity, "tolerance": args.sum_rate, "gate": ">=", "passed": False}
            return _verdict(args, gen, record)
        passed = report.negation_closed and report.sum_accept_rate >= args.sum_rate
        record = {"accepted": report.accepted, "negation_rate": report.negation_rate,
                  "sum_accept_rate": report.sum_accept_rate, "closure_rate": report.closure_rate,
                  "tolerance": args.sum_rate, "gate": ">=", "passed": passed}
    else:
        spectrum = tools.read_spectrum(args.spectrum) if args.spectrum else None
        report = spectral_measure_zero_check(gen, phi, Box.parse(args.window), seq, spectrum=spectrum)
        passed = abs(report.ratio) <= args.tol
        record = {"mass": report.mass, "norm": report.norm, "ratio": report.ratio, "predicted": report.predicted,
                  "max_lag": report.max_lag, "tolerance": args.tol, "gate": "<=", "passed": passed}

    return _verdict(args, gen, record)


def cmd_run(args) -> int:
    config = load_config(args.config) if args.config else preset(args.preset)
    if args.out:
        config = config.with_output(args.out)
    code, _ = run_pipeline(config, args.workers)
    return code


def cmd_selftest(args) -> int:
    from src.selftest import list_checks, run_selftest

    if args.list:
        for name in list_checks():
            print(name)
        return EXIT_PASSED
    return run_selftest()


# =============================================================================
# PARSER
# =============================================================================

def _add_generator_args(parser: argparse.ArgumentParser, vanhove: bool = True):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--example", choices=list(EXAMPLES), help="Canonical generator")
    source.add_argument("--spec", help="Generator spec JSON {kind, params, seed, group}")
    if vanhove:
        parser.add_argument("--base", type=float, default=100.0, help="Smallest van Hove box length")
        parser.add_argument("--factor", type=float, default=2.0, help="Van Hove growth factor")
        parser.add_argument("--n-max", dest="n_max", type=int, default=8, help="Index of the largest box")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Aperiodica - diffraction and dynamical spectra of weighted Dirac combs"
    )
    parser.add_argument("--workers", type=int, default=None, help="Worker threads (default: APERIODICA_WORKERS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Produce a comb on a window")
    _add_generator_args(p, vanhove=False)
    p.add_argument("--window", required=True, help="Window a,b (or a,b,c,d in 2D)")
    p.add_argument("--out", default="comb.csv")
    p.add_argument("--spec-out", help="Also write the generator spec JSON")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("autocorr", help="Van Hove autocorrelation")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--example", choices=list(EXAMPLES))
    source.add_argument("--spec")
    source.add_argument("--comb", help="Existing comb.csv")
    p.add_argument("--base", type=float, default=100.0)
    p.add_argument("--factor", type=float, default=2.0)
    p.add_argument("--n-max", dest="n_max", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.0, help="Binning width (0 = exact matching)")
    p.add_argument("--R", type=float, default=6.0, help="Range")
    p.add_argument("--out", default="gamma.csv")
    p.set_defaults(func=cmd_autocorr)

    p = sub.add_parser("diffract", help="Bragg peak scan")
    _add_generator_args(p)
    p.add_argument("--k-range", dest="k_range", default="-2.5,2.5")
    p.add_argument("--refine-tol", dest="refine_tol", type=float, default=1e-7)
    p.add_argument("--residual-tol", dest="residual_tol", type=float, default=0.05)
    p.add_argument("--out", default="spectrum.csv")
    p.set_defaults(func=cmd_diffract)

    p = sub.add_parser("purity", help="Purity ratio of a spectrum against an autocorrelation")
    p.add_argument("--gamma", required=True)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--phi", default="tent:0.5")
    p.add_argument("--min", type=float, default=None, help="Fail (exit 1) below this purity")
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("topology", help="Rubber topology diagnostics")
    p.add_argument("check", choices=["ukv", "repetitivity", "flc", "fell"])
    p.add_argument("--in", dest="input", help="comb.csv")
    p.add_argument("--other", help="Second comb.csv (ukv)")
    p.add_argument("--K", default="0,5", help="Compact box a,b")
    p.add_argument("--V", type=float, default=0.1, help="Radius of the open box V")
    p.add_argument("--t-grid", dest="t_grid", default="0:50:5001", help="a:b:n or a comma list")
    p.add_argument("--R", type=float, default=10.0, help="Largest allowed witness gap")
    p.add_argument("--radius", type=float, default=3.0)
    p.add_argument("--resolution", type=float, default=1e-6)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--probes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("verify", help="Dynamical-spectrum identities")
    p.add_argument("check", choices=["dworkin", "spectralmass", "eigengroup", "zerowindow"])
    _add_generator_args(p)
    p.add_argument("--phi", default="tent:0.5")
    p.add_argument("--t-grid", dest="t_grid", default="-5:5:21")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--k", type=float, default=0.0, help="Atom position (spectralmass)")
    p.add_argument("--spectrum", help="spectrum.csv (eigengroup, zerowindow)")
    p.add_argument("--gamma", help="gamma.csv for the purity of a spectrum without one (eigengroup)")
    p.add_argument("--window", default="0.1,0.4", help="k-window (zerowindow)")
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--sum-rate", dest="sum_rate", type=float, default=0.95, help="Required pass rate of pairwise sums")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="Full pipeline")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="INI or JSON configuration")
    source.add_argument("--preset", choices=list(PRESETS))
    p.add_argument("--out", help="Output directory (overrides the configuration)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("selftest", help="Closed-form checks of every module")
    p.add_argument("--list", action="store_true", help="Print check names without running")
    p.set_defaults(func=cmd_selftest)
    return parser


def _needs_input(args) -> str | None:
    if args.command == "topology" and args.check != "fell" and not args.input:
        return "--in is required"
    if args.command == "topology" and args.check == "ukv" and not args.other:
        return "--other is required for ukv"
    if args.command == "verify" and args.check == "eigengroup" and not args.spectrum:
        return "--spectrum is required for eigengroup"
    return None


def main(argv: list[str] | None = None) -> int:
    """Parses the command line, runs the command and returns its exit code."""
    just_fix_windows_console()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PASSED if e.code == 0 else EXIT_INVALID

    problem = _needs_input(args)
    if problem:
        print(f"❌ ERROR: {problem}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (AperiodicaError, ValueError, OSError) as e:
        print(f"❌ ERROR: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
