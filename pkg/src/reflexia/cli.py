"""Command-line front end.

    reflexia analyze|verify|roundtrip|flows --config PATH [--out PATH] [--seed INT]

Exit codes: 0 all checked conditions hold, 1 a checked condition fails,
2 malformed input or usage error.  ``REFLEXIA_THREADS`` caps BLAS threads.
"""

import argparse
import os
import sys
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .blackbox import flat_product, sample_ball
from .exceptions import (AxiomViolation, DomainTooSmall, EigenvalueAmbiguous, InputError,
                         InvolutionViolated, LeftDomain, OutOfChartDomain, ParityViolated,
                         RankUnstable, ReflexiaError, SkipRateExceeded)
from .io import RunConfig, load_algebra, load_involution, load_matrix, load_subalgebra, write_report
from .model import HomogeneousReflexionModel, as_black_box, verify_axioms
from .symmetric import Involution, check_conditions

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

# failures of a checked condition, as opposed to bad input
_CHECK_ERRORS = (AxiomViolation, DomainTooSmall, EigenvalueAmbiguous, InvolutionViolated,
                 LeftDomain, OutOfChartDomain, ParityViolated, RankUnstable, SkipRateExceeded)


class Inputs:
    """Files named by a config, loaded and cross-checked."""

    def __init__(self, cfg):
        self.spec = load_algebra(cfg.resolve(cfg.algebra), cfg.tolerance)
        self.involution = load_involution(cfg.resolve(cfg.involution), self.spec, cfg.tolerance)
        self.k_basis = load_subalgebra(cfg.resolve(cfg.k_basis), self.spec.dim)
        self.h_matrix = None
        if cfg.h_matrix is not None:
            self.h_matrix = load_matrix(cfg.resolve(cfg.h_matrix))
            m = self.spec.matrix_size
            if m is None or self.h_matrix.shape != (m, m):
                raise InputError(f"h_matrix must be {m}x{m} to act on the matrix basis")
        elif self.involution.h_matrix is not None:
            self.h_matrix = self.involution.h_matrix

    def effective_involution(self):
        """Ad of the driving h when one overrides the nominal involution."""
        if self.h_matrix is None or self.h_matrix is self.involution.h_matrix:
            return self.involution
        try:
            return Involution.from_group_element(self.spec, self.h_matrix)
        except ReflexiaError as exc:
            raise InputError(f"h_matrix: {exc}") from exc

    def model(self, cfg, trust_radius):
        if self.spec.matrix_basis is None:
            raise InputError("the homogeneous model needs an algebra with a matrix basis")
        try:
            return HomogeneousReflexionModel(
                self.spec, self.involution, self.k_basis, h_matrix=self.h_matrix,
                trust_radius=trust_radius, chart_radius=cfg.chart_radius,
                fd_step=cfg.newton_fd_step, newton_tol=cfg.newton_tol, tol=cfg.tolerance,
                check=False)
        except ValueError as exc:
            raise InputError(f"cannot build the model: {exc}") from exc


def _black_box(cfg, inputs, trust_radius):
    S = as_black_box(inputs.model(cfg, trust_radius))
    return flat_product(S, cfg.flat_dims) if cfg.flat_dims else S


# -- commands -----------------------------------------------------------------

def cmd_analyze(cfg, inputs):
    inv = inputs.effective_involution()
    gens = None
    if inv.h_matrix is not None and inputs.k_basis.shape[0]:
        gens = inputs.spec.matrix(inputs.k_basis)
    rep = check_conditions(inputs.spec, inv, inputs.k_basis, cfg.tolerance, k_generators=gens)
    return rep.passed, rep.as_dict()


def cmd_verify(cfg, inputs):
    model = inputs.model(cfg, cfg.trust_radius)
    rep = verify_axioms(model, cfg.n_samples, cfg.seed, cfg.tolerance)
    result = rep.as_dict()
    bad = {k: v for k, v in rep.model_residuals.items() if not v <= cfg.tolerance}
    result["model_invariants_passed"] = not bad
    if rep.skip_rate > cfg.max_skip_rate:
        raise SkipRateExceeded(
            f"skip rate {rep.skip_rate:.3f} exceeds {cfg.max_skip_rate}", result)
    return rep.passed and not bad, result


def _reconstructor(cfg, jacobian_step):
    # imported here: scikit-learn is only needed by the reconstruction commands
    from .reconstruction import TransvectionReconstructor
    return TransvectionReconstructor(
        step=cfg.fd_step, jacobian_step=jacobian_step, outer_step=cfg.outer_step,
        samples_per_dim=cfg.samples_per_dim, rank_rtol=cfg.rank_rtol,
        fingerprint_rtol=cfg.fingerprint_rtol, random_state=cfg.seed)


def cmd_roundtrip(cfg, inputs):
    from .reconstruction import compare_algebras
    S = _black_box(cfg, inputs, cfg.trust_radius)
    rec = _reconstructor(cfg, cfg.jacobian_step).fit(S)
    report = rec.report_
    halved = _reconstructor(cfg, cfg.jacobian_step / 2).fit(S)
    if report.gx_dim:
        cmp = compare_algebras(rec.fitted_algebra_, inputs.spec, cfg.fingerprint_rtol).as_dict()
    else:
        cmp = {"match": False, "differences": ["dim"], "note": "g_x is zero"}
    result = {
        "reconstruction": report.as_dict(),
        "comparison": cmp,
        "gx_dim_halved_step": halved.gx_dim_,
        "gx_dim_stable": halved.gx_dim_ == report.gx_dim,
    }
    return bool(report.transitive and cmp["match"]), result


def _even_field(x, radius):
    from .reconstruction import SampledVectorField
    x = np.asarray(x, dtype=float)
    return SampledVectorField(lambda y: np.asarray(y, dtype=float) - x, "radial y - x (even)", radius)


def cmd_flows(cfg, inputs):
    from .flows import automorphism_flow_check, verify_flow_identity
    from .reconstruction import r_field, tangent_maps, tangent_split
    S = _black_box(cfg, inputs, cfg.flows_trust_radius)
    n = S.dim
    x = np.zeros(n)
    rng = np.random.default_rng(cfg.seed)
    probes = sample_ball(rng, cfg.n_probes, n, cfg.probe_radius)
    p_pts = sample_ball(rng, cfg.n_probes, n, cfg.probe_radius)
    q_pts = sample_ball(rng, cfg.n_probes, n, cfg.probe_radius)
    td = tangent_maps(S, x, cfg.fd_step)
    t_minus, _ = tangent_split(td)
    fields = [replace(r_field(S, x, v, cfg.fd_step), label=f"R_0(T-_{i + 1})")
              for i, v in enumerate(t_minus)]
    if cfg.inject_even_field:
        fields.insert(0, _even_field(x, S.domain_radius))
    if not fields:
        return False, {"fields": [], "note": "T^- is zero; there is no R-field to flow"}
    times = cfg.flow_times
    out = []
    for F in fields:
        try:
            fr = verify_flow_identity(S, x, F, times, probes, cfg.flow_step, cfg.parity_tol,
                                      cfg.fd_step)
        except ParityViolated as exc:
            raise ParityViolated(f"{F.label}: {exc}") from exc
        entry = fr.as_dict()
        entry["halving_ratios"] = {
            f"{t}/{t / 2}": fr.residuals[times.index(t)] / fr.residuals[times.index(t / 2)]
            for t in times if t / 2 in times and fr.residuals[times.index(t / 2)] > 0}
        entry["automorphism_residual"] = automorphism_flow_check(
            S, F, cfg.automorphism_time, p_pts, q_pts, cfg.flow_step)
        entry["passed"] = bool(entry["max_residual"] <= cfg.flow_tol
                               and entry["automorphism_residual"] <= cfg.flow_tol)
        out.append(entry)
    result = {"base_point": x.tolist(), "t_minus_dim": int(t_minus.shape[0]), "fields": out,
              "tangent_residuals": {"TS_involution": td.involution_residual,
                                    "TS_splitting": td.splitting_residual}}
    return all(e["passed"] for e in out), result


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify,
            "roundtrip": cmd_roundtrip, "flows": cmd_flows}


# -- driver -------------------------------------------------------------------

def _thread_limit():
    raw = os.environ.get("REFLEXIA_THREADS")
    if raw is None or raw.strip() == "":
        return nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise InputError(f"REFLEXIA_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def run(command, config_path, out=None, seed=None):
    """Execute one command; returns ``(exit_code, report_dict, out_path)``."""
    report = {"command": command, "version": __version__}
    out_path = Path(out) if out is not None else None
    try:
        cfg = RunConfig.load(config_path)
        if seed is not None:
            cfg.seed = int(seed)
        report["config"] = cfg.as_dict()
        if out_path is None and cfg.out is not None:
            out_path = cfg.resolve(cfg.out)
        with _thread_limit():
            inputs = Inputs(cfg)
            passed, result = COMMANDS[command](cfg, inputs)
    except InputError as exc:
        report.update(passed=False, exit_code=EXIT_INPUT, error=f"input error: {exc}")
        return EXIT_INPUT, report, out_path
    except _CHECK_ERRORS as exc:
        partial = exc.args[1] if len(exc.args) > 1 and isinstance(exc.args[1], dict) else None
        report.update(passed=False, exit_code=EXIT_FAIL,
                      error=f"{type(exc).__name__}: {exc.args[0] if exc.args else exc}")
        if partial is not None:
            report["result"] = partial
        return EXIT_FAIL, report, out_path
    code = EXIT_PASS if passed else EXIT_FAIL
    report.update(passed=bool(passed), exit_code=code, error=None, result=result)
    return code, report, out_path


def build_parser():
    parser = argparse.ArgumentParser(
        prog="reflexia", description="Local reflexion spaces: checks and reconstruction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="run configuration (JSON)")
    parser.add_argument("--out", help="report path; defaults to the config's 'out' or stdout")
    parser.add_argument("--seed", type=int, help="override the sampler seed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)  # usage errors exit with 2
    code, report, out_path = run(args.command, args.config, args.out, args.seed)
    text = write_report(report, out_path)
    if out_path is None:
        sys.stdout.write(text)
    status = {EXIT_PASS: "PASS", EXIT_FAIL: "FAIL", EXIT_INPUT: "INPUT ERROR"}[code]
    detail = f": {report['error']}" if report.get("error") else ""
    print(f"reflexia {args.command}: {status}{detail}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
