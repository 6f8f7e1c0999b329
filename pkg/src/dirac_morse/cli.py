"""``dirac-morse`` command line: spectrum, wavefunction, bands, verify."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .config import ConfigError, RunConfig, apply_overrides, env_overrides, load_config
from .formatting import write_csv, write_json
from .graphene import BandParams, band_surface, dirac_point_gap, lattice_geometry, resolve_w_eval
from .heun import HeunError
from .spectrum import residual_matrix, spectrum_table, solve_state
from .verification import run_verification
from .wavefunction import build_spinor

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNSOLVED = 2
EXIT_VERIFY_FAILED = 3

DEFAULT_CONFIGS = {
    "spectrum": "table1.cfg",
    "wavefunction": "table1_signed.cfg",
    "bands": "bands.cfg",
    "verify": "table1_signed.cfg",
}

SPECTRUM_HEADER = ["N", "k", "l_pseudo", "j_pseudo_times2", "label", "energy", "residual", "reference", "deviation"]
PROFILE_HEADER = ["r", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "density"]


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_spectrum(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    tab = spectrum_table(cfg.physics, cfg.states, cfg.branch, dict(cfg.references))
    write_csv(out / "spectrum.csv", SPECTRUM_HEADER, (
        (r.state.N, r.state.k, r.state.l_pseudo, r.state.j_pseudo_times2, r.state.label,
         r.energy, r.residual_at_root, r.table1_reference, r.deviation)
        for r in tab.results
    ))
    write_csv(out / "spectrum_vs_k.csv", ["N", "k", "energy"],
              ((N, k, E) for N, pts in sorted(tab.plot_data().items()) for k, E in pts))
    report = {
        "config": cfg.source,
        "branch": cfg.branch,
        **tab.report(),
    }
    if cfg.references:
        report["residual_matrix"] = residual_matrix(cfg.physics, dict(cfg.references), cfg.branch)
    write_json(out / "spectrum_report.json", report)
    for r in tab.results:
        if not r.ok:
            print(f"no root: N={r.state.N} k={r.state.k} "
                  f"(min |residual| {r.diagnostics['min_abs_residual']:.6g} at E = "
                  f"{r.diagnostics['argmin_energy']:.10g})", file=sys.stderr)
    return EXIT_OK if tab.all_solved else EXIT_UNSOLVED


def cmd_wavefunction(cfg: RunConfig) -> int:
    states = cfg.wavefunction_states or cfg.states
    out = _out_dir(cfg)
    status = EXIT_OK
    for q in states:
        res = solve_state(cfg.physics, q, cfg.branch)
        if not res.ok:
            print(f"no root: N={q.N} k={q.k}; no profile written "
                  f"(min |residual| {res.diagnostics['min_abs_residual']:.6g})", file=sys.stderr)
            status = EXIT_UNSOLVED
            continue
        try:
            prof = build_spinor(cfg.physics, q, res.energy, cfg.branch, cfg.grid)
        except (HeunError, ZeroDivisionError, ValueError) as exc:
            print(f"N={q.N} k={q.k}: {exc}", file=sys.stderr)
            status = EXIT_UNSOLVED
            continue
        name = f"profile_N{q.N}_k{q.k}.csv"
        write_csv(out / name, PROFILE_HEADER, zip(
            prof.r, prof.psi1.real, prof.psi1.imag, prof.psi2.real, prof.psi2.imag, prof.density))
    return status


def cmd_bands(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    b = cfg.bands
    geo = lattice_geometry(b.a0)
    W = resolve_w_eval(b.w_eval, cfg.physics, geo.a0)
    m = b.m_tilde if b.m_tilde is not None else cfg.physics.m_tilde
    cp = b.C_p if b.C_p is not None else cfg.physics.C_p
    params = BandParams(m, cp, W, b.unit_convention)
    grid = band_surface(geo, params, b.k_window, b.resolution)
    write_csv(out / "bands_surface.csv", ["kx", "ky", "E_minus", "E_plus"], grid.rows())
    report = dirac_point_gap(geo, params)
    report["w_eval_preset"] = b.w_eval
    report["other_unit_convention"] = {
        u: dirac_point_gap(geo, BandParams(m, cp, W, u))["deviation"]
        for u in ("identity", "physical") if u != b.unit_convention
    }
    write_json(out / "gap_report.json", report)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, inject_fault: bool = False) -> int:
    out = _out_dir(cfg)
    report, extras = run_verification(cfg, inject_fault)
    scan = extras["approximation_scan"]
    write_csv(out / "centrifugal_scan.csv", ["r", "lhs", "rhs", "abs_err", "rel_err"],
              zip(scan["r"], scan["lhs"], scan["rhs"], scan["abs_err"], scan["rel_err"]))
    write_json(out / "verification_report.json", report)
    for name, sec in report["sections"].items():
        print(f"{'PASS' if sec['pass'] else 'FAIL'} [{sec['kind']}] {name}")
    return EXIT_OK if report["hard_pass"] else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirac-morse", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file, or the name of a bundled config")
    common.add_argument("--out", help="output directory")
    common.add_argument("--branch", choices=["printed", "magnitude", "signed"],
                        help="square-root convention in the energy equation")
    common.add_argument("--units", choices=["identity", "physical"], help="wavevector unit convention")
    common.add_argument("--w-eval", dest="w_eval", help="zero, de, lattice or a number (fm^-1)")
    common.add_argument("--states", help='states as "N:k,N:k,..."')
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="solve the energy equation per state")
    sub.add_parser("wavefunction", parents=[common], help="write spinor profiles")
    sub.add_parser("bands", parents=[common], help="band surface and Dirac-point gap")
    v = sub.add_parser("verify", parents=[common], help="run the oracle suite")
    v.add_argument("--inject-fault", action="store_true", help="perturb the series recurrence")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    env = env_overrides()
    opts = {k: getattr(args, k, None) for k in ("config", "out", "branch", "units", "w_eval", "states")}
    for k, v in env.items():
        if opts.get(k) is None:
            opts[k] = v
    try:
        cfg = load_config(opts.pop("config") or DEFAULT_CONFIGS[args.command])
        cfg = apply_overrides(cfg, **opts)
        if args.command == "bands":
            resolve_w_eval(cfg.bands.w_eval, cfg.physics, cfg.bands.a0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "spectrum":
        return cmd_spectrum(cfg)
    if args.command == "wavefunction":
        return cmd_wavefunction(cfg)
    if args.command == "bands":
        return cmd_bands(cfg)
    return cmd_verify(cfg, args.inject_fault)


if __name__ == "__main__":
    sys.exit(main())
