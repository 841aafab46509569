"""Command-line front end.

    twolevel <command> --config run.cfg [--out path] [--threads n] [--key=value ...]

Every run writes its CSV (or report) through a temporary file in the
target directory followed by a rename, so a failed run leaves no partial
output.  Exit codes: 0 success, 2 configuration error, 3 numeric error,
4 I/O error.  Errors go to stderr as ``error[<category>]: <message>``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import analysis, notgate, stroboscope
from .bloch import CanonicalPoint, bloch_from_canonical, state_from_canonical
from .config import COMMANDS, RunConfig, parse_config
from .errors import ConfigError, NumericError, OutputError, TwoLevelError
from .fields import FieldSpec, evaluate_field
from .propagator import bloch_from_spinor, trajectory

DEFAULT_OUT = {
    "simulate": "trajectory.csv",
    "strobe": "map.csv",
    "fit-gamma": "gamma.txt",
    "rwa-scan": "rwa_scan.csv",
    "lyapunov": "lyapunov.csv",
    "not-detect": "not_events.csv",
    "not-search": "not_search.csv",
}

HEADERS = {
    "simulate": ("t", "re_c_plus", "im_c_plus", "re_c_minus", "im_c_minus", "Sx", "Sy", "Sz", "energy"),
    "strobe": ("series_id", "k", "q", "p", "H"),
    "rwa-scan": ("B2T", "t", "err", "err_phase_insensitive"),
    "lyapunov": ("horizon", "d0", "lambda"),
    "not-detect": ("q0", "p0", "t_not", "min_overlap"),
    "not-search": ("B0", "gamma", "residual"),
}


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_outputs(files: dict):
    """Write {path: text} atomically: all temporaries first, then renames."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or Path("."))
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise OutputError(f"cannot write output: {exc}") from exc


def _require_finite(rows, what):
    arr = np.asarray([r[-1] for r in rows], dtype=float) if rows else np.zeros(0)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {what}")


# -- commands ------------------------------------------------------------------
# each returns (files, summary_line)


def _cmd_simulate(cfg: RunConfig, out: Path):
    spec = cfg.field_spec()
    ctrl = cfg.step_control()
    c0 = CanonicalPoint(cfg.get("sim.q0", 0.0), cfg.get("sim.p0", 0.0))
    T = spec.reference_period
    if T is None:
        b = float(np.linalg.norm(evaluate_field(spec, 0.0)))
        T = 2.0 * math.pi / b if b > 0 else 1.0
    t_end = cfg.get("sim.t_end", 10.0 * T)
    dt = T / cfg.get("sim.samples_per_period", 64)
    n = max(1, math.ceil(t_end / dt - 1e-9))
    dt = t_end / n
    times, psi = trajectory(spec, state_from_canonical(c0), 0.0, dt, n, ctrl)
    S = bloch_from_spinor(psi)
    rows = []
    for t, c, s in zip(times, psi, S):
        e = -float(evaluate_field(spec, t) @ s)
        rows.append((t, c[0].real, c[0].imag, c[1].real, c[1].imag, s[0], s[1], s[2], e))
    _require_finite(rows, "trajectory")
    norm_drift = float(np.max(np.abs(np.linalg.norm(psi, axis=1) - 1.0)))
    return {out: csv_text(HEADERS["simulate"], rows)}, f"samples={len(rows)} t_end={t_end:.6g} norm_drift={norm_drift:.3g}"


def _cmd_strobe(cfg: RunConfig, out: Path):
    spec = cfg.field_spec()
    grid = stroboscope.default_grid(
        cfg.get("strobe.grid", 20), cfg.get("strobe.q_min", -0.95), cfg.get("strobe.q_max", 0.95), cfg.get("strobe.p0", 0.0)
    )
    ctrl = cfg.step_control(stroboscope.STROBE_CONTROL)
    series = stroboscope.strobe_map(spec, grid, cfg.get("strobe.periods", 500), ctrl, threads=cfg.threads)
    rows = []
    for sid, s in enumerate(series):
        rows.extend((sid, int(k), q, p, h) for k, q, p, h in zip(s.k, s.q, s.p, s.H))
    _require_finite(rows, "strobe map")
    return {out: csv_text(HEADERS["strobe"], rows)}, f"points={len(rows)} series={len(series)}"


def _cmd_fit_gamma(cfg: RunConfig, out: Path):
    spec = cfg.field_spec()
    c0 = (cfg.get("fit.q0", 0.5), cfg.get("fit.p0", 0.0))
    ctrl = cfg.step_control(stroboscope.STROBE_CONTROL)
    fit = stroboscope.gamma_of_field(spec, c0, cfg.get("fit.periods", 300), ctrl)
    return {out: fit.report()}, f"gamma={fit.gamma:.6g} r2={fit.r_squared:.6g}"


def _cmd_rwa_scan(cfg: RunConfig, out: Path):
    B3 = cfg.require("field.B3")
    omega = cfg.get("field.omega", 2.0 * B3)
    psi0 = state_from_canonical((cfg.get("rwa.q0", 1.0), cfg.get("rwa.p0", 0.0)))
    T = 2.0 * math.pi / omega
    ctrl = cfg.step_control()
    rows, scans = [], []
    for x in cfg.require("rwa.B2T"):
        scan = analysis.rwa_error_scan(
            x / T,
            B3,
            omega,
            psi0,
            "scaled_t",
            cfg.get("rwa.c", 1.0),
            samples_per_period=cfg.get("rwa.samples_per_period", 32),
            allow_off_resonance=cfg.get("rwa.allow_off_resonance", False),
            ctrl=ctrl,
        )
        scans.append(scan)
        rows.extend((x, t, e, ep) for t, e, ep in zip(scan.times, scan.err, scan.err_phase_insensitive))
    _require_finite(rows, "rwa scan")
    summary = f"rows={len(rows)}"
    if len(scans) >= 2:
        x = np.log([s.B2T for s in scans])
        y = np.log([s.max_error for s in scans])
        alpha = float(np.polyfit(x, y, 1)[0])
        summary += f" alpha={alpha:.6g}"
    return {out: csv_text(HEADERS["rwa-scan"], rows)}, summary


def _random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _cmd_lyapunov(cfg: RunConfig, out: Path):
    spec = cfg.field_spec()
    ctrl = cfg.step_control()
    T = spec.reference_period
    S0 = bloch_from_canonical((cfg.get("lyap.q0", 0.3), cfg.get("lyap.p0", 0.0)))
    d0 = cfg.get("lyap.d0", 1e-8)
    renorm = cfg.get("lyap.renorm_periods", 1.0) * T
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for h in cfg.get("lyap.periods", [1e4]):
            est = analysis.lyapunov_estimate(spec, S0, d0, h * T, renorm, ctrl)
            rows.append((est.horizon, d0, est.lam))
    _require_finite(rows, "lyapunov")
    drift = 0.0
    n_pairs = cfg.get("lyap.pairs", 0)
    if n_pairs:
        rng = np.random.default_rng(cfg.seed)
        A, B = _random_unit(rng, n_pairs), _random_unit(rng, n_pairs)
        horizon = cfg.get("lyap.pair_periods", 1e3) * T
        for S1, S2 in zip(A, B):
            drift = max(drift, analysis.distance_conservation_run(spec, S1, S2, horizon, 1, ctrl).max_deviation)
    summary = f"lambda={rows[-1][2]:.3g} horizon={rows[-1][0]:.6g}"
    if n_pairs:
        summary += f" max_D_drift={drift:.3g}"
    return {out: csv_text(HEADERS["lyapunov"], rows)}, summary


def _cmd_not_detect(cfg: RunConfig, out: Path):
    spec = cfg.field_spec()
    ctrl = cfg.step_control()
    T = spec.reference_period
    p0 = cfg.get("not.p0", math.pi / 2)
    q0s = cfg.get("not.q0", [0.0])
    horizon = cfg.get("not.horizon_periods", 3.0) * T
    kw = dict(threshold=cfg.get("not.threshold", notgate.DEFAULT_THRESHOLD), samples_per_period=cfg.get("not.samples_per_period", 200), ctrl=ctrl)
    results = notgate.detect_not_many(spec, [(q, p0) for q in q0s], horizon, cfg.threads, **kw)
    rows = [(q, p0, e.t_not, e.min_overlap) for q, evs in zip(q0s, results) for e in evs]
    firsts = [evs[0].t_not for evs in results if evs]
    summary = f"events={len(rows)}"
    if firsts:
        summary += f" first_t_not={min(firsts):.6g} ({min(firsts) / math.pi:.6g} pi)"
    return {out: csv_text(HEADERS["not-detect"], rows)}, summary


def _cmd_not_search(cfg: RunConfig, out: Path):
    kind = cfg.get("search.kind", "NRzDrive")
    omega, B1 = cfg.require("field.omega"), cfg.require("field.B1")
    ctrl = cfg.step_control(stroboscope.STROBE_CONTROL)
    sol = notgate.nr_not_search(
        omega,
        B1,
        (cfg.get("search.B0_lo", 0.5), cfg.get("search.B0_hi", 2.0)),
        (cfg.get("search.fit_q0", 0.5), cfg.get("search.fit_p0", 0.0)),
        cfg.get("search.fit_periods", 300),
        ctrl,
        cfg.get("search.residual_tol", 1e-4),
        cfg.get("search.xtol", 1e-4),
        field_kind=kind,
    )
    report = sol.report()
    if cfg.get("search.validate", False):
        spec = (FieldSpec.nrz_drive if kind == "NRzDrive" else FieldSpec.rotating)(
            sol.B0, B1, omega
        )
        q0s = cfg.get("search.validate_q0", [-0.8, -0.4, 0.0, 0.4, 0.8])
        p0 = math.pi / 2 if kind == "NRzDrive" else 0.0
        thr = cfg.get("search.validate_threshold", 1e-2)
        horizon = sol.predicted_t_not[-1] + 0.5 * math.pi / omega
        results = notgate.detect_not_many(spec, [(q, p0) for q in q0s], horizon, cfg.threads, threshold=thr)
        lines = []
        for q, evs in zip(q0s, results):
            hits = [e for e in evs if min(abs(e.t_not - t) for t in sol.predicted_t_not) <= 0.1]
            if not hits:
                raise NumericError(f"validation failed: no NOT event near a predicted instant for q0 = {q!r}")
            first = hits[0]
            lines.append(f"validate  q0={q:.17g} p0={p0:.17g} t_not={first.t_not:.17g} overlap={first.min_overlap:.17g}")
        report += "\n".join(lines) + "\n"
    rows = sol.iterations
    report_path = out.with_name(out.stem + ".report.txt")
    files = {out: csv_text(HEADERS["not-search"], rows), report_path: report}
    return files, f"B0={sol.B0:.4f} gamma={sol.gamma:.4f} residual={sol.residual:.3g} iterations={len(rows)}"


COMMAND_TABLE = {
    "simulate": _cmd_simulate,
    "strobe": _cmd_strobe,
    "fit-gamma": _cmd_fit_gamma,
    "rwa-scan": _cmd_rwa_scan,
    "lyapunov": _cmd_lyapunov,
    "not-detect": _cmd_not_detect,
    "not-search": _cmd_not_search,
}


def execute(cfg: RunConfig) -> str:
    """Run the pipeline and write outputs; returns the summary line."""
    out = Path(cfg.out or DEFAULT_OUT[cfg.command])
    if not out.parent.is_dir():
        raise OutputError(f"output directory does not exist: {out.parent}")
    files, summary = COMMAND_TABLE[cfg.command](cfg, out)
    write_outputs(files)
    return f"{cfg.command}: {summary} out={out}"


def _report(exc: TwoLevelError, stream):
    print(f"error[{exc.category}]: {exc}", file=stream)
    return exc.exit_code


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a parsed config; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        print(execute(config), file=stdout)
    except TwoLevelError as exc:
        return _report(exc, stderr)
    except (FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        return _report(NumericError(str(exc)), stderr)
    return 0


def _split_overrides(extra):
    overrides = []
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r}; overrides take the form --key=value")
        key, value = item[2:].split("=", 1)
        overrides.append((key, value))
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twolevel",
        description="Exact two-level dynamics, stroboscopic maps and NOT-gate design.",
        epilog="Any config key can be overridden with --key=value, e.g. --field.B0=1.2.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="pipeline to run (or set command= in the config)")
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--out", help="output path (CSV or report)")
    parser.add_argument("--threads", help="worker threads for sweeps")
    return parser


def main(argv=None) -> int:
    stderr = sys.stderr
    try:
        args, extra = build_parser().parse_known_args(argv)
        overrides = _split_overrides(extra)
        if args.out is not None:
            overrides.append(("out", args.out))
        if args.threads is not None:
            overrides.append(("threads", args.threads))
        text = ""
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise OutputError(f"cannot read config {args.config}: {exc}") from exc
            except UnicodeDecodeError as exc:
                raise ConfigError(f"config {args.config} is not UTF-8: {exc}") from exc
        cfg = parse_config(text, overrides, args.command)
    except TwoLevelError as exc:
        return _report(exc, stderr)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
