"""Command-line front end: ``lfp <command> [options]``.

Every command builds a :class:`RunReport` and writes it to stdout (and to
``--out`` if given) as JSON, CSV or a human-readable table.

Exit codes: 0 on success, 2 on invalid input, 3 when a numerical routine
did not reach its tolerance.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Optional, Sequence

import numpy as np

from . import cholesky_bounds as cb
from . import integer_forcing as itf
from . import spectral_bounds as sb
from .lattice_core import NotPositiveDefiniteError, lattice_minimum, read_matrix
from .sampling import RNG_METADATA, wishart_sample

__all__ = ["RunReport", "ValidationError", "NonConvergenceError", "execute", "main", "build_parser"]

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


class ValidationError(ValueError):
    """A parameter violates a precondition."""


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, report: "RunReport"):
        super().__init__(message)
        self.report = report


@dataclass
class RunReport:
    """Record of one command run.

    ``results`` is a list of flat rows.  Stochastic entries carry their
    standard error and replay bit-identically from ``params`` and ``seed``.
    """

    command: str
    argv: list
    params: dict
    results: list = field(default_factory=list)
    seed: Optional[int] = None
    wall_time: float = 0.0
    converged: bool = True
    rng: dict = field(default_factory=lambda: dict(RNG_METADATA))

    def add(self, **row) -> None:
        self.results.append(row)

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, allow_nan=True) + "\n"

    def columns(self) -> list:
        cols: list = []
        for r in self.results:
            for k in r:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        cols = self.columns()
        wr.writerow(cols)
        for r in self.results:
            wr.writerow([_fmt(r.get(c), 17) for c in cols])
        return buf.getvalue()

    def to_human(self) -> str:
        cols = self.columns()
        rows = [[_fmt(r.get(c), 6) for c in cols] for r in self.results]
        widths = [max([len(c)] + [len(row[i]) for row in rows]) for i, c in enumerate(cols)]
        out = [f"# {self.command}  " + " ".join(f"{k}={_fmt(v, 6)}" for k, v in self.params.items())]
        out.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
        for row in rows:
            out.append("  ".join(x.ljust(w) for x, w in zip(row, widths)))
        out.append(f"# seed={self.seed} wall_time={self.wall_time:.3f}s converged={self.converged}")
        return "\n".join(out) + "\n"

    def render(self, fmt: str) -> str:
        return {"json": self.to_json, "csv": self.to_csv, "human": self.to_human}[fmt]()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if is_dataclass(x):
        return _jsonable(asdict(x))
    return x


def _fmt(v, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{digits}g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_fmt(t, digits) for t in np.ravel(v))
    return str(v)


# --------------------------------------------------------------------------
# argument helpers


def _floats(text: str) -> list:
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _seed(text: str) -> int:
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return s


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _load_json_arg(text: str) -> dict:
    """JSON given inline or as a path to a file."""
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"density spec is not valid JSON: {exc}") from None


def _bp_row(name: str, bp: sb.BoundPair, **extra) -> dict:
    return {"quantity": name, "lower": bp.lower, "upper": bp.upper, "lower_error": bp.lower_error,
            "upper_error": bp.upper_error, "lower_label": bp.lower_label, "upper_label": bp.upper_label, **extra}


# --------------------------------------------------------------------------
# commands


def cmd_min(ns, rep: RunReport):
    try:
        Q = read_matrix(ns.matrix)
    except OSError as exc:
        raise ValidationError(f"cannot read matrix file: {exc}") from None
    res = lattice_minimum(Q)
    rep.params.update(matrix=ns.matrix, dim=int(Q.shape[0]))
    rep.add(value=res.value, argmin=list(map(int, res.argmin)), nodes_visited=res.nodes_visited,
            label="exact enumeration")


def cmd_spectral_bounds(ns, rep: RunReport):
    _require(ns.delta > 0, "delta must be positive")
    d = ns.d
    if ns.axes is not None:
        d = len(ns.axes)
    _require(d is not None and d >= 2, "give --d >= 2 or --axes with at least two entries")
    rep.params.update(delta=ns.delta, d=d, axes=ns.axes, eps=ns.eps, mc_n=ns.mc_n)
    rep.add(**_bp_row("km_bounds", sb.km_bounds(d, ns.delta)))
    if ns.axes is not None:
        ax = np.asarray(ns.axes, dtype=float)
        _require(bool(np.all(ax > 0)), "axes must be positive")
        _require(abs(float(np.prod(ax)) - 1.0) < 1e-9, "axes must have product 1")
        cap = sb.cap_measure(math.sqrt(ns.delta) * ax)
        rep.add(quantity="cap_measure", value=cap.value, error=cap.error_estimate, label=cap.method)
        t2 = sb.theorem2_bounds(ax, ns.delta, mc_n=ns.mc_n, seed=ns.seed)
        rep.add(**_bp_row("theorem2", t2.bounds, n_primitive=t2.n_primitive))
        if ns.verify:
            mc = sb.p_d_ellipsoid_mc(math.sqrt(ns.delta) * ax, ns.mc_n, seed=ns.seed)
            ok = t2.bounds.contains(mc.value, mc.error_estimate)
            rep.add(quantity="ellipsoid_mc", value=mc.value, error=mc.error_estimate, label=mc.method,
                    status="PASS" if ok else "FAIL")
        rep.converged = rep.converged and cap.converged
    if ns.eps is not None:
        _require(0 < ns.eps < 1, "eps must lie in (0, 1)")
        if not ns.delta < 1:
            rep.add(quantity="theorem3", label="skipped: needs delta < 1")
            return
        t3 = sb.theorem3_bounds(d, ns.eps, ns.delta, mc_n=max(ns.mc_n, 1000), seed=ns.seed)
        rep.add(**_bp_row("theorem3", t3.bounds, exact_zero=t3.exact_zero))
        rep.converged = rep.converged and t3.s_d.converged and t3.S_d.converged


def cmd_theorem3(ns, rep: RunReport):
    _require(ns.d >= 2, "d must be >= 2")
    _require(0 < ns.eps < 1, "eps must lie in (0, 1)")
    _require(0 < ns.delta < 1, "delta must lie in (0, 1)")
    _require(ns.mc_n >= 1000, "mc-n must be >= 1000")
    rep.params.update(d=ns.d, eps=ns.eps, delta=ns.delta, mc_n=ns.mc_n)
    t3 = sb.theorem3_bounds(ns.d, ns.eps, ns.delta, mc_n=ns.mc_n, seed=ns.seed)
    c, C = t3.constants
    rep.add(**_bp_row("bounds", t3.bounds, exact_zero=t3.exact_zero))
    rep.add(quantity="s_d", value=t3.s_d.value, error=t3.s_d.error_estimate, envelope=t3.envelope.lower)
    rep.add(quantity="S_d", value=t3.S_d.value, error=t3.S_d.error_estimate, envelope=t3.envelope.upper)
    rep.add(quantity="c_d", value=c)
    rep.add(quantity="C_d", value=C)
    if ns.verify:
        mc = sb.tau_epsilon_mc(ns.d, ns.eps, ns.delta, max(ns.mc_n // 2, 1000), seed=ns.seed)
        ok = t3.bounds.contains(mc.value, mc.error_estimate)
        rep.add(quantity="tau_mc", value=mc.value, error=mc.error_estimate, status="PASS" if ok else "FAIL")
    rep.converged = t3.s_d.converged and t3.S_d.converged


def cmd_wishart_table(ns, rep: RunReport):
    for dl in ns.deltas:
        _require(dl >= 0, "deltas must be nonnegative")
    rep.params.update(deltas=ns.deltas)
    for row in cb.wishart_table(ns.deltas):
        rep.add(**row)


def cmd_chol_bounds(ns, rep: RunReport):
    _require(0 < ns.delta < 1, "delta must lie in (0, 1)")
    spec = _load_json_arg(ns.density)
    f = cb.density_from_spec(spec)
    rep.params.update(density=spec, delta=ns.delta, mc_n=ns.mc_n)
    t4 = cb.theorem4_bounds(f, ns.delta, mc_n=ns.mc_n, seed=ns.seed)
    rep.add(**_bp_row("theorem4", t4.bounds, raw_lower=t4.raw_lower, raw_upper=t4.raw_upper, density=f.name))
    if ns.verify:
        if f.sampler is None:
            raise ValidationError("--verify needs a density with a sampler")
        from .sampling import make_generator

        Q = f.sampler(make_generator(ns.seed, 1), ns.mc_n)
        p, se = cb.event_frequency(Q, ns.delta)
        ok = t4.bounds.contains(p, se)
        rep.add(quantity="frequency_mc", value=p, error=se, status="PASS" if ok else "FAIL")
    rep.converged = t4.converged


def _channel(ns) -> itf.ChannelParams:
    if ns.gamma is not None:
        _require(ns.gamma > 0, "gamma must be positive")
        c0 = ns.c0_direct if ns.c0_direct is not None else None
        _require(c0 is not None, "with --gamma give the normalized constant via --c0-direct")
        return itf.ChannelParams(ns.gamma, c0, ns.m)
    _require(ns.snr > 0, "SNR must be positive")
    return itf.ChannelParams.from_channel(ns.m, ns.n, ns.c0, ns.snr, ns.c0_units)


def cmd_snr_table(ns, rep: RunReport):
    P = _channel(ns)
    rep.params.update(gamma=P.gamma, c0=P.c0, d=P.d, measure=ns.measure, s=ns.s, **P.source)
    for s in ns.s:
        _require(s > 0, "s must be positive")
    rows = itf.snr_table(ns.s, P, measure=ns.measure, mc_n=ns.mc_n, seed=ns.seed)
    for r in rows:
        rep.add(s=r.s, delta_s=r.delta_s, lower_bound=r.lower_bound, error=r.error_estimate,
                reference=r.reference, delta_reference=r.delta_reference, status=r.status)


def cmd_kappa(ns, rep: RunReport):
    P = _channel(ns)
    _require(P.d == 2, "kappa is available for d = 2")
    rep.params.update(gamma=P.gamma, c0=P.c0, method=ns.method, measure=ns.measure)
    try:
        k = itf.kappa_d(P, ns.method, ns.rel_tol, measure=ns.measure)
    except ArithmeticError as exc:
        rep.converged = False
        rep.add(quantity="kappa", value=float("nan"), label=str(exc))
        return
    rep.add(quantity="kappa", value=k.value, error=k.error_estimate, method=k.method, other_method=k.other)
    rep.converged = k.converged


def cmd_if_verify(ns, rep: RunReport):
    P = _channel(ns)
    _require(P.d == 2, "if-verify samples the d = 2 manifold")
    _require(ns.samples >= 1000, "samples must be >= 1000")
    deltas = ns.delta if ns.delta is not None else [float(itf.delta_s(s, P)) for s in ns.s]
    rep.params.update(gamma=P.gamma, c0=P.c0, samples=ns.samples, measure=ns.measure, deltas=deltas)
    for dl in deltas:
        _require(0 < dl < 1, "delta must lie in (0, 1)")
        lb = itf.m2_lower_bound(dl, P, measure=ns.measure)
        mc = itf.m2_monte_carlo(dl, P, ns.samples, seed=ns.seed, measure=ns.measure)
        ok = lb.value <= mc.value + 3.0 * mc.error_estimate
        rep.add(delta=dl, lower_bound=lb.value, mc_estimate=mc.value, mc_error=mc.error_estimate,
                rejected=mc.rejected, status="PASS" if ok else "FAIL")
        rep.converged = rep.converged and lb.converged


def cmd_mc_verify(ns, rep: RunReport):
    _require(ns.samples >= 1000, "samples must be >= 1000")
    rep.params.update(samples=ns.samples, deltas=ns.deltas)
    W = wishart_sample(np.eye(2), 2, ns.seed, ns.samples)
    for dl in ns.deltas:
        _require(0 < dl < 1, "delta must lie in (0, 1)")
        bp = cb.wishart_J1_J2(dl)
        p, se = cb.event_frequency(W, dl)
        ok = bp.contains(p, se)
        rep.add(delta=dl, J1=bp.lower, J2=bp.upper, frequency=p, error=se, status="PASS" if ok else "FAIL")


COMMANDS: dict = {
    "min": cmd_min,
    "spectral-bounds": cmd_spectral_bounds,
    "theorem3": cmd_theorem3,
    "wishart-table": cmd_wishart_table,
    "chol-bounds": cmd_chol_bounds,
    "snr-table": cmd_snr_table,
    "kappa": cmd_kappa,
    "if-verify": cmd_if_verify,
    "mc-verify": cmd_mc_verify,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv", "human"), default="human")
    p.add_argument("--json", dest="format", action="store_const", const="json", help="same as --format json")
    p.add_argument("--csv", dest="format", action="store_const", const="csv", help="same as --format csv")
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive_int, default=None, help="worker cap (default: LFP_THREADS or 1)")


def _channel_args(p: argparse.ArgumentParser, *, default_measure: str) -> None:
    p.add_argument("--c0", type=float, default=30.0, help="capacity C0 (see --c0-units)")
    p.add_argument("--c0-units", choices=("paper", "bits", "nats"), default="paper")
    p.add_argument("--snr", type=float, default=5.0, help="linear SNR, gamma = 1/SNR")
    p.add_argument("--m", type=int, default=2, help="number of users")
    p.add_argument("--n", type=int, default=2, help="number of receive antennas")
    p.add_argument("--gamma", type=float, default=None, help="give gamma directly (with --c0-direct)")
    p.add_argument("--c0-direct", type=float, default=None, help="normalized constant c0 when --gamma is used")
    p.add_argument("--measure", choices=itf.MEASURES, default=default_measure)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lfp", description="Probabilities of short lattice vectors: bounds and checks.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("min", help="exact lattice minimum of a form")
    p.add_argument("--matrix", required=True, help="JSON {dim, rows} or whitespace text file")
    _common(p)

    p = sub.add_parser("spectral-bounds", help="bounds from the spectral decomposition")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--axes", type=_floats, default=None, help="diagonal part Delta, comma separated, product 1")
    p.add_argument("--eps", type=float, default=None, help="also evaluate the log-uniform ensemble bounds")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--mc-n", type=_positive_int, default=20000)
    p.add_argument("--verify", action="store_true", help="add an exact-lattice Monte-Carlo estimate")
    _common(p)

    p = sub.add_parser("theorem3", help="log-uniform diagonal ensemble bounds")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mc-n", type=_positive_int, default=200000)
    p.add_argument("--verify", action="store_true")
    _common(p)

    p = sub.add_parser("wishart-table", help="J1/J2 bracket for the W_2(I, 2) ensemble")
    p.add_argument("--deltas", type=_floats, default=[0.2, 0.1, 0.01, 0.001])
    _common(p)

    p = sub.add_parser("chol-bounds", help="bounds from the Cholesky diagonal density")
    p.add_argument("--density", required=True, help="JSON spec inline or a path (families: wishart, gaussian-bump)")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mc-n", type=_positive_int, default=200000)
    p.add_argument("--verify", action="store_true")
    _common(p)

    p = sub.add_parser("snr-table", help="lower bounds on the effective-SNR event")
    _channel_args(p, default_measure="chart")
    p.add_argument("--s", type=_floats, default=[0.3125, 1, 1.5, 2, 5, 10, 30])
    p.add_argument("--mc-n", type=_positive_int, default=20000)
    _common(p)

    p = sub.add_parser("kappa", help="total measure of the d = 2 channel manifold")
    _channel_args(p, default_measure="surface")
    p.add_argument("--method", choices=("a", "b", "both"), default="both")
    p.add_argument("--rel-tol", type=float, default=1e-10)
    _common(p)

    p = sub.add_parser("if-verify", help="Monte-Carlo check of the d = 2 lower bound")
    _channel_args(p, default_measure="chart")
    p.add_argument("--samples", type=_positive_int, default=100000)
    p.add_argument("--delta", type=_floats, default=None)
    p.add_argument("--s", type=_floats, default=[1.0])
    _common(p)

    p = sub.add_parser("mc-verify", help="Monte-Carlo check of the Wishart bracket")
    p.add_argument("--samples", type=_positive_int, default=100000)
    p.add_argument("--deltas", type=_floats, default=[0.2, 0.01])
    _common(p)
    return ap


def execute(argv: Sequence[str]) -> RunReport:
    """Parse ``argv`` and run the command.

    Raises
    ------
    ValidationError
        For inputs violating a precondition.
    NonConvergenceError
        When a routine missed its tolerance; the partial report is attached.
    SystemExit
        From argparse on unknown commands or malformed flags.
    """
    argv = list(argv)
    ns = build_parser().parse_args(argv)
    if ns.threads is not None:
        os.environ["LFP_THREADS"] = str(ns.threads)
    rep = RunReport(ns.command, argv, {}, seed=ns.seed)
    t0 = time.perf_counter()
    try:
        COMMANDS[ns.command](ns, rep)
    except (ValidationError, NotPositiveDefiniteError) as exc:
        raise ValidationError(str(exc)) from exc
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    rep.wall_time = time.perf_counter() - t0
    if not rep.converged:
        raise NonConvergenceError(f"{ns.command}: a numerical routine did not reach its tolerance", rep)
    return rep


def _emit(rep: RunReport, fmt: str, out: Optional[str], stream) -> None:
    text = rep.render(fmt)
    stream.write(text)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _peek(argv: Sequence[str], flag: str, default=None):
    for i, a in enumerate(argv):
        if a == flag and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith(flag + "="):
            return a.split("=", 1)[1]
    return default


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    fmt = "json" if "--json" in argv else "csv" if "--csv" in argv else _peek(argv, "--format", "human")
    try:
        rep = execute(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    except ValidationError as exc:
        stderr.write(f"lfp: invalid input: {exc}\n")
        return EXIT_INVALID
    except NonConvergenceError as exc:
        stderr.write(f"lfp: {exc}\n")
        _emit(exc.report, fmt, _peek(argv, "--out"), stdout)
        return EXIT_NONCONVERGED
    _emit(rep, fmt, _peek(argv, "--out"), stdout)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
