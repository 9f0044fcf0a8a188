"""Command-line batch runner.

::

    polyprec run <scenario.toml> [--jobs N] [--out DIR]
    polyprec gen-matrix <family> [key=value ...] -o file.mtx [--seed S]
    polyprec certify <poly-file> [--grid a,b,npoints]

Exit codes: 0 success, 2 some run did not converge (or a polynomial failed
the branch check), 64 bad configuration or usage, 74 input/output error.
The environment variable ``POLYPREC_SEED`` overrides scenario seeds.
"""

import argparse
import csv
import io
import itertools
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, ParseError, PolyprecError
from .funm import RunConfig, invsqrt, reference_solution, sign_action, sqrt_action
from .mmio import read_matrix_market, write_matrix_market
from .operators import (ModelProblemSpec, build_model_problem, laplace_spectral_interval,
                        random_unit_vector)
from .poly import certify_branch, interval_grid, load_poly

__all__ = ["Scenario", "load_scenario", "run_scenario", "emit_convergence_csv",
           "RunResult", "main"]

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_CONFIG = 64
EXIT_IO = 74

FUNCTIONS = ("invsqrt", "sqrt", "sign")
_RUN_FIELDS = {f.name for f in fields(RunConfig)}
_SECTIONS = {
    "scenario": {"name", "function", "seed", "out", "check_base"},
    "rhs": {"kind", "index"},
    "oracle": {"enabled", "dense_limit"},
}
SUMMARY_COLUMNS = ("run", "method", "poly_kind", "d", "iterations", "mvms", "inner_products",
                   "wall_time", "final_est", "final_true_err", "termination",
                   "mvms_setup", "mvms_per_iteration", "passes", "mvms_post", "observed_rate")


class IoError(PolyprecError, OSError):
    """Reading the scenario or writing results failed."""


@dataclass
class Scenario:
    """A parsed scenario file."""

    name: str
    function: str
    seed: int
    matrix: dict
    runs: list
    out: Path
    rhs: dict = field(default_factory=lambda: {"kind": "random"})
    oracle: bool = False
    dense_limit: int = 2000
    base_dir: Path = Path(".")


def _fail(msg):
    raise ConfigError(msg)


def _check_keys(table, allowed, where):
    unknown = set(table) - set(allowed)
    if unknown:
        _fail(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")


def _expand_grid(defaults, grid, check_base=64):
    """Cartesian product of the list-valued ``grid`` entries over ``defaults``.

    Runs without an explicit ``check_every`` use ``max(1, check_base // d)``.
    """
    for key, vals in grid.items():
        if key not in _RUN_FIELDS:
            _fail(f"unknown key in [grid]: {key}")
        if not isinstance(vals, list) or not vals:
            _fail(f"[grid] {key} must be a non-empty list")
    keys = list(grid)
    runs = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        kw = {**defaults, **dict(zip(keys, combo))}
        if kw.get("d", 8) == 1:
            # d = 1 is the unpreconditioned baseline
            kw.update(method="plain", poly_kind="none")
        elif kw.get("method") == "plain":
            continue
        if kw.get("check_every") is None:
            kw["check_every"] = max(1, check_base // int(kw.get("d", 8)))
        if isinstance(kw.get("interval"), list):
            kw["interval"] = tuple(kw["interval"])
        cfg = RunConfig(**kw)
        if cfg not in runs:
            runs.append(cfg)
    return runs


def load_scenario(path, seed_override=None):
    """Parse and validate a scenario file.

    Raises
    ------
    ConfigError
        Bad syntax, unknown keys or invalid run settings.
    IoError
        The file cannot be read.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    _check_keys(doc, {"scenario", "matrix", "rhs", "oracle", "defaults", "grid"}, "top level")
    head = doc.get("scenario", {})
    for sec in _SECTIONS:
        _check_keys(doc.get(sec, {}), _SECTIONS[sec], sec)
    function = head.get("function", "invsqrt")
    if function not in FUNCTIONS:
        _fail(f"function must be one of {FUNCTIONS}")
    seed = int(head.get("seed", 0)) if seed_override is None else int(seed_override)

    matrix = dict(doc.get("matrix", {}))
    if ("family" in matrix) == ("path" in matrix):
        _fail("[matrix] needs exactly one of 'family' or 'path'")
    if "family" in matrix and matrix["family"] not in ModelProblemSpec.FAMILIES:
        _fail(f"unknown matrix family {matrix['family']!r}")

    defaults = dict(doc.get("defaults", {}))
    _check_keys(defaults, _RUN_FIELDS, "defaults")
    if "seed" in defaults:
        _fail("set the seed in [scenario], not [defaults]")
    defaults["seed"] = seed
    if "seed" in doc.get("grid", {}):
        _fail("seed cannot be a grid axis; use POLYPREC_SEED or [scenario] seed")
    try:
        runs = _expand_grid(defaults, doc.get("grid", {"d": [defaults.get("d", 8)]}),
                            int(head.get("check_base", 64)))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if not runs:
        _fail("the grid is empty")

    rhs = {"kind": "random", **doc.get("rhs", {})}
    if rhs["kind"] not in ("random", "unit", "ones"):
        _fail("[rhs] kind must be 'random', 'unit' or 'ones'")
    orc = doc.get("oracle", {})
    base = path.parent
    out = Path(head.get("out", f"results/{head.get('name', path.stem)}"))
    return Scenario(name=str(head.get("name", path.stem)), function=function, seed=seed,
                    matrix=matrix, runs=runs, out=out if out.is_absolute() else base / out,
                    rhs=rhs, oracle=bool(orc.get("enabled", False)),
                    dense_limit=int(orc.get("dense_limit", 2000)), base_dir=base)


def _build_matrix(sc):
    m = dict(sc.matrix)
    if "path" in m:
        p = Path(m.pop("path"))
        p = p if p.is_absolute() else sc.base_dir / p
        try:
            return read_matrix_market(p)
        except OSError as exc:
            raise IoError(f"cannot read matrix {p}: {exc}") from exc
    family = m.pop("family")
    try:
        return build_model_problem(ModelProblemSpec(family, m, seed=sc.seed))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {family}: {exc}") from exc


def _build_rhs(sc, n):
    kind = sc.rhs["kind"]
    if kind == "random":
        return random_unit_vector(n, sc.seed)
    if kind == "ones":
        return np.ones(n) / np.sqrt(n)
    idx = sc.rhs.get("index")
    if idx is None:
        idx = int(np.random.default_rng(sc.seed).integers(n))
    if not 0 <= int(idx) < n:
        _fail(f"[rhs] index {idx} out of range for n = {n}")
    b = np.zeros(n)
    b[int(idx)] = 1.0
    return b


def _auto_interval(sc, cfg):
    # closed-form spectral interval for the Laplace model problems
    if cfg.poly_kind != "chebyshev" or cfg.interval is not None:
        return cfg.interval
    fam = sc.matrix.get("family", "")
    if not fam.startswith("laplace"):
        return None
    lo, hi = laplace_spectral_interval(fam, int(sc.matrix["N"]))
    return (lo * lo, hi * hi) if sc.function == "sign" else (lo, hi)


def run_id(cfg):
    if cfg.method == "plain":
        return f"plain_d{cfg.d:02d}"
    return f"{cfg.method}_{cfg.poly_kind}_d{cfg.d:02d}"


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def emit_convergence_csv(report, path, oracle=None):
    """Write one row per checkpoint: ``m, mvms_cumulative, est_rel_diff[, true_rel_err]``.

    ``oracle`` defaults to whether any checkpoint carries a true error.
    """
    if not report.checkpoints:
        raise ValueError("report has no checkpoints")
    if oracle is None:
        oracle = any(c.true_rel_err is not None for c in report.checkpoints)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["m", "mvms_cumulative", "est_rel_diff"] + (["true_rel_err"] if oracle else [])
    w.writerow(head)
    for c in report.checkpoints:
        row = [_num(c.m), _num(c.mvms), _num(c.est_rel_diff)]
        if oracle:
            row.append(_num(c.true_rel_err))
        w.writerow(row)
    try:
        _atomic_write(path, buf.getvalue())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def observed_rate(report):
    """Geometric mean reduction per iteration before the error floor.

    Measured from the first checkpoint to the first one within a factor 10
    of the smallest value, using the true error when every checkpoint has
    one and the estimate otherwise (whose first value is a placeholder).
    """
    cps = report.checkpoints
    if all(c.true_rel_err is not None for c in cps):
        pts = [(c.m, c.true_rel_err) for c in cps]
    else:
        pts = [(c.m, c.est_rel_diff) for c in cps[1:]]
    pts = [(m, e) for m, e in pts if e > 0]
    if len(pts) < 2:
        return None
    floor = 10 * min(e for _, e in pts)
    end = next(i for i, (_, e) in enumerate(pts) if e <= floor)
    if end == 0:
        return None
    (m0, e0), (m1, e1) = pts[0], pts[end]
    return float((e1 / e0) ** (1.0 / (m1 - m0)))


@dataclass
class RunResult:
    cfg: RunConfig
    report: object = None
    error: str = None

    @property
    def ok(self):
        return self.error is None and self.report.converged


def _execute(sc, A, b, ref, cfg):
    driver = {"invsqrt": invsqrt, "sqrt": sqrt_action, "sign": sign_action}[sc.function]
    try:
        _, rep = driver(A, b, cfg=cfg, interval=_auto_interval(sc, cfg), reference=ref)
    except ConfigError:
        raise
    except (PolyprecError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return RunResult(cfg, error=f"{type(exc).__name__}: {exc}")
    emit_convergence_csv(rep, sc.out / f"{run_id(cfg)}.csv", oracle=ref is not None)
    return RunResult(cfg, rep)


def _summary_row(res):
    cfg = res.cfg
    row = {"run": run_id(cfg), "method": cfg.method, "poly_kind": cfg.poly_kind, "d": cfg.d}
    if res.error is not None:
        row["termination"] = "error"
        return row
    rep = res.report
    row.update(iterations=rep.iterations, mvms=rep.mvms, inner_products=rep.inner_products,
               wall_time=rep.wall_time, final_est=rep.final_est,
               final_true_err=rep.final_true_err, termination=rep.termination,
               mvms_setup=rep.mvms_setup, mvms_per_iteration=rep.mvms_per_iteration,
               passes=rep.passes, mvms_post=rep.mvms - rep.checkpoints[-1].mvms,
               observed_rate=observed_rate(rep))
    return row


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_summary(results, out):
    """``summary.csv`` (17 digits) and an aligned ``summary.txt``, rows ordered by d."""
    rows = [_summary_row(r) for r in sorted(results, key=lambda r: (r.cfg.d, run_id(r.cfg)))]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_num(row.get(c)) if isinstance(row.get(c), (float, int, np.integer))
                    and not isinstance(row.get(c), bool) else (row.get(c) or "")
                    for c in SUMMARY_COLUMNS])
    cells = [list(SUMMARY_COLUMNS)] + [[_cell(row.get(c)) for c in SUMMARY_COLUMNS] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(SUMMARY_COLUMNS))]
    text = "\n".join("  ".join(c.rjust(wd) for c, wd in zip(r, widths)).rstrip()
                     for r in cells) + "\n"
    errors = [f"{run_id(r.cfg)}: {r.error}" for r in results if r.error]
    if errors:
        text += "\nerrors:\n" + "\n".join(sorted(errors)) + "\n"
    try:
        _atomic_write(out / "summary.csv", buf.getvalue())
        _atomic_write(out / "summary.txt", text)
    except OSError as exc:
        raise IoError(f"cannot write summary in {out}: {exc}") from exc
    return text


def run_scenario(path, jobs=1, out=None, seed_override=None, quiet=False):
    """Execute every run of a scenario; returns the process exit code."""
    sc = load_scenario(path, seed_override)
    if out is not None:
        sc.out = Path(out)
    A = _build_matrix(sc)
    n = A.shape[0]
    b = _build_rhs(sc, n)
    ref = None
    if sc.oracle:
        if n > sc.dense_limit:
            _fail(f"oracle requested but n = {n} exceeds dense_limit = {sc.dense_limit}")
        ref = reference_solution(A, b, sc.function, max_n=sc.dense_limit)
    try:
        sc.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {sc.out}: {exc}") from exc
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: _execute(sc, A, b, ref, c), sc.runs))
    else:
        results = [_execute(sc, A, b, ref, c) for c in sc.runs]
    text = write_summary(results, sc.out)
    if not quiet:
        sys.stdout.write(f"scenario {sc.name}: n = {n}, function = {sc.function}, "
                         f"seed = {sc.seed}\n{text}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_NOT_CONVERGED


def _parse_params(items):
    params = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key:
            _fail(f"parameter {item!r} is not key=value")
        for conv in (int, float):
            try:
                params[key] = conv(val)
                break
            except ValueError:
                pass
        else:
            params[key] = {"true": True, "false": False}.get(val.lower(), val)
    return params


def _cmd_run(args, seed):
    return run_scenario(args.scenario, jobs=args.jobs, out=args.out, seed_override=seed)


def _cmd_gen(args, seed):
    if args.family not in ModelProblemSpec.FAMILIES:
        _fail(f"unknown family {args.family!r}")
    params = _parse_params(args.params)
    seed = args.seed if seed is None else seed
    try:
        A = build_model_problem(ModelProblemSpec(args.family, params, seed=seed))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {args.family}: {exc}") from exc
    desc = " ".join(f"{k}={v}" for k, v in params.items())
    try:
        write_matrix_market(args.output, A, comment=f"{args.family} {desc} seed={seed}")
    except OSError as exc:
        raise IoError(f"cannot write {args.output}: {exc}") from exc
    print(f"wrote {args.output}: {A.shape[0]} x {A.shape[1]}, nnz = {A.nnz}")
    return EXIT_OK


def _cmd_certify(args, seed):
    try:
        q = load_poly(args.poly)
    except OSError as exc:
        raise IoError(f"cannot read {args.poly}: {exc}") from exc
    if args.grid:
        parts = args.grid.split(",")
        if len(parts) != 3:
            _fail("--grid expects a,b,npoints")
        try:
            a, b, npts = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            _fail("--grid expects a,b,npoints")
        if not a < b or npts < 1:
            _fail("--grid needs a < b and npoints >= 1")
        sample = interval_grid(a, b, npts)
    elif q.kind == "chebyshev":
        sample = interval_grid(*q.interval, 1000)
    else:
        sample = q.nodes
    cert = certify_branch(q, sample)
    print(f"{q.kind} degree {q.degree}: {cert.summary()}")
    return EXIT_OK if cert.satisfied else EXIT_NOT_CONVERGED


def build_parser():
    p = argparse.ArgumentParser(prog="polyprec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="execute a scenario file")
    r.add_argument("scenario")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    r.set_defaults(func=_cmd_run)
    g = sub.add_parser("gen-matrix", help="write a model problem in Matrix Market format")
    g.add_argument("family")
    g.add_argument("params", nargs="*", help="size parameters as key=value, e.g. N=50")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=_cmd_gen)
    c = sub.add_parser("certify", help="check the branch condition of a saved polynomial")
    c.add_argument("poly")
    c.add_argument("--grid", default=None, help="a,b,npoints")
    c.set_defaults(func=_cmd_certify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    env = os.environ.get("POLYPREC_SEED")
    try:
        try:
            seed = int(env) if env not in (None, "") else None
        except ValueError:
            _fail(f"POLYPREC_SEED must be an integer, got {env!r}")
        if getattr(args, "jobs", 1) < 1:
            _fail("--jobs must be >= 1")
        return args.func(args, seed)
    except ConfigError as exc:
        print(f"polyprec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError) as exc:
        # unreadable or malformed input files and unwritable outputs
        print(f"polyprec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PolyprecError as exc:
        print(f"polyprec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
