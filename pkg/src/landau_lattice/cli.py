"""Command-line front end: ``landau-lattice {butterfly,spectrum,verify,eval,replay}``.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConvergenceError, DomainError, LandauLatticeError, NonConvergenceError, SymbolOverflowError
from .harper import RationalFlux, band_spectrum, farey

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3

# single configuration layer; every flag default comes from here
DEFAULTS = {
    "radius": 8,
    "cutoff": 6,
    "grid": [64, 64],
    "tol": 1e-10,
    "max_q": 6,
    "E0": 1.0,
    "mu": 0.0,
}
MAX_Q_LIMIT = 40
MANIFEST_SCHEMA = "landau-lattice-manifest/1"
BANDS_HEADER = ("flux_p", "flux_q", "band_index", "lower", "upper")
SPECTRUM_HEADER = ("z_lower", "z_upper", "method")


class UsageError(Exception):
    """Bad flag combination detected after argparse."""


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, schema: str, header, rows) -> str:
    """Write a versioned CSV; returns its sha256."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {schema}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return _sha256(path)


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions() -> dict:
    return {
        "landau_lattice": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(out: Path, command: str, config: dict, outputs: dict, seconds: float, extra=None) -> Path:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "config": config,
        "versions": _versions(),
        "timing": {"seconds": seconds},
        "outputs": {name: {"path": name, "sha256": digest} for name, digest in outputs.items()},
    }
    if extra:
        manifest.update(extra)
    path = out / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    if hasattr(obj, "summary"):
        return obj.summary()
    return str(obj)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# butterfly


def _butterfly_config(args) -> dict:
    if args.max_q < 1 or args.max_q > MAX_Q_LIMIT:
        raise UsageError(f"--max-q must be in 1..{MAX_Q_LIMIT}")
    if args.symbol == "effective" and args.alpha is None:
        raise UsageError("--symbol effective needs --alpha")
    if args.mode == "z" and args.z is None and args.symbol == "effective":
        raise UsageError("--mode z needs --z")
    return {
        "symbol": args.symbol,
        "alpha": args.alpha,
        "mode": args.mode,
        "mu": args.mu,
        "z": args.z,
        "max_q": args.max_q,
        "grid": list(args.grid),
        "cutoff": args.cutoff,
    }


def _butterfly_symbol(config: dict, flux: RationalFlux):
    from .lattice import m_symbol
    from .solver import p_symbol
    from .symbols import FourierSymbol

    if config["symbol"] == "harper":
        return FourierSymbol.harper_symbol()
    if config["mode"] == "mu":
        sym, _ = p_symbol(config["mu"], config["alpha"], flux.h, config["cutoff"])
        return sym.copy(constant=0.0)
    return m_symbol(config["z"], flux.h, config["alpha"], config["cutoff"])


def run_butterfly(config: dict, out: Path) -> tuple:
    rows = []
    touching = {}
    fluxes = farey(config["max_q"])
    if config["symbol"] == "effective":
        # the effective symbols need a non-zero field
        fluxes = [f for f in fluxes if f.p > 0]
    for flux in fluxes:
        bands = band_spectrum(_butterfly_symbol(config, flux), flux, tuple(config["grid"]))
        rows.extend(bands.csv_rows())
        if bands.touching:
            touching[str(flux)] = [list(t) for t in bands.touching]
    digest = write_csv(out / "butterfly.csv", "landau-lattice bands v1", BANDS_HEADER, rows)
    return {"butterfly.csv": digest}, {"touching": touching, "fluxes": len(fluxes)}


def cmd_butterfly(args) -> int:
    config = _butterfly_config(args)
    out = _outdir(args.out)
    start = time.perf_counter()
    outputs, extra = run_butterfly(config, out)
    path = write_manifest(out, "butterfly", config, outputs, time.perf_counter() - start, extra)
    print(f"wrote {out / 'butterfly.csv'} ({extra['fluxes']} fluxes) and {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectrum


def _spectrum_config(args) -> dict:
    if not args.alpha > 0:
        raise UsageError("--alpha must be positive")
    if args.q < 1 or args.p < 1:
        raise UsageError("spectrum needs p >= 1 and q >= 1 (a non-zero field)")
    if not args.E0 > 0:
        raise UsageError("--E0 must be positive")
    return {
        "alpha": args.alpha,
        "p": args.p,
        "q": args.q,
        "E0": args.E0,
        "method": args.method,
        "cutoff": args.cutoff,
        "radius": args.radius,
        "grid": list(args.grid),
        "tail_free": args.tail_free,
    }


def run_spectrum(config: dict, out: Path) -> tuple:
    from .solver import direct_negative_spectrum, negative_spectrum, symmetric_difference

    flux = RationalFlux(config["p"], config["q"])
    grid = tuple(config["grid"])
    results = []
    if config["method"] in ("reduced", "both"):
        results.append(
            negative_spectrum(
                config["alpha"], flux, config["E0"], config["cutoff"], grid, tail_free=config["tail_free"]
            )
        )
    if config["method"] in ("direct", "both"):
        results.append(direct_negative_spectrum(config["alpha"], flux, config["E0"], radius=config["radius"], grid=grid))
    rows = [row for res in results for row in res.csv_rows()]
    digest = write_csv(out / "spectrum.csv", "landau-lattice spectrum v1", SPECTRUM_HEADER, rows)
    extra = {"results": [{"method": r.method, "intervals": r.intervals, "measure": r.measure()} for r in results]}
    for res in results:
        if res.method == "reduced":
            extra["zeta_traces"] = res.diagnostics.get("zeta_traces", [])
    if len(results) == 2:
        sd, union = symmetric_difference(results[0].intervals, results[1].intervals)
        extra["comparison"] = {
            "symmetric_difference": sd,
            "union": union,
            "relative": sd / union if union > 0 else 0.0,
        }
    return {"spectrum.csv": digest}, extra


def cmd_spectrum(args) -> int:
    config = _spectrum_config(args)
    out = _outdir(args.out)
    start = time.perf_counter()
    outputs, extra = run_spectrum(config, out)
    path = write_manifest(out, "spectrum", config, outputs, time.perf_counter() - start, extra)
    for res in extra["results"]:
        print(f"{res['method']}: {len(res['intervals'])} interval(s), measure {res['measure']:.17g}")
    if "comparison" in extra:
        print(f"relative symmetric difference: {extra['comparison']['relative']:.3e}")
    print(f"wrote {out / 'spectrum.csv'} and {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    from .bounds import BOUND_IDS, verify_bound
    from .suites import SUITES, run_suite

    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)} or all")
    out = _outdir(args.out)
    results = run_suite(args.suite)
    ok = True
    for suite, checks in results.items():
        path = out / f"verify_{suite}.json"
        path.write_text(json.dumps(checks, indent=2, default=_json_default) + "\n")
        for check in checks:
            ok &= bool(check["pass"])
            print(f"[{'PASS' if check['pass'] else 'FAIL'}] {suite}: {check['name']}")
        if suite == "green":
            for lemma in BOUND_IDS:
                (out / f"bound_{lemma}.json").write_text(verify_bound(lemma).dumps() + "\n")
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------
# eval


def _eval_registry() -> dict:
    from . import green, lattice, solver, specfun

    return {
        "digamma": specfun.digamma,
        "trigamma": specfun.trigamma,
        "gamma_u": specfun.gamma_u,
        "bessel_k": specfun.bessel_k,
        "heat_kernel": green.heat_kernel,
        "f_kernel": green.f_kernel,
        "landau_green": green.landau_green,
        "green2": green.green2,
        "free_green": green.free_green,
        "q_reg": green.q_reg,
        "q0": green.q0,
        "lambda_coeff": lattice.lambda_coeff,
        "a_coeff": lattice.a_coeff,
        "m_alpha": lattice.m_alpha,
        "q_distance": lattice.q_distance,
        "perturbed_green": lattice.perturbed_green,
        "z_of_beta": solver.z_of_beta,
        "zeta": solver.zeta,
    }


def _parse_value(text: str):
    if "," in text:
        return tuple(float(v) for v in text.split(","))
    for kind in (int, float, complex):
        try:
            return kind(text)
        except ValueError:
            continue
    return text


def _jsonable(value):
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return value.real if value.imag == 0 else {"re": value.real, "im": value.imag}
    if isinstance(value, (float, int, np.floating, np.integer)):
        return float(value)
    if hasattr(value, "_asdict"):
        return {k: _jsonable(v) for k, v in value._asdict().items()}
    if hasattr(value, "summary"):
        return value.summary()
    if hasattr(value, "to_complex"):
        return {"log_mag": value.log_mag, "phase": value.phase}
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return str(value)


def cmd_eval(args) -> int:
    registry = _eval_registry()
    if args.function not in registry:
        raise UsageError(f"unknown function {args.function!r}; choose from {', '.join(sorted(registry))}")
    kwargs = {}
    for item in args.params:
        if "=" not in item:
            raise UsageError(f"parameters are key=value, got {item!r}")
        key, text = item.split("=", 1)
        kwargs[key] = _parse_value(text)
    try:
        value = registry[args.function](**kwargs)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    print(json.dumps({"function": args.function, "args": {k: str(v) for k, v in kwargs.items()}, "value": _jsonable(value)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay

_RUNNERS = {"butterfly": run_butterfly, "spectrum": run_spectrum}


def cmd_replay(args) -> int:
    src = Path(args.manifest)
    try:
        manifest = json.loads(src.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest {src}: {exc}") from exc
    if manifest.get("schema") != MANIFEST_SCHEMA or manifest.get("command") not in _RUNNERS:
        raise UsageError(f"{src} is not a replayable manifest")
    out = _outdir(args.out if args.out else src.parent / "replay")
    outputs, _ = _RUNNERS[manifest["command"]](manifest["config"], out)
    same = True
    for name, digest in outputs.items():
        expected = manifest["outputs"].get(name, {}).get("sha256")
        match = expected == digest
        same &= match
        print(f"[{'MATCH' if match else 'DIFFER'}] {name} {digest}")
    return EXIT_OK if same else EXIT_FAILED


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landau-lattice",
        description="Spectra of the Landau Hamiltonian with a periodic lattice of point interactions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("butterfly", help="bands for all Farey fluxes p/q with q <= max_q")
    p.add_argument("--symbol", choices=("harper", "effective"), default="harper")
    p.add_argument("--alpha", type=float, help="coupling for the effective symbol")
    p.add_argument("--mode", choices=("mu", "z"), default="mu", help="effective symbol P_alpha(mu) or M_alpha(z)")
    p.add_argument("--mu", type=float, default=DEFAULTS["mu"])
    p.add_argument("--z", type=float)
    p.add_argument("--max-q", type=int, default=DEFAULTS["max_q"])
    p.add_argument("--grid", type=int, nargs=2, default=DEFAULTS["grid"], metavar=("NTHETA", "NKAPPA"))
    p.add_argument("--cutoff", type=int, default=DEFAULTS["cutoff"])
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_butterfly)

    p = sub.add_parser("spectrum", help="negative spectrum at rational flux p/q")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--E0", type=float, default=DEFAULTS["E0"])
    p.add_argument("--method", choices=("reduced", "direct", "both"), default="reduced")
    p.add_argument("--cutoff", type=int, default=DEFAULTS["cutoff"])
    p.add_argument("--radius", type=int, default=DEFAULTS["radius"])
    p.add_argument("--grid", type=int, nargs=2, default=DEFAULTS["grid"], metavar=("NTHETA", "NKAPPA"))
    p.add_argument("--tail-free", action="store_true", help="drop the tail of the effective symbol")
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", default="all")
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("eval", help="evaluate one function, e.g. eval q_reg z=-1 h=1")
    p.add_argument("function")
    p.add_argument("params", nargs="*", help="key=value; points as x1,x2; complex as 1+2j")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    p.add_argument("manifest")
    p.add_argument("--out", help="directory for the replayed outputs (default: <manifest dir>/replay)")
    p.set_defaults(handler=cmd_replay)
    return parser


def _trace_text(exc) -> str:
    trace = getattr(exc, "trace", None)
    if trace is None:
        return ""
    summary = trace.summary() if hasattr(trace, "summary") else trace
    return json.dumps(summary, default=_json_default)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, ConvergenceError, SymbolOverflowError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        trace = _trace_text(exc)
        if trace:
            print(f"trace: {trace}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (DomainError, LandauLatticeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
