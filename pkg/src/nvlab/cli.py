"""Command-line driver: ``nv-lab <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 numeric failure, 3 a
verification or probe did not pass (its report is still written).

Configuration precedence: built-in defaults, then the JSON file given by
``--config`` (validated against ``schemas/<name>.json``), then explicit
command-line flags.  ``NV_LAB_OUT`` overrides ``--out``.  Each run writes
its outputs plus exactly one ``<subcommand>-manifest.json`` listing them.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, kernels
from .evolution import NumericFailure, SimConfig, simulate, smooth_datum
from .invariants import (admissible_datum, miura_consistency_check, phase_homogeneity_defect,
                         scaling_symmetry_check)
from .lattice import (Cubic, CurveSpec, Disc, Hyperbola, KCurve, Square, constant_sampler,
                      count_cubic, count_hyperbola, fit_exponent, hyperbola_sampler, k_form_report,
                      run_sweep, sigma1_count, sigma3_count, write_sweep_csv)
from .nonlinearity import (verify_bound_7, verify_dual_path, verify_m_r_identity,
                           verify_resonance_exhaustive)
from .probe import ProbeConfig, probe
from .torus import SpectralField, TorusGrid, read_nvf, write_nvf

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_OUT = "nvlab-out"
TIMING_KEYS = {"elapsed_ns", "elapsed_s", "runtime_s"}


class ConfigError(Exception):
    pass


# -- config handling -----------------------------------------------------------

def load_schema(name: str) -> dict:
    text = resources.files("nvlab").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


def load_config(path: str | None, schema: str) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, load_schema(schema))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from exc
    return cfg


def _override(cfg: dict, **flags) -> dict:
    out = dict(cfg)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _scrub(obj, reproducible: bool):
    if not reproducible:
        return obj
    if isinstance(obj, dict):
        return {k: _scrub(v, True) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [_scrub(v, True) for v in obj]
    return obj


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


class Run:
    """Output directory, file registry and the manifest of one invocation."""

    def __init__(self, args, name: str):
        self.name = name
        self.args = args
        self.out = Path(os.environ.get("NV_LAB_OUT") or args.out or DEFAULT_OUT)
        self.reproducible = bool(args.reproducible)
        self.outputs: list[str] = []
        self.config: dict = {}
        self.started = datetime.now(timezone.utc).isoformat()

    def path(self, filename: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs.append(filename)
        return self.out / filename

    def write_json(self, filename: str, obj) -> Path:
        p = self.path(filename)
        data = _scrub(_jsonable(obj), self.reproducible)
        p.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        return p

    def finish(self, code: int, error: str | None = None) -> int:
        manifest = {
            "subcommand": self.name,
            "config": _jsonable(self.config),
            "tool_version": __version__,
            "backend": kernels.BACKEND,
            "seed": self.config.get("seed", self.args.seed),
            "outputs": self.outputs,
            "exit_code": code,
        }
        if error:
            manifest["error"] = error
        if not self.reproducible:
            manifest["started"] = self.started
            manifest["finished"] = datetime.now(timezone.utc).isoformat()
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            (self.out / f"{self.name}-manifest.json").write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            print(f"nv-lab: cannot write manifest: {exc}", file=sys.stderr)
        return code


# -- simulate ------------------------------------------------------------------

def _grid(cfg, default):
    nx, ny = cfg.get("grid", default)
    return TorusGrid(int(nx), int(ny))


def _datum(grid: TorusGrid, d: dict, seed, base: Path) -> SpectralField:
    kind = d["kind"]
    if kind == "zero":
        return SpectralField.zeros(grid)
    if kind == "smooth":
        return smooth_datum(grid, d.get("amplitude", 1e-2), d.get("width", 6),
                            seed if seed is not None else d.get("seed", 0))
    if kind == "modes":
        if "modes" not in d:
            raise ConfigError("datum kind 'modes' needs a 'modes' list of [xi, eta, re, im]")
        modes = {}
        for xi, eta, re, im in d["modes"]:
            if xi != int(xi) or eta != int(eta):
                raise ConfigError("mode frequencies must be integers")
            if not grid.contains((int(xi), int(eta))):
                raise ConfigError(f"mode ({int(xi)}, {int(eta)}) is outside the grid")
            modes[(int(xi), int(eta))] = modes.get((int(xi), int(eta)), 0) + complex(re, im)
        return SpectralField.from_modes(grid, modes, real_valued=d.get("real_valued", False))
    if "path" not in d:
        raise ConfigError("datum kind 'nvf' needs a 'path'")
    u = read_nvf(base / d["path"])
    if u.grid != grid:
        raise ConfigError("NVF datum grid does not match the configured grid")
    return u


def cmd_simulate(args, run: Run) -> int:
    if not args.config:
        raise ConfigError("simulate needs --config")
    cfg = load_config(args.config, "simulate")
    run.config = cfg
    grid = _grid(cfg, None)
    sim = SimConfig(grid=grid, t_end=cfg["t_end"], dt=cfg["dt"], scheme=cfg.get("scheme", "etdrk4"),
                    dealias=cfg.get("dealias", True), adaptive=cfg.get("adaptive", False),
                    blowup_norm_threshold=cfg.get("blowup_norm_threshold", 1e10),
                    snapshot_every=cfg.get("snapshot_every", 0), tol=cfg.get("tol", 1e-8),
                    linear_only=cfg.get("linear_only", False))
    u0 = _datum(grid, cfg["datum"], args.seed, Path(args.config).resolve().parent)
    removed = 0j
    if u0.coeff[0, 0] != 0:
        if not args.project_mean:
            m = complex(u0.coeff[0, 0])
            raise ConfigError(f"datum has nonzero mean coefficient ({m.real:g}{m.imag:+g}j); "
                              "the solver needs mean-zero data (pass --project-mean to remove it)")
        u0, removed = u0.project_mean()
    elif not u0.mean_zero:
        u0 = u0.with_coeff(u0.coeff, mean_zero=True)
    traj = simulate(u0, sim)
    traj.diagnostics.write_csv(run.path("simulate-diagnostics.csv"))
    snaps = []
    for i, u in enumerate(traj.states):
        name = f"simulate-snap-{i:04d}.nvf"
        write_nvf(run.path(name), u)
        snaps.append(name)
    summary = {
        "terminated_by": traj.terminated_by,
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "snapshot_times": traj.times,
        "snapshots": snaps,
        "pairing_drift": traj.diagnostics.pairing_drift(),
        "final_l2_norm": traj.final.l2_norm(),
        "max_realness_defect": max(traj.diagnostics.realness_defect),
        "projected_mean": removed,
    }
    run.write_json("simulate-summary.json", summary)
    print(f"{traj.terminated_by}: {traj.accepted_steps} steps, t = {traj.times[-1]:g}")
    return EXIT_OK


# -- verify --------------------------------------------------------------------

def cmd_verify(args, run: Run) -> int:
    cfg = load_config(args.config, "verify")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    samples = cfg.get("samples", 100_000)
    maxf = cfg.get("max_frequency", 1000)
    run.config = {**cfg, "which": args.which, "seed": seed}
    if args.which == "kform":
        rep = k_form_report()
        run.write_json("verify-kform.json", rep)
        print(rep["statement"])
        return EXIT_OK
    if args.which == "identities":
        reports = [verify_m_r_identity(samples, maxf, seed),
                   verify_resonance_exhaustive(cfg.get("resonance_bound", 50))]
    elif args.which == "bounds":
        const = 1.0 if args.constant_free else None
        run.config["constant_free"] = bool(args.constant_free)
        reports = [verify_bound_7(th, samples, maxf, seed, constant=const)
                   for th in cfg.get("thetas", [0.25, 0.5, 0.75])]
    else:
        reports = [verify_dual_path(cfg.get("dualpath_fields", 100), cfg.get("dualpath_grid", 16),
                                    seed)]
    ok = all(r.passed for r in reports)
    run.write_json(f"verify-{args.which}.json",
                   {"suite": args.which, "pass": ok, "reports": [r.to_dict() for r in reports]})
    for r in reports:
        line = f"{'PASS' if r.passed else 'FAIL'} {r.name}: max deviation {r.max_deviation:.3g}"
        if not r.passed:
            line += f", witness {json.dumps(_jsonable(r.worst_witness))}"
        print(line)
    return EXIT_OK if ok else EXIT_VERIFY


# -- count ---------------------------------------------------------------------

def _window(args) -> Square | Disc:
    if args.square and args.disc:
        raise ConfigError("give either --square or --disc, not both")
    try:
        if args.square:
            cx, cy, n = args.square
            return Square((Fraction(cx), Fraction(cy)), int(n))
        if args.disc:
            cx, cy, r = args.disc
            return Disc((Fraction(cx), Fraction(cy)), float(Fraction(r)))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad window: {exc}") from exc
    raise ConfigError("a window is required: --square CX CY SIDE or --disc CX CY RADIUS")


def _spec_from_json(c: dict) -> CurveSpec:
    w = c["window"]
    center = tuple(Fraction(str(v)) for v in w["center"])
    window = Square(center, int(w["size"])) if w["kind"] == "square" else Disc(center, w["size"])
    p = c["params"]
    if c["variant"] == "hyperbola":
        if len(p) != 3:
            raise ConfigError("hyperbola needs params [a, b, c]")
        curve = Hyperbola(*p)
    elif c["variant"] == "cubic":
        if len(p) != 2:
            raise ConfigError("cubic needs params [a, b]")
        curve = Cubic(*p)
    else:
        if len(p) != 3:
            raise ConfigError("kcurve needs params [xi, eta, tau]")
        curve = KCurve(*p)
    return CurveSpec(curve, window)


def random_specs(variant: str, count: int, max_side: int, seed: int) -> list[CurveSpec]:
    """Random curves in random squares; parameters scale with the side."""
    rng = np.random.default_rng(seed)
    specs = []
    while len(specs) < count:
        side = int(rng.integers(1, max_side + 1))
        center = tuple(int(v) for v in rng.integers(-max_side, max_side + 1, size=2))
        if variant == "hyperbola":
            a, b, c = (int(v) for v in rng.integers(-side, side + 1, size=3))
            if c == 0 or (a == 0 and b == 0):
                continue
            curve = Hyperbola(a, b, c)
        else:
            a, b = (int(v) for v in rng.integers(-side, side + 1, size=2))
            curve = Cubic(a, b)
        specs.append(CurveSpec(curve, Square(center, side)))
    return specs


def cmd_count(args, run: Run) -> int:
    kind = args.kind
    if kind == "sweep":
        cfg = load_config(args.config, "sweep")
        if not cfg:
            raise ConfigError("count sweep needs --config with 'curves' or 'random'")
        run.config = cfg
        specs = [_spec_from_json(c) for c in cfg.get("curves", [])]
        if "random" in cfg:
            r = cfg["random"]
            seed = args.seed if args.seed is not None else r.get("seed", 0)
            specs += random_specs(r["variant"], r["count"], r["max_side"], seed)
        rows = run_sweep(specs, exclude_line=cfg.get("exclude_line", False), threads=args.threads,
                         reproducible=run.reproducible)
        write_sweep_csv(rows, run.path("count-sweep.csv"))
        print(f"{len(rows)} curves counted")
        return EXIT_OK
    if kind == "fit":
        cfg = load_config(args.config, "sweep").get("fit", {})
        fam = args.family or cfg.get("family", "hyperbola")
        N_list = args.N_list or cfg.get("N_list", [64, 128, 256, 512, 1024])
        samples = args.samples or cfg.get("samples_per_N", 500)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        run.config = {"family": fam, "N_list": N_list, "samples_per_N": samples, "seed": seed}
        sampler = hyperbola_sampler if fam == "hyperbola" else constant_sampler
        rep = fit_exponent(sampler, N_list, samples, seed=seed, threads=args.threads, family=fam)
        run.write_json("count-fit.json", rep)
        print(f"maxima {rep['maxima']}, fitted slope {rep['fitted_slope']:.4f}")
        return EXIT_OK

    p = args.params
    need = {"hyperbola": 3, "cubic": 2, "sigma1": 3, "sigma3": 2}[kind]
    if len(p) != need:
        raise ConfigError(f"count {kind} takes {need} integer parameters, got {len(p)}")
    window = _window(args)
    run.config = {"kind": kind, "params": p, "window": {"kind": window.kind,
                  "center": [str(Fraction(c)) for c in window.center], "size": window.size},
                  "exclude_line": args.exclude_line, "brute": args.brute}
    if kind == "hyperbola":
        rep = count_hyperbola(Hyperbola(*p), window, brute=args.brute)
    elif kind == "cubic":
        rep = count_cubic(Cubic(*p), window, args.exclude_line, brute=args.brute)
    elif kind == "sigma1":
        if not isinstance(window, Disc):
            raise ConfigError("sigma1 counts need --disc")
        rep = sigma1_count(*p, window)
    else:
        if not isinstance(window, Square):
            raise ConfigError("sigma3 counts need --square")
        rep = sigma3_count(*p, window, brute=args.brute)
    run.write_json(f"count-{kind}.json", rep.to_dict())
    print(rep.count)
    return EXIT_OK


# -- probe, miura, scaling -----------------------------------------------------

def cmd_probe(args, run: Run) -> int:
    cfg = load_config(args.config, "probe")
    cfg.pop("version", None)
    cfg = _override(cfg, R_list=args.R_list, data_family=args.family, trials_per_R=args.trials,
                    seed=args.seed, estimate_id=args.estimate,
                    use_Q=False if args.no_Q else None)
    if "R_list" in cfg:
        cfg["R_list"] = tuple(cfg["R_list"])
    pc = ProbeConfig(**cfg)
    run.config = {k: getattr(pc, k) for k in pc.__dataclass_fields__}
    rep = probe(pc, threads=args.threads)
    run.write_json("probe-report.json", rep)
    slope = rep["fitted_slope"]
    print(f"{'PASS' if rep['pass'] else 'FAIL'} {pc.estimate_id}/{pc.data_family} "
          f"Q={'on' if pc.use_Q else 'off'}: slope {'n/a' if slope is None else f'{slope:.4f}'} "
          f"({rep['pass_rule']})")
    return EXIT_OK if rep["pass"] else EXIT_VERIFY


def cmd_miura(args, run: Run) -> int:
    cfg = load_config(args.config, "miura")
    cfg.pop("version", None)
    cfg = _override({"grid": [64, 64], "eps": 0.25, "k": 1, "l": 1, "t_end": 0.01, "dt": 1e-3,
                     "levels": 3, "scheme": "etdrk4", "form": "corrected", "dealias": True, **cfg},
                    scheme=args.scheme, form=args.form, dt=args.dt, t_end=args.t_end)
    run.config = cfg
    grid = _grid(cfg, None)
    v0 = admissible_datum(grid, cfg["eps"], cfg["k"], cfg["l"])
    sim = SimConfig(grid=grid, t_end=cfg["t_end"], dt=cfg["dt"], scheme=cfg["scheme"],
                    dealias=cfg["dealias"])
    rep = miura_consistency_check(v0, cfg["t_end"], sim, levels=cfg["levels"], form=cfg["form"])
    run.write_json("miura-report.json", rep.to_dict())
    print(f"{'PASS' if rep.passed else 'FAIL'} miura ({cfg['scheme']}, {cfg['form']}): "
          f"orders {[round(o, 3) for o in rep.refinement_orders]}")
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_scaling(args, run: Run) -> int:
    cfg = load_config(args.config, "scaling")
    cfg.pop("version", None)
    cfg = _override({"grid": [128, 128], "lam": 2, "t": 0.01, "dt": 1e-4, "scheme": "etdrk4",
                     "amplitude": 1e-2, "width": 4, "seed": 0, "linear_only": False,
                     "refine": True, "tol": 1e-6, **cfg},
                    lam=args.lam, t=args.t, dt=args.dt, seed=args.seed,
                    grid=[args.grid, args.grid] if args.grid else None,
                    linear_only=True if args.linear_only else None)
    run.config = cfg
    grid = _grid(cfg, None)
    u0 = smooth_datum(grid, cfg["amplitude"], cfg["width"], cfg["seed"])
    sim = SimConfig(grid=grid, t_end=cfg["t"], dt=cfg["dt"], scheme=cfg["scheme"],
                    linear_only=cfg["linear_only"])
    rep = scaling_symmetry_check(u0, cfg["lam"], cfg["t"], sim, refine=cfg["refine"],
                                 tol=cfg["tol"]).to_dict()
    rep["details"]["phase_homogeneity_defect"] = phase_homogeneity_defect(50)
    run.write_json("scaling-report.json", rep)
    print(f"{'PASS' if rep['pass'] else 'FAIL'} scaling lambda={cfg['lam']}: "
          f"d = {rep['details']['d']:.3g}")
    return EXIT_OK if rep["pass"] else EXIT_VERIFY


# -- parser --------------------------------------------------------------------

def _common(suppress: bool) -> argparse.ArgumentParser:
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", default=d, help="JSON config file")
    g.add_argument("--out", metavar="DIR", default=d,
                   help=f"output directory (default {DEFAULT_OUT}; NV_LAB_OUT overrides)")
    g.add_argument("--seed", type=int, metavar="N", default=d, help="override the config seed")
    g.add_argument("--threads", type=int, metavar="N", default=d, help="worker pool cap")
    g.add_argument("--reproducible", action="store_true",
                   default=argparse.SUPPRESS if suppress else False,
                   help="omit timestamps and timings so outputs are byte-identical")
    return p


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="nv-lab", parents=[_common(False)],
                                  description="Novikov-Veselov numerical laboratory")
    top.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = top.add_subparsers(dest="command", required=True)
    common = _common(True)

    s = sub.add_parser("simulate", parents=[common], help="run the NV solver from a config")
    s.add_argument("--project-mean", action="store_true",
                   help="remove a nonzero mean from the datum instead of rejecting it")

    v = sub.add_parser("verify", parents=[common], help="symbol identities and bounds")
    v.add_argument("which", choices=["identities", "bounds", "dualpath", "kform"])
    v.add_argument("--constant-free", action="store_true",
                   help="bounds: demand the bound with constant 1 (expected to fail)")

    c = sub.add_parser("count", parents=[common], help="lattice point counts")
    c.add_argument("kind", choices=["hyperbola", "cubic", "sigma1", "sigma3", "sweep", "fit"])
    c.add_argument("params", nargs="*", type=int, help="curve parameters")
    c.add_argument("--square", nargs=3, metavar=("CX", "CY", "SIDE"))
    c.add_argument("--disc", nargs=3, metavar=("CX", "CY", "RADIUS"))
    c.add_argument("--exclude-line", action="store_true", help="cubic: drop the line x = 0")
    c.add_argument("--brute", action="store_true", help="use the O(N^2) enumerator")
    c.add_argument("--family", choices=["hyperbola", "constant"], help="fit: sampling family")
    c.add_argument("--N-list", type=int, nargs="+", dest="N_list", help="fit: window sides")
    c.add_argument("--samples", type=int, help="fit: samples per side")

    p = sub.add_parser("probe", parents=[common], help="bilinear estimate probes")
    p.add_argument("--family", choices=["random_in_disc", "resonant_concentrated",
                                        "counterexample_line"])
    p.add_argument("--estimate", choices=["proposition", "bilin_xsb", "dual_bilin_xsb",
                                          "transposed_bilin"])
    p.add_argument("--R-list", type=float, nargs="+", dest="R_list")
    p.add_argument("--trials", type=int)
    p.add_argument("--no-Q", action="store_true", dest="no_Q", help="drop the Q projection")

    m = sub.add_parser("miura-check", parents=[common], help="Miura map consistency")
    m.add_argument("--scheme", choices=["etdrk4", "splitstep2"])
    m.add_argument("--form", choices=["corrected", "displayed"])
    m.add_argument("--dt", type=float)
    m.add_argument("--t-end", type=float, dest="t_end")

    sc = sub.add_parser("scaling-check", parents=[common], help="scaling symmetry harness")
    sc.add_argument("--lam", type=int)
    sc.add_argument("--t", type=float)
    sc.add_argument("--dt", type=float)
    sc.add_argument("--grid", type=int, help="n for an n x n grid")
    sc.add_argument("--linear-only", action="store_true")
    return top


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "count": cmd_count,
            "probe": cmd_probe, "miura-check": cmd_miura, "scaling-check": cmd_scaling}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    if args.threads is None:
        args.threads = 1
    if args.threads < 1:
        print("nv-lab: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    name = args.command if args.command not in ("verify", "count") else \
        f"{args.command}-{args.which if args.command == 'verify' else args.kind}"
    run = Run(args, name)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args, run)
        return run.finish(code)
    except ConfigError as exc:
        print(f"nv-lab: configuration error: {exc}", file=sys.stderr)
        return run.finish(EXIT_CONFIG, str(exc))
    except NumericFailure as exc:
        print(f"nv-lab: numeric failure: {exc}", file=sys.stderr)
        return run.finish(EXIT_NUMERIC, str(exc))
    except (ValueError, OverflowError) as exc:
        print(f"nv-lab: invalid input: {exc}", file=sys.stderr)
        return run.finish(EXIT_CONFIG, str(exc))
    finally:
        if not args.reproducible:
            print(f"[{time.perf_counter() - t0:.2f} s]", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
