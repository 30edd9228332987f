"""Command-line front end: ``pat simulate|reconstruct|diagnose|render|t0``.

Configuration files are flat ``key = value`` lines grouped in sections::

    [experiment]
    preset = nontrap_short      ; optional, fills every key below
    [domain]
    radius = 1.0
    [speed]
    kind = nontrapping          ; constant | nontrapping | trapping
    level = 1.0                 ; constant speeds only
    eps_smooth = 0.1
    [phantom]
    kind = ghosts               ; ghosts | shepp_logan | gaussian | zero
    smoothing = auto            ; auto = 2 h of the simulation mesh
    [simulation]
    h = 0.06
    dt = auto                   ; auto = h / (15 c_max)
    T = 1.2 * T0                ; or an absolute time
    t0_spacing = 0.005
    [reconstruction]
    h = 0.1
    dt = auto                   ; auto = h / (14 c_max)
    method = landweber          ; landweber | tr | tr-harmonic | neumann
    omega = auto
    tau = 1.5
    noise = 0.0                 ; delta as a fraction of ||m||
    k_max = 20
    J = 5
    power_iters = 10
    [run]
    seed = 0
    output = out
    allow_inverse_crime = false
    override_stability = false

Keys left out take the defaults shown.  ``--set section.key=value`` overrides
single keys from the command line.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import math
import re
import sys
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger("pat")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
STABILITY_RATIO = 0.1
SAFE_RATIO = 1.0 / 14.0
METHODS = ("landweber", "tr", "tr-harmonic", "neumann")


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "domain": {"radius": "1.0"},
    "speed": {"kind": "nontrapping", "level": "1.0", "eps_smooth": "auto"},
    "phantom": {"kind": "ghosts", "smoothing": "auto"},
    "simulation": {"h": "0.06", "dt": "auto", "T": "1.2 * T0", "t0_spacing": "0.005"},
    "reconstruction": {
        "h": "0.1",
        "dt": "auto",
        "method": "landweber",
        "omega": "auto",
        "tau": "1.5",
        "noise": "0.0",
        "k_max": "20",
        "J": "5",
        "power_iters": "10",
    },
    "run": {
        "seed": "0",
        "output": "out",
        "allow_inverse_crime": "false",
        "override_stability": "false",
    },
}

# six reference set-ups; their fine meshes make for long runs, so
# override simulation.h / reconstruction.h for a quick look
_GHOST_MESH = {"simulation.h": "0.013", "reconstruction.h": "0.025"}
_SHEPP_MESH = {"simulation.h": "0.009", "reconstruction.h": "0.0095"}
PRESETS = {
    "nontrap_long": {"speed.kind": "nontrapping", "phantom.kind": "ghosts", "simulation.T": "4 * T0", **_GHOST_MESH},
    "nontrap_short": {"speed.kind": "nontrapping", "phantom.kind": "ghosts", "simulation.T": "1.2 * T0", **_GHOST_MESH},
    "nontrap_shepp": {"speed.kind": "nontrapping", "phantom.kind": "shepp_logan", "simulation.T": "2 * T0", **_SHEPP_MESH},
    "trap_long": {"speed.kind": "trapping", "phantom.kind": "ghosts", "simulation.T": "4 * T0", **_GHOST_MESH},
    "trap_mid": {"speed.kind": "trapping", "phantom.kind": "ghosts", "simulation.T": "2 * T0", **_GHOST_MESH},
    "trap_short": {"speed.kind": "trapping", "phantom.kind": "ghosts", "simulation.T": "1.2 * T0", **_GHOST_MESH},
}


@dataclass
class ExperimentConfig:
    radius: float
    speed_kind: str
    speed_level: float
    eps_smooth: float | None
    phantom: str
    smoothing: float
    h: float
    dt: float
    T_expr: str
    t0_spacing: float
    h_r: float
    dt_r: float
    method: str
    omega: float | None
    tau: float
    noise: float
    k_max: int
    J: int
    power_iters: int
    seed: int
    output: Path
    allow_inverse_crime: bool
    override_stability: bool

    def speed(self):
        from .phantoms import SpeedField

        return SpeedField(self.speed_kind, self.radius, self.eps_smooth, self.speed_level)

    def phantom_fn(self):
        from .phantoms import make_phantom

        return make_phantom(self.phantom, self.smoothing)


# -- config parsing -------------------------------------------------------------


def _read_raw(path: str | None, preset: str | None, overrides: list[str]) -> dict[str, dict[str, str]]:
    raw = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    if path is not None:
        text = Path(path).read_text()
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
    file_preset = parser.get("experiment", "preset", fallback=None)
    name = preset or file_preset
    if name:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        for dotted, value in PRESETS[name].items():
            sec, key = dotted.split(".")
            raw[sec][key] = value
    for sec in parser.sections():
        if sec == "experiment":
            continue
        if sec not in raw:
            raise ConfigError(f"unknown section [{sec}]")
        for key, value in parser.items(sec):
            if key not in raw[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
            raw[sec][key] = value
    for item in overrides:
        dotted, sep, value = item.partition("=")
        sec, _, key = dotted.strip().partition(".")
        if not sep or sec not in raw or key not in raw[sec]:
            raise ConfigError(f"bad override {item!r}; expected section.key=value")
        raw[sec][key] = value.strip()
    return raw


def _num(raw, sec, key, kind=float):
    value = raw[sec][key]
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{sec}.{key} = {value!r} is not a valid {kind.__name__}") from None


def _flag(raw, sec, key) -> bool:
    value = raw[sec][key].strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{sec}.{key} = {value!r} is not a boolean")


def _c_max(kind: str, level: float) -> float:
    from .phantoms import SpeedField

    return SpeedField(kind, 1.0, None, level).c_max


def load_config(path: str | None, preset: str | None = None, overrides: list[str] = ()) -> ExperimentConfig:
    raw = _read_raw(path, preset, list(overrides))
    radius = _num(raw, "domain", "radius")
    kind = raw["speed"]["kind"]
    if kind not in ("constant", "nontrapping", "trapping"):
        raise ConfigError(f"speed.kind must be constant, nontrapping or trapping, not {kind!r}")
    level = _num(raw, "speed", "level")
    eps = None if raw["speed"]["eps_smooth"] == "auto" else _num(raw, "speed", "eps_smooth")
    phantom = raw["phantom"]["kind"]
    from .phantoms import PHANTOMS

    if phantom not in PHANTOMS:
        raise ConfigError(f"phantom.kind must be one of {sorted(PHANTOMS)}, not {phantom!r}")
    h = _num(raw, "simulation", "h")
    h_r = _num(raw, "reconstruction", "h")
    if min(radius, h, h_r, level) <= 0 or (eps is not None and eps <= 0):
        raise ConfigError("lengths and speeds must be positive")
    if h > radius / 4 or h_r > radius / 4:
        raise ConfigError("mesh size must not exceed radius / 4")
    c_max = _c_max(kind, level)
    dt = h / (15.0 * c_max) if raw["simulation"]["dt"] == "auto" else _num(raw, "simulation", "dt")
    dt_r = h_r / (14.0 * c_max) if raw["reconstruction"]["dt"] == "auto" else _num(raw, "reconstruction", "dt")
    smoothing = 2.0 * h if raw["phantom"]["smoothing"] == "auto" else _num(raw, "phantom", "smoothing")
    method = raw["reconstruction"]["method"]
    if method not in METHODS:
        raise ConfigError(f"reconstruction.method must be one of {METHODS}, not {method!r}")
    omega = None if raw["reconstruction"]["omega"] == "auto" else _num(raw, "reconstruction", "omega")
    cfg = ExperimentConfig(
        radius=radius,
        speed_kind=kind,
        speed_level=level,
        eps_smooth=eps,
        phantom=phantom,
        smoothing=smoothing,
        h=h,
        dt=dt,
        T_expr=raw["simulation"]["T"],
        t0_spacing=_num(raw, "simulation", "t0_spacing"),
        h_r=h_r,
        dt_r=dt_r,
        method=method,
        omega=omega,
        tau=_num(raw, "reconstruction", "tau"),
        noise=_num(raw, "reconstruction", "noise"),
        k_max=_num(raw, "reconstruction", "k_max", int),
        J=_num(raw, "reconstruction", "J", int),
        power_iters=_num(raw, "reconstruction", "power_iters", int),
        seed=_num(raw, "run", "seed", int),
        output=Path(raw["run"]["output"]),
        allow_inverse_crime=_flag(raw, "run", "allow_inverse_crime"),
        override_stability=_flag(raw, "run", "override_stability"),
    )
    _validate(cfg, c_max)
    return cfg


def _validate(cfg: ExperimentConfig, c_max: float) -> None:
    if min(cfg.dt, cfg.dt_r, cfg.t0_spacing) <= 0:
        raise ConfigError("time steps and T0 grid spacing must be positive")
    if cfg.smoothing < 0:
        raise ConfigError("phantom.smoothing must be non-negative")
    if cfg.tau <= 1:
        raise ConfigError("reconstruction.tau must exceed 1")
    if cfg.noise < 0 or cfg.k_max < 0 or cfg.J < 0:
        raise ConfigError("noise, k_max and J must be non-negative")
    if cfg.omega is not None and cfg.omega <= 0:
        raise ConfigError("reconstruction.omega must be positive")
    if cfg.power_iters < 5:
        raise ConfigError("reconstruction.power_iters must be at least 5")
    if not cfg.allow_inverse_crime and math.isclose(cfg.h, cfg.h_r, rel_tol=1e-12):
        raise ConfigError("simulation and reconstruction meshes coincide; pass --allow-inverse-crime to permit")
    for label, h, dt in (("simulation", cfg.h, cfg.dt), ("reconstruction", cfg.h_r, cfg.dt_r)):
        ratio = dt * c_max / h
        if ratio > STABILITY_RATIO and not cfg.override_stability:
            raise ConfigError(
                f"{label}: dt * c_max = {ratio:.4g} h exceeds {STABILITY_RATIO} h; set run.override_stability to force"
            )
        if ratio > SAFE_RATIO:
            log.warning("%s: dt * c_max = %.4g h is above h/14, where the coupled march can go unstable", label, ratio)
    _parse_T(cfg.T_expr)


_T_RE = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?T0\s*$")


def _parse_T(expr: str) -> tuple[float, bool]:
    """(value, relative): '1.2 * T0' -> (1.2, True), '3.5' -> (3.5, False)."""
    m = _T_RE.match(expr)
    if m:
        try:
            factor = float(m.group(1)) if m.group(1) else 1.0
        except ValueError:
            raise ConfigError(f"simulation.T = {expr!r} is not understood") from None
        value, relative = factor, True
    else:
        try:
            value, relative = float(expr), False
        except ValueError:
            raise ConfigError(f"simulation.T = {expr!r}: use a number or '<factor> * T0'") from None
    if not value > 0:
        raise ConfigError("simulation.T must be positive")
    return value, relative


def resolve_T(cfg: ExperimentConfig) -> tuple[float, float | None]:
    """Measurement time and the T0 it was derived from (None for absolute T)."""
    from .phantoms import estimate_T0

    value, relative = _parse_T(cfg.T_expr)
    if not relative:
        return value, None
    T0 = estimate_T0(cfg.speed(), cfg.t0_spacing)
    return value * T0, T0


# -- helpers --------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["output"] = str(cfg.output)
    return d


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _setup(cfg: ExperimentConfig, h: float, dt: float, T: float):
    from .geometry import generate_disk_mesh
    from .operators import OperatorSetup
    from .wavesolver import TimeGrid

    grid = TimeGrid.from_step(T, dt)
    mesh = generate_disk_mesh(cfg.radius, h)
    return OperatorSetup(mesh, cfg.speed(), grid)


def _save_field(stem: Path, field, mesh) -> None:
    from .io import write_field_binary, write_field_csv, write_mesh

    write_field_binary(stem.with_suffix(".paff"), field.coefficients)
    write_field_csv(stem.with_suffix(".csv"), field.space.dof_coords, field.coefficients)
    write_mesh(stem.with_suffix(".mesh"), mesh)


# -- commands -------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig) -> Path:
    from .operators import forward_L

    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    T, T0 = resolve_T(cfg)
    setup = _setup(cfg, cfg.h, cfg.dt, T)
    f = setup.project(cfg.phantom_fn())
    m = forward_L(f, setup)
    trace_path = out / "trace.patr"
    m.save(trace_path)
    manifest = {
        "command": "simulate",
        "config": _config_dict(cfg),
        "resolved": {
            "T0": T0,
            "T": T,
            "N": setup.grid.N,
            "dt": setup.grid.dt,
            "n_b": setup.boundary.n,
            "n_dofs": setup.n_dofs,
            "c_max": cfg.speed().c_max,
        },
        "outputs": {"trace.patr": _sha256(trace_path)},
    }
    _write_json(out / "manifest.json", manifest)
    log.info("wrote %s (N=%d, n_b=%d, T=%.6g)", trace_path, setup.grid.N, setup.boundary.n, T)
    return trace_path


def _frozen_T(trace_path: Path, cfg: ExperimentConfig, dt_src: float, N_src: int) -> float:
    manifest = trace_path.parent / "manifest.json"
    if manifest.exists():
        try:
            return float(json.loads(manifest.read_text())["resolved"]["T"])
        except (KeyError, ValueError, TypeError):
            log.warning("%s has no resolved T; using the trace length", manifest)
    return dt_src * N_src


def cmd_reconstruct(cfg: ExperimentConfig, trace_path: Path) -> Path:
    from .io import write_pgm16
    from .operators import BoundaryTrace, add_noise, l2_sigma_norm, resample_trace
    from .phantoms import rasterize
    from .recon import LandweberConfig, estimate_omega, landweber, neumann_series, relative_error, time_reversal
    from .wavesolver import TimeGrid

    trace_path = Path(trace_path)
    src = BoundaryTrace.load(trace_path)
    if not math.isclose(src.radius, cfg.radius, rel_tol=1e-12):
        raise ConfigError(f"trace radius {src.radius} does not match domain.radius {cfg.radius}")
    T = _frozen_T(trace_path, cfg, src.dt, src.N)
    T = min(T, src.T)
    setup = _setup(cfg, cfg.h_r, cfg.dt_r, T)
    m = resample_trace(src, setup.boundary.n, setup.grid)
    delta = cfg.noise * l2_sigma_norm(m)
    if delta > 0:
        m = add_noise(m, delta, cfg.seed)
    f_true = setup.project(cfg.phantom_fn())
    has_truth = cfg.phantom != "zero"
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    info: dict = {"method": cfg.method, "delta": delta, "N_r": setup.grid.N, "n_b_r": setup.boundary.n, "T": T}
    report_path = out / "report.csv"
    if cfg.method == "landweber":
        omega = cfg.omega
        if omega is None:
            est = estimate_omega(setup, cfg.power_iters, seed=cfg.seed)
            omega = est.omega
            info["lam_max"] = est.lam_max
        info["omega"] = omega
        rep = landweber(
            m,
            setup,
            LandweberConfig(omega, cfg.tau, delta, cfg.k_max),
            f_true=f_true if has_truth else None,
        )
        rep.write_csv(report_path)
        rec = rep.final
        info.update(stop_index=rep.stop_index, returned_index=rep.returned_index, stop_reason=rep.stop_reason)
    elif cfg.method == "neumann":
        hist: list = []
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            rec = neumann_series(m, setup, cfg.J, history=hist)
        with open(report_path, "w") as fh:
            fh.write("iter,residual,phantom_error\n")
            for k, fk in enumerate(hist):
                e = f"{relative_error(fk, f_true):.17g}" if has_truth else ""
                fh.write(f"{k},,{e}\n")
    else:
        rec = time_reversal(m, setup, "plain" if cfg.method == "tr" else "harmonic")
        with open(report_path, "w") as fh:
            fh.write("iter,residual,phantom_error\n")
            e = f"{relative_error(rec, f_true):.17g}" if has_truth else ""
            fh.write(f"0,,{e}\n")
    if not np.all(np.isfinite(rec.coefficients)):
        raise FloatingPointError("reconstruction produced non-finite values")
    if has_truth:
        info["phantom_error"] = relative_error(rec, f_true)
    stem = out / "recon"
    _save_field(stem, rec, setup.mesh)
    img = _render_array(rec, 256, cfg.radius)
    write_pgm16(stem.with_suffix(".pgm"), img, label=f"{cfg.method} reconstruction")
    outputs = {p.name: _sha256(p) for p in sorted(out.glob("recon.*")) if not p.name.endswith(".txt")}
    outputs["report.csv"] = _sha256(report_path)
    _write_json(
        out / "recon_manifest.json",
        {"command": "reconstruct", "config": _config_dict(cfg), "input": {trace_path.name: _sha256(trace_path)},
         "resolved": info, "outputs": outputs},
    )
    log.info("%s: %s", cfg.method, {k: v for k, v in info.items() if k != "method"})
    return stem.with_suffix(".paff")


def _render_array(field, n: int, radius: float) -> np.ndarray:
    g = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(g, g[::-1])
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return field.evaluate(pts).reshape(n, n)


def cmd_render(field_path: Path, image_path: Path, mesh_path: Path | None = None, size: int = 256) -> None:
    from .fem import NodalField, P2BubbleSpace
    from .io import read_field_binary, read_mesh, write_pgm16

    field_path = Path(field_path)
    mesh_path = Path(mesh_path) if mesh_path else field_path.with_suffix(".mesh")
    coeffs = read_field_binary(field_path)
    mesh = read_mesh(mesh_path)
    space = P2BubbleSpace(mesh)
    if coeffs.size != space.n_dofs:
        from .io import FormatError

        raise FormatError(f"{field_path}: {coeffs.size} coefficients, mesh needs {space.n_dofs}")
    img = _render_array(NodalField(space, coeffs), size, mesh.radius)
    write_pgm16(image_path, img, label=field_path.name)


def cmd_diagnose(cfg: ExperimentConfig) -> bool:
    from .operators import adjoint_mismatch, smooth_probe_pair
    from .phantoms import gaussian_bump
    from .recon import estimate_omega
    from .wavesolver import TimeGrid, solve_reflecting

    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    rows = []

    def check(name, value, limit, ok):
        rows.append((name, value, limit, ok))
        log.info("%-22s %.4g (limit %s) %s", name, value, limit, "pass" if ok else "FAIL")

    # adjoint identity on a short window of the reconstruction setup
    setup = _setup(cfg, cfg.h_r, cfg.dt_r, 0.8 * cfg.radius)
    mis = max(adjoint_mismatch(setup, *smooth_probe_pair(setup, s)) for s in range(2))
    check("adjoint_mismatch", mis, 2e-2, mis <= 2e-2)

    est = estimate_omega(setup, cfg.power_iters, seed=cfg.seed)
    prod = est.omega * est.lam_max
    check("omega_times_lam_max", prod, 0.95, abs(prod - 0.95) <= 1e-12)

    f = setup.project(lambda x: gaussian_bump(x, (0.0, 0.0), 0.15 * cfg.radius))
    grid = TimeGrid.from_step(2.0 * cfg.radius, cfg.dt_r)
    rec = solve_reflecting(setup.ops, f.coefficients, grid, track_energy=True)
    e = rec.energy[:-1]
    drift = float(np.max(np.abs(e - e[0])) / e[0])
    check("reflecting_energy_drift", drift, 1e-2, drift <= 1e-2)

    from .operators import OperatorSetup

    grid3 = TimeGrid.from_step(3.0 * cfg.radius, cfg.dt_r)
    s3 = OperatorSetup(setup.mesh, 1.0, grid3)
    rec3 = s3.solver.run(f.coefficients, track_energy=True)
    ratio = float(rec3.energy[-1] / rec3.energy[0])
    check("transparent_energy_left", ratio, 5e-2, ratio <= 5e-2)

    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("check,value,limit,pass\n")
        for name, value, limit, ok in rows:
            fh.write(f"{name},{value:.17g},{limit},{int(ok)}\n")
    return all(r[3] for r in rows)


def cmd_t0(cfg: ExperimentConfig) -> float:
    from .phantoms import estimate_T0

    return estimate_T0(cfg.speed(), cfg.t0_spacing)


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pat", description="2D photoacoustic tomography with variable sound speed.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cfg_args(sp):
        sp.add_argument("-c", "--config", help="experiment config file")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("-o", "--output", help="output directory (overrides run.output)")
        sp.add_argument("--allow-inverse-crime", action="store_true")

    cfg_args(sub.add_parser("simulate", help="forward-simulate boundary data"))
    sp = sub.add_parser("reconstruct", help="reconstruct from a trace file")
    cfg_args(sp)
    sp.add_argument("-i", "--input", required=True, help="PATR1 trace file")
    cfg_args(sub.add_parser("diagnose", help="adjoint, step-size and energy checks"))
    cfg_args(sub.add_parser("t0", help="print the maximal travel time T0"))
    sp = sub.add_parser("render", help="rasterize a field file to a 16-bit PGM")
    sp.add_argument("-i", "--input", required=True, help="PAFF1 field file")
    sp.add_argument("-o", "--output", required=True, help="PGM image")
    sp.add_argument("--mesh", help="mesh file (default: field path with .mesh)")
    sp.add_argument("--size", type=int, default=256)
    return p


def _config_from_args(args) -> ExperimentConfig:
    overrides = list(args.set)
    if args.output:
        overrides.append(f"run.output={args.output}")
    if args.allow_inverse_crime:
        overrides.append("run.allow_inverse_crime=true")
    return load_config(args.config, args.preset, overrides)


def main(argv=None) -> int:
    from .io import FormatError
    from .wavesolver import InstabilityError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "render":
            if args.size < 2:
                raise ConfigError("--size must be at least 2")
            cmd_render(args.input, args.output, args.mesh, args.size)
            return EXIT_OK
        cfg = _config_from_args(args)
        if args.command == "simulate":
            print(cmd_simulate(cfg))
        elif args.command == "reconstruct":
            print(cmd_reconstruct(cfg, Path(args.input)))
        elif args.command == "diagnose":
            if not cmd_diagnose(cfg):
                print("diagnostics failed; see diagnostics.csv", file=sys.stderr)
                return EXIT_NUMERICAL
        elif args.command == "t0":
            print(f"{cmd_t0(cfg):.10g}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"pat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"pat: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InstabilityError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"pat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"pat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
