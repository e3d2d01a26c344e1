"""Reproducible entry points.

One flat JSON config drives one run; subcommands: ground-state, evolve,
morawetz, classify, disperse.  Every artifact embeds the echoed config,
CSV rows carry a versioned schema comment, snapshots are a little-endian
binary format with magic "NLSS", and fixed seed + config give
byte-identical outputs on one platform.

Exit codes: 0 success (including a flagged blow-up outcome), 1 usage
error, 2 numeric failure.
"""

from __future__ import annotations

import json
import struct
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .evolution import EvolutionConfig, blow_up_detect, dispersive_decay_fit, evolve
from .fields import Field, FieldPair, galilean_boost, pair_from_arrays
from .grid import RadialGrid, UniformGrid
from .ground_state import petviashvili_solve, solve_periodic_profile
from .morawetz import InteractionParams, interaction_lhs
from .threshold import classify_data

SNAPSHOT_MAGIC = b"NLSS"
SNAPSHOT_VERSION = 1
_GRID_UNIFORM = 0
_GRID_RADIAL = 1


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_DEFAULTS = {
    "kappa": 0.5,
    "cadence": 10,
    "dt": 1e-3,
    "t_final": 1.0,
    "seed": 0,
    "n": 256,
    "L": 40.0,
    "m": 2048,
    "r_max": 30.0,
    "tol": 1e-10,
    "max_iter": 500,
    "dimension": 1,
    "initial": "gaussian",
    "amplitude": 1.0,
    "width": 2.0,
    "center": None,
    "phase_velocity": 0.0,
    "xi": 0.5,
    "input_path": None,
    "output": None,
    "snapshot_every": 0,
    "R0": 2.5,
    "J": 4.0,
    "T0": 50.0,
    "eps": 0.25,
    "decay_exponent": "inf",
    "t_fit_start": 8.0,
    "t_fit_end": 25.0,
}

_REQUIRED = {"command"}

_KNOWN_KEYS = set(_DEFAULTS) | _REQUIRED

_COMMANDS = ("ground-state", "evolve", "morawetz", "classify", "disperse")


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name: str):
        try:
            return self.options[name]
        except KeyError as exc:
            raise AttributeError(name) from exc

    def echo(self) -> dict:
        return {"command": self.command, **self.options}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat JSON config, filling documented defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat JSON object")
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(_REQUIRED - set(raw))
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    if raw["command"] not in _COMMANDS:
        raise ConfigError(
            f"unknown command {raw['command']!r}; expected one of {', '.join(_COMMANDS)}"
        )
    options = dict(_DEFAULTS)
    options.update({k: v for k, v in raw.items() if k != "command"})
    for key in ("dt", "t_final", "L", "r_max", "tol", "amplitude", "width"):
        if not isinstance(options[key], (int, float)) or options[key] <= 0:
            raise ConfigError(f"config key {key!r} must be a positive number")
    if options["n"] & (options["n"] - 1) or options["n"] < 8:
        raise ConfigError(f"n = {options['n']} is not a power of two >= 8")
    if options["dimension"] not in (1, 2, 3):
        raise ConfigError("dimension must be 1, 2 or 3")
    return RunConfig(command=raw["command"], options=options)


def write_snapshot(p: FieldPair, t: float, path: str) -> None:
    """Binary snapshot: header then interleaved (re, im) doubles, u then v."""
    grid = p.grid
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", SNAPSHOT_VERSION))
        if isinstance(grid, UniformGrid):
            fh.write(struct.pack("<II", _GRID_UNIFORM, grid.d))
            fh.write(struct.pack("<" + "I" * grid.d, *([grid.n] * grid.d)))
            fh.write(struct.pack("<d", grid.L))
        else:
            fh.write(struct.pack("<II", _GRID_RADIAL, 5))
            fh.write(struct.pack("<I", grid.m))
            fh.write(struct.pack("<d", grid.r_max))
        fh.write(struct.pack("<ddI", p.kappa, t, 2))
        for values in (p.u.values, p.v.values):
            flat = np.ascontiguousarray(values, dtype=complex).reshape(-1)
            inter = np.empty(2 * flat.size)
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            fh.write(inter.astype("<f8").tobytes())


def read_snapshot(path: str) -> tuple[FieldPair, float]:
    """Inverse of :func:`write_snapshot`; bit-exact round trip."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not a field snapshot (bad magic)")
    off = 4
    (version,) = struct.unpack_from("<I", data, off)
    off += 4
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    kind, dim = struct.unpack_from("<II", data, off)
    off += 8
    if kind == _GRID_UNIFORM:
        counts = struct.unpack_from("<" + "I" * dim, data, off)
        off += 4 * dim
        (length,) = struct.unpack_from("<d", data, off)
        off += 8
        grid: UniformGrid | RadialGrid = UniformGrid(dim, counts[0], length)
    elif kind == _GRID_RADIAL:
        (m,) = struct.unpack_from("<I", data, off)
        off += 4
        (r_max,) = struct.unpack_from("<d", data, off)
        off += 8
        grid = RadialGrid(m, r_max)
    else:
        raise ValueError(f"unknown grid kind {kind}")
    kappa, t, nfields = struct.unpack_from("<ddI", data, off)
    off += 20
    if nfields != 2:
        raise ValueError(f"expected 2 fields, header says {nfields}")
    size = grid.size
    payload = 2 * size * 2 * 8
    if len(data) - off != payload:
        raise ValueError(
            f"truncated snapshot: expected {payload} payload bytes, got {len(data) - off}"
        )
    out = []
    for _ in range(2):
        inter = np.frombuffer(data, dtype="<f8", count=2 * size, offset=off)
        off += 2 * size * 8
        out.append((inter[0::2] + 1j * inter[1::2]).reshape(grid.shape))
    return pair_from_arrays(grid, out[0], out[1], kappa), t


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, cfg: RunConfig, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write("# schema=1\n")
        fh.write(f"# config={json.dumps(cfg.echo(), sort_keys=True)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_json(path: str | None, cfg: RunConfig, payload: dict) -> None:
    doc = {"config": cfg.echo(), **payload}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _initial_pair(cfg: RunConfig, grid: UniformGrid) -> FieldPair:
    kind = cfg.initial
    if kind == "file":
        if cfg.input_path is None:
            raise ConfigError("initial = file requires input_path")
        pair, _ = read_snapshot(cfg.input_path)
        return pair
    if kind == "gaussian":
        center = cfg.center if cfg.center is not None else grid.L / 2.0
        rho2 = sum((c - center) ** 2 for c in grid.coords())
        env = cfg.amplitude * np.exp(-rho2 / (2.0 * cfg.width**2))
        phase = cfg.phase_velocity * sum(grid.coords())
        u = env * np.exp(1j * phase)
        v = np.zeros(grid.shape, dtype=complex)
        return pair_from_arrays(grid, u, v, cfg.kappa)
    if kind in ("soliton", "boosted-soliton"):
        pair = solve_periodic_profile(grid, kappa=cfg.kappa, tol=1e-12)
        if kind == "soliton":
            return pair
        return galilean_boost(pair, [cfg.xi] * grid.d)
    raise ConfigError(f"unknown initial condition {kind!r}")


def run_command(cfg: RunConfig) -> int:
    """Dispatch one validated config; returns the process exit code.

    The seed is part of the config echo in every artifact; the built-in
    initial conditions are deterministic, so reruns are byte-identical.
    """
    out = cfg.output

    if cfg.command == "ground-state":
        grid = RadialGrid(cfg.m, cfg.r_max)
        gs = petviashvili_solve(grid, kappa=cfg.kappa, tol=cfg.tol, max_iter=cfg.max_iter)
        if out is not None:
            write_snapshot(gs.pair, 0.0, out + ".snap")
        _write_json(
            out,
            cfg,
            {
                "ratios": list(gs.ratios),
                "mass": gs.mass,
                "kinetic": gs.kinetic,
                "potential": gs.potential,
                "energy": gs.energy,
                "gn_constant": gs.gn_constant,
                "threshold_me": gs.threshold_me,
                "threshold_mh": gs.threshold_mh,
                "residual": gs.residual_norm,
                "iterations": gs.iterations,
            },
        )
        return 0

    if cfg.command == "evolve":
        grid = UniformGrid(cfg.dimension, cfg.n, cfg.L)
        pair = _initial_pair(cfg, grid)
        run_cfg = EvolutionConfig(
            dt=cfg.dt, t_final=cfg.t_final, cadence=cfg.cadence,
            store_fields=bool(cfg.snapshot_every),
        )
        ts = evolve(pair, run_cfg)
        header = ["t", "mass", "kinetic", "potential", "energy"]
        header += [f"momentum_{j}" for j in range(grid.d)]
        header += ["l3_u", "l3_pair", "max_modulus"]
        rows = []
        for rec in ts.records:
            row = [rec.t, rec.mass, rec.kinetic, rec.potential, rec.energy]
            row += list(rec.momentum)
            row += [rec.l3_u, rec.l3_pair, rec.max_modulus]
            rows.append(row)
        if out is None:
            raise ConfigError("evolve requires an output path for the CSV series")
        _write_csv(out, cfg, header, rows)
        if cfg.snapshot_every:
            for idx, (t, snap_pair) in enumerate(ts.snapshots):
                if idx % cfg.snapshot_every == 0:
                    write_snapshot(snap_pair, t, f"{out}.{idx:06d}.snap")
        print(json.dumps({"outcome": ts.outcome, "classification": blow_up_detect(ts)}))
        return 0

    if cfg.command == "morawetz":
        grid = UniformGrid(1, cfg.n, cfg.L)
        pair = _initial_pair(cfg, grid)
        params = InteractionParams(R0=cfg.R0, J=cfg.J, T0=cfg.T0, eps=cfg.eps)
        res = interaction_lhs(pair, cfg.dt, params)
        rows = [[float(r), float(acc)] for r, acc in zip(res.radii, res.per_radius)]
        if out is not None:
            _write_csv(out + ".csv", cfg, ["R", "accumulator"], rows)
            t_rows = [
                [float(t), float(acc)] for t, acc in zip(res.times, res.per_time)
            ]
            _write_csv(out + ".time.csv", cfg, ["t", "accumulator"], t_rows)
        _write_json(
            out,
            cfg,
            {
                "accumulator": res.accumulator,
                "nu": res.nu,
                "E0": res.e0,
                "ratio": res.ratio,
                "outcome": res.outcome,
                "time_samples": res.n_time_samples,
            },
        )
        return 0

    if cfg.command == "classify":
        grid = UniformGrid(cfg.dimension, cfg.n, cfg.L)
        pair = _initial_pair(cfg, grid)
        gs = petviashvili_solve(RadialGrid(cfg.m, cfg.r_max), kappa=0.5, tol=cfg.tol)
        rep = classify_data(pair, gs)
        _write_json(out, cfg, {k: _jsonable(v) for k, v in asdict(rep).items()})
        return 0

    if cfg.command == "disperse":
        grid = UniformGrid(cfg.dimension, cfg.n, cfg.L)
        pair = _initial_pair(cfg, grid)
        r = np.inf if cfg.decay_exponent == "inf" else float(cfg.decay_exponent)
        slope = dispersive_decay_fit(
            Field(grid, pair.u.values), (cfg.t_fit_start, cfg.t_fit_end), r=r
        )
        predicted = -grid.d * (0.5 - (0.0 if r == np.inf else 1.0 / r))
        _write_json(out, cfg, {"slope": slope, "predicted": predicted})
        return 0

    raise ConfigError(f"unhandled command {cfg.command!r}")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    return v


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: qnls CONFIG.json", file=sys.stderr)
        return 1
    try:
        with open(argv[0]) as fh:
            cfg = parse_config(fh.read())
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_command(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # numeric failure: structured nonzero exit
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
