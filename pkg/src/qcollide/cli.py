"""Command-line front end: ``qcollide <command> --config run.cfg [--out DIR]``.

A config is flat ``key = value`` text with ``#`` comments.  Exit status is 0 on
success, 1 for bad input and 2 for numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .checks import DEFAULT_SEED, MUTATIONS, run_all
from .circuit import format_circuit
from .collision import (
    BUILTIN_NAMES,
    CollisionSystem,
    Trajectory,
    builtin_system,
    qubits_for,
    read_curve_file,
)
from .errors import ConfigError, ConvergenceError
from .ledger import fidelity_report, min_gates_for_fidelity, sweep, sweep_csv
from .metrics import error_metric, leakage
from .propagators import SchemeSpec, propagate, reference_oracle
from .rescale import RescaleParams, build_schedule, schedule_rows

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2

_FLOAT_KEYS = ("v0", "b", "t0", "mu", "g_max_hz", "oracle_tol", "fidelity_threshold")
_INT_KEYS = ("N", "seed", "grid", "qubits")
_STR_KEYS = ("system", "scheme", "N_list", "window", "out", "interpolation", "policy")
KNOWN_KEYS = _FLOAT_KEYS + _INT_KEYS + _STR_KEYS


@dataclass
class RunConfig:
    system: str = "na_he_3ch"
    v0: float = 2.0
    b: float = 0.5
    t0: float = 0.0
    mu: float | None = None
    g_max_hz: float = 30e6
    schemes: list[SchemeSpec] = field(default_factory=list)
    N: int | None = None
    N_list: list[int] | None = None
    window: tuple[float, float] | None = None
    out: str | None = None
    seed: int = DEFAULT_SEED
    grid: int = 4096
    qubits: int | None = None
    interpolation: str = "cubic"
    policy: str = "clamp"
    oracle_tol: float = 1e-20
    fidelity_threshold: float | None = None
    source: str = "<config>"
    base_dir: Path = Path(".")
    digest: str = ""

    @property
    def scheme(self) -> SchemeSpec:
        return self.schemes[0]


def _parse_int_list(text: str, where: str) -> list[int]:
    """``8,16,32`` or a doubling range ``8..1024``."""
    text = text.replace(" ", "")
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            if lo < 1 or hi < lo:
                raise ValueError
            out = []
            while lo <= hi:
                out.append(lo)
                lo *= 2
            return out
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise ConfigError(f"{where}: expected integers like '8,16,32' or '8..1024', got {text!r}") from None


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {raw[key][1]})")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        raw[key] = (value, lineno)

    cfg = RunConfig(source=source, base_dir=base_dir or Path("."))
    for key, (value, lineno) in raw.items():
        where = f"{source}:{lineno}: field {key!r}"
        if key in _FLOAT_KEYS:
            try:
                num = float(value)
            except ValueError:
                raise ConfigError(f"{where}: expected a number, got {value!r}") from None
            if not math.isfinite(num):
                raise ConfigError(f"{where}: must be finite")
            setattr(cfg, key, num)
        elif key in _INT_KEYS:
            try:
                setattr(cfg, key, int(value))
            except ValueError:
                raise ConfigError(f"{where}: expected an integer, got {value!r}") from None
        elif key == "scheme":
            try:
                cfg.schemes = [SchemeSpec.parse(tok) for tok in value.split(";") if tok.strip()]
            except ConfigError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        elif key == "N_list":
            cfg.N_list = _parse_int_list(value, where)
        elif key == "window":
            try:
                ta, tb = (float(x) for x in value.split(","))
            except ValueError:
                raise ConfigError(f"{where}: expected 't_a, t_b', got {value!r}") from None
            if not tb > ta:
                raise ConfigError(f"{where}: window end must exceed start")
            cfg.window = (ta, tb)
        else:
            setattr(cfg, key, value)

    def fail(key, msg):
        loc = f"{source}:{raw[key][1]}: field {key!r}" if key in raw else f"{source}: field {key!r}"
        raise ConfigError(f"{loc}: {msg}")

    if cfg.N is not None and cfg.N < 1:
        fail("N", "must be >= 1")
    if cfg.N_list is not None and (not cfg.N_list or min(cfg.N_list) < 1):
        fail("N_list", "must list positive step counts")
    if cfg.grid < 2:
        fail("grid", "must be >= 2")
    if cfg.g_max_hz <= 0:
        fail("g_max_hz", "must be positive")
    if cfg.oracle_tol <= 0:
        fail("oracle_tol", "must be positive")
    if cfg.interpolation not in ("cubic", "linear"):
        fail("interpolation", "must be 'cubic' or 'linear'")
    if cfg.policy not in ("clamp", "strict"):
        fail("policy", "must be 'clamp' or 'strict'")
    if cfg.fidelity_threshold is not None and not cfg.fidelity_threshold > 0:
        fail("fidelity_threshold", "must be positive")
    canonical = "\n".join(f"{k}={raw[k][0]}" for k in sorted(raw))
    cfg.digest = hashlib.sha256(canonical.encode()).hexdigest()[:16]
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path), path.parent)


# ---------------------------------------------------------------------------
# run assembly


def make_system(cfg: RunConfig) -> CollisionSystem:
    try:
        if cfg.system in BUILTIN_NAMES:
            return builtin_system(cfg.system, v0=cfg.v0, b=cfg.b, t0=cfg.t0, mu=cfg.mu)
        if cfg.mu is None:
            raise ConfigError(f"{cfg.source}: field 'mu' is required for curve-file systems")
        path = Path(cfg.system)
        if not path.is_absolute():
            path = cfg.base_dir / path
        if not path.exists():
            raise ConfigError(
                f"{cfg.source}: field 'system': {cfg.system!r} is neither a builtin ({', '.join(BUILTIN_NAMES)}) nor a file"
            )
        traj = Trajectory(b=cfg.b, v0=cfg.v0, mu=cfg.mu, t0=cfg.t0)
        return CollisionSystem(traj, read_curve_file(path, cfg.policy), label=path.stem)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None


def make_schedule(cfg: RunConfig, system: CollisionSystem):
    params = RescaleParams(g_max=2 * math.pi * cfg.g_max_hz, grid=cfg.grid, interpolation=cfg.interpolation)
    try:
        return build_schedule(system, cfg.window, params)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None


def _qubits(cfg: RunConfig, system: CollisionSystem) -> int:
    q = qubits_for(system.n) if cfg.qubits is None else cfg.qubits
    if 2**q < system.n:
        raise ConfigError(f"{cfg.source}: field 'qubits': {system.n} channels need at least {qubits_for(system.n)} qubits")
    return q


def _require(cfg: RunConfig, command: str, *, N=False, N_list=False, schemes=True):
    if schemes and not cfg.schemes:
        raise ConfigError(f"{cfg.source}: '{command}' needs a 'scheme' entry")
    if N and (cfg.N is None or cfg.N_list is not None):
        raise ConfigError(f"{cfg.source}: '{command}' needs exactly one of N / N_list, namely N")
    if N_list and (cfg.N_list is None or cfg.N is not None):
        raise ConfigError(f"{cfg.source}: '{command}' needs exactly one of N / N_list, namely N_list")
    if N and len(cfg.schemes) > 1:
        raise ConfigError(f"{cfg.source}: '{command}' runs a single scheme")


def header(cfg: RunConfig, what: str) -> str:
    return f"# qcollide {__version__} {what} config-sha256:{cfg.digest}\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _physical_note(spec: SchemeSpec, q: int) -> str:
    if spec.is_physical(q):
        return "physical (one- and two-qubit gates only)"
    if spec.split_order == 0:
        return "unphysical dense gates"
    return "unphysical three-qubit rotations"


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig, out: Path) -> list[Path]:
    _require(cfg, "simulate", N=True)
    system = make_system(cfg)
    schedule = make_schedule(cfg, system)
    q = _qubits(cfg, system)
    spec = cfg.scheme
    res = propagate(schedule, q, spec, cfg.N)
    oracle = reference_oracle(schedule, q, cfg.oracle_tol)
    d = 2**q

    cols = ["step", "tau"] + [f"{p}(psi_{j})" for j in range(1, d + 1) for p in ("Re", "Im")]
    rows = [",".join(cols)]
    for step, (tau, psi) in enumerate(zip(res.tau, res.trajectory)):
        vals = [str(step), _fmt(tau)]
        for z in psi:
            vals += [_fmt(z.real), _fmt(z.imag)]
        rows.append(",".join(vals))
    traj_text = header(cfg, "trajectory") + "\n".join(rows) + "\n"

    per_step = Counter()
    for gate in res.gates:
        kind = type(gate).__name__
        if kind == "PauliRotation":
            w = gate.string.weight
            kind = "phase" if w == 0 else f"{min(w, 3)}q"
        elif kind == "DenseUnitary":
            kind = "dense"
        else:
            kind = "phase"
        per_step[gate.step, kind] += 1
    gate_rows = ["step,n_1q,n_2q,n_3q,n_dense,phase_records"]
    for n in range(cfg.N):
        gate_rows.append(",".join([str(n)] + [str(per_step[n, k]) for k in ("1q", "2q", "3q", "dense", "phase")]))
    gates_text = header(cfg, "gates") + "\n".join(gate_rows) + "\n"

    c = res.counts
    summary = [
        f"system: {system.label}",
        f"channels: {system.n}",
        f"qubits: {q}",
        f"scheme: {spec.label}",
        f"gate_set: {_physical_note(spec, q)}",
        f"N: {cfg.N}",
        f"dt_s: {_fmt(res.dt)}",
        f"T_qc_s: {_fmt(schedule.T_qc)}",
        f"g_max_rad_per_s: {_fmt(schedule.g_max)}",
        f"phase_integral_rad: {_fmt(schedule.total_phase)}",
        f"oracle_tol: {cfg.oracle_tol:g}",
        f"error_E: {_fmt(error_metric(res.psi_final, oracle))}",
        f"leakage: {_fmt(leakage(res.psi_final, system.n))}",
        f"n_1q: {c.n_1q}",
        f"n_2q: {c.n_2q}",
        f"n_3q: {c.n_3q}",
        f"n_dense: {c.n_dense}",
        f"phase_records: {c.phase_records}",
    ]
    probs = np.abs(res.psi_final[: system.n]) ** 2
    summary += [f"P_{j + 1}: {_fmt(p)}" for j, p in enumerate(probs)]
    summary_text = header(cfg, "summary") + "\n".join(summary) + "\n"

    paths = [out / "trajectory.csv", out / "gates.txt", out / "summary.txt"]
    for path, text in zip(paths, (traj_text, gates_text, summary_text)):
        write_atomic(path, text)
    return paths


def cmd_sweep(cfg: RunConfig, out: Path) -> list[Path]:
    _require(cfg, "sweep", N_list=True)
    system = make_system(cfg)
    schedule = make_schedule(cfg, system)
    q = _qubits(cfg, system)
    oracle = reference_oracle(schedule, q, cfg.oracle_tol)
    paths = []
    for spec in cfg.schemes:
        records = sweep(schedule, q, spec, cfg.N_list, oracle)
        name = "sweep.csv" if len(cfg.schemes) == 1 else f"sweep_{spec.slug}.csv"
        text = sweep_csv(records, header(cfg, f"sweep {spec.label} {_physical_note(spec, q)}"))
        write_atomic(out / name, text)
        paths.append(out / name)
    if cfg.fidelity_threshold is not None:
        results = [min_gates_for_fidelity(schedule, q, s, oracle, cfg.fidelity_threshold) for s in cfg.schemes]
        title = f"{system.label}: minimal gates for E < {cfg.fidelity_threshold:g}"
        write_atomic(out / "fidelity.txt", header(cfg, "fidelity") + fidelity_report(results, title))
        paths.append(out / "fidelity.txt")
    return paths


def cmd_rescale(cfg: RunConfig, out: Path) -> list[Path]:
    schedule = make_schedule(cfg, make_system(cfg))
    cols, rows = schedule_rows(schedule)
    body = "\n".join(",".join(_fmt(x) for x in row) for row in rows)
    path = out / "schedule.csv"
    write_atomic(path, header(cfg, "schedule") + ",".join(cols) + "\n" + body + "\n")
    return [path]


def cmd_export_circuit(cfg: RunConfig, out: Path) -> list[Path]:
    _require(cfg, "export-circuit", N=True)
    system = make_system(cfg)
    schedule = make_schedule(cfg, system)
    q = _qubits(cfg, system)
    res = propagate(schedule, q, cfg.scheme, cfg.N)
    path = out / "circuit.txt"
    write_atomic(path, format_circuit(res.gates, q, header(cfg, f"circuit {cfg.scheme.label} N={cfg.N} q={q}")))
    return [path]


def cmd_selftest(seed: int, mutate: str | None, stream) -> bool:
    results = run_all(seed, mutate, log=lambda line: print(line, file=stream, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=stream)
    return not failed


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "rescale": cmd_rescale,
    "export-circuit": cmd_export_circuit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcollide", description="Collision dynamics on a simulated quantum register.")
    parser.add_argument("--version", action="version", version=f"qcollide {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="run configuration file")
        p.add_argument("--out", type=Path, help="output directory (overrides the config 'out' key)")
    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--config", type=Path, help="optional config supplying 'seed'")
    p.add_argument("--seed", type=int)
    p.add_argument("--mutate", choices=MUTATIONS, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            seed = DEFAULT_SEED
            if args.config is not None:
                seed = load_config(args.config).seed
            if args.seed is not None:
                seed = args.seed
            return EXIT_OK if cmd_selftest(seed, args.mutate, sys.stdout) else EXIT_NUMERIC
        cfg = load_config(args.config)
        out = args.out or (cfg.base_dir / cfg.out if cfg.out else Path("."))
        for path in COMMANDS[args.command](cfg, out):
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"qcollide: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qcollide: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qcollide: error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
