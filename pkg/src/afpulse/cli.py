"""Experiment runner.

    afpulse <experiment> [--config FILE] [--out DIR] [--seed N] [--threads N] [--<key> VALUE ...]

Config files hold one ``key = value`` per line (``#`` starts a comment,
lists are comma-separated).  Command-line flags override file keys, which
override the built-in defaults.  Each run writes ``<out>/<experiment>.csv``
and ``<out>/<experiment>.manifest``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import platform
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels
from .af_core import AfError, build_system_matrix, decompose_toeplitz, solve_direct, solve_fast
from .link_sim import ChannelConfig, LinkFilters, Modulation, run_link
from .metrics import (
    SweepResult,
    ber,
    method_label,
    papr_db,
    papr_table,
    relative_rms_error,
    sweep_ber_vs_ebn0,
    sweep_ber_vs_jitter,
    sweep_rms_vs_order,
    sweep_rms_vs_rolloff,
)
from .pulse_filters import PulseKind, PulseShape, design

EXPERIMENTS = ("rms-vs-order", "rms-vs-rolloff", "ber-vs-jitter", "ber-vs-ebn0",
               "papr-table", "solve-bench", "single-run")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class ConfigError(ValueError):
    pass


def _grid(start, stop, step, ndigits=3):
    n = int(round((stop - start) / step))
    return [round(start + i * step, ndigits) for i in range(n + 1)]


@dataclass
class ExperimentConfig:
    experiment: str = "single-run"
    families: list = field(default_factory=lambda: ["SRRC", "BTRC"])
    M: int = 24
    beta: float = 0.05
    mu: int = 4
    K: int = 1023
    modulation: str = "BPSK"
    seed: int = 0
    trials: int = 10**6
    orders: list = field(default_factory=lambda: list(range(8, 41, 4)))
    rolloffs: list = field(default_factory=lambda: _grid(0.05, 1.0, 0.05))
    jitters: list = field(default_factory=lambda: _grid(-0.25, 0.25, 0.025))
    jitter: float = 0.0
    ebn0: float = 15.0
    ebn0s: list = field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    betas: list = field(default_factory=lambda: [0.05, 0.5, 1.0])
    papr_betas: list = field(default_factory=lambda: [0.05, 0.1, 0.15])
    sizes: list = field(default_factory=lambda: [2**e for e in range(10, 17)])
    repeats: int = 5
    direct_max: int = 4096
    rms_blocks: int = 4
    af: bool = True
    noiseless: bool = False
    threads: int = 1
    out: str = "results"

    def validate(self) -> ExperimentConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        for fam in self.families:
            if fam not in PulseKind.__members__:
                raise ConfigError(f"families: unknown filter family {fam!r}")
        if self.mu < 1:
            raise ConfigError(f"mu: must be >= 1, got {self.mu}")
        for name, orders in (("M", [self.M]), ("orders", self.orders)):
            for order in orders:
                if order < 0 or order % 2:
                    raise ConfigError(f"{name}: filter order must be even and non-negative, got {order}")
                if order % self.mu:
                    raise ConfigError(f"{name}: mu={self.mu} must divide the filter order {order}")
        for name in ("beta", "rolloffs", "betas", "papr_betas"):
            values = getattr(self, name)
            for b in (values if isinstance(values, list) else [values]):
                if not 0.0 < b <= 1.0:
                    raise ConfigError(f"{name}: roll-off must lie in (0, 1], got {b}")
        for j in self.jitters + [self.jitter]:
            if abs(j) > 0.5:
                raise ConfigError(f"jitter: |value| must be <= 0.5, got {j}")
        if self.K < 0:
            raise ConfigError(f"K: must be >= 0, got {self.K}")
        if self.modulation not in Modulation.__members__:
            raise ConfigError(f"modulation: unknown {self.modulation!r}; choose BPSK or QAM16")
        for name in ("trials", "repeats", "threads", "rms_blocks"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be >= 1, got {getattr(self, name)}")
        for n in self.sizes:
            if n < 1:
                raise ConfigError(f"sizes: block length must be >= 1, got {n}")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _scalar(kind, text, key):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            value = float(text)
            if not value.is_integer():
                raise ValueError(text)
            return int(value)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None


def _element_type(key):
    sample = _FIELDS[key].default_factory()
    return type(sample[0]) if sample else float


def parse_value(key: str, text: str):
    """Convert the text of ``key`` to the type of its default."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown key {key!r}")
    f = _FIELDS[key]
    if f.default_factory is not dataclasses.MISSING:
        elem = _element_type(key)
        parts = [p for p in text.split(",") if p.strip()]
        return [_scalar(elem, p, key) for p in parts]
    return _scalar(type(f.default), text, key)


def read_config_file(path) -> dict:
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            values[key] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def parse_config(path=None, overrides: dict | None = None, experiment: str | None = None) -> ExperimentConfig:
    """Defaults, then ``path`` keys, then ``overrides`` (text or typed values)."""
    values = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        values[key] = parse_value(key, value) if isinstance(value, str) else value
    if experiment is not None:
        values["experiment"] = experiment
    unknown = set(values) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    return ExperimentConfig(**values).validate()


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return f"{float(value):.12g}"
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_manifest(path: Path, cfg: ExperimentConfig, extra: dict) -> None:
    lines = []
    for key in sorted(_FIELDS):
        value = getattr(cfg, key)
        text = ",".join(format_cell(v) for v in value) if isinstance(value, list) else format_cell(value)
        lines.append(f"{key} = {text}")
    info = {
        "afpulse_version": __version__,
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "kernel_backend": kernels.BACKEND,
    }
    info.update(extra)
    lines += [f"{k} = {format_cell(v)}" for k, v in info.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _families(cfg):
    return tuple(PulseKind(f) for f in cfg.families)


def single_run(cfg: ExperimentConfig) -> tuple[list, list]:
    """Conventional and AF link per family at one operating point."""
    modulation = Modulation(cfg.modulation)
    n_blocks = max(1, -(-cfg.trials // ((cfg.K + 1) * modulation.bits_per_symbol)))
    channel = ChannelConfig(ebn0_db=cfg.ebn0, jitter=cfg.jitter, seed=cfg.seed, noiseless=cfg.noiseless)
    header = ["method", "rms_error_percent", "ber", "bit_errors", "bits", "papr_db",
              "delay_s", "af_power_gain_db"]
    rows = []
    for kind in _families(cfg):
        filters = LinkFilters.matched(design(PulseShape(kind, cfg.beta), cfg.M, cfg.mu))
        for af in ((False, True) if cfg.af else (False,)):
            run = run_link(channel, filters, cfg.K, af, modulation, n_blocks)
            est = ber(run.detected, run.bits)
            gain = float("nan")
            if af:
                energy = np.sum(np.abs(run.symbols + run.z) ** 2) / np.sum(np.abs(run.symbols) ** 2)
                gain = 10 * np.log10(energy)
            rows.append([method_label(kind, af), relative_rms_error(run.rx, run.symbols),
                         est.format(), est.errors, est.bits, papr_db(run.tx), run.delay, gain])
    return header, rows


def solve_bench(cfg: ExperimentConfig) -> tuple[list, list]:
    """Median wall time of the direct and fast AF solvers per block length."""
    header = ["K", "block_len", "direct_s", "fast_s", "fast_solve_s", "max_abs_diff"]
    rows = []
    f = design(PulseShape(PulseKind(cfg.families[0]), cfg.beta), cfg.M, cfg.mu)
    rng = np.random.default_rng(cfg.seed)
    for n in cfg.sizes:
        K = n - 1
        s = rng.choice([-1.0, 1.0], size=n)
        A = build_system_matrix(f, f, K)
        fast_times, solve_times, direct_times = [], [], []
        for _ in range(cfg.repeats):
            t0 = time.perf_counter()
            dec = decompose_toeplitz(A)
            z_fast = solve_fast(dec, s).z
            fast_times.append(time.perf_counter() - t0)
        # warm solves reuse the cached boundary system
        for _ in range(cfg.repeats):
            t1 = time.perf_counter()
            solve_fast(dec, s)
            solve_times.append(time.perf_counter() - t1)
        diff = float("nan")
        direct = float("nan")
        if n <= cfg.direct_max:
            for _ in range(cfg.repeats):
                t0 = time.perf_counter()
                z_direct = solve_direct(A, s).z
                direct_times.append(time.perf_counter() - t0)
            direct = statistics.median(direct_times)
            diff = float(np.max(np.abs(z_fast - z_direct)))
            if diff > 1e-9:
                raise AfError(f"fast and direct solvers disagree by {diff:.3e} at K+1={n}")
        rows.append([K, n, direct, statistics.median(fast_times), statistics.median(solve_times), diff])
    return header, rows


def run_experiment(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Run ``cfg.experiment`` and write its CSV and manifest; returns both paths."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    families = _families(cfg)
    modulation = Modulation(cfg.modulation)
    t0 = time.perf_counter()
    name = cfg.experiment
    if name == "rms-vs-order":
        result = sweep_rms_vs_order(cfg.orders, cfg.beta, cfg.mu, cfg.K, families, cfg.seed,
                                    cfg.rms_blocks)
    elif name == "rms-vs-rolloff":
        result = sweep_rms_vs_rolloff(cfg.rolloffs, cfg.M, cfg.mu, cfg.K, families, cfg.seed,
                                      cfg.rms_blocks)
    elif name == "ber-vs-jitter":
        result = sweep_ber_vs_jitter(cfg.jitters, cfg.M, cfg.beta, cfg.mu, cfg.K, cfg.ebn0,
                                     families, cfg.trials, cfg.seed, cfg.threads)
    elif name == "ber-vs-ebn0":
        result = sweep_ber_vs_ebn0(cfg.ebn0s, cfg.M, cfg.betas, cfg.mu, cfg.K, modulation,
                                   families, cfg.trials, cfg.seed, cfg.threads)
    elif name == "papr-table":
        result = papr_table(cfg.papr_betas, cfg.M, cfg.mu, cfg.K, families, cfg.trials, cfg.seed)
    elif name == "solve-bench":
        result = solve_bench(cfg)
    else:
        result = single_run(cfg)
    header, rows = result.table() if isinstance(result, SweepResult) else result
    wall = time.perf_counter() - t0
    csv_path = out / f"{name}.csv"
    manifest_path = out / f"{name}.manifest"
    write_csv(csv_path, header, rows)
    write_manifest(manifest_path, cfg, {"csv": csv_path.name, "rows": len(rows), "wall_time_s": wall})
    return csv_path, manifest_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afpulse", description="AF pulse-shaping experiment runner")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", metavar="PATH", help="key = value config file")
    for key, f in _FIELDS.items():
        if key == "experiment":
            continue
        flag = "--" + key.replace("_", "-")
        is_list = f.default_factory is not dataclasses.MISSING
        parser.add_argument(flag, dest=key, metavar="LIST" if is_list else key.upper(),
                            help="comma-separated list" if is_list else None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("experiment", "config")}
    try:
        cfg = parse_config(args.config, overrides, args.experiment)
    except (ConfigError, OSError) as exc:
        print(f"afpulse: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        csv_path, _ = run_experiment(cfg)
    except AfError as exc:
        print(f"afpulse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"afpulse: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(csv_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
