"""Config-driven batch front end.

    klconst <mode> --config <path> [--seed N] [--out <path>]

Modes
-----
design
    Pick the bit split and build the constellation at each SNR of a grid.
    Writes a summary CSV (one chosen-allocation row per SNR) to the output
    path, plus a full allocation table CSV and a constellation file per
    SNR next to it, suffixed _pointNN.
ser-sweep
    Monte-Carlo SER for the designed multi-level constellation, the
    1-level unitary design, and the pilot-based QAM baseline over an SNR
    grid, one CSV row per scheme per SNR.  All schemes share the seed, so
    they see common random channels.
kl-check
    Draw random point pairs and compare the closed-form KL distance with
    its Monte-Carlo estimate, one CSV row per pair per SNR.
pack-unitary
    Optimize a direction codebook of 2^l_s vectors and write it out.

Config files are flat `key = value` text; `#` lines are comments.  Lists
are comma-separated (snr_db_list = 0, 5, 10).  Direction codebooks are
built in-process by default; unitary_library_<l_v> keys point individual
sizes at codebook files instead.

Exit codes: 0 success, 2 config problem, 3 numeric failure.  Identical
config and seed give byte-identical output files.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    ChannelParams,
    FileFormatError,
    LevelSet,
    MultiLevelConstellation,
    SignalPoint,
    kl_full,
    save_constellation,
)
from .linksim import (
    RESULT_CSV_HEADER,
    estimate_ser,
    kl_mc_estimate,
    pilot_qam_run,
    pilot_qam_scheme,
)
from .multilevel import ALLOCATION_CSV_HEADER, allocate_bits
from .unitary import (
    PackingConfig,
    default_library,
    load_unitary,
    min_sq_chordal,
    optimize_unitary,
    save_unitary,
    welch_limit,
)

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "run", "main"]

MODES = ("design", "ser-sweep", "kl-check", "pack-unitary")
SCHEMES = ("multilevel", "unitary", "pilot-qam")

DESIGN_CSV_HEADER = "snr_db," + ALLOCATION_CSV_HEADER
KL_CSV_HEADER = "pair,K,M,snr_db,kl_closed,kl_mc,std_error,z_score,samples,seed"

_LIBRARY_KEY = "unitary_library_"


class ConfigError(ValueError):
    """Bad command line or config file content; maps to exit code 2."""


@dataclass
class ExperimentConfig:
    """One parsed and validated run description."""

    mode: str
    output_path: str
    seed: int
    K: int = 0
    M: int = 0
    l_s: int = 0
    snr_db_list: list = field(default_factory=list)
    trials: int = 0
    unitary_library_paths: dict = field(default_factory=dict)
    schemes: tuple = SCHEMES
    pairs: int = 20
    restarts: int | None = None
    iterations: int | None = None
    smoothing: float | None = None


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _read_pairs(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _as_int(raw, key, low=None, high=None):
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"field {key!r} must be an integer, got {raw!r}") from None
    if low is not None and value < low:
        raise ConfigError(f"field {key!r} must be >= {low}, got {value}")
    if high is not None and value >= high:
        raise ConfigError(f"field {key!r} must be < {high}, got {value}")
    return value


def _as_float(raw, key):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"field {key!r} must be a real number, got {raw!r}") from None
    if not np.isfinite(value):
        raise ConfigError(f"field {key!r} must be finite, got {raw!r}")
    return value


def _as_float_list(raw, key):
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"field {key!r} must be a non-empty list of reals")
    return [_as_float(s, key) for s in items]


def _as_schemes(raw):
    items = tuple(s.strip() for s in raw.split(",") if s.strip())
    if not items:
        raise ConfigError("field 'schemes' must be a non-empty list")
    for name in items:
        if name not in SCHEMES:
            raise ConfigError(
                f"field 'schemes' has unknown entry {name!r}; "
                f"valid entries: {', '.join(SCHEMES)}"
            )
    if len(set(items)) != len(items):
        raise ConfigError("field 'schemes' has duplicate entries")
    return items


_PLAIN_KEYS = {
    "mode",
    "K",
    "M",
    "l_s",
    "snr_db_list",
    "trials",
    "seed",
    "output_path",
    "schemes",
    "pairs",
    "restarts",
    "iterations",
    "smoothing",
}

_REQUIRED = {
    "design": ("K", "l_s", "snr_db_list", "seed", "output_path"),
    "ser-sweep": ("K", "M", "l_s", "snr_db_list", "trials", "seed", "output_path"),
    "kl-check": ("K", "M", "snr_db_list", "trials", "seed", "output_path"),
    "pack-unitary": ("K", "l_s", "seed", "output_path"),
}


def parse_config(path, mode, seed_override=None, out_override=None):
    """Read and validate a config file for the given mode.

    CLI overrides (--seed, --out) replace the file's values before
    validation.  Raises ConfigError with the offending field named.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; valid modes: {', '.join(MODES)}")
    raw = _read_pairs(path)

    library_paths = {}
    for key in list(raw):
        if key.startswith(_LIBRARY_KEY):
            l_v = _as_int(key[len(_LIBRARY_KEY):], key, low=0)
            library_paths[l_v] = raw.pop(key)
    for key in raw:
        if key not in _PLAIN_KEYS:
            raise ConfigError(f"unknown field {key!r} in {path}")

    if "mode" in raw and raw["mode"] != mode:
        raise ConfigError(
            f"field 'mode' says {raw['mode']!r} but the command line says {mode!r}"
        )
    if seed_override is not None:
        raw["seed"] = str(seed_override)
    if out_override is not None:
        raw["output_path"] = str(out_override)

    for key in _REQUIRED[mode]:
        if key not in raw:
            raise ConfigError(f"missing required field {key!r} for mode {mode}")

    cfg = ExperimentConfig(
        mode=mode,
        output_path=raw["output_path"],
        seed=_as_int(raw["seed"], "seed", low=0, high=2**64),
    )
    if "K" in raw:
        cfg.K = _as_int(raw["K"], "K", low=1)
    if "M" in raw:
        cfg.M = _as_int(raw["M"], "M", low=1)
    if "l_s" in raw:
        cfg.l_s = _as_int(raw["l_s"], "l_s", low=1)
    if "snr_db_list" in raw:
        cfg.snr_db_list = _as_float_list(raw["snr_db_list"], "snr_db_list")
    if "trials" in raw:
        cfg.trials = _as_int(raw["trials"], "trials", low=1)
    if "schemes" in raw:
        cfg.schemes = _as_schemes(raw["schemes"])
    if "pairs" in raw:
        cfg.pairs = _as_int(raw["pairs"], "pairs", low=1)
    if "restarts" in raw:
        cfg.restarts = _as_int(raw["restarts"], "restarts", low=1)
    if "iterations" in raw:
        cfg.iterations = _as_int(raw["iterations"], "iterations", low=1)
    if "smoothing" in raw:
        cfg.smoothing = _as_float(raw["smoothing"], "smoothing")
        if cfg.smoothing <= 0:
            raise ConfigError(f"field 'smoothing' must be > 0, got {cfg.smoothing}")

    for l_v, lib_path in library_paths.items():
        if not Path(lib_path).is_file():
            raise ConfigError(
                f"field '{_LIBRARY_KEY}{l_v}' references a missing file: {lib_path}"
            )
    cfg.unitary_library_paths = dict(sorted(library_paths.items()))
    return cfg


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


def _g(x):
    return f"{x:.12g}"


def _sigma2_at(K, snr_db):
    return 1.0 / (K * 10.0 ** (snr_db / 10.0))


def _write_text(path, text):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _build_library(cfg):
    lib = default_library(cfg.K, cfg.l_s, seed=cfg.seed)
    for l_v, path in cfg.unitary_library_paths.items():
        if l_v > cfg.l_s:
            raise ConfigError(
                f"field '{_LIBRARY_KEY}{l_v}' exceeds l_s = {cfg.l_s}"
            )
        try:
            uset = load_unitary(path)
        except FileFormatError as exc:
            raise ConfigError(f"field '{_LIBRARY_KEY}{l_v}': {exc}") from exc
        if uset.K != cfg.K:
            raise ConfigError(
                f"field '{_LIBRARY_KEY}{l_v}': codebook K = {uset.K} does not "
                f"match config K = {cfg.K}"
            )
        if uset.size != 2**l_v:
            raise ConfigError(
                f"field '{_LIBRARY_KEY}{l_v}': codebook holds {uset.size} "
                f"vectors, expected {2 ** l_v}"
            )
        lib[l_v] = uset
    return lib


def _one_level(directions, sigma2):
    return MultiLevelConstellation(LevelSet([1.0], sigma2), directions)


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------


def run_design(cfg):
    lib = _build_library(cfg)
    out = Path(cfg.output_path)
    stem = out.with_suffix("")
    lines = [DESIGN_CSV_HEADER]
    for idx, snr_db in enumerate(cfg.snr_db_list):
        sigma2 = _sigma2_at(cfg.K, snr_db)
        outcome = allocate_bits(cfg.l_s, sigma2, lib)
        chosen = outcome.per_allocation_table[outcome.l_alpha]
        lines.append(f"{_g(snr_db)},{chosen.csv()}")
        table = [ALLOCATION_CSV_HEADER]
        table += [row.csv() for row in outcome.per_allocation_table]
        _write_text(f"{stem}_point{idx:02d}_table.csv", "\n".join(table) + "\n")
        save_constellation(
            outcome.constellation, f"{stem}_point{idx:02d}_constellation.txt"
        )
    _write_text(out, "\n".join(lines) + "\n")
    return 0


def run_ser_sweep(cfg):
    lib = _build_library(cfg)
    pilot = None
    if "pilot-qam" in cfg.schemes:
        try:
            pilot = pilot_qam_scheme(cfg.K, cfg.l_s)
        except ValueError as exc:
            raise ConfigError(f"fields 'K'/'l_s': {exc}") from exc
    lines = [RESULT_CSV_HEADER]
    for snr_db in cfg.snr_db_list:
        sigma2 = _sigma2_at(cfg.K, snr_db)
        params = ChannelParams(M=cfg.M, K=cfg.K, sigma2=sigma2)
        for scheme in cfg.schemes:
            if scheme == "multilevel":
                outcome = allocate_bits(cfg.l_s, sigma2, lib)
                est = estimate_ser(outcome.constellation, params, cfg.trials, cfg.seed)
                l_alpha = str(outcome.l_alpha)
            elif scheme == "unitary":
                est = estimate_ser(
                    _one_level(lib[cfg.l_s], sigma2), params, cfg.trials, cfg.seed
                )
                l_alpha = "0"
            else:
                est = pilot_qam_run(pilot, params, cfg.trials, cfg.seed)
                l_alpha = ""
            lines.append(
                f"{scheme},{cfg.K},{cfg.M},{cfg.l_s},{l_alpha},{_g(snr_db)},"
                f"{_g(est.ser)},{_g(est.ci95_low)},{_g(est.ci95_high)},"
                f"{est.trials},{est.seed}"
            )
    _write_text(cfg.output_path, "\n".join(lines) + "\n")
    return 0


def run_kl_check(cfg):
    pair_rng = np.random.Generator(
        np.random.Philox(key=np.array([cfg.seed, 1 << 63], dtype=np.uint64))
    )
    lines = [KL_CSV_HEADER]
    for snr_db in cfg.snr_db_list:
        sigma2 = _sigma2_at(cfg.K, snr_db)
        params = ChannelParams(M=cfg.M, K=cfg.K, sigma2=sigma2)
        for p in range(cfg.pairs):
            points = []
            for _ in range(2):
                v = pair_rng.standard_normal(cfg.K) + 1j * pair_rng.standard_normal(
                    cfg.K
                )
                v /= np.linalg.norm(v)
                points.append(SignalPoint(pair_rng.uniform(0.2, 1.4), v))
            s_i, s_k = points
            closed = kl_full(s_i, s_k, sigma2)
            seed_p = (cfg.seed + p) % 2**64
            est = kl_mc_estimate(s_i, s_k, params, cfg.trials, seed_p)
            z = (est.estimate - closed) / est.std_error if est.std_error else 0.0
            lines.append(
                f"{p},{cfg.K},{cfg.M},{_g(snr_db)},{_g(closed)},{_g(est.estimate)},"
                f"{_g(est.std_error)},{_g(z)},{est.samples},{est.seed}"
            )
    _write_text(cfg.output_path, "\n".join(lines) + "\n")
    return 0


def run_pack_unitary(cfg):
    kwargs = {"K": cfg.K, "cardinality": 2**cfg.l_s, "seed": cfg.seed}
    if cfg.restarts is not None:
        kwargs["restarts"] = cfg.restarts
    if cfg.iterations is not None:
        kwargs["iterations"] = cfg.iterations
    if cfg.smoothing is not None:
        kwargs["smoothing"] = cfg.smoothing
    uset = optimize_unitary(PackingConfig(**kwargs))
    save_unitary(uset, cfg.output_path)
    print(
        f"packed {uset.size} directions in K={uset.K}: "
        f"min_sq_dist={_g(min_sq_chordal(uset))}, "
        f"welch_limit={_g(welch_limit(uset.K, uset.size))}"
    )
    return 0


_RUNNERS = {
    "design": run_design,
    "ser-sweep": run_ser_sweep,
    "kl-check": run_kl_check,
    "pack-unitary": run_pack_unitary,
}


def run(cfg):
    """Execute a parsed config; returns the process exit code."""
    try:
        return _RUNNERS[cfg.mode](cfg)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        # domain validation tripped by config-derived values
        raise ConfigError(str(exc)) from exc


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="klconst",
        description="Design and evaluate multi-level non-coherent constellations.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="flat key = value file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="override config output_path")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, args.mode, args.seed, args.out)
        return run(cfg)
    except ConfigError as exc:
        print(f"klconst: config error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"klconst: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
