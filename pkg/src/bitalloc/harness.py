"""Monte-Carlo EVM sweep over SNR, receiver scheme and budget resolution.

Every random draw comes from a Philox stream keyed by (seed, trial, slot):
slot 0 draws the trial's channel, slot 1 + k draws symbols and noise for the
k-th SNR point. All schemes at one SNR point re-seed from the same key, so
they see identical channel, symbols and noise. Results depend only on the
configuration, never on how trials are spread over worker processes.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .allocation import PowerModel
from .channel import ArrayGeometry, ChannelParams, generate_channel
from .link_sim import QUANTIZER_MODES, LinkConfig, Scheme, run_trial, scheme_bits

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "CSV_HEADER",
    "trial_rng",
    "expand_schemes",
    "run_sweep",
    "emit_csv",
    "write_csv",
    "read_csv",
    "parse_cli",
    "main",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "scheme",
    "b_bar",
    "snr_db",
    "trials",
    "evm_mean_pct",
    "evm_std_pct",
    "inactive_mean",
    "total_power_w",
    "infeasible",
)
SCHEME_KINDS = ("full", "uniform", "ba")


@dataclass(frozen=True)
class ExperimentConfig:
    n_antennas: int = 256
    n_users: int = 8
    snr_db_grid: tuple[float, ...] = tuple(float(s) for s in range(-10, 11, 2))
    b_bar_list: tuple[int, ...] = (1, 2, 3)
    schemes: tuple[str, ...] = SCHEME_KINDS
    trials: int = 500
    seed: int = 0
    quantizer_mode: str = "codebook"
    channel: ChannelParams = field(default_factory=ChannelParams)
    power: PowerModel = field(default_factory=PowerModel)
    carrier_hz: float = 73e9
    spacing_ratio: float = 0.25

    def __post_init__(self):
        if self.n_users < 1 or self.n_antennas < self.n_users:
            raise ValueError("need 1 <= n_users <= n_antennas")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db_grid:
            raise ValueError("snr_db_grid is empty")
        if any(int(b) != b or b < 1 for b in self.b_bar_list):
            raise ValueError("b_bar values must be integers >= 1")
        unknown = set(self.schemes) - set(SCHEME_KINDS)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")
        if self.quantizer_mode not in QUANTIZER_MODES:
            raise ValueError(f"quantizer_mode must be one of {QUANTIZER_MODES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.channel.n_users != self.n_users:
            object.__setattr__(self, "channel", dataclasses.replace(self.channel, n_users=self.n_users))

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.from_carrier(self.n_antennas, self.carrier_hz, self.spacing_ratio)


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    b_bar: int
    snr_db: float
    trials: int
    evm_mean_pct: float
    evm_std_pct: float
    inactive_mean: float
    total_power_w: float
    infeasible: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, scheme: str, b_bar: int, snr_db: float) -> ResultRow:
        for r in self.rows:
            if r.scheme == scheme and r.b_bar == b_bar and np.isclose(r.snr_db, snr_db):
                return r
        raise KeyError((scheme, b_bar, snr_db))

    def evm_curve(self, scheme: str, b_bar: int = 0) -> tuple[np.ndarray, np.ndarray]:
        sel = sorted((r.snr_db, r.evm_mean_pct) for r in self.rows if r.scheme == scheme and r.b_bar == b_bar)
        snr, val = zip(*sel)
        return np.array(snr), np.array(val)


def trial_rng(seed: int, trial: int, slot: int) -> np.random.Generator:
    """Counter-based stream for one (trial, slot) pair."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial, slot))))


def expand_schemes(config: ExperimentConfig) -> list[Scheme]:
    """Concrete schemes in CSV order; full resolution ignores b_bar."""
    out = []
    for kind in SCHEME_KINDS:
        if kind not in config.schemes:
            continue
        if kind == "full":
            out.append(Scheme("full"))
        else:
            out.extend(Scheme(kind, int(b)) for b in sorted(set(config.b_bar_list)))
    return out


def _run_one_trial(args):
    config, trial = args
    schemes = expand_schemes(config)
    n_s, n_snr = len(schemes), len(config.snr_db_grid)
    evm = np.full((n_s, n_snr), np.nan)
    active = np.zeros((n_s, n_snr))
    power = np.full((n_s, n_snr), np.nan)
    feasible = np.ones((n_s, n_snr), dtype=bool)

    channel = generate_channel(config.geometry, config.channel, trial_rng(config.seed, trial, 0))
    for k, snr_db in enumerate(config.snr_db_grid):
        link = LinkConfig(snr_db=float(snr_db), quantizer_mode=config.quantizer_mode, power=config.power)
        for s, scheme in enumerate(schemes):
            bits = scheme_bits(scheme, channel, link)
            res = run_trial(link, channel, scheme, trial_rng(config.seed, trial, 1 + k), bits=bits)
            evm[s, k] = res.evm_pct
            active[s, k] = res.n_active
            power[s, k] = res.total_power
            feasible[s, k] = res.feasible
    return evm, active, power, feasible


def run_sweep(config: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Run all trials and aggregate one row per (scheme, b_bar, SNR).

    EVM statistics are over feasible trials only (population std); infeasible
    trials are counted in the ``infeasible`` column.
    """
    jobs = [(config, t) for t in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_trial, jobs, chunksize=max(1, config.trials // (4 * workers))))
    else:
        results = [_run_one_trial(j) for j in jobs]

    evm, active, power, feasible = (np.stack(a) for a in zip(*results))
    schemes = expand_schemes(config)
    table = ResultTable()
    for s, scheme in enumerate(schemes):
        for k, snr_db in enumerate(config.snr_db_grid):
            ok = feasible[:, s, k]
            vals = evm[ok, s, k]
            table.rows.append(
                ResultRow(
                    scheme=scheme.name,
                    b_bar=scheme.b_bar,
                    snr_db=float(snr_db),
                    trials=config.trials,
                    evm_mean_pct=float(vals.mean()) if vals.size else float("nan"),
                    evm_std_pct=float(vals.std()) if vals.size else float("nan"),
                    inactive_mean=float(config.n_antennas - active[:, s, k].mean()),
                    total_power_w=float(power[:, s, k].mean()),
                    infeasible=int(np.count_nonzero(~ok)),
                )
            )
    table.rows.sort(key=_row_order)
    return table


def _row_order(r: ResultRow):
    return (("FullResolution", "Uniform", "BA").index(r.scheme), r.b_bar, r.snr_db)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.6g}"


def write_csv(table: ResultTable, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(table.rows, key=_row_order):
        writer.writerow([r.scheme] + [_fmt(getattr(r, name)) for name in CSV_HEADER[1:]])


def emit_csv(table: ResultTable, path) -> Path:
    """Write the table as CSV, six significant digits per real."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        write_csv(table, fh)
    return path


def read_csv(path) -> ResultTable:
    table = ResultTable()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            table.rows.append(
                ResultRow(
                    scheme=rec["scheme"],
                    b_bar=int(rec["b_bar"]),
                    snr_db=float(rec["snr_db"]),
                    trials=int(rec["trials"]),
                    evm_mean_pct=float(rec["evm_mean_pct"]),
                    evm_std_pct=float(rec["evm_std_pct"]),
                    inactive_mean=float(rec["inactive_mean"]),
                    total_power_w=float(rec["total_power_w"]),
                    infeasible=int(rec["infeasible"]),
                )
            )
    return table


# -- command line ----------------------------------------------------------


def _float_list(text: str) -> tuple[float, ...]:
    """Comma list, or ``start:stop:step`` with an inclusive stop."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            return tuple(float(v) for v in np.round(np.arange(start, stop + step / 2, step), 10))
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse number list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse integer list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _scheme_list(text: str) -> tuple[str, ...]:
    aliases = {"full": "full", "fullresolution": "full", "uniform": "uniform", "ba": "ba"}
    out = []
    for t in text.split(","):
        key = t.strip().lower()
        if key not in aliases:
            raise argparse.ArgumentTypeError(f"unknown scheme {t!r}")
        out.append(aliases[key])
    return tuple(out)


# (config-file key, dest, parser); flags use the same names with dashes
_OPTIONS = [
    ("antennas", "antennas", int),
    ("users", "users", int),
    ("snr_db", "snr_db", _float_list),
    ("bbar", "bbar", _int_list),
    ("schemes", "schemes", _scheme_list),
    ("trials", "trials", int),
    ("seed", "seed", int),
    ("mode", "mode", str),
    ("out", "out", str),
    ("workers", "workers", int),
    ("subpaths", "subpaths", int),
    ("angle_spread", "angle_spread", float),
    ("spacing_ratio", "spacing_ratio", float),
    ("carrier_hz", "carrier_hz", float),
    ("adc_c", "adc_c", float),
    ("adc_w", "adc_w", float),
]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bitalloc-sweep",
        description="Monte-Carlo EVM sweep of beamspace ADC bit allocation vs uniform-resolution ADCs.",
    )
    p.add_argument("--config", type=Path, help="key = value file; command-line flags take precedence")
    p.add_argument("--antennas", type=int, help="BS antennas N (default 256)")
    p.add_argument("--users", type=int, help="single-antenna users M (default 8)")
    p.add_argument("--snr-db", type=_float_list, help="SNR grid in dB, e.g. --snr-db=-10:10:2 or 0,5,10")
    p.add_argument("--bbar", type=_int_list, help="budget resolutions, e.g. 1,2,3")
    p.add_argument("--schemes", type=_scheme_list, help="subset of full,uniform,ba")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials (default 500)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--mode", choices=QUANTIZER_MODES, help="quantizer model (default codebook)")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--subpaths", type=int, help="subpaths per user cluster (default 4)")
    p.add_argument("--angle-spread", type=float, help="cluster spread in spatial frequency (default 0.02)")
    p.add_argument("--spacing-ratio", type=float, help="element spacing in wavelengths (default 0.25)")
    p.add_argument("--carrier-hz", type=float, help="carrier frequency (default 73e9)")
    p.add_argument("--adc-c", type=float, help="ADC energy per conversion step in J (default 494e-15)")
    p.add_argument("--adc-w", type=float, help="ADC sampling rate in Hz (default 1e9)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def read_config_file(path: Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    parsers = {key: (dest, conv) for key, dest, conv in _OPTIONS}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in parsers:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        dest, conv = parsers[key]
        try:
            values[dest] = conv(val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if "mode" in values and values["mode"] not in QUANTIZER_MODES:
        raise ValueError(f"{path}: mode must be one of {QUANTIZER_MODES}")
    return values


def _resolve(argv) -> tuple[ExperimentConfig, dict]:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    merged = {}
    if ns.config is not None:
        try:
            merged.update(read_config_file(ns.config))
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
    merged.update({k: v for k, v in vars(ns).items() if v is not None and k != "config"})

    defaults = ExperimentConfig()
    channel = ChannelParams(
        n_users=merged.get("users", defaults.n_users),
        n_subpaths=merged.get("subpaths", defaults.channel.n_subpaths),
        cluster_angle_spread=merged.get("angle_spread", defaults.channel.cluster_angle_spread),
    )
    power = PowerModel(c=merged.get("adc_c", defaults.power.c), w=merged.get("adc_w", defaults.power.w))
    try:
        config = ExperimentConfig(
            n_antennas=merged.get("antennas", defaults.n_antennas),
            n_users=merged.get("users", defaults.n_users),
            snr_db_grid=merged.get("snr_db", defaults.snr_db_grid),
            b_bar_list=merged.get("bbar", defaults.b_bar_list),
            schemes=merged.get("schemes", defaults.schemes),
            trials=merged.get("trials", defaults.trials),
            seed=merged.get("seed", defaults.seed),
            quantizer_mode=merged.get("mode", defaults.quantizer_mode),
            channel=channel,
            power=power,
            carrier_hz=merged.get("carrier_hz", defaults.carrier_hz),
            spacing_ratio=merged.get("spacing_ratio", defaults.spacing_ratio),
        )
    except ValueError as exc:
        parser.error(str(exc))
    extras = {"out": merged.get("out"), "workers": merged.get("workers", 1), "verbose": ns.verbose}
    return config, extras


def parse_cli(args=None) -> ExperimentConfig:
    """Build an ExperimentConfig from command-line flags (exits 2 on bad input)."""
    return _resolve(args)[0]


def main(argv=None) -> int:
    config, extras = _resolve(argv)
    logging.basicConfig(level=logging.INFO if extras["verbose"] else logging.WARNING, format="%(message)s")
    log.info("sweep: N=%d M=%d trials=%d mode=%s", config.n_antennas, config.n_users, config.trials, config.quantizer_mode)
    table = run_sweep(config, workers=max(1, extras["workers"]))
    if extras["out"]:
        emit_csv(table, extras["out"])
        log.info("wrote %d rows to %s", len(table), extras["out"])
    else:
        write_csv(table, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
