"""Monte-Carlo BER sweeps, CIR sweeps and estimator statistics.

Every grid point owns its own PCG64 stream. The stream seed is the first
8 bytes (big-endian) of ``blake2b("{base_seed}|{scheme}|{eps.hex()}|{ebn0.hex()}")``
so adding or removing grid points never changes the others.

Framing per scheme (all frames start at absolute sample index 0):

* ``none``: one data symbol.
* ``sc``: one self-cancelling symbol carrying ``active_carriers / 2`` points.
* ``ml``: one symbol sent twice (2N samples); both corrected halves are
  decided and counted.
* ``ekf``: ``Np`` preamble samples followed by ``ekf_data_symbols`` data
  symbols; preamble samples carry no information bits.
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import RNG_NAME, add_awgn, apply_cfo, ebn0_to_sigma, make_rng
from .ekf import Preamble, ekf_correct, ekf_estimate, preamble_samples
from .ici import CirPoint, cir_self_cancel, cir_standard
from .ml import ml_correct, ml_estimate, ml_frame_build, ml_observe
from .modem import (
    OfdmConfig,
    TimeSamples,
    demap_symbols,
    load_carriers,
    map_bits,
    ofdm_demodulate,
    ofdm_modulate,
    parse_modulation,
)
from .selfcancel import sc_decode, sc_encode

__all__ = [
    "SCHEMES",
    "PRESETS",
    "CSV_HEADER",
    "ConfigurationError",
    "SweepConfig",
    "BerRecord",
    "EstimatorStats",
    "parse_grid",
    "point_seed",
    "throughput_factor",
    "simulate_point",
    "run_ber_sweep",
    "run_cir_sweep",
    "measure_estimator_stats",
    "write_results",
    "read_sweep_config",
    "sweep_for_bits",
    "atomic_write_text",
    "format_float",
]

SCHEMES = ("none", "sc", "ml", "ekf")

CSV_HEADER = "scheme,modulation,epsilon,ebn0_db,bits_sent,bit_errors,ber,throughput_factor,seed"

# Upper bound on complex samples held per simulation chunk.
_CHUNK_SAMPLES = 1 << 18

PRESETS = {
    "paper-table-6-1": dict(
        fft_size=1024,
        active_carriers=768,
        symbols_per_point=100,
        epsilons=(0.0, 0.15, 0.30),
        ebn0_db=tuple(float(v) for v in range(1, 16)),
    ),
    "desk": dict(
        fft_size=64,
        active_carriers=48,
        symbols_per_point=100,
        epsilons=(0.0, 0.15, 0.30),
        ebn0_db=tuple(float(v) for v in range(1, 16)),
    ),
}


class ConfigurationError(ValueError):
    """Invalid sweep or grid, reported before any simulation starts."""


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``"0.1,0.2"``, ``"1:15"`` (unit steps), ``"0.05:0.45:0.05"`` or ``"inf"``.

    Ranges are inclusive; generated values are rounded to 12 decimals so
    ``0.05:0.45:0.05`` yields exactly 0.15, 0.3, ...
    """
    values: list[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ConfigurationError(f"empty entry in grid {text!r}")
        parts = item.split(":")
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            raise ConfigurationError(f"cannot parse grid entry {item!r}") from None
        if len(nums) == 1:
            values.append(nums[0])
            continue
        if len(nums) == 2:
            start, stop = nums
            step = 1.0
        elif len(nums) == 3:
            start, stop, step = nums
        else:
            raise ConfigurationError(f"grid entry {item!r} has too many ':' fields")
        if not all(math.isfinite(v) for v in (start, stop, step)) or step <= 0 or stop < start:
            raise ConfigurationError(f"bad range {item!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values.extend(round(start + i * step, 12) for i in range(count))
    return tuple(values)


def throughput_factor(scheme: str) -> float:
    return 0.5 if scheme in ("sc", "ml") else 1.0


@dataclass(frozen=True)
class SweepConfig:
    config: OfdmConfig
    schemes: tuple[str, ...]
    epsilons: tuple[float, ...]
    ebn0_db: tuple[float, ...]
    symbols_per_point: int = 100
    base_seed: int = 0
    max_bits: int | None = None
    ekf_preamble_len: int | None = None
    ekf_data_symbols: int = 1
    ml_k_range: int | None = None

    def __post_init__(self):
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigurationError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        if not self.schemes or not self.epsilons or not self.ebn0_db:
            raise ConfigurationError("schemes, epsilons and ebn0_db must all be non-empty")
        if self.symbols_per_point < 1:
            raise ConfigurationError("symbols_per_point must be >= 1")
        if self.max_bits is not None and self.max_bits < 1:
            raise ConfigurationError("max_bits must be >= 1")
        if self.ekf_data_symbols < 1:
            raise ConfigurationError("ekf_data_symbols must be >= 1")
        if self.ekf_preamble_len is not None and self.ekf_preamble_len < 1:
            raise ConfigurationError("ekf_preamble_len must be >= 1")
        if "ml" in self.schemes:
            bad = [e for e in self.epsilons if abs(e) >= 0.5]
            if bad:
                raise ConfigurationError(
                    f"ML estimation needs |epsilon| < 0.5, got {bad}"
                )
        if "sc" in self.schemes and self.config.active_carriers % 2:
            raise ConfigurationError("self-cancellation needs an even active_carriers")
        for v in self.epsilons + self.ebn0_db:
            if math.isnan(v):
                raise ConfigurationError("grid values must not be NaN")
        for v in self.ebn0_db:
            if v == -math.inf:
                raise ConfigurationError("Eb/N0 of -inf dB is not a valid grid point")

    @property
    def preamble_len(self) -> int:
        return self.ekf_preamble_len or self.config.fft_size

    @property
    def preamble_overhead(self) -> float:
        """Share of EKF frame samples spent on the preamble."""
        data = self.ekf_data_symbols * self.config.fft_size
        return self.preamble_len / (self.preamble_len + data)


@dataclass(frozen=True)
class BerRecord:
    scheme: str
    modulation: str
    epsilon: float
    ebn0_db: float
    bits_sent: int
    bit_errors: int
    ber: float
    throughput_factor: float
    seed: int

    def csv_row(self) -> str:
        return ",".join([
            self.scheme,
            self.modulation,
            format_float(self.epsilon),
            format_float(self.ebn0_db),
            str(self.bits_sent),
            str(self.bit_errors),
            format_float(self.ber),
            format_float(self.throughput_factor),
            str(self.seed),
        ])


def format_float(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def point_seed(base_seed: int, scheme: str, epsilon: float, ebn0_db: float) -> int:
    key = f"{int(base_seed)}|{scheme}|{float(epsilon).hex()}|{float(ebn0_db).hex()}"
    digest = hashlib.blake2b(key.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _frame_plan(sweep: SweepConfig, scheme: str) -> tuple[int, int]:
    """Return (number of frames, counted bits per frame) for one grid point."""
    cfg = sweep.config
    k = cfg.modulation.bits_per_symbol
    A = cfg.active_carriers
    S = sweep.symbols_per_point
    if scheme == "none":
        frames, per_frame = S, A * k
    elif scheme == "sc":
        frames, per_frame = S, (A // 2) * k
    elif scheme == "ml":
        frames, per_frame = -(-S // 2), 2 * A * k
    else:
        D = sweep.ekf_data_symbols
        frames, per_frame = -(-S // D), D * A * k
    if sweep.max_bits is not None:
        frames = max(1, min(frames, sweep.max_bits // per_frame))
    return frames, per_frame


def _frame_len(sweep: SweepConfig, scheme: str) -> int:
    N = sweep.config.fft_size
    if scheme == "ml":
        return 2 * N
    if scheme == "ekf":
        return sweep.preamble_len + sweep.ekf_data_symbols * N
    return N


def _run_chunk(sweep: SweepConfig, scheme: str, epsilon: float, noise, rng,
               frames: int, preamble: TimeSamples | None) -> tuple[int, int]:
    cfg = sweep.config
    mod = cfg.modulation
    A = cfg.active_carriers
    k = mod.bits_per_symbol
    N = cfg.fft_size

    def channel(tx: TimeSamples) -> TimeSamples:
        return add_awgn(apply_cfo(tx, epsilon, cfg), noise, rng)

    if scheme == "none":
        bits = rng.integers(0, 2, size=(frames, A * k), dtype=np.int8)
        rx = channel(ofdm_modulate(load_carriers(map_bits(bits, mod), cfg), cfg))
        decided = demap_symbols(ofdm_demodulate(rx, cfg)[..., :A], mod)
    elif scheme == "sc":
        bits = rng.integers(0, 2, size=(frames, (A // 2) * k), dtype=np.int8)
        rx = channel(ofdm_modulate(sc_encode(map_bits(bits, mod), cfg), cfg))
        decided = demap_symbols(sc_decode(ofdm_demodulate(rx, cfg), cfg), mod)
    elif scheme == "ml":
        bits = rng.integers(0, 2, size=(frames, A * k), dtype=np.int8)
        rx = channel(ml_frame_build(load_carriers(map_bits(bits, mod), cfg), cfg))
        est = ml_estimate(ml_observe(rx, cfg, sweep.ml_k_range))
        halves = ml_correct(rx, est, cfg)
        decided = demap_symbols(halves[..., :A], mod)
        bits = np.broadcast_to(bits[:, None, :], decided.shape)
    else:
        D = sweep.ekf_data_symbols
        Np = len(preamble)
        bits = rng.integers(0, 2, size=(frames, D, A * k), dtype=np.int8)
        data = ofdm_modulate(load_carriers(map_bits(bits, mod), cfg), cfg).values
        tx = np.concatenate(
            [np.broadcast_to(preamble.values, (frames, Np)), data.reshape(frames, D * N)],
            axis=-1,
        )
        rx = channel(TimeSamples(tx, 0)).values
        est, _ = ekf_estimate(
            Preamble(preamble, TimeSamples(rx[:, :Np], 0), noise.sigma2_time, N)
        )
        Y = ekf_correct(TimeSamples(rx[:, Np:], Np), est, cfg).reshape(frames, D, N)
        decided = demap_symbols(Y[..., :A], mod)
    return int(bits.size), int(np.count_nonzero(decided != bits))


def simulate_point(sweep: SweepConfig, scheme: str, epsilon: float, ebn0_db: float) -> BerRecord:
    """Run one (scheme, epsilon, Eb/N0) grid point through the full chain."""
    cfg = sweep.config
    seed = point_seed(sweep.base_seed, scheme, epsilon, ebn0_db)
    rng = make_rng(seed)
    noise = ebn0_to_sigma(ebn0_db, cfg.modulation, cfg.fft_size)
    frames, _ = _frame_plan(sweep, scheme)
    chunk = max(1, _CHUNK_SAMPLES // _frame_len(sweep, scheme))
    preamble = preamble_samples(cfg, sweep.preamble_len) if scheme == "ekf" else None

    sent = errors = 0
    done = 0
    while done < frames:
        c = min(chunk, frames - done)
        s, e = _run_chunk(sweep, scheme, epsilon, noise, rng, c, preamble)
        sent += s
        errors += e
        done += c
    return BerRecord(
        scheme=scheme,
        modulation=cfg.modulation.name,
        epsilon=float(epsilon),
        ebn0_db=float(ebn0_db),
        bits_sent=sent,
        bit_errors=errors,
        ber=errors / sent,
        throughput_factor=throughput_factor(scheme),
        seed=seed,
    )


def run_ber_sweep(sweep: SweepConfig, workers: int = 1) -> list[BerRecord]:
    """Simulate every grid point; output order is scheme, epsilon, Eb/N0 grid order."""
    grid = [(s, e, g) for s in sweep.schemes for e in sweep.epsilons for g in sweep.ebn0_db]
    if workers <= 1 or len(grid) == 1:
        return [simulate_point(sweep, *p) for p in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: simulate_point(sweep, *p), grid))


def run_cir_sweep(N: int, epsilon_grid) -> list[tuple[CirPoint, CirPoint]]:
    if N < 4 or N % 2:
        raise ConfigurationError(f"N must be even and >= 4, got {N}")
    return [(cir_standard(e, N), cir_self_cancel(e, N)) for e in epsilon_grid]


@dataclass(frozen=True)
class EstimatorStats:
    mean_error: float
    rmse: float
    median_abs_error: float
    errors: np.ndarray = field(repr=False, compare=False)

    def csv_line(self) -> str:
        return f"{format_float(self.mean_error)},{format_float(self.rmse)},{format_float(self.median_abs_error)}"


def measure_estimator_stats(method: str, epsilon: float, ebn0_db: float, trials: int,
                            seed: int, config: OfdmConfig | None = None,
                            k_range: int | None = None,
                            preamble_len: int | None = None) -> EstimatorStats:
    """Estimation-only trials for ``method`` in {"ml", "ekf"}.

    ML trials draw a fresh random data symbol for the repeated pair; EKF
    trials reuse the fixed preamble and draw only noise.
    """
    method = method.lower()
    if method not in ("ml", "ekf"):
        raise ValueError(f"method must be 'ml' or 'ekf', got {method!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = config or OfdmConfig(64, 48, parse_modulation("bpsk"))
    rng = make_rng(seed)
    noise = ebn0_to_sigma(ebn0_db, cfg.modulation, cfg.fft_size)
    if method == "ml":
        bits = rng.integers(0, 2, size=(trials, cfg.bits_per_ofdm_symbol), dtype=np.int8)
        tx = ml_frame_build(load_carriers(map_bits(bits, cfg.modulation), cfg), cfg)
        rx = add_awgn(apply_cfo(tx, epsilon, cfg), noise, rng)
        est = ml_estimate(ml_observe(rx, cfg, k_range)).epsilon_hat
    else:
        x = preamble_samples(cfg, preamble_len)
        tx = TimeSamples(np.broadcast_to(x.values, (trials, len(x))).copy(), 0)
        rx = add_awgn(apply_cfo(tx, epsilon, cfg), noise, rng)
        est, _ = ekf_estimate(Preamble(x, rx, noise.sigma2_time, cfg.fft_size))
        est = est.epsilon_hat
    err = np.asarray(est, dtype=float) - epsilon
    return EstimatorStats(
        mean_error=float(np.mean(err)),
        rmse=float(np.sqrt(np.mean(err ** 2))),
        median_abs_error=float(np.median(np.abs(err))),
        errors=err,
    )


def atomic_write_text(path, text: str):
    """Write ``text`` to a sibling temp file and rename it over ``path``."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    except OSError as exc:
        raise OSError(f"cannot create temp file next to {path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_results(records, path, format: str = "csv"):
    """Write BER records as CSV: a generator comment line, the header, one row per record."""
    if format.lower() != "csv":
        raise ValueError(f"unsupported format {format!r}")
    lines = [f"# generator={RNG_NAME} version={__version__}", CSV_HEADER]
    lines += [r.csv_row() for r in records]
    atomic_write_text(path, "\n".join(lines) + "\n")


_CONFIG_KEYS = {
    "fft_size", "active_carriers", "modulation", "schemes", "epsilons", "ebn0_db",
    "symbols_per_point", "base_seed", "max_bits", "ekf_preamble_len",
    "ekf_data_symbols", "ml_k_range",
}


def read_sweep_config(path) -> SweepConfig:
    """Load a SweepConfig from ``key = value`` lines; ``#`` starts a comment.

    Grid keys (``epsilons``, ``ebn0_db``) accept the ``parse_grid`` syntax
    and ``schemes`` a comma-separated list.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value
    missing = {"modulation", "schemes", "epsilons", "ebn0_db"} - raw.keys()
    if missing:
        raise ConfigurationError(f"{path}: missing keys {sorted(missing)}")

    def opt_int(key):
        return int(raw[key]) if key in raw and raw[key].lower() != "none" else None

    try:
        cfg = OfdmConfig(
            int(raw.get("fft_size", 64)),
            int(raw.get("active_carriers", 48)),
            parse_modulation(raw["modulation"]),
        )
        return SweepConfig(
            config=cfg,
            schemes=tuple(s.strip().lower() for s in raw["schemes"].split(",")),
            epsilons=parse_grid(raw["epsilons"]),
            ebn0_db=parse_grid(raw["ebn0_db"]),
            symbols_per_point=int(raw.get("symbols_per_point", 100)),
            base_seed=int(raw.get("base_seed", 0)),
            max_bits=opt_int("max_bits"),
            ekf_preamble_len=opt_int("ekf_preamble_len"),
            ekf_data_symbols=int(raw.get("ekf_data_symbols", 1)),
            ml_k_range=opt_int("ml_k_range"),
        )
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def sweep_for_bits(sweep: SweepConfig, bits: int) -> SweepConfig:
    """Size a sweep so every scheme sends the same count of at least ``bits`` bits.

    The count is ``bits`` rounded up to the least common multiple of the
    selected schemes' per-frame bit counts, so no scheme stops mid-frame.
    """
    if bits < 1:
        raise ConfigurationError(f"bits must be >= 1, got {bits}")
    cfg = sweep.config
    unit = math.lcm(*(_frame_plan(replace(sweep, max_bits=None), s)[1] for s in sweep.schemes))
    target = -(-bits // unit) * unit
    least = max(1, cfg.active_carriers // 2) * cfg.modulation.bits_per_symbol
    symbols = max(1, -(-target // least))
    return replace(sweep, symbols_per_point=symbols, max_bits=target)
