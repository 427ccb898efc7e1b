"""Command-line front end: ``ofdm-ici {ber,cir,estimate,coeffs}``.

Exit codes: 0 success, 1 I/O failure, 2 invalid flags.
Grids accept ``a:b`` (unit steps), ``a:b:step`` and comma lists; see
:func:`ofdm_ici.harness.parse_grid`.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from .harness import (
    PRESETS,
    SCHEMES,
    ConfigurationError,
    SweepConfig,
    format_float,
    atomic_write_text,
    measure_estimator_stats,
    parse_grid,
    read_sweep_config,
    run_ber_sweep,
    run_cir_sweep,
    sweep_for_bits,
    write_results,
)
from .ici import ici_coefficient, sc_demod_coefficient, sc_mod_coefficient
from .modem import OfdmConfig, parse_modulation

THREADS_ENV = "OFDM_ICI_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def _grid(text: str, flag: str) -> tuple[float, ...]:
    try:
        return parse_grid(text)
    except ConfigurationError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _modulation(name: str):
    try:
        return parse_modulation(name)
    except ValueError as exc:
        raise UsageError(f"--mod: {exc}") from None


def _config(n: int, active: int | None, mod) -> OfdmConfig:
    try:
        return OfdmConfig(n, active if active is not None else n, mod)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_ber(args) -> int:
    if args.config:
        try:
            sweep = read_sweep_config(args.config)
        except OSError as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc.strerror}") from None
        except ConfigurationError as exc:
            raise UsageError(str(exc)) from None
    else:
        for flag in ("scheme", "mod"):
            if getattr(args, flag) is None:
                raise UsageError(f"--{flag} is required unless --config is given")
        preset = PRESETS[args.preset or "desk"]
        eps = _grid(args.eps, "--eps") if args.eps is not None else preset["epsilons"]
        ebn0 = _grid(args.ebn0, "--ebn0") if args.ebn0 is not None else preset["ebn0_db"]
        n = args.n if args.n is not None else preset["fft_size"]
        if args.active is not None:
            active = args.active
        elif args.n is None:
            active = preset["active_carriers"]
        else:
            active = n
        cfg = _config(n, active, _modulation(args.mod))
        try:
            sweep = SweepConfig(
                config=cfg,
                schemes=tuple(s.strip().lower() for s in args.scheme.split(",")),
                epsilons=eps,
                ebn0_db=ebn0,
                symbols_per_point=preset["symbols_per_point"],
                base_seed=args.seed,
                ekf_preamble_len=args.ekf_preamble,
                ekf_data_symbols=args.ekf_data_symbols,
            )
        except ConfigurationError as exc:
            raise UsageError(str(exc)) from None
    if args.bits is not None:
        if args.bits < 1:
            raise UsageError("--bits must be >= 1")
        sweep = sweep_for_bits(sweep, args.bits)

    workers = _workers()
    npoints = len(sweep.schemes) * len(sweep.epsilons) * len(sweep.ebn0_db)
    print(f"grid: {npoints} points", file=sys.stderr)
    t0 = time.perf_counter()
    records = run_ber_sweep(sweep, workers=workers)
    write_results(records, args.out)
    if "ekf" in sweep.schemes:
        print(f"ekf preamble overhead: {sweep.preamble_overhead:.4f}", file=sys.stderr)
    print(f"wall time: {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return 0


def cmd_cir(args) -> int:
    if args.n < 4 or args.n % 2:
        raise UsageError(f"--n must be even and >= 4, got {args.n}")
    grid = _grid(args.eps_grid, "--eps-grid")
    lines = ["epsilon,cir_standard_db,cir_self_cancel_db,improvement_db"]
    for std, sc in run_cir_sweep(args.n, grid):
        if math.isinf(std.cir_db) and math.isinf(sc.cir_db):
            gain = math.nan
        else:
            gain = sc.cir_db - std.cir_db
        lines.append(",".join(format_float(v) for v in (std.epsilon, std.cir_db, sc.cir_db, gain)))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_estimate(args) -> int:
    method = args.method
    if method == "ml" and abs(args.eps) >= 0.5:
        raise UsageError(f"--eps: ML estimation needs |epsilon| < 0.5, got {args.eps}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    ebn0 = math.inf if args.noiseless else args.ebn0
    cfg = _config(args.n, args.active, _modulation(args.mod))
    try:
        stats = measure_estimator_stats(
            method, args.eps, ebn0, args.trials, args.seed, cfg,
            k_range=args.k_range, preamble_len=args.preamble_len,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    line = stats.csv_line()
    print(line)
    if args.out:
        atomic_write_text(args.out, "mean_error,rmse,median_abs_error\n" + line + "\n")
    return 0


def cmd_coeffs(args) -> int:
    N = args.n
    if N < 2:
        raise UsageError(f"--n must be >= 2, got {N}")
    d = np.arange(-(N // 2), N - N // 2)
    s = ici_coefficient(d, args.eps, N)
    s1 = sc_mod_coefficient(d, args.eps, N)
    s2 = sc_demod_coefficient(d, args.eps, N)
    lines = ["d,abs_S,abs_Sprime,abs_Sdoubleprime,re_S,im_S"]
    for i in range(d.size):
        vals = (abs(s[i]), abs(s1[i]), abs(s2[i]), s[i].real, s[i].imag)
        lines.append(str(int(d[i])) + "," + ",".join(format_float(float(v)) for v in vals))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ofdm-ici", description="OFDM ICI mitigation simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("ber", help="Monte-Carlo BER sweep to CSV")
    b.add_argument("--scheme", help=f"comma list of {', '.join(SCHEMES)}")
    b.add_argument("--mod", help="bpsk, qpsk, psk16, psk64, qam4, qam16 or qam64")
    b.add_argument("--eps", help="normalized CFO grid, e.g. 0,0.15,0.3 or 0:0.3:0.15")
    b.add_argument("--ebn0", help="Eb/N0 grid in dB, e.g. 1:15; 'inf' for noiseless")
    b.add_argument("--out", required=True, help="output CSV path")
    b.add_argument("--preset", choices=sorted(PRESETS), help="system size and default grids")
    b.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    b.add_argument("--bits", type=int, help="counted bits per grid point")
    b.add_argument("--n", type=int, help="FFT size (overrides the preset)")
    b.add_argument("--active", type=int, help="active carriers (defaults to --n)")
    b.add_argument("--ekf-preamble", type=int, help="EKF preamble samples (default N)")
    b.add_argument("--ekf-data-symbols", type=int, default=1,
                   help="data symbols after each EKF preamble (default 1)")
    b.add_argument("--config", help="key=value sweep file; replaces the grid flags")
    b.set_defaults(func=cmd_ber)

    c = sub.add_parser("cir", help="theoretical CIR of standard vs self-cancelling OFDM")
    c.add_argument("--n", type=int, required=True, help="FFT size, even and >= 4")
    c.add_argument("--eps-grid", required=True, help="epsilon grid, e.g. 0.05:0.45:0.05")
    c.add_argument("--out", required=True, help="output CSV path")
    c.set_defaults(func=cmd_cir)

    e = sub.add_parser("estimate", help="CFO estimator error statistics")
    e.add_argument("--method", choices=("ml", "ekf"), required=True)
    e.add_argument("--eps", type=float, required=True, help="true normalized CFO")
    noise = e.add_mutually_exclusive_group(required=True)
    noise.add_argument("--ebn0", type=float, help="Eb/N0 in dB")
    noise.add_argument("--noiseless", action="store_true", help="no AWGN")
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--n", type=int, default=64, help="FFT size (default 64)")
    e.add_argument("--active", type=int, default=48, help="active carriers (default 48)")
    e.add_argument("--mod", default="bpsk", help="data modulation for ML trials")
    e.add_argument("--k-range", type=int, help="ML: use the first 2K+1 active bins")
    e.add_argument("--preamble-len", type=int, help="EKF: preamble samples (default N)")
    e.add_argument("--out", help="also write the result line as CSV")
    e.set_defaults(func=cmd_estimate)

    k = sub.add_parser("coeffs", help="ICI coefficient table S, S', S''")
    k.add_argument("--n", type=int, required=True, help="FFT size, >= 2")
    k.add_argument("--eps", type=float, required=True)
    k.add_argument("--out", required=True, help="output CSV path")
    k.set_defaults(func=cmd_coeffs)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"ofdm-ici: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ofdm-ici: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
