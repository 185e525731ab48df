"""Command-line entry point: ``tepforge <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import channels as ch
from .decoders import DECODERS, ML_ONLINE, decode, decoder_width
from .gf2 import gf2_rank, load_code, random_linear_code, save_code
from .reliability import MODES, expected_profile, expected_profile_from_signal, order_stat_pdf, reliability_for
from .sim import ConfigError, ebn0_to_sigma, export_results, load_config, run_fer
from .teps import load_teps, make_teps, overlap, save_teps

log = logging.getLogger("tepforge")

BUILTIN_MIXTURES = {"ch1": ch.MIXTURE_CHANNEL_1, "ch2": ch.MIXTURE_CHANNEL_2}


class CliError(Exception):
    pass


def _setup_logging():
    level = os.environ.get("TEPFORGE_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load_mixture(spec: str) -> ch.GaussianMixture:
    if spec in BUILTIN_MIXTURES:
        return BUILTIN_MIXTURES[spec]
    raw = json.loads(Path(spec).read_text(encoding="utf-8"))
    if isinstance(raw, dict):
        raw = raw.get("components", raw)
    return ch.GaussianMixture(tuple(tuple(c) for c in raw))


def _channel_from_args(args, rate: float) -> ch.ChannelModel:
    kind = args.channel
    if kind == "mixture":
        if not args.params:
            raise CliError("--channel mixture needs --params (a JSON file, 'ch1' or 'ch2')")
        return _load_mixture(args.params)
    if args.sigma is not None and args.ebn0 is not None:
        raise CliError("give either --sigma or --ebn0, not both")
    if args.sigma is not None:
        sigma = args.sigma
    elif args.ebn0 is not None:
        sigma = float(ebn0_to_sigma(args.ebn0, rate))
    else:
        raise CliError(f"--channel {kind} needs --sigma or --ebn0")
    if kind == "awgn":
        return ch.Awgn(sigma)
    if kind == "rayleigh_csi":
        return ch.RayleighCsi(sigma)
    return ch.RayleighNcsi(sigma, args.mean_h)


def _add_channel_flags(p):
    p.add_argument("--channel", choices=["awgn", "mixture", "rayleigh_csi", "rayleigh_ncsi"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--ebn0", type=float, help="Eb/N0 in dB (uses rate k/n)")
    p.add_argument("--mean-h", type=float, default=0.8862, help="fading mean assumed without CSI")
    p.add_argument("--params", help="mixture components: JSON file, or ch1 / ch2")


def _profile(model, n, k, mode):
    if isinstance(model, ch.GaussianMixture):
        return expected_profile_from_signal(model, n, k, mode)
    return expected_profile(reliability_for(model), n, k, mode)


# -- subcommands -----------------------------------------------------------------


def cmd_code_gen(args):
    code = random_linear_code(args.n, args.k, args.seed)
    save_code(code, args.out)
    print(f"n={code.n} k={code.k} rank={gf2_rank(code.generator)} -> {args.out}")


def cmd_dist_dump(args):
    if args.channel is None:
        raise CliError("--channel is required")
    model = _channel_from_args(args, args.k / args.n)
    prof = _profile(model, args.n, args.k, args.mode)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "expected_reliability"])
        for i, v in enumerate(prof.expected, start=1):
            w.writerow([i, repr(float(v))])
    if args.grid:
        if isinstance(model, ch.GaussianMixture):
            raise CliError("pdf grids are only available for channels with a closed-form LLR law")
        dist = reliability_for(model)
        ls = np.linspace(0.0, dist.l_max, args.grid)
        with open(args.grid_out or Path(args.out).with_suffix(".grid.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "l", "pdf"])
            for pos, rank in enumerate(prof.ranks, start=1):
                vals = order_stat_pdf(dist, prof.sample_size, int(rank))(ls)
                for l, v in zip(ls, vals):
                    w.writerow([pos, repr(float(l)), repr(float(v))])
    print(f"{len(prof.expected)} expected reliabilities -> {args.out}")


def cmd_gen_teps(args):
    order = args.order.upper()
    rate = args.k / args.n
    model = None
    if order in ("EW", "LUT"):
        if args.channel is None:
            raise CliError(f"--order {args.order} needs --channel")
        model = _channel_from_args(args, rate)
    elif args.channel is not None:
        log.info("channel flags ignored for --order %s", args.order)
    code = None
    if order == "LUT":
        if not args.code:
            raise CliError("--order lut needs --code")
        code = load_code(args.code)
        if (code.n, code.k) != (args.n, args.k):
            raise CliError(f"code is [{code.n},{code.k}] but --n/--k give [{args.n},{args.k}]")
    teps = make_teps(order, args.M, n=args.n, k=args.k, mode=args.mode, model=model, code=code,
                     rng=args.seed, min_count=args.min_count, max_frames=args.lut_frames)
    save_teps(teps, args.out)
    print(f"{len(teps)} {order} patterns of length {teps.m} -> {args.out}")


def _read_llr_frames(path):
    frames = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            try:
                frames.append(np.array([float(v) for v in row]))
            except ValueError as exc:
                raise CliError(f"{path}: line {lineno}: {exc}") from None
    return frames


def cmd_decode(args):
    code = load_code(args.code)
    width = decoder_width(args.decoder, code)
    if args.teps:
        teps = load_teps(args.teps)
        if teps.m != width:
            raise CliError(f"TEP width {teps.m} does not match {args.decoder} width {width}")
    else:
        teps = ML_ONLINE
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["frame", "status", "queries", "whd", "codeword"])
        for f, L in enumerate(_read_llr_frames(args.llrs)):
            if L.shape != (code.n,):
                raise CliError(f"frame {f + 1} has {L.size} values, expected {code.n}")
            r = decode(args.decoder, code, L, teps, args.mq)
            word = "" if r.codeword is None else "".join(map(str, r.codeword))
            w.writerow([f + 1, r.status, r.queries, repr(r.whd), word])
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_simulate(args):
    config = load_config(args.config)
    result = run_fer(config, workers=args.workers)
    export_results(result, args.out, args.format)
    print(f"{len(result)} rows -> {args.out}")


def cmd_overlap(args):
    a, b = load_teps(args.a), load_teps(args.b)
    if a.m != b.m:
        raise CliError(f"pattern widths differ: {a.m} vs {b.m}")
    w = csv.writer(sys.stdout)
    w.writerow(["M", "overlap_pct"])
    for M in args.M:
        if M > min(len(a), len(b)):
            raise CliError(f"M={M} exceeds list lengths ({len(a)}, {len(b)})")
        w.writerow([M, repr(overlap(a, b, M))])


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tepforge", description="Test-error-pattern decoding toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code-gen", help="write a seeded random linear code")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_code_gen)

    p = sub.add_parser("dist-dump", help="expected sorted reliabilities for a channel")
    _add_channel_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=MODES, default="grand")
    p.add_argument("--grid", type=int, default=0, help="also dump order-statistic pdfs on this many points")
    p.add_argument("--grid-out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dist_dump)

    p = sub.add_parser("gen-teps", help="generate an ordered TEP file")
    p.add_argument("--order", type=str.lower, choices=["hw", "lw", "ilw", "ew", "lut"], required=True)
    _add_channel_flags(p)
    p.add_argument("--mode", choices=MODES, default="grand")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("-M", type=int, required=True, help="number of patterns")
    p.add_argument("--code", help="code file (LUT only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-count", type=int, default=10, help="LUT: minimum occurrences to keep a pattern")
    p.add_argument("--lut-frames", type=int, default=100_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_teps)

    p = sub.add_parser("decode", help="decode LLR frames from a CSV file")
    p.add_argument("--code", required=True)
    p.add_argument("--llrs", required=True, help="CSV, one frame per line")
    p.add_argument("--decoder", choices=sorted(DECODERS), default="grand")
    p.add_argument("--teps", help="TEP file; per-frame ML patterns when omitted")
    p.add_argument("--mq", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="run an FER/BER sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("overlap", help="percent overlap of two TEP files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-M", type=int, nargs="+", default=[100])
    p.set_defaults(func=cmd_overlap)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
