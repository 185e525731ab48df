"""Monte Carlo frame/bit error rate experiments.

Frames are generated in fixed-size batches whose random streams depend
only on ``(seed, snr index, batch index)``.  Two runs that differ only in the
decoder or the TEP list therefore see identical messages and noise, and the
stopping point (checked batch by batch, in order) does not depend on the
number of worker processes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import binom, binomtest

from .channels import (
    ChannelModel,
    GaussianMixture,
    bpsk_modulate,
    channel_from_config,
    hard_demod,
    llr,
    transmit,
    with_sigma,
)
from .decoders import DECODED, DECODERS, ML_ONLINE, TepSource, decoder_width
from .gf2 import CodeSpec, encode, load_code, random_linear_code
from .teps import ORDERINGS, TepList, load_teps, make_teps

log = logging.getLogger(__name__)


def ebn0_to_sigma(ebn0_db, rate: float):
    """Noise std-dev for unit-energy BPSK at the given Eb/N0 (dB) and code rate."""
    if not (0 < rate <= 1):
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return np.sqrt(1.0 / (2.0 * rate * 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)))[()]


def sigma_to_ebn0(sigma, rate: float):
    if not (0 < rate <= 1):
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return (10.0 * np.log10(1.0 / (2.0 * rate * np.asarray(sigma, dtype=float) ** 2)))[()]


def qfunc(x):
    """Gaussian tail probability P(Z > x)."""
    return ndtr(-np.asarray(x, dtype=float))[()]


def qfunc_inv(p):
    return (-ndtri(np.asarray(p, dtype=float)))[()]


def bit_error_probability(esn0_db) -> float:
    """Uncoded BPSK bit error probability at the given Es/N0 (dB)."""
    return qfunc(np.sqrt(2.0 * 10.0 ** (np.asarray(esn0_db, dtype=float) / 10.0)))


def hw_floor(n: int, p: float, x: int) -> float:
    """Probability that a length-n BSC(p) error vector has Hamming weight x."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return float(binom.pmf(x, n, p))


def wilson_halfwidth(errors: int, frames: int, confidence: float = 0.95) -> float:
    if frames == 0:
        return float("nan")
    ci = binomtest(errors, frames).proportion_ci(confidence, method="wilson")
    return float(0.5 * (ci.high - ci.low))


# -- configuration -------------------------------------------------------------


class ConfigError(ValueError):
    """Invalid experiment description; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class TepSpec:
    order: str = "EW"
    path: Optional[str] = None
    lut_min_count: int = 10
    lut_frames: int = 100_000


@dataclass
class SimConfig:
    code: CodeSpec
    channel: ChannelModel
    decoder: str
    teps: TepSpec
    mq_points: list
    snr_points: Optional[list] = None
    min_frame_errors: int = 100
    max_frames: int = 10_000_000
    seed: int = 0
    batch_size: int = 256

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.decoder not in DECODERS:
            raise ConfigError("decoder", f"unknown decoder {self.decoder!r}; expected one of {sorted(DECODERS)}")
        if self.decoder == "posd" and not self.code.is_systematic:
            raise ConfigError("decoder", "posd needs a systematic generator [I | P]")
        if self.teps.order.upper() not in ORDERINGS:
            raise ConfigError("teps.order", f"unknown ordering {self.teps.order!r}")
        if not self.mq_points:
            raise ConfigError("mq", "at least one query budget is required")
        for i, mq in enumerate(self.mq_points):
            if int(mq) != mq or mq < 1:
                raise ConfigError(f"mq[{i}]", f"must be a positive integer, got {mq!r}")
        if self.min_frame_errors < 1:
            raise ConfigError("stop.min_frame_errors", "must be at least 1")
        if self.max_frames < self.min_frame_errors:
            raise ConfigError("stop.max_frames", "must be at least min_frame_errors")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be positive")
        if self.snr_points is not None:
            if isinstance(self.channel, GaussianMixture):
                raise ConfigError("snr_db", "mixture channels have a fixed SNR; omit snr_db")
            if not len(self.snr_points):
                raise ConfigError("snr_db", "empty SNR list")
        width = decoder_width(self.decoder, self.code)
        if self.teps.path is not None:
            teps = load_teps(self.teps.path)
            if teps.m != width:
                raise ConfigError("teps.path", f"pattern width {teps.m} does not match {self.decoder} width {width}")

    @property
    def max_mq(self) -> int:
        return int(max(self.mq_points))


def _get(block: dict, key: str, path: str, default=...):
    if key in block:
        return block[key]
    if default is ...:
        raise ConfigError(f"{path}{key}", "missing required field")
    return default


def config_from_dict(raw: dict, base_dir=".") -> SimConfig:
    """Parse a JSON experiment description, reporting errors by field path."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    base = Path(base_dir)

    code_block = _get(raw, "code", "")
    if isinstance(code_block, str):
        code_block = {"path": code_block}
    try:
        if "path" in code_block:
            code = load_code(base / code_block["path"])
        elif "random" in code_block:
            r = code_block["random"]
            code = random_linear_code(int(_get(r, "n", "code.random.")), int(_get(r, "k", "code.random.")),
                                      r.get("seed", 0))
        else:
            raise ConfigError("code", "expected 'path' or 'random'")
    except ConfigError:
        raise
    except (OSError, ValueError) as exc:
        raise ConfigError("code", str(exc)) from exc

    ch = dict(_get(raw, "channel", ""))
    if "snr_db" in raw and ch.get("type") != "mixture":
        ch.setdefault("sigma", 1.0)
    try:
        channel = channel_from_config(ch)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("channel", str(exc)) from exc

    tb = raw.get("teps", {})
    if isinstance(tb, str):
        tb = {"order": tb}
    tep_path = tb.get("path")
    teps = TepSpec(
        order=str(tb.get("order", "EW")),
        path=str(base / tep_path) if tep_path else None,
        lut_min_count=int(tb.get("lut_min_count", 10)),
        lut_frames=int(tb.get("lut_frames", 100_000)),
    )
    if tep_path and "order" not in tb:
        teps.order = load_teps(teps.path).ordering

    mq = _get(raw, "mq", "")
    mq = [mq] if isinstance(mq, (int, float)) else list(mq)
    stop = raw.get("stop", {})
    snr = raw.get("snr_db")
    return SimConfig(
        code=code,
        channel=channel,
        decoder=str(_get(raw, "decoder", "")),
        teps=teps,
        mq_points=mq,
        snr_points=None if snr is None else [float(s) for s in np.atleast_1d(snr)],
        min_frame_errors=int(stop.get("min_frame_errors", 100)),
        max_frames=int(stop.get("max_frames", 10_000_000)),
        seed=int(raw.get("seed", 0)),
        batch_size=int(raw.get("batch_size", 256)),
    )


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


# -- results -------------------------------------------------------------------

COLUMNS = ("snr_db", "mq", "frames", "frame_errors", "fer", "ber", "avg_queries", "ci95")


@dataclass
class SimRow:
    snr_db: Optional[float]
    mq: int
    frames: int
    frame_errors: int
    fer: float
    ber: float
    avg_queries: float
    ci95: float


@dataclass
class SimResult:
    rows: list = field(default_factory=list)

    def row(self, snr_db, mq) -> SimRow:
        for r in self.rows:
            if r.mq == mq and (r.snr_db == snr_db or (r.snr_db is None and snr_db is None)):
                return r
        raise KeyError((snr_db, mq))

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def export_results(table: SimResult, path, format: str = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "json":
        path.write_text(json.dumps([asdict(r) for r in table.rows], indent=2) + "\n", encoding="utf-8")
    elif fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in table.rows:
                w.writerow(["" if r.snr_db is None else repr(r.snr_db)] +
                           [repr(getattr(r, c)) for c in COLUMNS[1:]])
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def load_results(path, format: str = None) -> SimResult:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "json":
        return SimResult([SimRow(**d) for d in json.loads(path.read_text(encoding="utf-8"))])
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"unexpected columns {reader.fieldnames}")
        for d in reader:
            rows.append(SimRow(
                snr_db=None if d["snr_db"] == "" else float(d["snr_db"]),
                mq=int(d["mq"]), frames=int(d["frames"]), frame_errors=int(d["frame_errors"]),
                fer=float(d["fer"]), ber=float(d["ber"]), avg_queries=float(d["avg_queries"]),
                ci95=float(d["ci95"]),
            ))
    return SimResult(rows)


# -- simulation ----------------------------------------------------------------


def _channel_at(config: SimConfig, snr_idx: int) -> ChannelModel:
    if config.snr_points is None:
        return config.channel
    sigma = float(ebn0_to_sigma(config.snr_points[snr_idx], config.code.rate))
    return with_sigma(config.channel, sigma)


def build_tep_source(config: SimConfig, channel: ChannelModel, snr_idx: int = 0) -> TepSource:
    """TEP list for one operating point (EW and LUT lists depend on the channel)."""
    width = decoder_width(config.decoder, config.code)
    if config.teps.path is not None:
        return load_teps(config.teps.path)
    order = config.teps.order.upper()
    if order == "ML":
        return ML_ONLINE
    lut_rng = np.random.SeedSequence(config.seed, spawn_key=(snr_idx, 1 << 30))
    teps = make_teps(order, config.max_mq, n=config.code.n, k=config.code.k, mode=config.decoder,
                     model=channel, code=config.code, rng=lut_rng,
                     min_count=config.teps.lut_min_count, max_frames=config.teps.lut_frames)
    if teps.m != width:
        raise ConfigError("teps", f"pattern width {teps.m} does not match decoder width {width}")
    return teps


def batch_frames(code: CodeSpec, channel: ChannelModel, seed: int, snr_idx: int, batch_idx: int, size: int):
    """Messages, codewords and LLRs for one batch; depends only on the indices."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(snr_idx, batch_idx)))
    msgs = rng.integers(0, 2, size=(size, code.k), dtype=np.uint8)
    words = encode(code, msgs)
    y, h = transmit(channel, bpsk_modulate(words), rng)
    return words, llr(channel, y, h)


def _run_batch(code, channel, decoder, teps, mq_points, seed, snr_idx, batch_idx, size):
    """Per-mq arrays (frame_errors, bit_errors, queries) for every frame of a batch."""
    words, llrs = batch_frames(code, channel, seed, snr_idx, batch_idx, size)
    fn = DECODERS[decoder]
    nmq = len(mq_points)
    ferr = np.zeros((nmq, size), dtype=bool)
    berr = np.zeros((nmq, size), dtype=np.int64)
    qs = np.zeros((nmq, size), dtype=np.int64)
    top = max(mq_points)
    for f in range(size):
        hd = hard_demod(llrs[f])
        if decoder == "grand":
            # a prefix budget either reaches the same hit or abandons
            res = fn(code, llrs[f], teps, top)
            for j, mq in enumerate(mq_points):
                if res.status == DECODED and res.queries <= mq:
                    out, qs[j, f] = res.codeword, res.queries
                else:
                    out, qs[j, f] = None, min(mq, res.queries)
                ferr[j, f] = out is None or not np.array_equal(out, words[f])
                berr[j, f] = np.count_nonzero((hd if out is None else out) ^ words[f])
        else:
            for j, mq in enumerate(mq_points):
                res = fn(code, llrs[f], teps, mq)
                out = res.codeword
                qs[j, f] = res.queries
                ferr[j, f] = out is None or not np.array_equal(out, words[f])
                berr[j, f] = np.count_nonzero((hd if out is None else out) ^ words[f])
    return ferr.sum(axis=1), berr.sum(axis=1), qs.sum(axis=1)


def _run_point(configs: list, snr_idx: int, pool=None, width: int = 1) -> list:
    """Run one SNR point for configs that share code, channel and frame stream.

    Every config sees the same batches; the point stops for all of them once
    each has enough errors at its largest budget, or at ``max_frames``.
    """
    lead = configs[0]
    channel = _channel_at(lead, snr_idx)
    jobs = [(c, build_tep_source(c, channel, snr_idx), [int(m) for m in c.mq_points]) for c in configs]
    size = lead.batch_size
    max_frames = lead.max_frames
    n_batches = math.ceil(max_frames / size)
    frames = 0
    fe = [np.zeros(len(m), dtype=np.int64) for _, _, m in jobs]
    be = [np.zeros(len(m), dtype=np.int64) for _, _, m in jobs]
    qs = [np.zeros(len(m), dtype=np.int64) for _, _, m in jobs]

    def tasks(b):
        n = min(size, max_frames - b * size)
        return [(lead.code, channel, c.decoder, teps, mqs, lead.seed, snr_idx, b, n) for c, teps, mqs in jobs]

    b = 0
    done = False
    while not done and b < n_batches:
        ids = list(range(b, min(n_batches, b + width)))
        flat = [t for i in ids for t in tasks(i)]
        if pool is None:
            outs = [_run_batch(*t) for t in flat]
        else:
            outs = list(pool.map(_run_batch, *zip(*flat)))
        for pos, i in enumerate(ids):
            frames += min(size, max_frames - i * size)
            for j in range(len(jobs)):
                f, bits, q = outs[pos * len(jobs) + j]
                fe[j] += f
                be[j] += bits
                qs[j] += q
            # the largest budget of each config has the fewest errors
            if min(e.min() for e in fe) >= lead.min_frame_errors or frames >= max_frames:
                done = True
                break
        b += width
    snr = None if lead.snr_points is None else float(lead.snr_points[snr_idx])
    log.info("snr=%s frames=%d errors=%s", snr, frames, [e.tolist() for e in fe])
    out = []
    for j, (c, _, mqs) in enumerate(jobs):
        out.append([
            SimRow(
                snr_db=snr, mq=mq, frames=frames, frame_errors=int(fe[j][i]),
                fer=float(fe[j][i] / frames), ber=float(be[j][i] / (frames * c.code.n)),
                avg_queries=float(qs[j][i] / frames), ci95=wilson_halfwidth(int(fe[j][i]), frames),
            )
            for i, mq in enumerate(mqs)
        ])
    return out


def run_paired(configs: list, workers: int = 1) -> list:
    """Run several configs on identical frames (common random numbers).

    The configs must agree on code, channel, SNR points, seed, batch size and
    stopping rule; typically they differ only in decoder or TEP ordering.
    Returns one :class:`SimResult` per config, all with equal frame counts.
    """
    if workers < 1:
        raise ValueError("workers must be positive")
    if not configs:
        return []
    lead = configs[0]
    for i, c in enumerate(configs[1:], start=1):
        same = (c.code == lead.code and c.channel == lead.channel and c.snr_points == lead.snr_points
                and (c.seed, c.batch_size, c.min_frame_errors, c.max_frames)
                == (lead.seed, lead.batch_size, lead.min_frame_errors, lead.max_frames))
        if not same:
            raise ConfigError(f"configs[{i}]", "paired runs need identical code, channel, SNRs, seed and stop rule")
    points = range(1 if lead.snr_points is None else len(lead.snr_points))
    results = [SimResult() for _ in configs]

    def collect(pool):
        for s in points:
            for res, rows in zip(results, _run_point(configs, s, pool, workers)):
                res.rows.extend(rows)

    if workers == 1:
        collect(None)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            collect(pool)
    return results


def run_fer(config: SimConfig, workers: int = 1) -> SimResult:
    """Sweep every (SNR, MQ) point; counts do not depend on ``workers``."""
    return run_paired([config], workers)[0]


def pooled_halfwidth(a: SimRow, b: SimRow) -> float:
    """Half-width of the 95% interval on the FER difference of two rows."""
    return math.hypot(a.ci95, b.ci95)
