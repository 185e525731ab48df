"""BPSK over memoryless channels: noise sampling and exact LLRs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_sigma(sigma, name="sigma"):
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"{name} must be positive, got {sigma}")


@dataclass(frozen=True)
class Awgn:
    sigma: float

    def __post_init__(self):
        _check_sigma(self.sigma)


@dataclass(frozen=True)
class GaussianMixture:
    """Additive noise drawn from a mixture of ``(omega, mu, sigma)`` components."""

    components: tuple

    def __post_init__(self):
        comps = tuple(tuple(float(v) for v in c) for c in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        for c in comps:
            if len(c) != 3:
                raise ValueError(f"component {c} is not (omega, mu, sigma)")
            if c[0] < 0:
                raise ValueError(f"negative weight in component {c}")
            _check_sigma(c[2], "component sigma")
        total = sum(c[0] for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    @property
    def omega(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def mu(self) -> np.ndarray:
        return np.array([c[1] for c in self.components])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([c[2] for c in self.components])

    def log_noise_pdf(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)[..., None]
        s = self.sigmas
        with np.errstate(divide="ignore"):
            terms = np.log(self.omega) - np.log(s) - LOG_SQRT_2PI - 0.5 * ((z - self.mu) / s) ** 2
        return np.logaddexp.reduce(terms, axis=-1)


@dataclass(frozen=True)
class RayleighCsi:
    sigma: float

    def __post_init__(self):
        _check_sigma(self.sigma)


@dataclass(frozen=True)
class RayleighNcsi:
    sigma: float
    mean_h: float = 0.8862

    def __post_init__(self):
        _check_sigma(self.sigma)
        _check_sigma(self.mean_h, "mean_h")


ChannelModel = Union[Awgn, GaussianMixture, RayleighCsi, RayleighNcsi]

# Mixture channels 1 and 2 (components at -3/0/3 and -2.7/0/2.7).
MIXTURE_CHANNEL_1 = GaussianMixture(
    ((0.29, -3.0, 0.3555), (0.01, -0.1, 0.13), (0.40, 0.0, 0.10), (0.01, 0.1, 0.13), (0.29, 3.0, 0.3555))
)
MIXTURE_CHANNEL_2 = GaussianMixture(
    ((0.29, -2.7, 0.3555), (0.01, -0.1, 0.13), (0.40, 0.0, 0.10), (0.01, 0.1, 0.13), (0.29, 2.7, 0.3555))
)


def is_rayleigh(model) -> bool:
    return isinstance(model, (RayleighCsi, RayleighNcsi))


def with_sigma(model: ChannelModel, sigma: float) -> ChannelModel:
    """Same channel family with a different additive-noise std-dev."""
    if isinstance(model, GaussianMixture):
        raise ValueError("mixture channels have fixed noise parameters")
    if isinstance(model, RayleighNcsi):
        return RayleighNcsi(sigma, model.mean_h)
    return type(model)(sigma)


@dataclass
class Frame:
    bits: np.ndarray
    symbols: np.ndarray
    received: np.ndarray
    llrs: np.ndarray
    fading: Optional[np.ndarray] = field(default=None)


def bpsk_modulate(bits) -> np.ndarray:
    b = np.asarray(bits)
    if not np.all((b == 0) | (b == 1)):
        raise ValueError("bits must be 0/1")
    return 1.0 - 2.0 * b.astype(float)


def hard_demod(llrs) -> np.ndarray:
    """0 where L >= 0, 1 where L < 0."""
    return (np.asarray(llrs) < 0).astype(np.uint8)


def sample_noise(model: ChannelModel, shape, rng: np.random.Generator) -> np.ndarray:
    if isinstance(model, GaussianMixture):
        idx = rng.choice(len(model.components), size=shape, p=model.omega)
        return model.mu[idx] + model.sigmas[idx] * rng.standard_normal(shape)
    return model.sigma * rng.standard_normal(shape)


def sample_rayleigh(shape, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return np.sqrt(g[0] ** 2 + g[1] ** 2) / math.sqrt(2.0)


def transmit(model: ChannelModel, symbols, rng: np.random.Generator):
    """Pass BPSK symbols through the channel; returns ``(received, fading)``."""
    x = np.asarray(symbols, dtype=float)
    if is_rayleigh(model):
        h = sample_rayleigh(x.shape, rng)
        return h * x + sample_noise(model, x.shape, rng), h
    return x + sample_noise(model, x.shape, rng), None


def llr(model: ChannelModel, received, fading=None) -> np.ndarray:
    y = np.asarray(received, dtype=float)
    if isinstance(model, Awgn):
        return 2.0 * y / model.sigma**2
    if isinstance(model, GaussianMixture):
        return model.log_noise_pdf(y - 1.0) - model.log_noise_pdf(y + 1.0)
    if isinstance(model, RayleighCsi):
        if fading is None:
            raise ValueError("RayleighCsi LLRs need the fading gains")
        return 2.0 * y * np.asarray(fading, dtype=float) / model.sigma**2
    if isinstance(model, RayleighNcsi):
        return 2.0 * y * model.mean_h / model.sigma**2
    raise TypeError(f"unsupported channel model {model!r}")


def log_pdf_given_bit(model: ChannelModel, y, c) -> np.ndarray:
    """log f(y | c) for AWGN and mixture channels."""
    y = np.asarray(y, dtype=float)
    x = 1.0 - 2.0 * np.asarray(c, dtype=float)
    if isinstance(model, Awgn):
        s = model.sigma
        return -math.log(s) - LOG_SQRT_2PI - 0.5 * ((y - x) / s) ** 2
    if isinstance(model, GaussianMixture):
        return model.log_noise_pdf(y - x)
    raise TypeError(f"conditional densities not available for {type(model).__name__}")


def noise_pdf_given_bit(model: ChannelModel, y, c) -> np.ndarray:
    return np.exp(log_pdf_given_bit(model, y, c))


def cdf_given_bit(model: ChannelModel, y, c) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    x = 1.0 - 2.0 * np.asarray(c, dtype=float)
    if isinstance(model, Awgn):
        return ndtr((y - x) / model.sigma)
    if isinstance(model, GaussianMixture):
        z = (y - x)[..., None]
        return np.sum(model.omega * ndtr((z - model.mu) / model.sigmas), axis=-1)
    raise TypeError(f"conditional distributions not available for {type(model).__name__}")


def simulate_frame(model: ChannelModel, bits, rng: np.random.Generator) -> Frame:
    bits = np.asarray(bits, dtype=np.uint8)
    x = bpsk_modulate(bits)
    y, h = transmit(model, x, rng)
    return Frame(bits=bits, symbols=x, received=y, llrs=llr(model, y, h), fading=h)


def channel_from_config(block: dict) -> ChannelModel:
    """Build a model from ``{"type": ..., ...}`` as used in experiment configs."""
    if not isinstance(block, dict) or "type" not in block:
        raise ValueError("channel block must be an object with a 'type' field")
    kind = block["type"]
    if kind == "awgn":
        return Awgn(float(block["sigma"]))
    if kind == "mixture":
        return GaussianMixture(tuple(tuple(c) for c in block["components"]))
    if kind == "rayleigh_csi":
        return RayleighCsi(float(block["sigma"]))
    if kind == "rayleigh_ncsi":
        return RayleighNcsi(float(block["sigma"]), float(block.get("mean_h", 0.8862)))
    raise ValueError(f"unknown channel type {kind!r}")


def channel_to_config(model: ChannelModel) -> dict:
    if isinstance(model, Awgn):
        return {"type": "awgn", "sigma": model.sigma}
    if isinstance(model, GaussianMixture):
        return {"type": "mixture", "components": [list(c) for c in model.components]}
    if isinstance(model, RayleighCsi):
        return {"type": "rayleigh_csi", "sigma": model.sigma}
    if isinstance(model, RayleighNcsi):
        return {"type": "rayleigh_ncsi", "sigma": model.sigma, "mean_h": model.mean_h}
    raise TypeError(f"unsupported channel model {model!r}")
