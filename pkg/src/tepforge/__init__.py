"""Soft-decision decoding with channel-aware test error patterns."""

from .channels import (
    MIXTURE_CHANNEL_1,
    MIXTURE_CHANNEL_2,
    Awgn,
    GaussianMixture,
    RayleighCsi,
    RayleighNcsi,
    llr,
    simulate_frame,
)
from .decoders import ML_ONLINE, DecodeResult, generalized_distance, grand_decode, osd_decode, posd_decode, whd
from .gf2 import CodeSpec, encode, load_code, random_linear_code, save_code, syndrome, systematic_form
from .reliability import ReliabilityDist, expected_profile, expected_profile_from_signal, reliability_for
from .sim import SimConfig, TepSpec, ebn0_to_sigma, export_results, hw_floor, run_fer
from .teps import TepList, gen_increasing_weight, load_teps, make_teps, ml_tep_stream, overlap, save_teps

__version__ = "0.1.0"
