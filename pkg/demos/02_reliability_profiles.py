"""Expected sorted reliabilities from order statistics, checked against simulation."""

# %%
import numpy as np

from tepforge.channels import MIXTURE_CHANNEL_1, MIXTURE_CHANNEL_2, Awgn, RayleighCsi, RayleighNcsi
from tepforge.reliability import (
    awgn_reliability,
    expected_profile,
    expected_profile_from_signal,
    rayleigh_csi_reliability,
    rayleigh_ncsi_reliability,
    sample_sorted_reliabilities,
)
from tepforge.sim import ebn0_to_sigma

rng = np.random.default_rng(0)
n, k = 128, 105
sigma = float(ebn0_to_sigma(6.0, k / n))
print(f"sigma at 6 dB, rate {k}/{n}: {sigma:.4f}")

# %% AWGN: analytic profile vs the empirical mean over 20k frames, for all three modes
for mode in ("grand", "posd", "osd"):
    prof = expected_profile(awgn_reliability(sigma), n, k, mode).expected
    emp = sample_sorted_reliabilities(Awgn(sigma), n, k, mode, 20_000, rng)
    print(f"{mode:5s} first {np.round(prof[:4], 3)}  max rel err {np.max(np.abs(prof / emp - 1)):.2%}")

# %% Rayleigh fading: with and without channel state information
for name, dist, model in (("CSI", rayleigh_csi_reliability(sigma), RayleighCsi(sigma)),
                          ("NCSI", rayleigh_ncsi_reliability(sigma), RayleighNcsi(sigma))):
    prof = expected_profile(dist, n, k, "grand").expected
    emp = sample_sorted_reliabilities(model, n, k, "grand", 20_000, rng)
    print(f"{name:5s} max rel err {np.max(np.abs(prof / emp - 1)):.2%}")

# %% Mixture channels go through the received-signal path
p1 = expected_profile_from_signal(MIXTURE_CHANNEL_1, 32, 16, "grand").expected
p2 = expected_profile_from_signal(MIXTURE_CHANNEL_2, 32, 16, "grand").expected
print("channel 1:", np.round(p1[:6], 2))
print("channel 2:", np.round(p2[:6], 2))
