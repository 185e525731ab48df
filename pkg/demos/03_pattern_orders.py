"""Test error pattern orderings and how much they agree."""

# %%
from tepforge.reliability import awgn_reliability, expected_profile, rayleigh_csi_reliability, rayleigh_ncsi_reliability
from tepforge.sim import ebn0_to_sigma
from tepforge.teps import ew_teps, format_support, gen_increasing_weight, hw_teps, ilw_teps, lw_teps, overlap

# %% Increasing-weight enumeration on three positions
teps = gen_increasing_weight([0.3, 0.4, 0.5], 8)
for p, w in zip(teps.patterns, teps.weights):
    print(f"{format_support(p):8s} {w:.1f}")

# %% Static orders compared with the expected-weight order for a [127,85] code at 7 dB
n, k = 127, 85
sigma = float(ebn0_to_sigma(7.0, k / n))
ew = ew_teps(expected_profile(awgn_reliability(sigma), n, k, "grand"), 1000)
print("first EW patterns:", [format_support(p) for p in ew.patterns[:10]])
for name, other in (("HW", hw_teps(n, 1000)), ("LW", lw_teps(n, 1000)), ("ILW", ilw_teps(n, 1000))):
    print(f"{name:3s} overlap with EW: M=100 {overlap(other, ew, 100):.0f}%  M=1000 {overlap(other, ew, 1000):.0f}%")

# %% Rayleigh orders against AWGN at the same sigma
n, k = 127, 64
sigma = float(ebn0_to_sigma(5.0, k / n))
awgn = ew_teps(expected_profile(awgn_reliability(sigma), n, k, "grand"), 1000)
csi = ew_teps(expected_profile(rayleigh_csi_reliability(sigma), n, k, "grand"), 1000)
ncsi = ew_teps(expected_profile(rayleigh_ncsi_reliability(sigma), n, k, "grand"), 1000)
for M in (100, 1000):
    print(f"M={M}: NCSI vs AWGN {overlap(ncsi, awgn, M):.0f}%, CSI vs AWGN {overlap(csi, awgn, M):.0f}%")
