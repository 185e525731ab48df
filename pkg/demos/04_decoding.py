"""GRAND, OSD and POSD on the same noisy frames."""

# %%
import numpy as np

from tepforge.channels import Awgn, simulate_frame
from tepforge.decoders import ML_ONLINE, decode, ml_decode_exhaustive
from tepforge.gf2 import encode, random_linear_code
from tepforge.reliability import awgn_reliability, expected_profile
from tepforge.sim import ebn0_to_sigma
from tepforge.teps import ew_teps

rng = np.random.default_rng(4)
code = random_linear_code(32, 16, seed=1)
sigma = float(ebn0_to_sigma(3.0, code.k / code.n))
model = Awgn(sigma)

# %% Pattern lists sized for each decoder
grand_teps = ew_teps(expected_profile(awgn_reliability(sigma), code.n, code.k, "grand"), 5000)
osd_teps = ew_teps(expected_profile(awgn_reliability(sigma), code.n, code.k, "osd"), 256)
posd_teps = ew_teps(expected_profile(awgn_reliability(sigma), code.n, code.k, "posd"), 256)

# %% Decode 200 frames and compare with exhaustive maximum likelihood
stats = {name: [0, 0] for name in ("grand", "grand-ml", "osd", "posd")}
for _ in range(200):
    word = encode(code, rng.integers(0, 2, code.k))
    L = simulate_frame(model, word, rng).llrs
    ml = ml_decode_exhaustive(code, L)
    for name, kind, teps, mq in (("grand", "grand", grand_teps, 5000), ("grand-ml", "grand", ML_ONLINE, 5000),
                                 ("osd", "osd", osd_teps, 256), ("posd", "posd", posd_teps, 256)):
        r = decode(kind, code, L, teps, mq)
        ok = r.codeword is not None
        stats[name][0] += ok and np.array_equal(r.codeword, word)
        stats[name][1] += ok and np.array_equal(r.codeword, ml)
for name, (correct, agree) in stats.items():
    print(f"{name:8s} correct {correct}/200, agrees with ML {agree}/200")
