"""Random linear codes, BPSK transmission and channel LLRs."""

# %%
import numpy as np

from tepforge.channels import MIXTURE_CHANNEL_1, Awgn, RayleighCsi, RayleighNcsi, hard_demod, simulate_frame
from tepforge.gf2 import encode, is_codeword, random_linear_code, syndrome

rng = np.random.default_rng(1)

# %% A seeded [16,8] code in standard form G = [I | P], H = [P^T | I]
code = random_linear_code(16, 8, seed=5)
print("G =\n", code.generator)
print("G H^T == 0:", not np.any(code.generator.astype(int) @ code.parity.T.astype(int) % 2))

# %% Encode a message and corrupt it on several channels
msg = rng.integers(0, 2, code.k)
word = encode(code, msg)
for model in (Awgn(0.8), MIXTURE_CHANNEL_1, RayleighCsi(0.8), RayleighNcsi(0.8)):
    frame = simulate_frame(model, word, rng)
    hd = hard_demod(frame.llrs)
    print(f"{type(model).__name__:16s} bit errors={int(np.sum(hd != word))} "
          f"syndrome zero={not syndrome(code, hd).any()} codeword={is_codeword(code, hd)}")

# %% LLR magnitudes carry the reliability of each hard decision
frame = simulate_frame(Awgn(0.8), word, rng)
order = np.argsort(np.abs(frame.llrs))
print("least reliable positions:", order[:4], "|L| =", np.round(np.abs(frame.llrs[order[:4]]), 3))
