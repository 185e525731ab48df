"""FER/BER sweeps from a JSON config, plus a paired comparison of pattern orders."""

# %%
from dataclasses import replace
from pathlib import Path

from tepforge.sim import TepSpec, export_results, load_config, run_fer, run_paired

here = Path(__file__).parent

# %% A config-driven sweep, exported as CSV
cfg = load_config(here / "configs" / "grand_awgn_32_26.json")
result = run_fer(cfg, workers=2)
for row in result:
    print(f"{row.snr_db:4.1f} dB MQ={row.mq:5d} frames={row.frames:7d} FER={row.fer:.3e} "
          f"+/-{row.ci95:.1e} avg queries={row.avg_queries:.1f}")
export_results(result, Path("fer_grand_32_26.csv"))

# %% Paired runs share every noise realisation, so differences are less noisy
orders = ["EW", "LW", "HW"]
configs = [replace(cfg, teps=TepSpec(o), snr_points=[5.0], mq_points=[1000]) for o in orders]
for order, res in zip(orders, run_paired(configs)):
    row = res.rows[0]
    print(f"{order}: {row.frame_errors} errors in {row.frames} frames")
