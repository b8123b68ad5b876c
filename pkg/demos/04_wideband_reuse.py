"""Sharing decompositions across subcarriers of a wideband LoS link.

Runs the harness on an inline config: 64 subcarriers over 10 GHz, V-LORD,
and three reuse fractions.  The FLOPs model shows what each fraction saves;
the BER table shows what it costs.
"""

from thzdet.harness.config import loads_config
from thzdet.harness.simulate import run_wideband_reuse

CONFIG = """
kind = "wideband"
seed = 4
[system]
q_t = 4
constellation = "qam4"
[channel]
model = "multipath"
carrier_hz = 0.3e12
distance_m = 2.0
n_clusters = 3
rays_per_cluster = 4
nlos_power = 0.3
delay_spread_s = 0.1e-9
ray_delay_spread_s = 0.01e-9
[channel.geometry]
sa_grid_t = [2, 2]
sa_grid_r = [2, 2]
scale = 1.0
[wideband]
n_subcarriers = 64
bandwidth_hz = 10e9
reuse = [0.0, 0.25, 0.5]
[sweep]
snr_db = [8.0, 12.0]
target_errors = 200
max_trials = 12800
chunk_size = 3200
[[detectors]]
name = "vlord"
[output]
record_wall_time = false
"""

recs, flops = run_wideband_reuse(loads_config(CONFIG))
print(f"{'reuse':>6} {'RADD':>10} {'RMUL':>10}")
for f in flops:
    print(f"{f.reuse:6.2f} {f.radd:10d} {f.rmul:10d}")
print(f"\n{'label':>14} {'snr_db':>6} {'ber':>10} {'trials':>8}")
for r in recs:
    print(f"{r.detector:>14} {r.snr_db:6.1f} {r.ber:10.2e} {r.trials:8d}")
