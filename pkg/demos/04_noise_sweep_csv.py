"""End-to-end experiment run: seeded sweeps written as CSV.

Equivalent to the CLI (`oirsvlc noise-sweep`, `oirsvlc overhead`, ...) but
driven from Python. Identical config and seed always reproduce the same
bytes, so sweep outputs can be diffed across machines and revisions.
"""

import os
from dataclasses import replace

from oirsvlc import ExperimentConfig, run_noise_sweep, run_overhead_report
from oirsvlc.experiments import write_noise_sweep_csv, write_overhead_csv

# trimmed for a quick demo run; drop the overrides for the full sweep
config = replace(ExperimentConfig(), trials=10, sigmas=(0.0, 1e-4, 1e-3))
out = "out"
os.makedirs(out, exist_ok=True)

rows = run_noise_sweep(config)
path = os.path.join(out, "noise_sweep.csv")
write_noise_sweep_csv(config, rows, path)
print(f"wrote {path}:")
print(f"{'sigma':>8} {'spacing':>8} {'NMSE [dB]':>10}")
for sigma, spacing, db, _ in rows:
    print(f"{sigma:>8g} {spacing:>8} {db:>10.2f}")

overhead = run_overhead_report(config)
path = os.path.join(out, "overhead.csv")
write_overhead_csv(config, overhead, path)
print(f"\nwrote {path}:")
print(f"{'spacing':>8} {'params':>8} {'flops':>9}")
for spacing, params, flops in overhead:
    print(f"{spacing:>8} {params:>8} {flops:>9}")
