"""
A small reproducible sweep
==========================

The same pipeline the command line runs, on a toy configuration. Output goes
to a temporary directory.
"""

import tempfile
from pathlib import Path

from mtcpd.channel import ScenarioConfig
from mtcpd.config import ExperimentConfig
from mtcpd.harness import cmd_generate, cmd_report, cmd_sweep

with tempfile.TemporaryDirectory() as tmp:
    cfg = ExperimentConfig(scenario=ScenarioConfig(x=4, y=4, n=2, k=16),
                           snr_grid_db=(-10.0, 0.0), n_realizations=5, r_max=6,
                           output_dir=tmp)
    cmd_generate(cfg)
    res = cmd_sweep(cfg)
    print("records:", len(res.records), " R_avg:", res.rank_avg)
    for name, path in cmd_report(tmp).items():
        print(f"--- {name}")
        print(Path(path).read_text())
