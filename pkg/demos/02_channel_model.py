"""
Clustered multipath channels
============================

Draw a seeded channel realization, add noise at a given SNR and look at
the per-slice tensor that the estimators work on.
"""

import numpy as np

from mtcpd.channel import ScenarioConfig, add_awgn, generate_realization, make_rng
from mtcpd.tensor import frobenius_norm, reshape_ura, unfold

cfg = ScenarioConfig(x=4, y=4, n=2, k=64)
real = generate_realization(cfg, master_seed=2026, index=0)
print("channel shape (M, N, K):", real.clean.shape, " paths:", len(real.paths))
print("unit norm:", frobenius_norm(real.clean))

noisy = add_awgn(real.clean, -10.0, make_rng(2026, 0, 1))
print("noise energy at -10 dB:", frobenius_norm(noisy - real.clean) ** 2)

# one UE antenna slice, reshaped to X x Y x K
h0 = reshape_ura(real.clean[:, 0, :], cfg.x, cfg.y)
for n, name in enumerate("XYK"):
    s = np.linalg.svd(unfold(h0, n), compute_uv=False)
    print(f"mode {name}: normalized spectrum {np.round(s / s[0], 3)}")
