"""
Scoring components by phase coherence
=====================================

Components that look like steering vectors have constant phase steps and
score near zero. Components fitted to noise score high and get dropped.
"""

import numpy as np

from mtcpd.channel import ScenarioConfig, add_awgn, generate_realization, make_rng, steering_vector
from mtcpd.decomposition import extract_components, make_binary_plan
from mtcpd.selection import component_coherence, phase_coherence, select_by_pcm
from mtcpd.tensor import reshape_ura

print("steering vector:", phase_coherence(steering_vector(16, 0.2)))
rng = np.random.default_rng(0)
print("gaussian vector:", phase_coherence(rng.standard_normal(16) + 1j * rng.standard_normal(16)))

cfg = ScenarioConfig(x=4, y=4, n=2, k=64)
real = generate_realization(cfg, 2026, 2)
noisy = add_awgn(real.clean, -10.0, make_rng(2026, 2, 1))
comps = extract_components(reshape_ura(noisy[:, 0, :], 4, 4), make_binary_plan(4, 4, 64), 8)
for r, c in enumerate(comps, start=1):
    print(f"r={r}  sigma_r={component_coherence(c):.3f}  |scale|={abs(c.scale):.3f}")
kept = select_by_pcm(comps, 0.5)
print("kept", len(kept), "of", len(comps))
