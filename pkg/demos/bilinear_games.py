"""Average-case optimal momentum on random bilinear games.

Run with ``python demos/bilinear_games.py``.  Takes a few seconds.
"""
import numpy as np

from avgcase import (
    BilinearGameSpec,
    make_bilinear_instance,
    mp_coefficients,
    mp_edges,
    pushforward_bilinear,
    run_asymp_bilinear,
    run_avg_opt_bilinear,
    run_extragradient,
)
from avgcase.bench import calibrated_sigma2
from avgcase.spectra import match_spectra

# A zero-sum game min_x max_y x^T M y has the skew operator A = [[0, M], [-M^T, 0]].
# Its eigenvalues are +-i sqrt(eig(M M^T)) plus d2 - d1 zeros.
inst = make_bilinear_instance(BilinearGameSpec(d1=40, d2=60, seed=0))
M = inst.matrix[:40, 40:]
predicted = pushforward_bilinear(np.linalg.eigvalsh(M @ M.T), 40, 60)
eig = np.linalg.eigvals(inst.matrix)
print("largest real part of any eigenvalue:", np.abs(eig.real).max())
print("distance to predicted spectrum:     ", match_spectra(eig, predicted.eigenvalues))

# The momentum schedule (h_t, m_t) converges quickly to a constant heavy-ball method.
c = mp_coefficients(1.0, 0.25, 30)
print("\n t      h_t        m_t")
for t in (1, 2, 3, 5, 10, 30):
    print(f"{t:2d} {c.h[t]:10.6f} {c.m[t]:10.6f}")

# Head to head on square games, where the spectrum touches zero.  The law's scale is
# matched to each instance's top eigenvalue so no method overshoots at finite size.
T, seeds = 100, 10
curves = {"avg-opt": [], "polyak": [], "extragradient": []}
for seed in range(seeds):
    inst = make_bilinear_instance(BilinearGameSpec(200, 200, seed=seed))
    s2 = calibrated_sigma2(inst, 1.0)
    lo, hi = mp_edges(s2, 1.0)
    curves["avg-opt"].append(run_avg_opt_bilinear(inst, mp_coefficients(s2, 1.0, T), T).dist)
    curves["polyak"].append(run_asymp_bilinear(inst, lo, hi, T).dist)
    curves["extragradient"].append(run_extragradient(inst, 1 / np.sqrt(lo + hi), T).dist)

print("\nmean squared distance, d1 = d2 = 200")
print("   t " + "".join(f"{name:>15}" for name in curves))
for t in (0, 10, 25, 50, 100):
    print(f"{t:4d} " + "".join(f"{np.mean([d[t] for d in v]):15.3e}" for v in curves.values()))
