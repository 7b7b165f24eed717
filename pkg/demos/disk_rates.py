"""Monte Carlo check of the disk rates and the constant-factor speedup.

Run with ``python demos/disk_rates.py``.
"""
import numpy as np

from avgcase import (
    DiskEnsembleSpec,
    disk_recurrence,
    disk_weights,
    limiting_ratio,
    make_disk_instance,
    run_asymp_disk,
    run_generic_avg_opt,
    xi_asymp,
    xi_gd,
    xi_opt,
)

C, R, T, seeds = 2.0, 1.0, 30, 200
rec, w = disk_recurrence(C, T), disk_weights(C, R, T)

opt, asy, gd = [], [], []
for seed in range(seeds):
    inst = make_disk_instance(DiskEnsembleSpec(100, C, R, seed=seed))
    inst = inst.shifted(-inst.x_star)  # measure errors without the |x_star| rounding floor
    traj = run_generic_avg_opt(inst, rec, w, T)
    opt.append(traj.dist)
    gd.append(traj.inner_dist)  # the inner sequence is gradient descent with step 1/C
    asy.append(run_asymp_disk(inst, C, R, T).dist)

print("  t   avg-opt (MC / theory)    const-avg (MC / theory)   gd (MC / theory)")
for t in (1, 2, 5, 10, 20, 30):
    cols = [(np.mean([d[t] for d in runs]), xi(C, R, t))
            for runs, xi in ((opt, xi_opt), (asy, xi_asymp), (gd, xi_gd))]
    print(f"{t:3d} " + "  ".join(f"{m:10.3e} / {p:9.3e}" for m, p in cols))

# Averaging never changes the exponential rate; it buys a constant factor 1 - R^2/C^2.
print("\nxi_opt / xi_gd:", [round(xi_opt(C, R, t) / xi_gd(C, R, t), 4) for t in (10, 50, 200)])
print("limit:         ", limiting_ratio(C, R))

# A non-normal matrix with the same limiting spectrum (circular law) behaves alike.
spec = DiskEnsembleSpec(300, C, R, mode="iid", seed=0)
inst = make_disk_instance(spec)
inst = inst.shifted(-inst.x_star)
traj = run_generic_avg_opt(inst, disk_recurrence(C, 50), disk_weights(C, R, 50), 50)
print(f"\niid Gaussian, t=50: avg-opt {traj.dist[50]:.3e}, gd {traj.inner_dist[50]:.3e}")
