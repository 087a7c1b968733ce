"""Validation against plane Poiseuille flow.

A straight channel of physical width w between two no-slip plates under
a unit volume force has mean velocity w^2/12, so a channel occupying a
w-wide band of the unit square yields permeability w^3/12. The staggered
discretization with the linear ghost wall closure is second order, which
the refinement sequence below shows directly.
"""
import numpy as np

from voxstokes import VoxelGrid, assemble, profile_config, solve_schur


def channel(n, width):
    fluid = np.zeros((n, n), dtype=bool)
    lo = (n - width) // 2
    fluid[:, lo : lo + width] = True
    return VoxelGrid(fluid)


w_phys = 0.25
k_exact = w_phys**3 / 12.0
print(f"channel width {w_phys}, exact permeability {k_exact:.8e}\n")

errors = []
print(f"{'n':>5} {'k computed':>16} {'rel error':>12} {'outer iters':>12}")
for n in (32, 64, 128):
    sys = assemble(channel(n, int(round(w_phys * n))), flow_dir=0)
    rep = solve_schur(sys, profile_config("reference", "simple"))
    err = abs(rep.k_value - k_exact) / k_exact
    errors.append(err)
    print(f"{n:>5} {rep.k_value:>16.10e} {err:>12.3e} {rep.iters_outer:>12}")

orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
print(f"\nobserved convergence orders between levels: {np.round(orders, 3)}")
