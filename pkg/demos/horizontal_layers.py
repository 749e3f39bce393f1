"""
Layers parallel to the crack.

When the crack runs along an interface the release rate converges
uniformly to that of the homogenized material, and no toughening occurs:
the homogenized evolution uses the interface toughness itself.
"""

from laminate_fracture import (StudyConfig, compute_curves, evolution_convergence,
                               holder_check, local_energy_convergence, ref1)
from laminate_fracture.homogenization import sup_gap

config = StudyConfig(ref1("horizontal"), n_list=(2, 4, 8), threads=4)
curves = compute_curves(config)

print("sup over [L/4, 3L/4] of |G_n - G_hom|:")
for n, g in sup_gap(curves, (0.25, 0.75)).items():
    hold = holder_check(curves.curves[n], (0.25, 0.75))
    print(f"  n = {n}: {g:.5f}   (Hoelder-1/2 modulus {hold:.3f})")

conv = evolution_convergence(config, curves=curves)
print(f"\ntip distance to the homogenized evolution ({conv.gc_eff_source} toughness):")
for n, d in conv.distances.items():
    print(f"  n = {n}: {d:.5f}")

local = local_energy_convergence(config.spec, config.n_list, (0.25, 0.75), l=0.5)
print("\nrelative gap of the energy stored in (L/4, 3L/4) x (-H, H), tip at L/2:")
for n, e, x in zip(local.n_list, local.energy_gap, local.mu1_gap):
    print(f"  n = {n}: total {e:.2e}, mu1 part {x:.2e}")
