"""Fock-Darwin spectrum: a harmonic oscillator in a uniform field.

With B = omega0 = 1 on [-4, 4]^2 the planar levels are
sqrt(3) (2n + |m| + 1) - m; the discrete ground state converges to
sqrt(3) at roughly O(h^{2k+2}).
"""

import numpy as np

from maghho import fock_darwin_levels
from maghho.experiments import run_eigen

exact = fock_darwin_levels(5, B=1.0, omega0=1.0)
print("analytic levels:", np.array2string(exact, precision=6))

for k in (0, 1):
    print(f"\n=== degree k = {k}, symmetric gauge ===")
    print(f"{'h':>9} {'ndof':>6} {'lambda_0':>12} {'rel_err':>10} {'rate':>6}")
    for r in run_eigen(k, (8, 16, 32), out_dir="demo_out"):
        print(f"{r['h']:9.4f} {r['ndof']:6d} {r['values'][0]:12.8f} "
              f"{r['rel_err']:10.2e} {r['rate']:6.2f}")

print("\nfinest five computed levels vs analytic:")
res = run_eigen(1, (32,), out_dir=None)
for lam, ref in zip(res[0]["values"], exact):
    print(f"  {lam:12.8f}   (exact {ref:12.8f}, diff {abs(lam - ref):.2e})")
