"""Estimating h- numerically on the flat torus.

Closedness of a*sigma1 + b*sigma2 is discretised on a periodic N^4 grid and
the dimension of the kernel is read off from the smallest singular values.
We sweep a few resolutions and only trust a dimension that does not move.
"""

import time

from acsforms.kernel import assemble, dense_kernel_dim, resolution_sweep
from acsforms.r4family import corollary_glued_structure


def show(label, target, grid):
    t0 = time.perf_counter()
    sweep = resolution_sweep(target, grid)
    for r in sweep.reports:
        sv = ", ".join(f"{x:.2e}" for x in r.singular_values[:4])
        print(f"  {label:<10} N={r.N:<3} dim={r.dim}  gap={r.gap_ratio:.1e}  sigma: {sv}")
    print(f"  -> dim {sweep.dim}, stable {sweep.stable} ({time.perf_counter() - t0:.1f}s)")


# constant structure: both beta and gamma are closed
show("f = 0", "0", [4, 6])

# f depending on x2 kills the beta direction; gamma survives
show("f = sin", "0.5*sin(2*pi*x2)", [4, 6])

# two bumped copies glued into the standard structure leave nothing closed;
# the dense SVD gives an independent answer at small N
G = corollary_glued_structure()
d, s = dense_kernel_dim(assemble(G, 4))
print(f"  glued      N=4   dense dim={d}  smallest sigma {s[0]:.3f}")
show("glued", G, [6])
