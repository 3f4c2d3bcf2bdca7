"""Where eigenvalues of non-normal band matrices actually live.

Writes eigenvalue clouds for three model symbols to CSV (plot them with any
tool) and prints the quantitative clustering summary for each.
"""
import csv
import os

import numpy as np

from kms import (build_kms, build_lame, cluster_fraction, eigenvalues,
                 extended_range)
from kms.presets import cluster_symbol, star_symbol

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)


def dump(name, values):
    path = os.path.join(OUT, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, z in enumerate(values):
            w.writerow([i, repr(float(np.real(z))), repr(float(np.imag(z)))])
    print("  wrote %s" % path)


# star symbol e^{it} + e^{-2it}: the spectrum does NOT approach the range
# curve -- the matrix is graded and its eigenvalues sit on three rays well
# inside the curve.
ev = eigenvalues(build_kms(star_symbol(), 50)).values
ts = np.linspace(0.0, 2.0 * np.pi, 1 << 14, endpoint=False)
curve = np.exp(1j * ts) + np.exp(-2j * ts)
gap = np.min(np.abs(np.asarray(ev)[:, None] - curve[None, :]), axis=1)
print("star symbol, n = 50: %d eigenvalues, min distance to range curve %.4f"
      % (len(ev), gap.min()))
dump("star_eigenvalues.csv", ev)

# Lame-style two-band symbol with vanishing coefficients at the endpoints:
# everything collapses onto a three-ray star inside the unit disk.
ev = eigenvalues(build_lame(50, 1.0)).values
rays = np.exp(2j * np.pi * np.arange(3) / 3.0)
dists = []
for z in ev:
    t = np.maximum(0.0, np.real(z * np.conj(rays)))
    dists.append(np.min(np.abs(z - t * rays)))
print("lame matrix, n = 50: max |lambda| = %.4f, max ray distance %.2e"
      % (np.max(np.abs(ev)), max(dists)))
dump("lame_eigenvalues.csv", ev)

# cluster symbol: here the extended range (range plus the holes it
# encloses) is the right predictor -- at n = 100 every eigenvalue lies
# within 0.1 of it.
s = cluster_symbol()
summary = eigenvalues(build_kms(s, 100))
frac = cluster_fraction(summary, extended_range(s), 0.1)
print("cluster symbol, n = 100: fraction within 0.1 of extended range = %.3f"
      % frac)
dump("cluster_eigenvalues.csv", summary.values)
