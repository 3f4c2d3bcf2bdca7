# Eigenvalue and singular-value distributions of variable-coefficient
# Toeplitz matrices: the empirical moments converge to averages of the
# symbol, no matter which indexing scheme places the samples.
import numpy as np

from kms import (MAX_INDEX, MIDPOINT, MIN_INDEX, ROW_INDEX, TestFunction,
                 build_kms, build_rectangular, eigenvalues, empirical_mean,
                 lsd_integral, singular_values)
from kms.presets import schrodinger_symbol, svd_twoband_symbol
from kms.symbol import PiecewisePotential

f = PiecewisePotential(pieces=(lambda x: 3.5 + np.asarray(x, float) ** 2,))
s = schrodinger_symbol(f)

# moments mean(lam^p) against the symbol average over [0,1] x [0,2pi]
print("symbol f(x) - 2cos t, f = 3.5 + x^2")
for p in (1, 2, 3, 4):
    phi = TestFunction.monomial(p)
    ref = lsd_integral(s, phi)
    errs = []
    for n in (128, 256, 512, 1024):
        emp = empirical_mean(eigenvalues(build_kms(s, n, MIDPOINT)), phi)
        errs.append(abs(emp - ref))
    print("  p=%d  integral %12.6f  errors %s"
          % (p, ref.real, "  ".join("%.2e" % e for e in errs)))

# the scheme places each diagonal's sample points; the limit ignores it
print("\nscheme independence at n = 1024, phi = z^2")
phi = TestFunction.monomial(2)
ref = lsd_integral(s, phi)
for sch in (MIDPOINT, MIN_INDEX, MAX_INDEX, ROW_INDEX):
    emp = empirical_mean(eigenvalues(build_kms(s, 1024, sch)), phi)
    print("  %-10s mean %.6f  (integral %.6f)" % (sch.token, emp.real, ref.real))

# singular values follow the same law with |a|^2: mean sigma^2 tends to
# the Parseval sum over bands, for square and rectangular shapes alike
s2 = svd_twoband_symbol()
ref = lsd_integral(s2, TestFunction.abs_power(2))
print("\ntwo-band complex symbol, sum_k int |a_k|^2 = %.9f" % ref.real)
for m, n in ((511, 511), (1023, 1023), (2047, 1023)):
    sv = singular_values(build_rectangular(s2, m, n))
    emp = empirical_mean(sv, TestFunction.monomial(2))
    print("  shape %5d x %4d  mean sigma^2 = %.6f  err %.2e"
          % (m + 1, n + 1, emp.real, abs(emp - ref)))
