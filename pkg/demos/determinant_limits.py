"""Determinant limits for discrete Schrodinger matrices.

Three escalating studies on -Delta + f(x): a constant potential where the
limit has a closed form, a smooth potential where the limit depends on the
sampling shift, and a jumping potential where the determinant ratio never
settles down but follows a predictable orbit.
"""
import numpy as np

from kms import (build_schrodinger, det_ratio, kac_det_ratio_sweep,
                 kac_jump_prediction, kac_limit)
from kms.presets import ff_potential
from kms.symbol import PiecewisePotential

# --- constant potential f = 3 -------------------------------------------
# det T_n grows like lam_+^n with lam_+ = (3 + sqrt 5)/2; the normalized
# ratio converges geometrically to lam_+/sqrt(5).
lam_plus = (3.0 + np.sqrt(5.0)) / 2.0
f3 = PiecewisePotential(pieces=(lambda x: np.full(np.shape(x), 3.0),))
print("constant potential f = 3, reference %.12f" % (lam_plus / np.sqrt(5.0)))
for n in (10, 20, 50, 100, 200):
    M = build_schrodinger(f3, n, 0.0)
    r = det_ratio(M, lam_plus, M.m_rows)
    print("  n=%4d  ratio %.12f  err %.2e"
          % (n, r.real, abs(r - lam_plus / np.sqrt(5.0))))

# --- smooth potential, three sampling shifts ----------------------------
# Diagonal entry j samples f at (j-1+eps)/n.  The limit of det/G^n depends
# on eps through the boundary values f(0), f(1) only -- the interior of the
# potential drops out.
f = PiecewisePotential(pieces=(lambda x: 3.5 + np.asarray(x, float) ** 2,))
ns = np.array([250, 500, 1000, 2000, 4000])
print("\nsmooth potential f = 3.5 + x^2")
for eps in (0.0, 0.5, 1.0):
    limit = kac_limit(f, eps).value
    obs = kac_det_ratio_sweep(f, eps, ns)
    row = "  ".join("%.2e" % abs(o - limit) for o in obs)
    print("  eps=%.1f  limit %.9f  errors [%s]" % (eps, limit, row))
print("  (the symmetric shift eps=1/2 superconverges)")

# --- jump potential ------------------------------------------------------
# When f jumps at x = c the ratio det/G^n oscillates forever: the predictor
# multiplies in gamma^{fractional part of c*n}.  Rational c gives a periodic
# orbit, irrational c an equidistributed one.
print("\njump potential, breakpoint 1/2 (period 2 orbit)")
fj = ff_potential(0.5)
pred = kac_jump_prediction(fj)
window = np.arange(3000, 3008)
obs = kac_det_ratio_sweep(fj, 1.0, window)
for n, o in zip(window, obs):
    print("  n=%d  observed %.6f  predicted %.6f" % (n, o, pred.predictor(n)))

c = 0.9 - 1.5 / np.pi
fj = ff_potential(c)
pred = kac_jump_prediction(fj)
lo, hi = pred.value_interval
obs = kac_det_ratio_sweep(fj, 1.0, np.arange(500, 5001))
print("\njump potential, irrational breakpoint c = %.6f" % c)
print("  predicted value interval [%.4f, %.4f]" % (lo, hi))
print("  observed range over 500 <= n <= 5000 [%.4f, %.4f]"
      % (obs.min(), obs.max()))
print("  (the orbit fills the interval, up to O(1/n) finite-size fuzz)")
