"""Named symbols used by the experiments and the test suite."""

from __future__ import annotations

import math

import numpy as np

from .symbol import BandSymbol, PiecewisePotential


def _const(c):
    return lambda x, c=c: np.full(np.shape(np.asarray(x)), c)


def schrodinger_symbol(f, label: str = "") -> BandSymbol:
    """f(x) - 2cos t for a callable or PiecewisePotential f."""
    if not label:
        label = getattr(f, "label", "") or "f - 2cos t"
    return BandSymbol(bands={0: f, 1: _const(-1.0), -1: _const(-1.0)}, label=label)


def star_symbol() -> BandSymbol:
    """e^{it} + e^{-2it}: the three-cusped curve whose matrices are nilpotent-like."""
    return BandSymbol(bands={1: _const(1.0), -2: _const(1.0)}, label="star")


def cluster_symbol() -> BandSymbol:
    """(1/2 + sqrt(x - 1/2)) e^{-2it} + e^{-it} + e^{it}.

    For x < 1/2 the square root continues on the principal branch,
    i.e. sqrt(x - 1/2) = i sqrt(1/2 - x).
    """
    def a_m2(x):
        return 0.5 + np.sqrt(np.asarray(x, dtype=complex) - 0.5)

    return BandSymbol(bands={-2: a_m2, -1: _const(1.0), 1: _const(1.0)},
                      label="cluster-demo")


def lame_symbol() -> BandSymbol:
    """(1 - x^2) e^{-it} + x^2 e^{2it}: the limit symbol of the Lame family."""
    return BandSymbol(bands={-1: lambda x: 1.0 - np.asarray(x, dtype=float) ** 2,
                             2: lambda x: np.asarray(x, dtype=float) ** 2},
                      label="lame")


def svd_twoband_symbol() -> BandSymbol:
    """Two complex bands with |a_k| symmetric about x = 1/2.

    The modulus symmetry makes the full-interval Parseval sum
    sum_k int_0^1 |a_k|^2 the singular-value z^2 limit for square *and*
    2:1 rectangular realizations (tall matrices only sample x in [0, ~1/2]).
    """
    return BandSymbol(
        bands={1: lambda x: np.exp(1j * np.pi * np.asarray(x, dtype=float)),
               -2: lambda x: 1j * (1.0 + np.sin(np.pi * np.asarray(x, dtype=float)))},
        label="svd-twoband")


def es_family_symbol(c: float = 1.2, k_band: int = 20, n_terms: int = 40) -> BandSymbol:
    """a = exp(2 e^{it} log c + e^{-it} x), banded to machine precision.

    log a has c_1 = 2 log c and c_{-1}(x) = x, so e(a;x) = 0, E(a;x) = 2x log c
    and F(a) = 2 log c: the family separating the row-indexed limit from the
    midpoint-indexed one.  a_k(x) is an explicit polynomial in x (product of
    two exponential series), and d/dx a = e^{-it} a gives d_bands[k] = a_{k+1}.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    alpha = 2.0 * math.log(c)

    def coeff_fn(k):
        s0 = max(0, -k)
        ss = np.arange(s0, s0 + n_terms)
        w = np.array([alpha ** (s + k) / (math.factorial(s + k) * math.factorial(s))
                      for s in ss])
        def a_k(x, ss=ss, w=w):
            return (w * np.power.outer(np.asarray(x, dtype=float), ss)).sum(axis=-1)
        return a_k

    ks = range(-k_band, k_band + 1)
    bands = {k: coeff_fn(k) for k in ks}
    d_bands = {k: coeff_fn(k + 1) for k in ks}
    return BandSymbol(bands=bands, d_bands=d_bands, label=f"es-family({c})")


def ff_potential(c: float = 0.5) -> PiecewisePotential:
    """The jump test potential: 3 + x^2 + sqrt(x) sin(13x) below c,
    4.5 - cos(20x)/x from c on (right-continuous at c)."""
    left = lambda x: 3.0 + np.asarray(x, float) ** 2 + np.sqrt(np.asarray(x, float)) \
        * np.sin(13.0 * np.asarray(x, float))
    right = lambda x: 4.5 - np.cos(20.0 * np.asarray(x, float)) / np.asarray(x, float)
    return PiecewisePotential(pieces=(left, right), breakpoints=(c,),
                              sides=("right",), label=f"ff(c={c})")
