"""Spectra, singular values, and spectral functionals of matrix realizations.

Solver routing: exactly-Hermitian matrices go to symmetric LAPACK drivers
(tridiagonal and banded forms skip the dense reduction entirely).  Banded
non-Hermitian matrices get two structure checks before the general dense
eigensolver: triangular realizations read eigenvalues off the diagonal, and
cyclically graded bands (all band indices congruent mod m) are solved through
the block-diagonal m-th power, which keeps eigenvalues of strongly non-normal
families (shift-plus-shift^2 Toeplitz and relatives) on their exact rays
where plain QR scatters them across the pseudospectrum.  Results come back in
a `SpectralSummary` together with a rough backward-error estimate.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy import integrate, linalg as sla

from .errors import BranchError, ShapeError, SizeCapError
from .matgen import MatrixRealization
from .symbol import (
    DEFAULT_N_T,
    DEFAULT_N_X,
    BandSymbol,
    RegionMask,
    eval_symbol_grid,
)

HERMITIAN_DIM_CAP = 4096
GENERAL_DIM_CAP = 512

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SpectralSummary:
    """A computed spectrum: `kind` is "eigenvalues" or "singular_values".

    `values` is ascending-real for Hermitian spectra, lexicographic in
    (re, im) for general spectra, and descending for singular values.
    `n` is the number of values; `residual` a coarse error estimate.
    """

    kind: str
    values: np.ndarray
    n: int
    residual: float


def _summary(kind, values, residual):
    values = np.asarray(values)
    return SpectralSummary(kind=kind, values=values, n=len(values),
                           residual=float(residual))


def _check_cap(dim: int, cap: int, what: str):
    if dim > cap:
        raise SizeCapError(
            f"{what} solver capped at {cap}, got dimension {dim}; "
            "pass cap= to raise the limit deliberately")


def _nonzero_bands(M: MatrixRealization):
    return [k for k, v in M.diagonals.items() if np.any(np.asarray(v) != 0)]


def _graded_modulus(M: MatrixRealization):
    """(m, g) when every nonzero band is congruent to g mod m, m >= 2.

    Such a matrix maps the index class c into c + g; with gcd(g, m) = 1 its
    m-th power is exactly block diagonal on the m residue classes and the
    spectrum is the union of rotated m-th root orbits of the block spectra.
    """
    ks = _nonzero_bands(M)
    if not ks:
        return None
    m = 0
    for k in ks[1:]:
        m = gcd(m, k - ks[0])
    m = abs(m)
    if m < 2 or M.m_rows < m:
        return None
    g = ks[0] % m
    if gcd(g, m) != 1:
        return None
    return m, g


def _graded_eigs(A: np.ndarray, m: int) -> np.ndarray:
    size = A.shape[0]
    P = np.linalg.matrix_power(A, m)
    zeta = np.exp(2j * np.pi / m)
    parts = []
    for c in range(m):
        idx = np.arange(c, size, m)
        mu = np.linalg.eigvals(P[np.ix_(idx, idx)])
        # the m-th root amplifies absolute error near 0 catastrophically, so
        # block eigenvalues under sqrt(eps)*scale are reported as exact zeros
        tol = np.sqrt(_EPS) * max(np.max(np.abs(mu), initial=0.0), 1e-300)
        roots = np.abs(mu) ** (1.0 / m) * np.exp(1j * np.angle(mu) / m)
        roots[np.abs(mu) <= tol] = 0.0
        parts.append(roots * zeta ** c)
    return np.concatenate(parts)


def eigenvalues(M: MatrixRealization, cap: int | None = None) -> SpectralSummary:
    """All eigenvalues of a square realization.

    Hermitian inputs (checked exactly, not with a tolerance) use symmetric
    solvers and return real ascending values; tridiagonal and banded shapes
    are solved in their compact form.  Banded triangular and cyclically
    graded matrices are solved through their structure (see module notes);
    remaining matrices are densified and sent to the unsymmetric solver.
    Non-Hermitian values are sorted by (re, im).
    """
    if not M.is_square:
        raise ShapeError(f"eigenvalues need a square matrix, got {M.shape}")
    dim = M.m_rows
    if M.is_hermitian_exact():
        _check_cap(dim, HERMITIAN_DIM_CAP if cap is None else cap, "Hermitian")
        bands = M.band_dict() if M.storage == "banded" else None
        if bands is not None and max(M.q, -M.p) <= 1:
            d = np.asarray(bands.get(0, np.zeros(dim))).real
            e = np.abs(np.asarray(bands.get(1, np.zeros(dim - 1))))
            # |e| is a diagonal-unitary similarity away from the complex e
            vals = sla.eigvalsh_tridiagonal(d, e)
        elif bands is not None:
            b = max(M.q, -M.p)
            a_band = np.zeros((b + 1, dim), dtype=np.complex128)
            for k in range(b + 1):
                v = bands.get(k)
                if v is not None:
                    a_band[b - k, k:] = v
            vals = sla.eigvals_banded(a_band, lower=False)
        else:
            vals = np.linalg.eigvalsh(M.to_dense())
        vals = np.sort(vals.real)
        scale = np.max(np.abs(vals)) if dim else 0.0
        return _summary("eigenvalues", vals, _EPS * dim * scale)
    _check_cap(dim, GENERAL_DIM_CAP if cap is None else cap, "general")
    if M.storage == "banded":
        ks = _nonzero_bands(M)
        if all(k >= 0 for k in ks) or all(k <= 0 for k in ks):
            # triangular: the diagonal is the spectrum, exactly
            d = M.diagonals.get(0)
            vals = np.zeros(dim, np.complex128) if d is None \
                else np.asarray(d, np.complex128).copy()
            vals = vals[np.lexsort((vals.imag, vals.real))]
            return _summary("eigenvalues", vals, 0.0)
        graded = _graded_modulus(M)
        if graded is not None:
            vals = _graded_eigs(M.to_dense(), graded[0])
            vals = vals[np.lexsort((vals.imag, vals.real))]
            scale = np.max(np.abs(vals)) if dim else 0.0
            return _summary("eigenvalues", vals, _EPS * dim * scale)
    A = M.to_dense()
    vals = np.linalg.eigvals(A)
    vals = vals[np.lexsort((vals.imag, vals.real))]
    scale = np.max(np.abs(vals)) if dim else 0.0
    # a-posteriori consistency: the eigenvalue sum must match the trace
    drift = abs(vals.sum() - np.trace(A)) / max(dim, 1)
    return _summary("eigenvalues", vals, max(_EPS * dim * scale, drift))


def singular_values(M: MatrixRealization, cap: int | None = None) -> SpectralSummary:
    """Singular values (descending) via the Gram matrix of the smaller side.

    sigma_i = sqrt of the eigenvalues of A*A (or AA*), which is exact for the
    Parseval-type sums sum sigma_i^2 = ||A||_F^2 and accurate to ~eps*||A||^2
    absolute for individual values.
    """
    A = M.to_dense()
    m, n = A.shape
    small = min(m, n)
    _check_cap(small, HERMITIAN_DIM_CAP if cap is None else cap, "Gram")
    G = A.conj().T @ A if m >= n else A @ A.conj().T
    w = np.linalg.eigvalsh(G)
    vals = np.sqrt(np.clip(w.real, 0.0, None))[::-1]
    scale = vals[0] if small else 0.0
    return _summary("singular_values", vals, _EPS * max(m, n) * scale)


# ---------------------------------------------------------------------------
# test functions


_MONOMIAL_RE = _re.compile(
    r"^(?:z(?:\^(\d+))?)?\s*(?:zbar(?:\^(\d+))?)?$")
_ABS_RE = _re.compile(r"^abs\^(\d+)$")
_IND_RE = _re.compile(r"^indicator\[\s*([^,\]]+)\s*,\s*([^,\]]+)\s*\]$")


@dataclass(frozen=True)
class TestFunction:
    """Test function phi for spectral means.

    kinds: "monomial" (z^p zbar^q), "abs" (|z|^p), "log" (principal branch),
    "indicator" ([alpha, beta] on the real part).
    """

    __test__ = False  # not a pytest class, despite the name

    kind: str
    p: int = 0
    q: int = 0
    alpha: float = 0.0
    beta: float = 0.0

    @classmethod
    def monomial(cls, p: int, q: int = 0) -> "TestFunction":
        if p < 0 or q < 0 or p + q == 0:
            raise ValueError("monomial needs p, q >= 0 and p + q >= 1")
        return cls(kind="monomial", p=p, q=q)

    @classmethod
    def abs_power(cls, p: int) -> "TestFunction":
        if p < 1:
            raise ValueError("abs power needs p >= 1")
        return cls(kind="abs", p=p)

    @classmethod
    def log_principal(cls) -> "TestFunction":
        return cls(kind="log")

    @classmethod
    def indicator(cls, alpha: float, beta: float) -> "TestFunction":
        if not beta > alpha:
            raise ValueError("indicator needs beta > alpha")
        return cls(kind="indicator", alpha=float(alpha), beta=float(beta))

    @classmethod
    def from_id(cls, text: str) -> "TestFunction":
        t = text.strip()
        if t == "log":
            return cls.log_principal()
        m = _ABS_RE.match(t)
        if m:
            return cls.abs_power(int(m.group(1)))
        m = _IND_RE.match(t)
        if m:
            return cls.indicator(float(m.group(1)), float(m.group(2)))
        m = _MONOMIAL_RE.match(t)
        if m and t:
            p = 0 if not t.startswith("z") or t.startswith("zbar") else \
                int(m.group(1) or 1)
            q = int(m.group(2) or 1) if "zbar" in t else 0
            if p + q >= 1:
                return cls.monomial(p, q)
        raise ValueError(f"unrecognized test function id: {text!r}")

    @property
    def identifier(self) -> str:
        if self.kind == "monomial":
            parts = []
            if self.p:
                parts.append("z" if self.p == 1 else f"z^{self.p}")
            if self.q:
                parts.append("zbar" if self.q == 1 else f"zbar^{self.q}")
            return " ".join(parts)
        if self.kind == "abs":
            return f"abs^{self.p}"
        if self.kind == "indicator":
            return f"indicator[{self.alpha!r},{self.beta!r}]"
        return "log"

    @property
    def is_analytic(self) -> bool:
        """True when phi extends analytically off the spectrum (no zbar)."""
        return (self.kind == "monomial" and self.q == 0) or self.kind == "log"

    def apply(self, values) -> np.ndarray:
        v = np.asarray(values)
        if self.kind == "monomial":
            out = np.ones(v.shape, dtype=np.complex128)
            if self.p:
                out = out * np.asarray(v, np.complex128) ** self.p
            if self.q:
                out = out * np.conj(v) ** self.q
            return out
        if self.kind == "abs":
            return np.abs(v) ** self.p
        if self.kind == "indicator":
            return ((v.real >= self.alpha) & (v.real <= self.beta)).astype(float)
        # principal log: reject the branch cut (and the origin)
        vc = np.asarray(v, np.complex128)
        if np.any((vc.imag == 0) & (vc.real <= 0)):
            raise BranchError("log is evaluated on its branch cut "
                              "(a value is real and <= 0)")
        return np.log(vc)

    def apply_derivative(self, values) -> np.ndarray:
        """phi' for analytic phi (monomials without zbar, and log)."""
        if not self.is_analytic:
            raise BranchError(f"{self.identifier} has no complex derivative")
        v = np.asarray(values, np.complex128)
        if self.kind == "log":
            return 1.0 / v
        if self.p == 1:
            return np.ones(v.shape, dtype=np.complex128)
        return self.p * v ** (self.p - 1)


def _scalar(value):
    value = complex(value)
    return value.real if value.imag == 0.0 else value


def empirical_mean(summary: SpectralSummary, phi: TestFunction):
    """(1/n) sum phi(lambda_i) over the stored values."""
    if summary.n == 0:
        raise ValueError("empty spectrum")
    return _scalar(np.mean(phi.apply(summary.values)))


def lsd_integral(s: BandSymbol, phi: TestFunction,
                 N_x: int = DEFAULT_N_X, N_t: int = DEFAULT_N_T):
    """Limiting mean: (1/2pi) int_0^1 int phi(a(x, t)) dt dx.

    Uniform (trapezoid-exact) mean in t, Simpson in x; N_x must be odd.
    """
    if N_x < 17 or N_x % 2 == 0:
        raise ValueError("N_x must be odd and >= 17")
    if N_t < 16:
        raise ValueError("N_t must be >= 16")
    xs = np.linspace(0.0, 1.0, N_x)
    ts = 2.0 * np.pi * np.arange(N_t) / N_t
    fv = phi.apply(eval_symbol_grid(s, xs, ts))
    per_x = fv.mean(axis=1)
    return _scalar(integrate.simpson(per_x, x=xs))


def moment_trace(M: MatrixRealization, p: int, q: int):
    """(1/n) Tr[M^p (M*)^q] without eigenvalues.

    Second-order moments avoid the matrix product: Tr[M M*] = sum |m_ij|^2
    and Tr[M^2] = sum_ij m_ij m_ji.
    """
    if not M.is_square:
        raise ShapeError("moment_trace needs a square matrix")
    if p < 0 or q < 0 or not 1 <= p + q <= 8:
        raise ValueError("need p, q >= 0 with 1 <= p + q <= 8")
    n = M.m_rows
    if p + q == 1:
        if M.storage == "banded":
            d = M.diagonals.get(0)
            tr = 0.0 if d is None else np.sum(d)
        else:
            tr = np.trace(M.dense)
        return _scalar((tr if p == 1 else np.conj(tr)) / n)
    A = M.to_dense()
    if (p, q) == (1, 1):
        return _scalar(np.sum(np.abs(A) ** 2).real / n)
    if (p, q) == (2, 0):
        return _scalar(np.sum(A * A.T) / n)
    if (p, q) == (0, 2):
        return _scalar(np.conj(np.sum(A * A.T)) / n)
    B = np.eye(n, dtype=np.complex128)
    for _ in range(p):
        B = B @ A
    Ah = A.conj().T
    for _ in range(q):
        B = B @ Ah
    return _scalar(np.trace(B) / n)


def cluster_fraction(summary: SpectralSummary, R: RegionMask, eps: float) -> float:
    """Fraction of values within (approximately) eps of the masked region.

    Distance is implemented by dilating the mask by ceil(eps/cell) cells, so
    eps must be at least one cell; the raster granularity is the accuracy.
    """
    cell = max(R.cell_w, R.cell_h)
    if eps < cell:
        raise ValueError(
            f"eps={eps} is below the mask cell size {cell:.3g}; "
            "use a finer resolution")
    radius = int(np.ceil(eps / min(R.cell_w, R.cell_h)))
    grown = R.dilated(radius)
    return float(np.mean(grown.contains(summary.values)))
