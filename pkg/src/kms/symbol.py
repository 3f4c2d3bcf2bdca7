"""Two-variable banded symbols a(x, t) and their scalar functionals.

A symbol is a finite trigonometric band a(x, t) = sum_k a_k(x) e^{ikt} with
coefficient functions a_k defined on [0, 1].  This module evaluates symbols,
computes Fourier coefficients of log a along a continuous branch, assembles
the strong-limit constants G, e, E, F, and rasterizes the extended range
(range plus the bounded holes of its complement).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import integrate, ndimage

from .errors import DomainError, KmsError, SingularSymbolError, WindingError

DEFAULT_K = 64
DEFAULT_N_X = 129
DEFAULT_N_T = 1024
DEFAULT_RESOLUTION = 256

# values this small on the log grid are treated as an exact zero crossing
_ZERO_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class BandSymbol:
    """Symbol a(x, t) = sum over the finite band of a_k(x) e^{ikt}.

    bands maps the integer frequency k to a callable a_k on [0, 1]; callables
    should accept numpy arrays (scalar-only callables are tolerated but slow).
    d_bands optionally maps k to the analytic x-derivative of a_k.
    """

    bands: Mapping[int, Callable]
    d_bands: Optional[Mapping[int, Callable]] = None
    label: str = ""

    def __post_init__(self):
        if not self.bands:
            raise ValueError("a symbol needs at least one band")
        object.__setattr__(self, "bands", dict(self.bands))
        if self.d_bands is not None:
            object.__setattr__(self, "d_bands", dict(self.d_bands))

    @property
    def p(self) -> int:
        """Lowest band index (always <= 0 by convention: missing bands are 0)."""
        return min(0, min(self.bands))

    @property
    def q(self) -> int:
        return max(0, max(self.bands))


@dataclass(frozen=True)
class SzegoConstants:
    """Strong-limit constants of one symbol at fixed truncation/quadrature.

    G is the geometric mean exp[(1/2pi) int int log a]; e0/e1 are the zeroth
    log-Fourier coefficients at the slice x = 0 / x = 1; E0/E1 the Szego
    series sum_{k>=1} k c_k c_{-k} there; F the slice-averaged derivative
    correction ("F(a)").  tail_estimate bounds the discarded E-series tail.
    """

    G: complex
    e0: complex
    e1: complex
    E0: complex
    E1: complex
    F: complex
    K: int
    N_x: int
    N_t: int
    tail_estimate: float
    warnings: tuple = ()


@dataclass(frozen=True)
class RegionMask:
    """Boolean raster of (an approximation of) the extended range.

    cells[i, j] covers [x_lo + i*cell_w, x_lo + (i+1)*cell_w] on the real
    axis and the analogous j-strip on the imaginary axis; True means the
    cell belongs to the approximate extended range.
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    resolution: int
    cells: np.ndarray = field(repr=False)

    @property
    def cell_w(self) -> float:
        return (self.x_hi - self.x_lo) / self.resolution

    @property
    def cell_h(self) -> float:
        return (self.y_hi - self.y_lo) / self.resolution

    def contains(self, z):
        """True where z falls in a true cell (False outside the bbox)."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        i = np.floor((z_arr.real - self.x_lo) / self.cell_w).astype(int)
        j = np.floor((z_arr.imag - self.y_lo) / self.cell_h).astype(int)
        ok = (i >= 0) & (i < self.resolution) & (j >= 0) & (j < self.resolution)
        out = np.zeros(z_arr.shape, dtype=bool)
        out[ok] = self.cells[i[ok], j[ok]]
        return out if np.ndim(z) else bool(out[0])

    def dilated(self, radius_cells: int) -> "RegionMask":
        """Mask grown by a Chebyshev radius of whole cells."""
        if radius_cells <= 0:
            return self
        grown = ndimage.binary_dilation(
            self.cells, structure=np.ones((3, 3), dtype=bool),
            iterations=int(radius_cells))
        return RegionMask(self.x_lo, self.x_hi, self.y_lo, self.y_hi,
                          self.resolution, grown)


@dataclass(frozen=True, eq=False)
class PiecewisePotential:
    """Real potential f on [0, 1], piecewise with one-sided continuity.

    pieces[j] covers [breakpoints[j-1], breakpoints[j]); sides[j] says which
    piece owns the breakpoint itself: "left" means f(c) = f(c-), "right"
    means f(c) = f(c+).
    """

    pieces: tuple
    breakpoints: tuple = ()
    sides: tuple = ()
    label: str = ""

    def __post_init__(self):
        pieces = tuple(self.pieces)
        breaks = tuple(float(c) for c in self.breakpoints)
        sides = tuple(self.sides) if self.sides else ("left",) * len(breaks)
        if len(pieces) != len(breaks) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        if len(sides) != len(breaks):
            raise ValueError("need one side flag per breakpoint")
        if any(s not in ("left", "right") for s in sides):
            raise ValueError("sides must be 'left' or 'right'")
        if any(not (0.0 < c < 1.0) for c in breaks):
            raise ValueError("breakpoints must lie in (0, 1)")
        if any(b <= a for a, b in zip(breaks, breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "breakpoints", breaks)
        object.__setattr__(self, "sides", sides)

    def __call__(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
            raise DomainError(f"potential evaluated outside [0, 1]")
        idx = np.searchsorted(np.asarray(self.breakpoints), x_arr, side="right")
        for j, (c, side) in enumerate(zip(self.breakpoints, self.sides)):
            if side == "left":
                idx[x_arr == c] = j
        out = np.empty(x_arr.shape, dtype=float)
        for j, fn in enumerate(self.pieces):
            m = idx == j
            if np.any(m):
                v = np.asarray(fn(x_arr[m]))
                out[m] = v.real if np.iscomplexobj(v) else v
        return out if np.ndim(x) else float(out[0])

    def left_limit(self, c: float) -> float:
        j = self._break_index(c)
        return float(np.real(np.asarray(self.pieces[j](np.asarray(c)))))

    def right_limit(self, c: float) -> float:
        j = self._break_index(c)
        return float(np.real(np.asarray(self.pieces[j + 1](np.asarray(c)))))

    def _break_index(self, c):
        for j, b in enumerate(self.breakpoints):
            if abs(b - c) < 1e-12:
                return j
        raise ValueError(f"{c} is not a breakpoint")

    def min_value(self, samples: int = 4001) -> float:
        """Minimum over dense per-piece sampling (both one-sided limits included)."""
        edges = (0.0,) + self.breakpoints + (1.0,)
        lo = np.inf
        for j, fn in enumerate(self.pieces):
            xs = np.linspace(edges[j], edges[j + 1], samples)
            v = np.asarray(fn(xs))
            v = v.real if np.iscomplexobj(v) else v
            lo = min(lo, float(np.min(v)))
        return lo

    def as_symbol(self) -> BandSymbol:
        """The associated symbol f(x) - 2cos t (bands {0: f, +-1: -1})."""
        neg_one = lambda x: np.full(np.shape(np.asarray(x)), -1.0)
        return BandSymbol(bands={0: self, 1: neg_one, -1: neg_one},
                          label=self.label or "f - 2cos t")


# ---------------------------------------------------------------------------
# evaluation helpers


def _call_band(fn, x):
    """Evaluate one coefficient function on scalar or array x, as complex."""
    x_arr = np.asarray(x, dtype=float)
    try:
        v = np.asarray(fn(x_arr))
        if v.shape != x_arr.shape:
            v = np.broadcast_to(v, x_arr.shape)
    except (TypeError, ValueError):
        # scalar-only callable: evaluate pointwise
        flat = np.asarray([fn(float(xi)) for xi in np.atleast_1d(x_arr).ravel()])
        v = flat.reshape(x_arr.shape)
    return v.astype(np.complex128, copy=False)


def _check_x(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
        raise DomainError("symbol coefficient argument outside [0, 1]")
    return x_arr


def eval_symbol(s: BandSymbol, x, t):
    """a(x, t) = sum_k a_k(x) e^{ikt}; x and t broadcast elementwise."""
    x_arr = _check_x(x)
    t_arr = np.asarray(t, dtype=float)
    xb, tb = np.broadcast_arrays(x_arr, t_arr)
    out = np.zeros(xb.shape, dtype=np.complex128)
    for k, fn in s.bands.items():
        out += _call_band(fn, xb) * np.exp(1j * k * tb)
    return complex(out) if out.ndim == 0 else out


def eval_symbol_grid(s: BandSymbol, xs, ts) -> np.ndarray:
    """a on the tensor grid, shape (len(xs), len(ts))."""
    xs = _check_x(np.atleast_1d(xs))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.zeros((xs.size, ts.size), dtype=np.complex128)
    for k, fn in s.bands.items():
        out += _call_band(fn, xs)[:, None] * np.exp(1j * k * ts)[None, :]
    return out


def band_norm(s: BandSymbol, N_x: int = DEFAULT_N_X) -> float:
    """sum_k max_x |a_k(x)| over N_x uniform samples.

    A lower bound of the band-sum norm; exact for constant or monotone
    coefficients (the sample set contains both endpoints).
    """
    if N_x < 2:
        raise ValueError("band_norm needs at least 2 samples per coefficient")
    xs = np.linspace(0.0, 1.0, N_x)
    return float(sum(np.max(np.abs(_call_band(fn, xs))) for fn in s.bands.values()))


# ---------------------------------------------------------------------------
# log a and the strong-limit constants


def _validate_t_grid(K, N_t):
    if K < 1:
        raise ValueError("K must be >= 1")
    if N_t & (N_t - 1) or N_t <= 0:
        raise ValueError(f"N_t = {N_t} is not a power of two")
    if N_t < 4 * K:
        raise ValueError(f"N_t = {N_t} < 4K = {4 * K}")


def _log_values(vals, xs=None):
    """Continuous-branch log a on the t-grid; rows are x-slices.

    Unwraps the phase along t starting from the principal branch at t = 0 and
    rejects symbols that vanish on the grid or wind around the origin.
    """
    absv = np.abs(vals)
    if np.any(absv < _ZERO_FLOOR):
        raise SingularSymbolError("|a| vanishes on the t-grid; log a undefined")
    ext = np.concatenate([vals, vals[:, :1]], axis=1)
    phase = np.unwrap(np.angle(ext), axis=1)
    winding = np.round((phase[:, -1] - phase[:, 0]) / (2.0 * np.pi)).astype(int)
    if np.any(winding != 0):
        bad = int(np.argmax(winding != 0))
        raise WindingError(winding[bad], None if xs is None else float(xs[bad]))
    return np.log(absv) + 1j * phase[:, :-1]


def _log_coeff_matrix(s, xs, K, N_t):
    """Matrix of log-Fourier coefficients, shape (len(xs), 2K+1), entry [i, K+k]."""
    ts = 2.0 * np.pi * np.arange(N_t) / N_t
    vals = eval_symbol_grid(s, xs, ts)
    logv = _log_values(vals, xs)
    c_full = np.fft.fft(logv, axis=1) / N_t
    k = np.arange(-K, K + 1)
    return c_full[:, k % N_t]


def log_fourier_coefficients(s: BandSymbol, x: float, K: int = DEFAULT_K,
                             N_t: int = DEFAULT_N_T) -> np.ndarray:
    """Fourier coefficients of log a(x, .), indexed -K..K (entry [K + k]).

    c_k(x) = (1/2pi) int_0^{2pi} log a(x, t) e^{-ikt} dt on a uniform grid,
    with the branch of log fixed by phase unwrapping along t.
    """
    _validate_t_grid(K, N_t)
    return _log_coeff_matrix(s, [x], K, N_t)[0]


def _geometric_tail(plus, minus, K):
    """Bound for sum_{k>K} k |c_k c_{-k}| from a geometric fit of the last terms."""
    m = np.abs(plus * minus)
    if m[-1] < 1e-290:
        return 0.0
    ks = np.arange(1, K + 1)
    lo = max(2, K - max(4, K // 3))
    sel = (ks >= lo) & (m > 1e-290)
    if np.count_nonzero(sel) < 3:
        return float(np.inf)
    slope = np.polyfit(ks[sel], np.log(m[sel]), 1)[0]
    r = float(np.exp(slope))
    if r >= 0.999:
        return float(np.inf)
    m_K = float(m[-1])
    # sum_{j>=1} (K+j) m_K r^j, times a safety factor for the fit
    return 2.0 * m_K * (K * r / (1.0 - r) + r / (1.0 - r) ** 2)


def _dlog_coeff_matrix(s, xs, K, N_t, N_x):
    """Coefficients of d/dx log a, same layout as _log_coeff_matrix."""
    if s.d_bands is not None:
        ts = 2.0 * np.pi * np.arange(N_t) / N_t
        da = np.zeros((len(xs), N_t), dtype=np.complex128)
        for k, fn in s.d_bands.items():
            da += _call_band(fn, np.asarray(xs))[:, None] * np.exp(1j * k * ts)[None, :]
        a = eval_symbol_grid(s, xs, ts)
        d_full = np.fft.fft(da / a, axis=1) / N_t
        k = np.arange(-K, K + 1)
        return d_full[:, k % N_t]
    # finite differences of c_k(x) in x; one-sided 2nd order at the endpoints
    h = 1.0 / (4.0 * N_x)
    xs = np.asarray(xs)
    c_mid = _log_coeff_matrix(s, np.clip(xs, h, 1.0 - h), K, N_t)
    c_plus = _log_coeff_matrix(s, np.clip(xs + h, 2 * h, 1.0), K, N_t)
    c_minus = _log_coeff_matrix(s, np.clip(xs - h, 0.0, 1.0 - 2 * h), K, N_t)
    dc = (c_plus - c_minus) / (2.0 * h)
    if xs[0] == 0.0:
        c0 = _log_coeff_matrix(s, [0.0, h, 2 * h], K, N_t)
        dc[0] = (-3.0 * c0[0] + 4.0 * c0[1] - c0[2]) / (2.0 * h)
    if xs[-1] == 1.0:
        c1 = _log_coeff_matrix(s, [1.0 - 2 * h, 1.0 - h, 1.0], K, N_t)
        dc[-1] = (3.0 * c1[2] - 4.0 * c1[1] + c1[0]) / (2.0 * h)
    return dc


def szego_constants(s: BandSymbol, K: int = DEFAULT_K, N_x: int = DEFAULT_N_X,
                    N_t: int = DEFAULT_N_T, tail_tol: float = 1e-8) -> SzegoConstants:
    """G, e(a;0/1), E(a;0/1) and F(a) by tensor quadrature.

    Trapezoid in t (spectrally accurate for periodic integrands) and composite
    Simpson in x, so N_x must be odd.  The x-derivative inside F comes from
    d_bands when available, otherwise from central differences of c_k(x).
    """
    _validate_t_grid(K, N_t)
    if N_x < 3 or N_x % 2 == 0:
        raise ValueError("N_x must be odd and >= 3 for composite Simpson")
    xs = np.linspace(0.0, 1.0, N_x)
    C = _log_coeff_matrix(s, xs, K, N_t)

    c0 = C[:, K]
    G = np.exp(integrate.simpson(c0, x=xs))
    kk = np.arange(1, K + 1)
    E_nodes = (kk[None, :] * C[:, K + kk] * C[:, K - kk]).sum(axis=1)

    tail = max(_geometric_tail(C[0, K + kk], C[0, K - kk], K),
               _geometric_tail(C[-1, K + kk], C[-1, K - kk], K))

    dC = _dlog_coeff_matrix(s, xs, K, N_t, N_x)
    k_full = np.arange(-K, K + 1)
    # sum_k k c_k(x) (d/dx log a)_{-k}(x): dC reversed along k gives index -k
    F_nodes = (k_full[None, :] * C * dC[:, ::-1]).sum(axis=1)
    F = integrate.simpson(F_nodes, x=xs)

    notes = ()
    if not (tail <= tail_tol):
        notes = (f"E-series tail estimate {tail:.3e} above tolerance {tail_tol:.1e}",)
    return SzegoConstants(G=complex(G), e0=complex(c0[0]), e1=complex(c0[-1]),
                          E0=complex(E_nodes[0]), E1=complex(E_nodes[-1]),
                          F=complex(F), K=K, N_x=N_x, N_t=N_t,
                          tail_estimate=float(tail), warnings=notes)


def d_band_consistency(s: BandSymbol, probes: int = 10, h: float = 1e-4) -> float:
    """Max deviation of d_bands from a central difference at interior probes."""
    if s.d_bands is None:
        raise ValueError("symbol has no d_bands")
    xs = np.linspace(0.05, 0.95, probes)
    worst = 0.0
    for k, dfn in s.d_bands.items():
        fn = s.bands.get(k)
        if fn is None:
            fd = np.zeros(probes, dtype=complex)
        else:
            fd = (_call_band(fn, xs + h) - _call_band(fn, xs - h)) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(fd - _call_band(dfn, xs)))))
    return worst


# ---------------------------------------------------------------------------
# extended range


def extended_range(s: BandSymbol, N_x: int = DEFAULT_N_X, N_t: int = DEFAULT_N_T,
                   resolution: int = DEFAULT_RESOLUTION) -> RegionMask:
    """Rasterize the extended range: sampled range, dilated, holes filled.

    Samples a(x_i, t_j), marks their cells, dilates by one cell to close
    sampling gaps, then flood-fills from the bounding-box boundary; the
    complement of the unbounded component is the mask.  The sampling grid is
    refined until adjacent samples land in the same or adjacent cells.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    pad = 3  # empty cells around the data on every side
    for _attempt in range(8):
        xs = np.linspace(0.0, 1.0, N_x)
        ts = 2.0 * np.pi * np.arange(N_t) / N_t
        vals = eval_symbol_grid(s, xs, ts)
        re, im = vals.real, vals.imag
        span = max(re.max() - re.min(), im.max() - im.min())
        scale = max(1.0, np.max(np.abs(vals)))
        if span < 1e-12 * scale:
            # single-point range: one cell centred on the value
            cell = 1.0 / resolution
            x_lo = re.flat[0] - (resolution // 2 + 0.5) * cell
            y_lo = im.flat[0] - (resolution // 2 + 0.5) * cell
            cells = np.zeros((resolution, resolution), dtype=bool)
            cells[resolution // 2, resolution // 2] = True
            return RegionMask(x_lo, x_lo + 1.0, y_lo, y_lo + 1.0,
                              resolution, cells)

        cell = span / (resolution - 2 * pad)
        x_lo = 0.5 * (re.min() + re.max()) - 0.5 * resolution * cell
        y_lo = 0.5 * (im.min() + im.max()) - 0.5 * resolution * cell
        ii = np.clip(((re - x_lo) / cell).astype(int), 0, resolution - 1)
        jj = np.clip(((im - y_lo) / cell).astype(int), 0, resolution - 1)

        # adjacency: consecutive samples must land in 8-neighbouring cells
        di_t = np.abs(np.diff(np.concatenate([ii, ii[:, :1]], axis=1), axis=1))
        dj_t = np.abs(np.diff(np.concatenate([jj, jj[:, :1]], axis=1), axis=1))
        ok_t = bool(np.all(di_t <= 1) and np.all(dj_t <= 1))
        ok_x = bool(np.all(np.abs(np.diff(ii, axis=0)) <= 1)
                    and np.all(np.abs(np.diff(jj, axis=0)) <= 1)) if N_x > 1 else True
        if ok_t and ok_x:
            break
        if not ok_t:
            N_t *= 2
        if not ok_x:
            N_x = 2 * N_x - 1
    else:
        raise KmsError("extended_range could not refine sampling to cell adjacency")

    marked = np.zeros((resolution, resolution), dtype=bool)
    marked[ii.ravel(), jj.ravel()] = True
    dilated = ndimage.binary_dilation(marked, structure=np.ones((3, 3), dtype=bool))
    labels, _ = ndimage.label(~dilated)  # 4-connected complement
    border = np.unique(np.concatenate([labels[0, :], labels[-1, :],
                                       labels[:, 0], labels[:, -1]]))
    border = border[border != 0]
    unbounded = np.isin(labels, border)
    return RegionMask(x_lo, x_lo + resolution * cell, y_lo,
                      y_lo + resolution * cell, resolution, ~unbounded)
