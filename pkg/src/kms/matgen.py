"""Matrix realizations of banded symbols under pluggable indexing schemes.

Entry (i, j) of a KMS realization is a_{j-i}(xi) where xi walks [0, 1]
according to the chosen scheme.  Matrices buildable here: square KMS under
midpoint / min / max / row / shifted / tagged indexing, rectangular midpoint,
block KMS, discrete Schrodinger (tridiagonal with a potential diagonal), the
Lame three-term family, and entrywise / low-rank perturbations of any of them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import SchemeError, ShapeError, SizeCapError
from .symbol import BandSymbol, PiecewisePotential, _call_band

# densifying beyond this many entries is almost certainly a mistake
_DENSE_ENTRY_CAP = 30_000_000


@dataclass(frozen=True)
class IndexingScheme:
    """Where along [0, 1] diagonal k samples its coefficient function.

    variant: "midpoint" | "min" | "max" | "row" | "shifted" | "tagged".
    epsilon applies to "shifted" (diagonal offset (r + eps)/size); tags apply
    to "tagged" (one node per diagonal start index, mesh -> 0 expected).
    """

    variant: str
    epsilon: float = 1.0
    tags: tuple = ()

    @property
    def token(self) -> str:
        if self.variant == "shifted":
            return f"shifted:{self.epsilon!r}"
        if self.variant == "tagged":
            return "tagged:" + ",".join(repr(t) for t in self.tags)
        return self.variant


MIDPOINT = IndexingScheme("midpoint")
MIN_INDEX = IndexingScheme("min")
MAX_INDEX = IndexingScheme("max")
ROW_INDEX = IndexingScheme("row")


def shifted(epsilon: float) -> IndexingScheme:
    if not 0.0 <= epsilon <= 1.0:
        raise SchemeError(f"shift epsilon {epsilon} outside [0, 1]")
    return IndexingScheme("shifted", epsilon=float(epsilon))


def tagged(tags) -> IndexingScheme:
    tags = tuple(float(t) for t in tags)
    if any(not 0.0 <= t <= 1.0 for t in tags):
        raise SchemeError("tags must lie in [0, 1]")
    if any(b <= a for a, b in zip(tags, tags[1:])):
        raise SchemeError("tags must be strictly increasing")
    return IndexingScheme("tagged", tags=tags)


def parse_scheme(token: str) -> IndexingScheme:
    """Inverse of IndexingScheme.token."""
    if token in ("midpoint", "min", "max", "row"):
        return IndexingScheme(token)
    if token.startswith("shifted:"):
        return shifted(float(token.split(":", 1)[1]))
    if token.startswith("tagged:"):
        body = token.split(":", 1)[1]
        return tagged(float(t) for t in body.split(",") if t)
    raise SchemeError(f"unknown indexing scheme {token!r}")


def _xi(scheme: IndexingScheme, size: int, k: int, length: int) -> np.ndarray:
    """Sample points for diagonal k of a size x size matrix.

    The r-th entry of diagonal k sits at (i, j) = (r + max(0,-k), r + max(0,k)),
    so min(i,j) = r, max(i,j) = r + |k| and i + j = 2r + |k|.
    """
    r = np.arange(length, dtype=float)
    if scheme.variant == "midpoint":
        return (2.0 * r + abs(k)) / (2.0 * size)
    if scheme.variant == "min":
        return r / size
    if scheme.variant == "max":
        return (r + abs(k)) / size
    if scheme.variant == "row":
        if size < 2:
            raise SchemeError("row indexing needs size >= 2")
        # Column position of diagonal k, normalized by size-1.  This matrix
        # is the transpose of [b_{i-j}(i/(size-1))] (one-sided sampling in
        # the flipped band convention), so determinants, eigenvalues and
        # singular values all agree with that literal row-indexed form.  Of
        # the two orientations, this is the one whose determinant limit
        # carries the +F slice-coupling term; the other carries -F.
        return (r + max(0, k)) / (size - 1)
    if scheme.variant == "shifted":
        return (r + scheme.epsilon) / size
    if scheme.variant == "tagged":
        if len(scheme.tags) != size:
            raise SchemeError(
                f"tagged partition has {len(scheme.tags)} nodes, need {size}")
        return np.asarray(scheme.tags[:length], dtype=float)
    raise SchemeError(f"unknown indexing scheme {scheme.variant!r}")


def _check_mesh(scheme: IndexingScheme, size: int):
    if scheme.variant != "tagged":
        return
    t = np.asarray(scheme.tags)
    mesh = max(t[0], 1.0 - t[-1], float(np.max(np.diff(t))) if len(t) > 1 else 0.0)
    if mesh > 2.0 / size:
        warnings.warn(f"tagged partition mesh {mesh:.4g} exceeds 2/(n+1) = "
                      f"{2.0 / size:.4g}; limit theorems need mesh -> 0")


@dataclass
class MatrixRealization:
    """A concrete complex matrix plus band/indexing metadata.

    Either `dense` (full array) or `diagonals` (map k -> k-th diagonal) is
    set, according to `storage`.  p..q is the nominal band range; banded
    storage has exactly zero entries outside it by construction.
    """

    m_rows: int
    n_cols: int
    storage: str
    dense: Optional[np.ndarray]
    diagonals: Optional[dict]
    p: int
    q: int
    scheme: Optional[IndexingScheme] = None
    source_label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return (self.m_rows, self.n_cols)

    @property
    def is_square(self) -> bool:
        return self.m_rows == self.n_cols

    def to_dense(self) -> np.ndarray:
        if self.storage == "dense":
            return self.dense
        if self.m_rows * self.n_cols > _DENSE_ENTRY_CAP:
            raise SizeCapError(f"{self.m_rows} x {self.n_cols} is too large to densify")
        out = np.zeros((self.m_rows, self.n_cols), dtype=np.complex128)
        for k, vals in self.diagonals.items():
            r = np.arange(len(vals))
            out[r + max(0, -k), r + max(0, k)] = vals
        return out

    def band_dict(self) -> dict:
        """All diagonals in p..q as a dict (zeros included), regardless of storage."""
        if self.storage == "banded":
            out = {}
            for k in range(self.p, self.q + 1):
                L = _diag_length(self.m_rows, self.n_cols, k)
                if L <= 0:
                    continue
                v = self.diagonals.get(k)
                out[k] = v.copy() if v is not None else np.zeros(L, dtype=np.complex128)
            return out
        return {k: np.diagonal(self.dense, offset=k).copy()
                for k in range(self.p, self.q + 1)
                if _diag_length(self.m_rows, self.n_cols, k) > 0}

    def is_hermitian_exact(self) -> bool:
        """Exact (bitwise) M == M*; used to route solvers."""
        if not self.is_square:
            return False
        if self.storage == "dense":
            return bool(np.array_equal(self.dense, self.dense.conj().T))
        for k in range(0, max(self.q, -self.p) + 1):
            a = self.diagonals.get(k)
            b = self.diagonals.get(-k)
            if a is None and b is None:
                continue
            L = _diag_length(self.m_rows, self.n_cols, k)
            a = a if a is not None else np.zeros(L, dtype=np.complex128)
            b = b if b is not None else np.zeros(L, dtype=np.complex128)
            if not np.array_equal(a, np.conj(b)):
                return False
        return True


def _diag_length(m_rows, n_cols, k):
    return max(0, min(m_rows - max(0, -k), n_cols - max(0, k)))


def _realize(m_rows, n_cols, diags, p, q, scheme, label, force_dense=False):
    bandwidth = q - p + 1
    if not force_dense and bandwidth <= max(m_rows, n_cols) / 4:
        return MatrixRealization(m_rows, n_cols, "banded", None, dict(diags),
                                 p, q, scheme, label)
    out = np.zeros((m_rows, n_cols), dtype=np.complex128)
    for k, vals in diags.items():
        r = np.arange(len(vals))
        out[r + max(0, -k), r + max(0, k)] = vals
    return MatrixRealization(m_rows, n_cols, "dense", out, None, p, q, scheme, label)


# ---------------------------------------------------------------------------
# builders


def build_kms(s: BandSymbol, n: int, scheme: IndexingScheme = MIDPOINT) -> MatrixRealization:
    """(n+1) x (n+1) matrix with entry (i, j) = a_{j-i}(xi_scheme)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    size = n + 1
    _check_mesh(scheme, size)
    diags = {}
    for k, fn in s.bands.items():
        L = _diag_length(size, size, k)
        if L <= 0:
            continue
        diags[k] = _call_band(fn, _xi(scheme, size, k, L))
    return _realize(size, size, diags, s.p, s.q, scheme, s.label)


def build_schrodinger(f: PiecewisePotential, n: int, eps: float = 1.0) -> MatrixRealization:
    """n x n tridiagonal: -1 off the diagonal, f((j-1+eps)/n) on it, j = 1..n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= eps <= 1.0:
        raise SchemeError(f"shift epsilon {eps} outside [0, 1]")
    xs = (np.arange(n) + eps) / n
    diag = np.asarray(f(xs), dtype=np.complex128)
    off = -np.ones(n - 1, dtype=np.complex128)
    label = getattr(f, "label", "") or "schrodinger"
    return _realize(n, n, {0: diag, 1: off.copy(), -1: off.copy()},
                    -1, 1, shifted(eps) if n >= 1 else None, label)


def build_rectangular(s: BandSymbol, m: int, n: int) -> MatrixRealization:
    """(m+1) x (n+1) midpoint realization, xi = (i+j)/(2 max(m,n) + 2)."""
    if m < 0 or n < 0:
        raise ValueError("m and n must be >= 0")
    m_rows, n_cols = m + 1, n + 1
    denom = 2.0 * max(m_rows, n_cols)
    diags = {}
    for k, fn in s.bands.items():
        L = _diag_length(m_rows, n_cols, k)
        if L <= 0:
            continue
        xs = (2.0 * np.arange(L) + abs(k)) / denom
        diags[k] = _call_band(fn, xs)
    return _realize(m_rows, n_cols, diags, s.p, s.q, MIDPOINT, s.label)


@dataclass(frozen=True)
class BlockBandSymbol:
    """Banded symbol whose coefficients are order x order matrices."""

    order: int
    bands: Mapping[int, Callable]

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("block order must be >= 1")
        object.__setattr__(self, "bands", dict(self.bands))


def build_block(A: BlockBandSymbol, n: int, scheme: IndexingScheme = MIDPOINT) -> MatrixRealization:
    """k(n+1) x k(n+1) matrix of k x k blocks A_{Q-P}(xi_scheme)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    size = n + 1
    d = A.order
    _check_mesh(scheme, size)
    out = np.zeros((d * size, d * size), dtype=np.complex128)
    p = q = 0
    for kb, fn in A.bands.items():
        L = _diag_length(size, size, kb)
        if L <= 0:
            continue
        p, q = min(p, kb * d - (d - 1)), max(q, kb * d + (d - 1))
        xs = _xi(scheme, size, kb, L)
        for r in range(L):
            B = np.asarray(fn(float(xs[r])), dtype=np.complex128)
            if B.shape != (d, d):
                raise ShapeError(f"block coefficient has shape {B.shape}, "
                                 f"expected {(d, d)}")
            P, Q = r + max(0, -kb), r + max(0, kb)
            out[P * d:(P + 1) * d, Q * d:(Q + 1) * d] = B
    return MatrixRealization(d * size, d * size, "dense", out, None, p, q,
                             scheme, f"block({d})")


def build_lame(n: int, rho: float) -> MatrixRealization:
    """n x n Lame recurrence matrix: b_{j,j-1} = 1 - mu_{j-2}/mu_n,
    b_{j,j+2} = j(j+1)/mu_n (1-based), mu_m = m(m-1+6 rho).

    Its symbol in the n -> infinity limit is (1-x^2) e^{-it} + x^2 e^{2it}.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if rho <= 0:
        raise ValueError("rho must be positive")
    mu = lambda m: m * (m - 1.0 + 6.0 * rho)
    mu_n = mu(float(n))
    sub = 1.0 - mu(np.arange(0, n - 1, dtype=float)) / mu_n
    j = np.arange(1, n - 1, dtype=float)
    sup2 = j * (j + 1.0) / mu_n
    return _realize(n, n, {-1: sub.astype(np.complex128),
                           2: sup2.astype(np.complex128)},
                    -1, 2, None, f"lame(n={n}, rho={rho})")


def apply_perturbation(M: MatrixRealization, pert: dict) -> MatrixRealization:
    """M + P for an entrywise-noise or low-rank perturbation spec.

    pert kinds: {"kind": "zero"}; {"kind": "noise", "magnitude": d, "seed": s,
    "hermitian": bool}; {"kind": "low_rank", "us": [...], "vs": [...]} adding
    sum_r outer(u_r, conj(v_r)).  The bound (entrywise or rank) lands in meta.
    """
    kind = pert.get("kind")
    if kind == "zero":
        return MatrixRealization(M.m_rows, M.n_cols, M.storage,
                                 None if M.dense is None else M.dense.copy(),
                                 None if M.diagonals is None else dict(M.diagonals),
                                 M.p, M.q, M.scheme, M.source_label,
                                 dict(M.meta, perturbation="zero"))
    dense = M.to_dense().copy()
    if kind == "noise":
        mag = float(pert["magnitude"])
        rng = np.random.default_rng(pert.get("seed"))
        r = mag * rng.random(dense.shape)
        theta = rng.uniform(0.0, 2.0 * np.pi, dense.shape)
        P = r * np.exp(1j * theta)
        if pert.get("hermitian"):
            P = 0.5 * (P + P.conj().T)
        meta = dict(M.meta, perturbation="noise", entry_bound=mag)
        return MatrixRealization(M.m_rows, M.n_cols, "dense", dense + P, None,
                                 -(M.m_rows - 1), M.n_cols - 1, M.scheme,
                                 M.source_label, meta)
    if kind == "low_rank":
        us = [np.asarray(u, dtype=np.complex128) for u in pert["us"]]
        vs = [np.asarray(v, dtype=np.complex128) for v in pert["vs"]]
        if len(us) != len(vs):
            raise ShapeError("need as many left as right vectors")
        norm_bound = 0.0
        for u, v in zip(us, vs):
            if u.shape != (M.m_rows,) or v.shape != (M.n_cols,):
                raise ShapeError(f"rank-one factors {u.shape}/{v.shape} do not "
                                 f"match {M.shape}")
            dense += np.outer(u, v.conj())
            norm_bound += float(np.linalg.norm(u) * np.linalg.norm(v))
        meta = dict(M.meta, perturbation="low_rank", rank=len(us),
                    norm_bound=norm_bound)
        return MatrixRealization(M.m_rows, M.n_cols, "dense", dense, None,
                                 -(M.m_rows - 1), M.n_cols - 1, M.scheme,
                                 M.source_label, meta)
    raise ValueError(f"unknown perturbation kind {kind!r}")


# ---------------------------------------------------------------------------
# plain-text dump (bit-exact round trip)


def dumps_matrix(M: MatrixRealization) -> str:
    """Header "kms-matrix m n p q scheme", then one "i j re im" line per
    in-band entry in row-major order.  Floats are shortest round-trip reprs."""
    token = M.scheme.token if M.scheme is not None else "none"
    lines = [f"kms-matrix {M.m_rows} {M.n_cols} {M.p} {M.q} {token}"]
    bands = M.band_dict()
    for i in range(M.m_rows):
        for j in range(max(0, i + M.p), min(M.n_cols, i + M.q + 1)):
            k = j - i
            vals = bands.get(k)
            if vals is None:
                continue
            v = vals[min(i, j)]
            lines.append(f"{i} {j} {float(v.real)!r} {float(v.imag)!r}")
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> MatrixRealization:
    lines = text.strip().splitlines()
    head = lines[0].split()
    if head[0] != "kms-matrix" or len(head) != 6:
        raise ValueError("not a kms-matrix dump")
    m_rows, n_cols, p, q = (int(v) for v in head[1:5])
    scheme = None if head[5] == "none" else parse_scheme(head[5])
    diags = {k: np.zeros(_diag_length(m_rows, n_cols, k), dtype=np.complex128)
             for k in range(p, q + 1) if _diag_length(m_rows, n_cols, k) > 0}
    for line in lines[1:]:
        si, sj, sre, sim = line.split()
        i, j = int(si), int(sj)
        diags[j - i][min(i, j)] = complex(float(sre), float(sim))
    return _realize(m_rows, n_cols, diags, p, q, scheme, "")


def dump_matrix(M: MatrixRealization, path):
    with open(path, "w") as fh:
        fh.write(dumps_matrix(M))


def load_matrix(path) -> MatrixRealization:
    with open(path) as fh:
        return loads_matrix(fh.read())
