"""Experiment runner: declarative TOML configs -> CSV/JSON plot data.

Config layout (TOML)::

    experiment = "kac"              # lsd | svd | cluster | det-ratio | kac
                                    #   | kac-jump | widom | es-vs-ms
    n_list = [500, 1000]
    scheme = "shifted:0.5"          # midpoint | min | max | row | shifted:E
    phi = "z"

    [symbol]
    preset = "schrodinger"          # or a [[symbol.bands]] list
    f = "3.5 + x^2"

    [numerics]                      # all optional
    K = 64
    N_x = 129
    N_t = 1024
    resolution = 256
    epsilon = 0.1                   # cluster radius (cluster experiment)
    aspect = 1                      # row/column ratio (svd experiment)

    [numerics.tolerances]           # optional; enables the PASS/FAIL line
    abs_err = 1e-3                  # max over rows
    final_abs_err = 1e-6            # last row only

    [output]
    path = "out/kac.csv"
    format = "csv"                  # csv | json

Prediction experiments emit rows "n,observed,predicted,abs_err"; spectrum
dumps use "index,re,im" (eigenvalues) or "index,sigma" (singular values).
Output is deterministic for a fixed config: reruns are byte-identical.

The observed column reports the real part; abs_err is computed from the
full complex value, so any imaginary residual still counts as error.

Exit codes: 0 all configured tolerances met, 1 tolerance failure,
2 usage/config error (also any domain or solver error, reported with the n
at which it occurred).  KMS_THREADS caps the per-n parallelism.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

try:
    import tomllib
except ImportError:  # pragma: no cover - py3.10 fallback
    import tomli as tomllib

from . import asymptotics, matgen, presets, spectra, symbol as sym
from ._expr import compile_expr, parse_potential
from .errors import ConfigError, KmsError

EXPERIMENTS = ("lsd", "svd", "cluster", "det-ratio", "kac", "kac-jump",
               "widom", "es-vs-ms")
_PRESET_PARAMS = {
    "schrodinger": ("f",),
    "lame": ("rho",),
    "star": (),
    "cluster-demo": (),
    "es-family": ("c",),
}


@dataclass(frozen=True)
class SymbolSpec:
    """Either a named preset with parameters or an explicit band list."""

    preset: str = ""
    params: tuple = ()          # sorted (name, value) pairs
    bands: tuple = ()           # sorted (k, expr-string) pairs

    def param(self, name, default=None):
        for key, value in self.params:
            if key == name:
                return value
        return default


@dataclass(frozen=True)
class NumericsSpec:
    K: int = 64
    N_x: int = 129
    N_t: int = 1024
    resolution: int = 256
    epsilon: float = 0.1
    aspect: int = 1
    tolerances: tuple = ()      # sorted (name, bound) pairs


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    symbol: SymbolSpec
    n_list: tuple
    scheme: str = "midpoint"
    phi: str = "z"
    numerics: NumericsSpec = field(default_factory=NumericsSpec)
    output_path: str = ""
    output_format: str = "csv"


def _require(condition, message):
    if not condition:
        raise ConfigError(message)


def _symbol_spec(tab) -> SymbolSpec:
    _require(isinstance(tab, dict), "[symbol] must be a table")
    if "preset" in tab:
        name = tab["preset"]
        _require(name in _PRESET_PARAMS, f"unknown preset {name!r}")
        allowed = _PRESET_PARAMS[name]
        params = []
        for key, value in tab.items():
            if key == "preset":
                continue
            _require(key in allowed,
                     f"preset {name!r} does not take parameter {key!r}")
            if key == "f":
                _require(isinstance(value, str),
                         "schrodinger parameter f must be an expression string")
                parse_potential(value)  # validate now, rebuild lazily
                params.append((key, value))
            else:
                _require(isinstance(value, (int, float))
                         and not isinstance(value, bool),
                         f"preset parameter {key!r} must be a number")
                params.append((key, float(value)))
        _require(name != "schrodinger" or any(k == "f" for k, _ in params),
                 "preset 'schrodinger' requires parameter f")
        _require(name != "lame" or any(k == "rho" for k, _ in params),
                 "preset 'lame' requires parameter rho")
        return SymbolSpec(preset=name, params=tuple(sorted(params)))
    if "bands" in tab:
        raw = tab["bands"]
        _require(isinstance(raw, list) and raw, "symbol.bands must be a "
                 "nonempty array of {k, expr} tables")
        bands = []
        for i, entry in enumerate(raw):
            _require(isinstance(entry, dict)
                     and set(entry) == {"k", "expr"},
                     f"symbol.bands[{i}] must have exactly the keys k, expr")
            _require(isinstance(entry["k"], int),
                     f"symbol.bands[{i}].k must be an integer")
            _require(isinstance(entry["expr"], str),
                     f"symbol.bands[{i}].expr must be a string")
            compile_expr(entry["expr"])  # validate; rebuilt in _resolve
            bands.append((entry["k"], entry["expr"]))
        ks = [k for k, _ in bands]
        _require(len(set(ks)) == len(ks), "symbol.bands has duplicate k")
        return SymbolSpec(bands=tuple(sorted(bands)))
    raise ConfigError("[symbol] needs either preset = ... or a bands list")


def _numerics_spec(tab) -> NumericsSpec:
    _require(isinstance(tab, dict), "[numerics] must be a table")
    spec = NumericsSpec()
    ints = {"K", "N_x", "N_t", "resolution", "aspect"}
    for key, value in tab.items():
        if key in ints:
            _require(isinstance(value, int) and value > 0,
                     f"numerics.{key} must be a positive integer")
            spec = replace(spec, **{key: value})
        elif key == "epsilon":
            _require(isinstance(value, (int, float)) and value > 0,
                     "numerics.epsilon must be positive")
            spec = replace(spec, epsilon=float(value))
        elif key == "tolerances":
            _require(isinstance(value, dict), "tolerances must be a table")
            tols = []
            for name, bound in value.items():
                _require(name in ("abs_err", "final_abs_err"),
                         f"unknown tolerance {name!r}")
                _require(isinstance(bound, (int, float)) and bound > 0,
                         f"tolerance {name!r} must be positive")
                tols.append((name, float(bound)))
            spec = replace(spec, tolerances=tuple(sorted(tols)))
        else:
            raise ConfigError(f"unknown numerics key {key!r}")
    return spec


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate TOML config text; fills documented defaults."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc

    known = {"experiment", "symbol", "n_list", "scheme", "phi", "numerics",
             "output"}
    for key in data:
        _require(key in known, f"unknown config key {key!r}")

    experiment = data.get("experiment")
    _require(experiment in EXPERIMENTS,
             f"experiment must be one of {', '.join(EXPERIMENTS)}")

    _require("symbol" in data, "missing [symbol] table")
    spec = _symbol_spec(data["symbol"])

    raw_ns = data.get("n_list")
    _require(isinstance(raw_ns, list) and raw_ns, "n_list must be a nonempty "
             "array of integers")
    _require(all(isinstance(n, int) for n in raw_ns),
             "n_list entries must be integers")
    _require(all(n >= 1 for n in raw_ns), "n_list entries must be >= 1")
    _require(all(a < b for a, b in zip(raw_ns, raw_ns[1:])),
             "n_list must be strictly increasing")

    scheme_token = data.get("scheme", "midpoint")
    scheme_token = matgen.parse_scheme(scheme_token).token  # canonical form

    phi_text = data.get("phi", "z")
    phi = spectra.TestFunction.from_id(phi_text).identifier

    numerics = _numerics_spec(data.get("numerics", {}))

    out = data.get("output", {})
    _require(isinstance(out, dict), "[output] must be a table")
    _require(set(out) <= {"path", "format"},
             "[output] takes only path and format")
    path = out.get("path", f"{experiment}.csv")
    fmt = out.get("format", "csv")
    _require(fmt in ("csv", "json"), "output.format must be csv or json")

    return ExperimentConfig(experiment=experiment, symbol=spec,
                            n_list=tuple(raw_ns), scheme=scheme_token,
                            phi=phi, numerics=numerics,
                            output_path=str(path), output_format=fmt)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        raise ConfigError("booleans do not occur in configs")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return json.dumps(v)  # TOML basic strings accept JSON escaping


def render(cfg: ExperimentConfig) -> str:
    """Canonical TOML text; parse_config(render(cfg)) == cfg."""
    lines = [f"experiment = {_toml_value(cfg.experiment)}",
             f"n_list = [{', '.join(str(n) for n in cfg.n_list)}]",
             f"scheme = {_toml_value(cfg.scheme)}",
             f"phi = {_toml_value(cfg.phi)}",
             "",
             "[symbol]"]
    if cfg.symbol.preset:
        lines.append(f"preset = {_toml_value(cfg.symbol.preset)}")
        for key, value in cfg.symbol.params:
            lines.append(f"{key} = {_toml_value(value)}")
    else:
        lines.pop()  # bands use array-of-tables syntax instead
        for k, expr in cfg.symbol.bands:
            lines += ["[[symbol.bands]]", f"k = {k}",
                      f"expr = {_toml_value(expr)}"]
    num = cfg.numerics
    lines += ["", "[numerics]",
              f"K = {num.K}", f"N_x = {num.N_x}", f"N_t = {num.N_t}",
              f"resolution = {num.resolution}",
              f"epsilon = {_toml_value(num.epsilon)}",
              f"aspect = {num.aspect}"]
    if num.tolerances:
        lines += ["", "[numerics.tolerances]"]
        lines += [f"{name} = {_toml_value(bound)}"
                  for name, bound in num.tolerances]
    lines += ["", "[output]",
              f"path = {_toml_value(cfg.output_path)}",
              f"format = {_toml_value(cfg.output_format)}"]
    return "\n".join(lines) + "\n"


# --- symbol resolution -----------------------------------------------------

@dataclass(frozen=True)
class _Resolved:
    symbol: Optional[sym.BandSymbol]
    potential: Optional[sym.PiecewisePotential]
    build: object                 # n -> MatrixRealization
    eps: float                    # shift parameter, from a shifted scheme


def _resolve(cfg: ExperimentConfig) -> _Resolved:
    scheme = matgen.parse_scheme(cfg.scheme)
    eps = scheme.epsilon if scheme.variant == "shifted" else 1.0
    spec = cfg.symbol
    if spec.preset == "schrodinger":
        f = parse_potential(spec.param("f"))
        s = presets.schrodinger_symbol(f)
        if scheme.variant == "shifted":
            build = lambda n: matgen.build_schrodinger(f, n, eps)
        else:
            build = lambda n: matgen.build_kms(s, n, scheme)
        return _Resolved(s, f, build, eps)
    if spec.preset == "lame":
        rho = float(spec.param("rho"))
        return _Resolved(presets.lame_symbol(), None,
                         lambda n: matgen.build_lame(n, rho), eps)
    if spec.preset == "star":
        s = presets.star_symbol()
    elif spec.preset == "cluster-demo":
        s = presets.cluster_symbol()
    elif spec.preset == "es-family":
        s = presets.es_family_symbol(float(spec.param("c", 1.2)))
    else:
        s = sym.BandSymbol(bands={k: compile_expr(expr)
                                  for k, expr in spec.bands})
    return _Resolved(s, None, lambda n: matgen.build_kms(s, n, scheme), eps)


# --- experiment bodies -----------------------------------------------------
#
# Each returns (rows, aux) with rows = [(n, observed, predicted), ...]
# (observed may be complex) and aux = {suffix: (header, rows)} for extra
# spectrum/curve files.

def _pmap(fn, ns):
    def run(n):
        try:
            return fn(n)
        except KmsError as exc:
            raise KmsError(f"at n={n}: {exc}") from exc

    workers = max(1, int(os.environ.get("KMS_THREADS", "1") or "1"))
    if workers == 1 or len(ns) <= 1:
        return [run(n) for n in ns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, ns))


def _need_symbol(rs: _Resolved) -> sym.BandSymbol:
    if rs.symbol is None:
        raise ConfigError("this experiment needs a band symbol")
    return rs.symbol


def _need_potential(rs: _Resolved) -> sym.PiecewisePotential:
    if rs.potential is None:
        raise ConfigError("this experiment needs the schrodinger preset")
    return rs.potential


def _curve_rows(s, num):
    rows = []
    ts = np.linspace(0.0, 2.0 * np.pi, num.resolution, endpoint=False)
    grid = sym.eval_symbol_grid(s, np.linspace(0.0, 1.0, 11), ts)
    for i, v in enumerate(grid.ravel()):
        rows.append((i, float(v.real), float(v.imag)))
    return "index,re,im", rows


def _spectrum_rows(summary):
    if summary.kind == "singular_values":
        return "index,sigma", [(i, float(v))
                               for i, v in enumerate(summary.values)]
    vals = np.asarray(summary.values, dtype=complex)
    return "index,re,im", [(i, float(v.real), float(v.imag))
                           for i, v in enumerate(vals)]


def _exp_lsd(cfg, rs):
    s = _need_symbol(rs)
    phi = spectra.TestFunction.from_id(cfg.phi)
    num = cfg.numerics
    pred = spectra.lsd_integral(s, phi, N_x=num.N_x, N_t=num.N_t)
    summaries = _pmap(lambda n: spectra.eigenvalues(rs.build(n)), cfg.n_list)
    rows = [(n, spectra.empirical_mean(S, phi), pred)
            for n, S in zip(cfg.n_list, summaries)]
    aux = {"spectrum": _spectrum_rows(summaries[-1]),
           "curve": _curve_rows(s, num)}
    return rows, aux


def _exp_svd(cfg, rs):
    s = _need_symbol(rs)
    phi = spectra.TestFunction.from_id(cfg.phi)
    num = cfg.numerics
    if phi.kind == "monomial" and phi.q == 0:
        ref_phi = spectra.TestFunction.abs_power(phi.p)
    elif phi.kind == "abs":
        ref_phi = phi
    else:
        raise ConfigError("svd needs phi = z^p or abs^p")
    pred = spectra.lsd_integral(s, ref_phi, N_x=num.N_x, N_t=num.N_t)
    summaries = _pmap(
        lambda n: spectra.singular_values(
            matgen.build_rectangular(s, num.aspect * n, n)),
        cfg.n_list)
    rows = [(n, spectra.empirical_mean(S, phi), pred)
            for n, S in zip(cfg.n_list, summaries)]
    return rows, {"singular": _spectrum_rows(summaries[-1])}


def _exp_cluster(cfg, rs):
    s = _need_symbol(rs)
    num = cfg.numerics
    region = sym.extended_range(s, N_x=num.N_x, N_t=num.N_t,
                                resolution=num.resolution)
    fractions = _pmap(
        lambda n: spectra.cluster_fraction(
            spectra.eigenvalues(rs.build(n)), region, num.epsilon),
        cfg.n_list)
    return [(n, frac, 1.0) for n, frac in zip(cfg.n_list, fractions)], {}


def _exp_det_ratio(cfg, rs):
    s = _need_symbol(rs)
    num = cfg.numerics
    C = sym.szego_constants(s, K=num.K, N_x=num.N_x, N_t=num.N_t)
    pred = asymptotics.ms_limit(C)

    def one(n):
        M = rs.build(n)
        return asymptotics.det_ratio(M, C.G, M.m_rows)

    ratios = _pmap(one, cfg.n_list)
    return [(n, r, pred) for n, r in zip(cfg.n_list, ratios)], {}


def _exp_kac(cfg, rs):
    f = _need_potential(rs)
    pred = asymptotics.kac_limit(f, rs.eps).value
    obs = asymptotics.kac_det_ratio_sweep(f, rs.eps, cfg.n_list)
    return [(n, float(v), pred) for n, v in zip(cfg.n_list, obs)], {}


def _exp_kac_jump(cfg, rs):
    f = _need_potential(rs)
    pred = asymptotics.kac_jump_prediction(f)
    obs = asymptotics.kac_det_ratio_sweep(f, 1.0, cfg.n_list)
    return [(n, float(v), float(pred.predictor(n)))
            for n, v in zip(cfg.n_list, obs)], {}


def _exp_widom(cfg, rs):
    s = _need_symbol(rs)
    phi = spectra.TestFunction.from_id(cfg.phi)
    num = cfg.numerics
    pred = asymptotics.widom_correction(s, phi, K=num.K)
    lsd = spectra.lsd_integral(s, phi, N_x=num.N_x, N_t=num.N_t)

    def one(n):
        M = rs.build(n)
        if phi.kind == "monomial" and phi.q == 0:
            trace_mean = spectra.moment_trace(M, phi.p, 0)
        elif phi.kind == "log":
            ld = asymptotics.log_det(M)
            trace_mean = (ld.log_abs + 1j * ld.phase) / M.m_rows
        else:
            raise ConfigError("widom needs an analytic phi (z^p or log)")
        return M.m_rows * (trace_mean - lsd)

    corrections = _pmap(one, cfg.n_list)
    return [(n, c, pred) for n, c in zip(cfg.n_list, corrections)], {}


def _exp_es_vs_ms(cfg, rs):
    s = _need_symbol(rs)
    num = cfg.numerics
    C = sym.szego_constants(s, K=num.K, N_x=num.N_x, N_t=num.N_t)
    pred = asymptotics.es_limit(C) / asymptotics.ms_limit(C)

    def one(n):
        ld_row = asymptotics.log_det(matgen.build_kms(s, n, matgen.ROW_INDEX))
        ld_mid = asymptotics.log_det(matgen.build_kms(s, n, matgen.MIDPOINT))
        return np.exp(ld_row.log_abs - ld_mid.log_abs
                      + 1j * (ld_row.phase - ld_mid.phase))

    ratios = _pmap(one, cfg.n_list)
    return [(n, r, pred) for n, r in zip(cfg.n_list, ratios)], {}


_BODIES = {
    "lsd": _exp_lsd,
    "svd": _exp_svd,
    "cluster": _exp_cluster,
    "det-ratio": _exp_det_ratio,
    "kac": _exp_kac,
    "kac-jump": _exp_kac_jump,
    "widom": _exp_widom,
    "es-vs-ms": _exp_es_vs_ms,
}


# --- output ----------------------------------------------------------------

def _fmt(v) -> str:
    c = complex(v)
    if c.imag == 0.0:
        return repr(float(c.real))
    return repr(c)


def _finish_rows(raw_rows):
    """Attach abs_err; observed keeps only its real part in the table."""
    rows = []
    for n, obs, pred in raw_rows:
        err = abs(complex(obs) - complex(pred))
        rows.append((int(n), complex(obs).real, complex(pred).real,
                     float(err)))
    return rows


def _write_text(path, text):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _emit(cfg, out_path, rows, aux):
    base, _ = os.path.splitext(out_path)
    written = [out_path]
    if cfg.output_format == "csv":
        lines = ["n,observed,predicted,abs_err"]
        lines += [",".join((str(n), _fmt(o), _fmt(p), _fmt(e)))
                  for n, o, p, e in rows]
        _write_text(out_path, "\n".join(lines) + "\n")
        for suffix, (header, arows) in sorted(aux.items()):
            lines = [header]
            lines += [",".join(_fmt(v) if isinstance(v, float) else str(v)
                               for v in row) for row in arows]
            side = f"{base}-{suffix}.csv"
            _write_text(side, "\n".join(lines) + "\n")
            written.append(side)
    else:
        doc = {"experiment": cfg.experiment,
               "header": ["n", "observed", "predicted", "abs_err"],
               "rows": [list(r) for r in rows],
               "aux": {suffix: {"header": header.split(","),
                                "rows": [list(r) for r in arows]}
                       for suffix, (header, arows) in sorted(aux.items())}}
        _write_text(out_path, json.dumps(doc, sort_keys=True, indent=2)
                    + "\n")
    return written


def _dump_matrices(cfg, rs, base):
    written = []
    for n in cfg.n_list:
        path = f"{base}-matrix-n{n}.txt"
        matgen.dump_matrix(rs.build(n), path)
        written.append(path)
    return written


def run_experiment(cfg: ExperimentConfig, out_path: Optional[str] = None,
                   dump: bool = False) -> int:
    """Execute cfg, write outputs, print the one-line summary.

    Returns the process exit code: 0 (tolerances met or none configured)
    or 1 (a configured tolerance failed).
    """
    rs = _resolve(cfg)
    out = out_path or cfg.output_path
    try:
        raw, aux = _BODIES[cfg.experiment](cfg, rs)
        rows = _finish_rows(raw)
        written = _emit(cfg, out, rows, aux)
        if dump:
            written += _dump_matrices(cfg, rs, os.path.splitext(out)[0])
    except KmsError as exc:
        raise KmsError(f"{cfg.experiment} failed: {exc}") from exc

    if not cfg.numerics.tolerances:
        print(f"DONE {cfg.experiment}: wrote {', '.join(written)}")
        return 0
    checks = []
    for name, bound in cfg.numerics.tolerances:
        value = rows[-1][3] if name == "final_abs_err" else \
            max(r[3] for r in rows)
        checks.append((name, value, bound, value <= bound))
    if all(ok for *_, ok in checks):
        detail = "; ".join(f"{name} {value:.6g} <= {bound:.6g}"
                           for name, value, bound, _ in checks)
        print(f"PASS {cfg.experiment}: {detail}")
        return 0
    detail = "; ".join(f"{name} {value:.6g} > {bound:.6g}"
                       for name, value, bound, ok in checks if not ok)
    print(f"FAIL {cfg.experiment}: {detail}")
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kms", description="Run a matrix-family experiment from a "
        "TOML config.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, metavar="PATH")
    parser.add_argument("--out", metavar="PATH", default=None)
    parser.add_argument("--dump", action="store_true",
                        help="also write matrix dumps per n")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized studies (reserved; current "
                        "experiments are deterministic)")
    args = parser.parse_args(argv)

    if args.seed is not None:
        np.random.seed(args.seed)

    try:
        with open(args.config, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = parse_config(text)
        if cfg.experiment != args.experiment:
            raise ConfigError(
                f"config is for {cfg.experiment!r}, not {args.experiment!r}")
        return run_experiment(cfg, out_path=args.out, dump=args.dump)
    except KmsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
