"""Command-line front end.

``polaron verify <suite> ...`` runs identity checks and writes a JSON
report, ``polaron spectrum`` tabulates exact transfer-matrix spectra and
``polaron bethe`` compares Bethe-ansatz eigenvalues with exact ones.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for
configuration errors.  Reports are deterministic: the same configuration
and seed give byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bulk import DIAGONAL, NONDIAGONAL, PERIODIC, ModelParams, _cpair
from .report import SCHEMA, VerificationReport

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULT_PSI_MINUS = 0.4 + 0.2j
DEFAULT_PSI_PLUS = -0.7 + 0.1j
# coefficient of each parameter's own generator
DEFAULT_ODD = {"alpha_m": 0.3, "beta_m": -0.2 + 0.1j, "alpha_p": 0.5, "beta_p": 0.7}

TOL_ALGEBRAIC = 1e-12
TOL_FUSED = 1e-9
TOL_FINITE_DIFF = 1e-7


class ConfigError(ValueError):
    """Invalid user input; maps to exit code 2."""


# -- parsing ------------------------------------------------------------------

_PI_RE = re.compile(r"^\s*([+-]?[\d.]*)\s*\*?\s*pi\s*(?:/\s*([\d.]+))?\s*$")


def parse_complex(text) -> complex:
    """``0.3+0.1i``, ``0.3+0.1j``, ``[0.3, 0.1]``, ``pi/4`` or ``2pi/3``."""
    if isinstance(text, (list, tuple)):
        if len(text) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {text!r}")
        return complex(float(text[0]), float(text[1]))
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip()
    m = _PI_RE.match(s)
    if m:
        num = m.group(1)
        factor = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
        return complex(factor * np.pi / (float(m.group(2)) if m.group(2) else 1.0))
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def _odd_from_config(value, name):
    """A number (coefficient of the own generator) or a generator map."""
    if isinstance(value, dict):
        return {k: list(_cpair(parse_complex(v))) for k, v in value.items()}
    return parse_complex(value)


@dataclass
class RunConfig:
    """Everything a run depends on.

    Complex numbers are stored as Python complex; odd boundary parameters
    either as a complex coefficient of their own generator or as a
    generator-coefficient map.
    """

    N: int = 2
    eta: complex = 0.3 + 0.1j
    boundary: str | None = None
    psi_minus: complex = DEFAULT_PSI_MINUS
    psi_plus: complex = DEFAULT_PSI_PLUS
    odd: dict = field(default_factory=lambda: dict(DEFAULT_ODD))
    p: int | None = None
    n: int | None = None
    seed: int = 0
    tol: float | None = None
    samples: int | None = None
    out: str | None = None

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        cfg = cls()
        known = {f for f in cls.__dataclass_fields__} | set(DEFAULT_ODD)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in raw.items():
            if key in ("eta", "psi_minus", "psi_plus"):
                value = parse_complex(value)
            elif key in DEFAULT_ODD:
                cfg.odd[key] = _odd_from_config(value, key)
                continue
            elif key == "odd":
                cfg.odd.update({k: _odd_from_config(v, k) for k, v in value.items()})
                continue
            setattr(cfg, key, value)
        return cfg

    def model(self, default_boundary: str = PERIODIC) -> ModelParams:
        kind = self.boundary or default_boundary
        if not isinstance(self.N, int) or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        try:
            if kind == PERIODIC:
                return ModelParams.periodic(self.N, self.eta)
            odd = self.odd if kind == NONDIAGONAL else {k: 0.0 for k in DEFAULT_ODD}
            P = ModelParams.open(self.N, self.eta, self.psi_minus, self.psi_plus, **odd)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc)) from None
        if kind == NONDIAGONAL and P.is_diagonal:
            raise ConfigError("non-diagonal boundary requested with all odd parameters zero")
        return P

    def to_dict(self) -> dict:
        return {"N": self.N, "eta": _cpair(self.eta), "boundary": self.boundary,
                "psi_minus": _cpair(self.psi_minus), "psi_plus": _cpair(self.psi_plus),
                "odd": {k: v if isinstance(v, dict) else _cpair(v) for k, v in sorted(self.odd.items())},
                "p": self.p, "n": self.n, "seed": self.seed, "tol": self.tol, "samples": self.samples}


def _tol(cfg: RunConfig, default: float) -> float:
    return default if cfg.tol is None else float(cfg.tol)


def _kw(cfg: RunConfig, name: str = "n_samples") -> dict:
    return {} if cfg.samples is None else {name: int(cfg.samples)}


# -- suites -------------------------------------------------------------------

def _merge(suite: str, anchor: str, cfg: RunConfig, parts) -> VerificationReport:
    rep = VerificationReport(suite, anchor, params={"config": cfg.to_dict()})
    for part in parts:
        rep.extend(part, prefix=f"{part.suite}: ")
    return rep


def suite_rmatrix(cfg):
    from .bulk import check_r_properties
    from .boundary import check_conjugated_r
    return [check_r_properties(cfg.eta, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC), **_kw(cfg)),
            check_conjugated_r(cfg.eta, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC))]


def suite_reflection(cfg):
    from .boundary import check_reflection
    P = cfg.model(NONDIAGONAL)
    if not P.is_open:
        raise ConfigError("reflection needs an open boundary")
    return [check_reflection(P, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC), **_kw(cfg))]


def suite_commuting(cfg):
    from .boundary import check_commuting
    return [check_commuting(cfg.model(PERIODIC), seed=cfg.seed, tol=_tol(cfg, 1e-11), **_kw(cfg, "n_pairs"))]


def suite_hierarchy_pbc(cfg):
    from .fusion import check_fused_r, check_hierarchy_pbc
    top = 3 if cfg.n is None else int(cfg.n)
    return [check_fused_r(cfg.eta, levels=tuple(range(2, max(top, 1) + 2)), seed=cfg.seed,
                          tol=_tol(cfg, 1e-11)),
            check_hierarchy_pbc(cfg.N, cfg.eta, levels=tuple(range(0, top + 1)), seed=cfg.seed,
                                tol=_tol(cfg, 1e-10), **_kw(cfg))]


def suite_hierarchy_obc(cfg):
    from .fusion import check_fused_k, check_hierarchy_obc
    P = cfg.model(NONDIAGONAL)
    if not P.is_open:
        raise ConfigError("hierarchy-obc needs an open boundary")
    top = 3 if cfg.n is None else int(cfg.n)
    return [check_fused_k(P, levels=tuple(range(2, max(top, 1) + 2)), seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC)),
            check_hierarchy_obc(P, levels=tuple(range(1, top + 1)), seed=cfg.seed,
                                tol=_tol(cfg, TOL_FUSED), **_kw(cfg))]


def suite_truncation(cfg):
    from .fusion import check_truncation_k, check_truncation_obc, check_truncation_pbc, check_truncation_r
    if cfg.p is None and cfg.n is None:
        raise ConfigError("truncation needs --p (bulk) and/or --n (boundary level)")
    out = []
    if cfg.p is not None:
        if cfg.p < 1:
            raise ConfigError("--p must be >= 1")
        out.append(check_truncation_r(cfg.p, seed=cfg.seed, tol=_tol(cfg, 1e-11)))
        out.append(check_truncation_pbc(cfg.p, cfg.N, seed=cfg.seed, tol=_tol(cfg, 1e-10)))
    if cfg.n is not None or (cfg.boundary not in (None, PERIODIC)):
        n = cfg.n if cfg.n is not None else cfg.p + 1
        if n < 2:
            raise ConfigError("boundary truncation starts at --n 2")
        P = cfg.model(NONDIAGONAL)
        out.append(check_truncation_k(P, n, seed=cfg.seed, tol=_tol(cfg, TOL_FUSED)))
        out.append(check_truncation_obc(P, n, seed=cfg.seed, tol=_tol(cfg, TOL_FUSED)))
    return out


def suite_qdet(cfg):
    from .bethe import check_qdet_factorization
    from .boundary import check_sqd_obc
    from .bulk import check_sqd_pbc
    out = [check_sqd_pbc(cfg.N, cfg.eta, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC))]
    P = cfg.model(NONDIAGONAL)
    if P.is_open:
        out.append(check_sqd_obc(P, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC)))
        out.append(check_qdet_factorization(P, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC)))
    return out


def suite_properties_obc(cfg):
    from .boundary import check_obc_properties
    P = cfg.model(NONDIAGONAL)
    if not P.is_open:
        raise ConfigError("properties-obc needs an open boundary")
    return [check_obc_properties(P, seed=cfg.seed, tol=_tol(cfg, TOL_ALGEBRAIC), **_kw(cfg))]


def suite_hamiltonian(cfg):
    from .boundary import check_hamiltonian_obc
    from .bulk import check_h_log_derivative
    P = cfg.model(PERIODIC)
    if P.is_open:
        return [check_hamiltonian_obc(P, tol=_tol(cfg, TOL_FINITE_DIFF))]
    return [check_h_log_derivative(cfg.N, cfg.eta, tol=_tol(cfg, TOL_FINITE_DIFF))]


def suite_asymptotics(cfg):
    from .bethe import check_eigenvalue_asymptotics
    return [check_eigenvalue_asymptotics(cfg.model(PERIODIC), seed=cfg.seed, tol=_tol(cfg, TOL_FUSED))]


def suite_spectral(cfg):
    from .bethe import check_spectral_reproduction
    P = cfg.model(PERIODIC)
    if P.is_open and not P.is_diagonal:
        raise ConfigError("Bethe spectra are available for periodic and diagonal open chains")
    return [check_spectral_reproduction(P, seed=cfg.seed, tol=_tol(cfg, TOL_FINITE_DIFF))]


def suite_souls(cfg):
    from .bethe import check_soul_structure
    P = cfg.model(NONDIAGONAL)
    if not P.is_open:
        raise ConfigError("soul-structure needs an open boundary")
    return [check_soul_structure(P, seed=cfg.seed, tol=_tol(cfg, 1e-10))]


SUITES = {
    "rmatrix": (suite_rmatrix, "graded R-matrix properties and crossing conjugation"),
    "reflection": (suite_reflection, "reflection and dual reflection equations"),
    "commuting": (suite_commuting, "commuting family of transfer matrices"),
    "hierarchy-pbc": (suite_hierarchy_pbc, "periodic fusion hierarchy"),
    "hierarchy-obc": (suite_hierarchy_obc, "open fusion hierarchy"),
    "truncation": (suite_truncation, "root-of-unity truncation identities"),
    "qdet": (suite_qdet, "super quantum determinants and their factorisation"),
    "properties-obc": (suite_properties_obc, "open transfer matrix properties"),
    "hamiltonian": (suite_hamiltonian, "Hamiltonian from the transfer-matrix derivative"),
    "asymptotics": (suite_asymptotics, "leading asymptotics of eigenvalue functions"),
    "spectral": (suite_spectral, "Bethe ansatz spectra against exact diagonalisation"),
    "soul-structure": (suite_souls, "Grassmann structure of open eigenvalues"),
}


def run_suite(name: str, cfg: RunConfig) -> VerificationReport:
    try:
        fn, anchor = SUITES[name]
    except KeyError:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return _merge(name, anchor, cfg, fn(cfg))


def _run_suite_job(args):
    name, cfg = args
    return run_suite(name, cfg).to_dict()


def max_workers() -> int:
    """Worker cap from ``POLARON_THREADS`` (default 1: serial)."""
    raw = os.environ.get("POLARON_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"POLARON_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("POLARON_THREADS must be >= 1")
    return n


def run_suites(names, cfg: RunConfig) -> list[dict]:
    """Run suites, in parallel worker processes if ``POLARON_THREADS > 1``.

    Configuration errors are raised before any worker starts; reports are
    assembled in the order of ``names``.
    """
    for name in names:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    workers = min(max_workers(), len(names))
    if workers <= 1:
        return [run_suite(n, cfg).to_dict() for n in names]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_suite_job, [(n, cfg) for n in names]))


def render(docs: list[dict]) -> str:
    doc = docs[0] if len(docs) == 1 else {"schema": SCHEMA, "pass": all(d["pass"] for d in docs),
                                          "reports": docs}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- spectrum and bethe -----------------------------------------------------------

def _u_points(args, seed: int) -> list[complex]:
    if args.u:
        return [parse_complex(x) for x in args.u.split(",")]
    if args.u_grid:
        try:
            a, b, k = args.u_grid.split(":")
            return list(np.linspace(float(a), float(b), int(k)) + 1j * args.u_imag)
        except ValueError:
            raise ConfigError("--u-grid expects start:stop:count") from None
    rng = np.random.default_rng(seed)
    return list(rng.uniform(-1.0, 1.0, 5) + 1j * rng.uniform(-0.3, 0.3, 5))


def cmd_spectrum(cfg: RunConfig, args) -> tuple[int, str]:
    from .boundary import transfer_obc
    from .bulk import transfer_pbc
    from .spectrum import (diagonal_in_basis, eigen_grassmann, joint_basis, spectrum_csv,
                           state_labels)
    if cfg.N > 8:
        raise ConfigError("spectrum is limited to N <= 8")
    P = cfg.model(PERIODIC)
    us = _u_points(args, cfg.seed)
    mats = [transfer_obc(u, P) if P.is_open else transfer_pbc(u, P.N, P.eta) for u in us]
    basis = joint_basis(mats, seed=cfg.seed)
    lab = state_labels(basis, P.N)
    grassmann = args.souls or not P.is_diagonal
    if P.is_diagonal:
        labels = [f"M={m}" for m in lab["M"]]
    else:
        labels = [f"parity={'+' if p == 0 else '-'}" for p in lab["parity"]]
    values = []
    for m in mats:
        if grassmann:
            values.append(eigen_grassmann(m, basis).values)
        else:
            values.append(list(diagonal_in_basis(m, basis)[0]))
    if args.format == "csv":
        return EXIT_OK, spectrum_csv(us, values, labels)
    sizes = {}
    for l in labels:
        sizes[l] = sizes.get(l, 0) + 1

    def enc(v):
        if hasattr(v, "to_dict"):
            return {k: _cpair(c) for k, c in sorted(v.to_dict().items())}
        return _cpair(complex(v))

    doc = {"schema": SCHEMA, "params": P.to_dict(), "u": [_cpair(u) for u in us],
           "sectors": dict(sorted(sizes.items())),
           "states": [{"state": i, "label": labels[i], "values": [enc(values[a][i]) for a in range(len(us))]}
                      for i in range(len(labels))]}
    return EXIT_OK, json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_bethe(cfg: RunConfig, args) -> tuple[int, str]:
    from .bethe import NoConvergence, ed_eigenfunctions, lambda_tq, match_sector
    from .bulk import zeta
    P = cfg.model(PERIODIC)
    M = args.M
    if P.is_open and not P.is_diagonal:
        raise ConfigError("bethe supports periodic and diagonal open chains")
    limit = 6 if P.is_open else 8
    if not 0 <= M <= P.N <= limit:
        raise ConfigError(f"need 0 <= M <= N <= {limit}, got M={M}, N={P.N}")
    tol = _tol(cfg, 1e-8)
    rng = np.random.default_rng(cfg.seed)
    us = list(rng.uniform(-1.0, 1.0, 3) + 1j * rng.uniform(-0.3, 0.3, 3))
    u0 = parse_complex(args.u) if args.u else 0.31 + 0.17j
    polys, Ms = ed_eigenfunctions(P, seed=cfg.seed)
    sel = [p for p, m in zip(polys, Ms) if m == M]
    try:
        sm = match_sector(P, M, sel, us, tol=tol, seed=cfg.seed)
    except NoConvergence as exc:
        raise RuntimeError(f"Bethe solver failed: {exc}") from exc
    pf = zeta(u0, P.eta) ** P.N if P.is_open else 1.0
    rows = []
    for i, (p, s) in enumerate(zip(sel, sm.matched)):
        ed = complex(p(u0).body / pf)
        row = {"state": i, "M": M, "ed": _cpair(ed)}
        if s is None:
            row.update(roots=None, tq=None, deviation=None)
        else:
            tq = complex(lambda_tq(u0, s).body)
            row.update(roots=[_cpair(r) for r in s.roots], pairs=list(s.pairs), tq=_cpair(tq),
                       residual=float(f"{s.residual:.3e}"),
                       deviation=float(f"{abs(tq - ed) / max(1.0, abs(ed)):.3e}"))
        rows.append(row)
    ok = all(r["deviation"] is not None and r["deviation"] < tol for r in rows)
    if args.format == "json":
        doc = {"schema": SCHEMA, "params": P.to_dict(), "M": M, "u": _cpair(u0), "tolerance": tol,
               "pass": ok, "rows": rows}
        return (EXIT_OK if ok else EXIT_FAIL), json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = [f"# {P.boundary} N={P.N} M={M} eta={P.eta:.6g} u={u0:.6g}",
             f"{'state':>5} {'deviation':>10}  {'TQ eigenvalue':>30}  {'ED eigenvalue':>30}  roots"]
    for r in rows:
        fmt = lambda c: "-" if c is None else f"{c[0]:+.12f}{c[1]:+.12f}i"
        roots = "-" if r["roots"] is None else " ".join(fmt(x) for x in r["roots"]) + \
            "".join(f" [{k} pair]" for k in r.get("pairs", []))
        dev = "unpaired" if r["deviation"] is None else f"{r['deviation']:.2e}"
        lines.append(f"{r['state']:>5} {dev:>10}  {fmt(r['tq']):>30}  {fmt(r['ed']):>30}  {roots or '(vacuum)'}")
    return (EXIT_OK if ok else EXIT_FAIL), "\n".join(lines) + "\n"


# -- argument handling ---------------------------------------------------------------

def _add_model_args(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="JSON run configuration; command-line flags override it")
    ap.add_argument("--N", type=int, help="number of sites")
    ap.add_argument("--eta", help="anisotropy, e.g. 0.3+0.1i or pi/4")
    g = ap.add_mutually_exclusive_group()
    g.add_argument("--periodic", dest="boundary", action="store_const", const=PERIODIC)
    g.add_argument("--diagonal", dest="boundary", action="store_const", const=DIAGONAL)
    g.add_argument("--nondiagonal", dest="boundary", action="store_const", const=NONDIAGONAL)
    ap.add_argument("--psi-minus", help="boundary parameter psi_-")
    ap.add_argument("--psi-plus", help="boundary parameter psi_+")
    for name in DEFAULT_ODD:
        ap.add_argument(f"--{name.replace('_', '-')}", dest=name,
                        help=f"coefficient of the {name} generator")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float, help="override the default tolerance")
    ap.add_argument("--out", help="write the output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polaron", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suites", nargs="+", metavar="suite", help=f"one or more of: {', '.join(SUITES)}")
    lv = v.add_mutually_exclusive_group()
    lv.add_argument("--p", type=int, help="root of unity eta_p = pi/(2(p+1)) (truncation)")
    lv.add_argument("--n", type=int, help="fusion level")
    v.add_argument("--samples", type=int, help="number of random samples per check")
    _add_model_args(v)

    s = sub.add_parser("spectrum", help="exact transfer-matrix spectra")
    s.add_argument("--u", help="comma-separated spectral parameters")
    s.add_argument("--u-grid", help="start:stop:count on a horizontal line")
    s.add_argument("--u-imag", type=float, default=0.1, help="imaginary part for --u-grid")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--souls", action="store_true", help="Grassmann soul columns even for scalar chains")
    _add_model_args(s)

    b = sub.add_parser("bethe", help="Bethe roots against exact diagonalisation")
    b.add_argument("--M", type=int, required=True, help="particle number")
    b.add_argument("--u", help="spectral parameter for the eigenvalue table")
    b.add_argument("--format", choices=("table", "json"), default="table")
    _add_model_args(b)
    return ap


def config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = RunConfig.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    over = {}
    for key in ("N", "seed", "tol", "out", "boundary"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    for key in ("p", "n", "samples"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    for key in ("eta", "psi_minus", "psi_plus"):
        if getattr(args, key, None) is not None:
            over[key] = parse_complex(getattr(args, key))
    cfg = replace(cfg, **over)
    odd = dict(cfg.odd)
    for name in DEFAULT_ODD:
        if getattr(args, name, None) is not None:
            odd[name] = parse_complex(getattr(args, name))
    cfg = replace(cfg, odd=odd)
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if cfg.tol is not None and not cfg.tol > 0:
        raise ConfigError("tolerance must be positive")
    cfg.model(PERIODIC if cfg.boundary is None else cfg.boundary)  # validate early
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "verify":
            docs = run_suites(args.suites, cfg)
            text = render(docs)
            code = EXIT_OK if all(d["pass"] for d in docs) else EXIT_FAIL
            if cfg.out:
                _emit(text, cfg.out)
                for d in docs:
                    status = "PASS" if d["pass"] else "FAIL"
                    print(f"[{status}] {d['suite']}: {sum(c['pass'] for c in d['checks'])}/{len(d['checks'])} checks")
            else:
                _emit(text, None)
            return code
        if args.command == "spectrum":
            code, text = cmd_spectrum(cfg, args)
        else:
            code, text = cmd_bethe(cfg, args)
        _emit(text, cfg.out)
        return code
    except ConfigError as exc:
        print(f"polaron: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
