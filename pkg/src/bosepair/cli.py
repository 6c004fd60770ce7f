"""Command-line driver.

Configuration is a flat ``key = value`` file; ``key=value`` arguments after
the subcommand override it.  Every run writes its CSV files plus a
``manifest.json`` into the output directory.

Exit codes: 0 ok, 2 configuration error, 3 solver error, 4 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import continuum as cont
from . import meanfield as mf
from .checks import CHECKS, format_table, run_checks
from .errors import (
    BasisTooLargeError,
    BosePairError,
    ConfigError,
    ContinuationStuckError,
    DomainError,
    InvalidParametersError,
    InvalidSectorError,
    InvalidSpectrumError,
)
from .fock import DEFAULT_BASIS_CAP, basis_dimension, build_hamiltonian, diagonalize, occupations_exact
from .model import LevelSpectrum, PairSector, equal_spacing_spectrum, read_spectrum
from .richardson import energy_from_roots, solve_state

log = logging.getLogger("bosepair")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4
SUBCOMMANDS = ("oracle", "richardson", "continuum", "meanfield", "verify")
TOL_RANGE = (1e-14, 1e-6)


def fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass
class RunConfig:
    subcommand: str
    L: int | None = None
    spectrum_file: str | None = None
    M: int | None = None
    nu: tuple[int, ...] | None = None
    rho: float = 1.0
    g_start: float = 1.0
    g_end: float | None = None
    points: int = 1
    scale: str = "linear"
    tol: float = 1e-11
    cap: int = DEFAULT_BASIS_CAP
    seed: int = 42
    out: str = "out"
    jobs: int = 1
    verify: bool = False
    dump_occupations: bool = False
    check_tolerances: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        g_end = self.g_start if self.g_end is None else self.g_end
        if not (self.g_start > 0 and g_end > 0):
            raise ConfigError("coupling sweep bounds must be positive")
        if self.points < 1:
            raise ConfigError("points must be >= 1")
        if self.scale not in ("linear", "log"):
            raise ConfigError("scale must be 'linear' or 'log'")
        if not TOL_RANGE[0] <= self.tol <= TOL_RANGE[1]:
            raise ConfigError(f"tol must lie in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}]")
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        unknown = set(self.check_tolerances) - set(CHECKS)
        if unknown:
            raise ConfigError(f"unknown check names: {sorted(unknown)}")

    def couplings(self) -> np.ndarray:
        g_end = self.g_start if self.g_end is None else self.g_end
        if self.points == 1:
            return np.array([self.g_start])
        if self.scale == "log":
            return np.geomspace(self.g_start, g_end, self.points)
        return np.linspace(self.g_start, g_end, self.points)

    def spectrum(self) -> LevelSpectrum:
        if self.spectrum_file:
            return read_spectrum(self.spectrum_file)
        if self.L is None:
            raise ConfigError("need either L or spectrum_file")
        return equal_spacing_spectrum(self.L)

    def sector(self, spectrum: LevelSpectrum) -> PairSector:
        if self.M is None:
            raise ConfigError("need the number of pairs M")
        return PairSector.for_spectrum(spectrum, self.M, self.nu)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items()}
        d["nu"] = list(self.nu) if self.nu is not None else None
        return d


_INT_KEYS = {"L", "M", "points", "cap", "seed", "jobs"}
_FLOAT_KEYS = {"rho", "g_start", "g_end", "tol"}
_STR_KEYS = {"spectrum_file", "scale", "out"}
_BOOL_KEYS = {"verify", "dump_occupations"}


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def apply_setting(cfg: RunConfig, key: str, value: str) -> None:
    key, value = key.strip(), value.strip()
    try:
        if key.startswith("check."):
            cfg.check_tolerances[key[len("check."):]] = float(value)
        elif key in _INT_KEYS:
            setattr(cfg, key, int(value))
        elif key in _FLOAT_KEYS:
            setattr(cfg, key, float(value))
        elif key in _STR_KEYS:
            setattr(cfg, key, value)
        elif key in _BOOL_KEYS:
            setattr(cfg, key, _parse_bool(value))
        elif key == "nu":
            cfg.nu = tuple(int(v) for v in value.replace(",", " ").split()) if value else None
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def parse_settings(lines, cfg: RunConfig, source: str = "<args>") -> None:
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        apply_setting(cfg, key, value)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bosepair", description="Exact and mean-field solvers for bosonic pairing.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("overrides", nargs="*", metavar="key=value")
    p.add_argument("--config", type=Path)
    p.add_argument("--jobs", type=int)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(args.subcommand)
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        parse_settings(text.splitlines(), cfg, str(args.config))
    parse_settings(args.overrides, cfg)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.verify:
        cfg.verify = True
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    return cfg


def _map(fn, items, jobs: int):
    # results always come back in grid order
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(cfg: RunConfig, outdir: Path, outputs: list[str], extra: dict | None = None) -> None:
    manifest = {
        "tool": "bosepair",
        "version": _version(),
        "subcommand": cfg.subcommand,
        "config": cfg.to_dict(),
        "tolerances": {"tol": cfg.tol, **{f"check.{k}": v for k, v in cfg.check_tolerances.items()}},
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _oracle_point(task):
    spectrum, sector, g_bare, cap = task
    H = build_hamiltonian(spectrum, sector, g_bare / spectrum.L, cap=cap)
    w, V = diagonalize(H)
    return w, occupations_exact(V[:, 0], H.basis, sector.nu_per_level)


def cmd_oracle(cfg: RunConfig, outdir: Path) -> int:
    sp = cfg.spectrum()
    sec = cfg.sector(sp)
    gs = cfg.couplings()
    results = _map(_oracle_point, [(sp, sec, g, cfg.cap) for g in gs], cfg.jobs)
    fh, w = _writer(outdir / "oracle_eigenvalues.csv")
    with fh:
        w.writerow(["g_bare", "index", "energy"])
        for g, (ev, _) in zip(gs, results):
            for k, e in enumerate(ev):
                w.writerow([fmt(g), k, fmt(e)])
    fh, w = _writer(outdir / "oracle_occupations.csv")
    with fh:
        w.writerow(["g_bare", "level", "epsilon", "occupation"])
        for g, (_, occ) in zip(gs, results):
            for a, (e, n) in enumerate(zip(sp.epsilon, occ)):
                w.writerow([fmt(g), a, fmt(e), fmt(n)])
    write_manifest(cfg, outdir, ["oracle_eigenvalues.csv", "oracle_occupations.csv"])
    print(f"ground energy at g_bare={fmt(gs[-1])}: {results[-1][0][0]:.6f}")
    return EXIT_OK


def _richardson_point(task):
    spectrum, sector, g_bare, tol, seed = task
    rs = solve_state(spectrum, sector, g_bare / spectrum.L, tol=tol, seed=seed)
    return rs.roots, rs.residual, energy_from_roots(rs, spectrum, sector)


def cmd_richardson(cfg: RunConfig, outdir: Path) -> int:
    sp = cfg.spectrum()
    sec = cfg.sector(sp)
    gs = cfg.couplings()
    results = _map(_richardson_point, [(sp, sec, g, cfg.tol, cfg.seed) for g in gs], cfg.jobs)
    oracle = None
    if cfg.verify:
        if basis_dimension(sp.L, sec.M) > cfg.cap:
            print("verify skipped: basis dimension above cap", file=sys.stderr)
        else:
            oracle = [r[0][0] for r in _map(_oracle_point, [(sp, sec, g, cfg.cap) for g in gs], cfg.jobs)]
    fh, w = _writer(outdir / "richardson_energy.csv")
    with fh:
        header = ["g_bare", "g_eff", "energy", "residual"]
        w.writerow(header + (["oracle_energy", "abs_diff"] if oracle is not None else []))
        for k, (g, (_, res, e)) in enumerate(zip(gs, results)):
            row = [fmt(g), fmt(g / sp.L), fmt(e), fmt(res)]
            if oracle is not None:
                row += [fmt(oracle[k]), fmt(abs(e - oracle[k]))]
            w.writerow(row)
    fh, w = _writer(outdir / "richardson_roots.csv")
    with fh:
        w.writerow(["g_bare", "root_index", "re_t", "im_t", "residual"])
        for g, (roots, res, _) in zip(gs, results):
            for i, t in enumerate(roots):
                w.writerow([fmt(g), i, fmt(t.real), fmt(t.imag), fmt(res)])
    extra = {}
    status = EXIT_OK
    if oracle is not None:
        worst = max(abs(r[2] - o) for r, o in zip(results, oracle))
        limit = cfg.check_tolerances.get("ground_energy_sweep", CHECKS["ground_energy_sweep"][1])
        extra["verify"] = {"max_abs_diff": worst, "tolerance": limit}
        print(f"verify: max |dE| = {worst:.3e} (tolerance {limit:.1e})")
        if not worst <= limit:
            status = EXIT_VERIFY
    write_manifest(cfg, outdir, ["richardson_energy.csv", "richardson_roots.csv"], extra)
    return status


def _continuum_point(task):
    g, rho = task
    return cont.solve_continuum(g, rho)


def cmd_continuum(cfg: RunConfig, outdir: Path) -> int:
    gs = cfg.couplings()
    sols = _map(_continuum_point, [(g, cfg.rho) for g in gs], cfg.jobs)
    gc = cont.critical_coupling(cfg.rho)
    fh, w = _writer(outdir / "continuum_sweep.csv")
    with fh:
        w.writerow(cont.SWEEP_COLUMNS + ["g_c"])
        for s in sols:
            row = [s.g_bare, s.rho, s.branch.value, s.b, s.mu, s.delta, s.gap, s.energy_per_level,
                   s.depletion_fraction, s.condensate_fraction, gc]
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    write_manifest(cfg, outdir, ["continuum_sweep.csv"])
    return EXIT_OK


def _meanfield_point(task):
    spectrum, N_b, g_bare = task
    g = g_bare / spectrum.L
    naive = mf.solve_naive_mf(spectrum, N_b, g)
    try:
        modified = mf.solve_modified_mf(spectrum, N_b, g)
    except BosePairError as exc:
        modified = exc
    return naive, modified


def cmd_meanfield(cfg: RunConfig, outdir: Path) -> int:
    sp = cfg.spectrum()
    N_b = cfg.sector(sp).N_b if cfg.M is not None else cfg.rho * sp.L
    gs = cfg.couplings()
    results = _map(_meanfield_point, [(sp, N_b, g) for g in gs], cfg.jobs)
    nan = float("nan")
    outputs = ["meanfield.csv"]
    fh, w = _writer(outdir / "meanfield.csv")
    with fh:
        w.writerow(["g", "scheme", "status", "mu", "delta", "energy", "N0"])
        for g, (naive, modified) in zip(gs, results):
            w.writerow([fmt(g), "naive", naive.status.value, fmt(naive.mu), fmt(naive.delta), fmt(naive.energy),
                        fmt(nan)])
            if isinstance(modified, Exception):
                w.writerow([fmt(g), "modified", type(modified).__name__, fmt(nan), fmt(nan), fmt(nan), fmt(nan)])
            else:
                w.writerow([fmt(g), "modified", modified.status.value, fmt(modified.mu), fmt(modified.delta),
                            fmt(modified.energy), fmt(modified.N0)])
    if cfg.dump_occupations:
        outputs.append("meanfield_occupations.csv")
        fh, w = _writer(outdir / "meanfield_occupations.csv")
        with fh:
            w.writerow(["g", "scheme", "level", "occupation"])
            for g, pair in zip(gs, results):
                for name, sol in zip(("naive", "modified"), pair):
                    if isinstance(sol, Exception) or sol.occupations is None:
                        continue
                    for a, n in enumerate(sol.occupations):
                        w.writerow([fmt(g), name, a, fmt(n)])
    write_manifest(cfg, outdir, outputs)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, outdir: Path) -> int:
    results = run_checks(cfg.check_tolerances, seed=cfg.seed)
    print(format_table(results))
    fh, w = _writer(outdir / "verify.csv")
    with fh:
        w.writerow(["check", "value", "tolerance", "passed"])
        for r in results:
            w.writerow([r.name, fmt(r.value), fmt(r.tol), int(r.passed)])
    failed = [r.name for r in results if not r.passed]
    write_manifest(cfg, outdir, ["verify.csv"], {"failed": failed})
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "oracle": cmd_oracle,
    "richardson": cmd_richardson,
    "continuum": cmd_continuum,
    "meanfield": cmd_meanfield,
    "verify": cmd_verify,
}

_CONFIG_ERRORS = (BasisTooLargeError, ConfigError, InvalidSpectrumError, InvalidSectorError, InvalidParametersError, DomainError)


def main(argv=None) -> int:
    args = build_parser().parse_intermixed_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[cfg.subcommand](cfg, outdir)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContinuationStuckError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BosePairError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
