"""Command-line front end emitting deterministic CSV.

Subcommands: evolve, sweep-max, spectrum, pt-phase, fig.  Every flag may also
be given in a ``key=value`` file passed with ``--config``; flags win.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import entanglement as ent
from ._linalg import ConvergenceError
from .analytic import evolve_fields
from .core import (
    ConstraintViolation,
    InitialCondition,
    InitKind,
    InvalidState,
    Params,
    initial_xstate,
    make_params,
    xstate_to_density,
)
from .oracle import LindbladGenerator, StepTooLarge, integrate
from .spectral import liouvillian_spectrum, propagator_spectral_radius, pt_phase

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

ORACLE_DT = 1e-3
FIG_IDS = ("1a", "1b", "2a", "2b", "3", "4", "5a", "5b", "6a", "6b", "7a", "7b")

# artifact defaults for curves the figures label only graphically
DEFAULT_GAMMAS = {
    "1": (0.1, 0.3, 1.0, 3.0, 10.0),
    "2": (0.1, 0.3, 1.0, 3.0, 10.0),
    "3": (0.5, 1.0, 2.0, 5.0),
    "4": (0.2, 0.5, 1.02, 2.0, 5.0),
}
DEFAULT_ALPHAS = (1.0, 0.75, 0.5, 0.25, 0.1)
DEFAULT_SWEEP = (0.2, 5.0, 241)
DEFAULT_PT_GRID = (0.0, 2.0, 21)


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    count: int

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = str(text).split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:count, got {text!r}")
        count = int(parts[2])
        if count < 1:
            raise UsageError("grid count must be positive")
        return cls(float(parts[0]), float(parts[1]), count)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    command: str
    init: InitialCondition = InitialCondition(InitKind.EXCITED_10)
    gamma: float = 1.0
    kappa: str = "gamma"
    alphas: tuple[float, ...] = (1.0,)
    tau_max: float = 10.0
    dt_sample: float = 0.02
    grid: Grid | None = None
    fig_id: str | None = None
    out_path: str | None = None
    oracle_check: bool = False
    gammas: tuple[float, ...] | None = None
    gnuplot: bool = False

    def kappa_for(self, gamma: float) -> float:
        """``kappa`` may be a number or track gamma as ``gamma`` / ``-gamma``."""
        if self.kappa == "gamma":
            return gamma
        if self.kappa == "-gamma":
            return -gamma
        return float(self.kappa)

    def params(self) -> Params:
        return make_params(self.gamma, self.kappa_for(self.gamma))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if v == 0.0:
        return "0"
    return f"{v:.12g}"


@dataclass
class CsvTable:
    header: list[str]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *row) -> None:
        if len(row) != len(self.header):
            raise ValueError(f"row of {len(row)} cells for {len(self.header)} columns")
        self.rows.append(tuple(row))

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def render(self) -> str:
        lines = [",".join(self.header)]
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--init", choices=[k.value for k in InitKind])
    common.add_argument("--alpha", help="weight of |10> in the mixed start; comma list for sweeps")
    common.add_argument("--gamma", type=float)
    common.add_argument("--kappa", help="number, 'gamma' or '-gamma'")
    common.add_argument("--tau-max", type=float)
    common.add_argument("--dt-sample", type=float)
    common.add_argument("--grid", help="start:stop:count")
    common.add_argument("--fig", choices=FIG_IDS)
    common.add_argument("--gammas", help="comma list of gamma curves for fig 1-4")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--oracle-check", action="store_const", const=True)
    common.add_argument("--gnuplot", action="store_const", const=True, help="also write <out>.gp")

    parser = argparse.ArgumentParser(prog="qep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evolve", parents=[common], help="sample one trajectory")
    sub.add_parser("sweep-max", parents=[common], help="first concurrence maximum over a gamma grid")
    sub.add_parser("spectrum", parents=[common], help="Liouvillian block eigenvalues and EP data")
    sub.add_parser("pt-phase", parents=[common], help="PT phase of the correlation generator over kappa")
    sub.add_parser("fig", parents=[common], help="figure data by id")
    return parser


CONFIG_KEYS = ("init", "alpha", "gamma", "kappa", "tau_max", "dt_sample", "grid", "fig", "gammas", "out",
               "oracle_check", "gnuplot")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    merged = read_config_file(ns.config) if ns.config else {}
    for key in CONFIG_KEYS:
        value = getattr(ns, key)
        if value is not None:
            merged[key] = value
    unknown = set(merged) - set(CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")

    alphas = _floats(merged["alpha"]) if "alpha" in merged else None
    tag = merged.get("init", "mix" if alphas and ns.command != "fig" else "10")
    init = InitialCondition.parse(tag, alphas[0] if alphas else 1.0)
    if alphas:
        for a in alphas:
            if not 0.0 <= a <= 1.0:
                raise UsageError(f"alpha must lie in [0, 1], got {a}")
    fig_id = merged.get("fig")
    if fig_id is not None and fig_id not in FIG_IDS:
        raise UsageError(f"unknown figure {fig_id!r}")
    kappa = str(merged.get("kappa", "gamma")).strip()
    if kappa not in ("gamma", "-gamma"):
        try:
            float(kappa)
        except ValueError:
            raise UsageError(f"kappa must be a number, 'gamma' or '-gamma', got {kappa!r}") from None
    cfg = RunConfig(
        command=ns.command,
        init=init,
        gamma=float(merged.get("gamma", 1.0)),
        kappa=kappa,
        alphas=alphas or (init.alpha,),
        tau_max=float(merged.get("tau_max", 10.0)),
        dt_sample=float(merged.get("dt_sample", 0.02)),
        grid=Grid.parse(merged["grid"]) if "grid" in merged else None,
        fig_id=fig_id,
        out_path=merged.get("out"),
        oracle_check=_bool(merged.get("oracle_check", False)),
        gammas=_floats(merged["gammas"]) if "gammas" in merged else None,
        gnuplot=_bool(merged.get("gnuplot", False)),
    )
    if not cfg.tau_max > 0 or not cfg.dt_sample > 0:
        raise UsageError("tau-max and dt-sample must be positive")
    if cfg.command == "fig" and cfg.fig_id is None:
        raise UsageError("fig needs --fig <id>")
    return cfg


def _sample_taus(tau_max: float, dt: float) -> np.ndarray:
    n = int(math.floor(tau_max / dt + 1e-9))
    return dt * np.arange(n + 1)


def run_evolve(cfg: RunConfig) -> CsvTable:
    p = cfg.params()
    taus = _sample_taus(cfg.tau_max, cfg.dt_sample)
    s0 = initial_xstate(cfg.init)
    f = evolve_fields(s0, p, taus)
    header = ["tau", "a", "b", "c", "d", "re_m", "im_m", "re_h", "im_h", "C", "corr_xy"]
    if cfg.oracle_check:
        header.append("max_dev")
        per = max(1, math.ceil(cfg.dt_sample / ORACLE_DT - 1e-9))
        ref = integrate(LindbladGenerator(p), xstate_to_density(s0), float(taus[-1]),
                        dt=cfg.dt_sample / per, every=per)
        if len(ref) != len(taus):
            raise ent.NumericalFailure("oracle samples do not line up with the output grid")
    conc = ent.concurrence_fields(f)
    corr = ent.correlation_xy_fields(f)
    table = CsvTable(header)
    for i, tau in enumerate(taus):
        s = f.state(i)  # re-validates the state invariants
        row = [tau, s.a, s.b, s.c, s.d, s.m.real, s.m.imag, s.h.real, s.h.imag, conc[i], corr[i]]
        if cfg.oracle_check:
            row.append(float(np.abs(xstate_to_density(s) - ref[i][1]).max()))
        table.add(*row)
    return table


def worker_count() -> int:
    raw = os.environ.get("QEP_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"QEP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"QEP_THREADS must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, tasks: list) -> list:
    """Order-preserving map over independent tasks, capped by QEP_THREADS."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1 or len(tasks) < 8:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def sweep_point(task: tuple[str, float, float, float, str]) -> tuple[float, float]:
    """(tau_star, value) of one first-maximum search; NaN time and zero value when absent."""
    tag, alpha, gamma, kappa, quantity = task
    p = Params(gamma, kappa)
    try:
        if quantity == "corr_xy":
            fm = ent.first_max_corr_xy(p)
        elif tag == "10":
            fm = ent.first_max_10(p)
        elif tag == "01":
            fm = ent.first_max_10(p.reflected())
        elif tag == "11":
            fm = ent.first_max_11(p)
        else:
            fm = ent.first_max_mix(alpha, p)
    except (ent.NoPositiveConcurrence, ent.NoMaximum):
        return math.nan, 0.0
    return fm.tau_star, fm.value


def _alpha_label(ic: InitialCondition) -> float:
    return math.nan if ic.kind is InitKind.EXCITED_01 else ic.weight_10


def sweep_table(cfg: RunConfig, gammas, alphas, quantity: str = "C") -> CsvTable:
    tasks = []
    labels = []
    for alpha in alphas:
        ic = cfg.init if cfg.init.kind is not InitKind.MIX else InitialCondition(InitKind.MIX, alpha)
        for g in gammas:
            kappa = cfg.kappa_for(g)
            make_params(g, kappa)
            tasks.append((ic.kind.value, ic.alpha, float(g), kappa, quantity))
            labels.append((float(g), kappa, _alpha_label(ic)))
        if cfg.init.kind is not InitKind.MIX:
            break
    results = parallel_map(sweep_point, tasks)
    table = CsvTable(["gamma", "kappa", "alpha", "tau_star", "c_max"])
    for (g, k, a), (tau, value) in zip(labels, results):
        table.add(g, k, a, tau, value)
    return table


def run_sweep_max(cfg: RunConfig) -> CsvTable:
    grid = cfg.grid or Grid(*DEFAULT_SWEEP)
    return sweep_table(cfg, grid.values(), cfg.alphas)


def _eig_columns(n: int) -> list[str]:
    return [f"{part}_l{i}" for i in range(n) for part in ("re", "im")]


def _sorted_eigs(w: np.ndarray) -> list[float]:
    w = np.where(np.abs(w.real) < 1e-14, 1j * w.imag, w)
    w = np.where(np.abs(w.imag) < 1e-14, w.real + 0j, w)
    order = np.lexsort((np.round(w.imag, 12), np.round(w.real, 12)))
    return [x for v in w[order] for x in (v.real, v.imag)]


def run_spectrum(cfg: RunConfig) -> CsvTable:
    if cfg.command == "pt-phase":
        if cfg.grid:
            kappas = cfg.grid.values()
        elif cfg.kappa in ("gamma", "-gamma"):
            kappas = Grid(*DEFAULT_PT_GRID).values()
        else:
            kappas = [float(cfg.kappa)]
        table = CsvTable(["kappa", "phase", "all_real", "spectral_radius"] + _eig_columns(4))
        for k in kappas:
            r = pt_phase(float(k))
            table.add(float(k), r.phase.value, r.all_real, propagator_spectral_radius(float(k)),
                      *_sorted_eigs(r.eigenvalues))
        return table
    kappas = cfg.grid.values() if cfg.grid else [cfg.kappa_for(cfg.gamma)]
    table = CsvTable(["gamma", "kappa", "phase", "ep_order", "jordan_blocks", "min_angle", "biorth_residual"]
                     + _eig_columns(5))
    for k in kappas:
        rep = liouvillian_spectrum(make_params(cfg.gamma, float(k)))
        table.add(cfg.gamma, float(k), rep.phase.value, rep.ep_order or 0,
                  "-".join(str(b) for b in rep.jordan_blocks) or "none",
                  rep.min_angle, rep.biorthogonality_residual, *_sorted_eigs(rep.eigenvalues))
    return table


def _curves(cfg: RunConfig, gammas, kappa_of, conc) -> CsvTable:
    taus = _sample_taus(cfg.tau_max, cfg.dt_sample)
    table = CsvTable(["gamma", "kappa", "tau", "C"])
    for g in gammas:
        p = make_params(g, kappa_of(g))
        for t, c in zip(taus, conc(p, taus)):
            table.add(p.gamma, p.kappa, t, c)
    return table


def _fig3(cfg: RunConfig) -> CsvTable:
    table = CsvTable(["series", "gamma", "kappa", "tau_star"])
    for g in cfg.gammas or DEFAULT_GAMMAS["3"]:
        for k in np.linspace(-g, g, 201):
            table.add("fixed_gamma", g, k, ent.first_max_10(make_params(g, k)).tau_star)
    top = max(cfg.gammas or DEFAULT_GAMMAS["3"])
    for k in np.concatenate((np.linspace(-top, -0.05, 200), np.linspace(0.05, top, 200))):
        table.add("envelope", abs(k), k, ent.first_max_10(make_params(abs(k), k)).tau_star)
    return table


def run_fig(cfg: RunConfig) -> CsvTable:
    fig = cfg.fig_id
    family = fig.rstrip("ab")
    gammas = cfg.gammas or DEFAULT_GAMMAS.get(family)
    if fig in ("1a", "1b"):
        k0 = 0.1 if fig == "1a" else -0.1
        return _curves(cfg, gammas, lambda g: k0, ent.concurrence_10)
    if fig in ("2a", "2b"):
        sign = 1.0 if fig == "2a" else -1.0
        return _curves(cfg, gammas, lambda g: sign * g, ent.concurrence_10)
    if fig == "3":
        return _fig3(cfg)
    if fig == "4":
        return _curves(cfg, gammas, lambda g: g, ent.concurrence_11)
    grid = (cfg.grid or Grid(*DEFAULT_SWEEP)).values()
    tracking = RunConfig(command="fig", init=InitialCondition(InitKind.EXCITED_11), kappa="gamma")
    if family == "5":
        full = sweep_table(tracking, grid, (0.0,))
    elif family == "6":
        mixed = RunConfig(command="fig", init=InitialCondition(InitKind.MIX, 1.0), kappa="gamma")
        full = sweep_table(mixed, grid, cfg.alphas if cfg.alphas != (1.0,) else DEFAULT_ALPHAS)
    else:
        full = sweep_table(tracking, grid, (0.0,), quantity="corr_xy")
    keep = ["alpha", "gamma", "kappa"] if family == "6" else ["gamma", "kappa"]
    keep.append("c_max" if fig.endswith("a") else "tau_star")
    names = [("corr_max" if c == "c_max" and family == "7" else c) for c in keep]
    out = CsvTable(names)
    idx = [full.header.index(c) for c in keep]
    for row in full.rows:
        out.add(*(row[i] for i in idx))
    return out


def gnuplot_script(table: CsvTable, data_path: str) -> str:
    x, y = table.header[-2], table.header[-1]
    xi, yi = table.header.index(x) + 1, table.header.index(y) + 1
    return "\n".join([
        "set datafile separator ','",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
        f"plot '{data_path}' every ::1 using {xi}:{yi} with points pointtype 7 pointsize 0.3 notitle",
        "",
    ])


RUNNERS = {
    "evolve": run_evolve,
    "sweep-max": run_sweep_max,
    "spectrum": run_spectrum,
    "pt-phase": run_spectrum,
    "fig": run_fig,
}


def emit(table: CsvTable, cfg: RunConfig) -> None:
    text = table.render()
    if cfg.out_path:
        with open(cfg.out_path, "w", newline="\n") as fh:
            fh.write(text)
        if cfg.gnuplot:
            with open(cfg.out_path + ".gp", "w", newline="\n") as fh:
                fh.write(gnuplot_script(table, cfg.out_path))
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        table = RUNNERS[cfg.command](cfg)
    except (ConstraintViolation, InvalidState, UsageError, ValueError, OSError) as exc:
        print(f"qep: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ent.NumericalFailure, StepTooLarge, ConvergenceError, ArithmeticError) as exc:
        print(f"qep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    emit(table, cfg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
