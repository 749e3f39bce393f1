"""
Command-line driver.

    laminate-fracture --config run.ini --out results/ --command release

The config is an INI file with the sections below; every key is optional
unless marked. Unknown sections or keys are errors.

    [laminate]   length_L, height_H, n_layers (required), lambda, orientation,
                 interface_gc
    [phase_a]    mu1, mu2, gc (all required)
    [phase_b]    mu1, mu2, gc (all required)
    [mesh]       elems_per_layer_x, elems_y, refine_near_crack, elems_x
    [load]       profile (linear | triangle | table), T, steps, peak, table
    [run]        L0, tol, datum (paper-step | zero), probes, n_list

Exit status: 0 on success, 1 for a bad config, 2 for a numerical failure
(details in error.txt inside the output directory).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .elastic import DEFAULT_TOL, energy_curve
from .evolution import (LoadProgram, energy_identity, evolve, griffith_check, jump_cost,
                        nonmonotone_wrap)
from .homogenization import (StudyConfig, compute_curves, effective_toughness_estimate,
                             evolution_convergence, summary_rows)
from .materials import LaminateSpec, MaterialPhase, homogenized_model
from .mesh import CustomDatum, MeshParams, PaperStep, admissible_tips
from .release import release_curve

COMMANDS = ("solve", "release", "evolve", "homogenize", "study")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


# section -> key -> (parser, required, default)
SCHEMA = {
    "laminate": {
        "length_L": (float, False, 1.0),
        "height_H": (float, False, 0.5),
        "n_layers": (int, True, None),
        "lambda": (float, False, 0.5),
        "orientation": (str, False, "vertical"),
        "interface_gc": (float, False, None),
    },
    "phase_a": {"mu1": (float, True, None), "mu2": (float, True, None),
                "gc": (float, True, None)},
    "phase_b": {"mu1": (float, True, None), "mu2": (float, True, None),
                "gc": (float, True, None)},
    "mesh": {
        "elems_per_layer_x": (int, False, 8),
        "elems_y": (int, False, 16),
        "refine_near_crack": (float, False, 1.0),
        "elems_x": (int, False, None),
    },
    "load": {
        "profile": (str, False, "linear"),
        "T": (float, False, 1.0),
        "steps": (int, False, 400),
        "peak": (float, False, 3.0),
        "table": (str, False, None),
    },
    "run": {
        "L0": (float, False, None),
        "tol": (float, False, DEFAULT_TOL),
        "datum": (str, False, "paper-step"),
        "probes": (_floats, False, (0.4, 0.55, 0.7)),
        "n_list": (_ints, False, (2, 4, 8, 16)),
    },
}
REQUIRED_SECTIONS = ("laminate", "phase_a", "phase_b")


@dataclass
class RunConfig:
    spec: LaminateSpec
    mesh: MeshParams
    load: LoadProgram
    L0: float
    tol: float
    datum: str
    probes: tuple
    n_list: tuple
    source: Path
    digest: str
    raw: dict = field(default_factory=dict)

    def datum_object(self):
        if self.datum == "zero":
            return CustomDatum(lambda x, y, side: np.zeros_like(np.asarray(x, float)))
        return PaperStep()


def _line_index(text: str) -> dict:
    """(section, key) -> line number, and (section, None) -> header line."""
    where, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            where.setdefault((section, None), no)
        elif section is not None and ("=" in s or ":" in s):
            sep = min(i for i in (s.find("="), s.find(":")) if i >= 0)
            where.setdefault((section, s[:sep].strip()), no)
    return where


def _load_table(path: Path):
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    if data.shape[1] != 2:
        raise ValueError("load table needs two columns: t, f")
    return LoadProgram(data[:, 0], data[:, 1])


def parse_config(path) -> RunConfig:
    """Read and validate a run config; raises ConfigError listing every problem."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config ({exc.strerror})"])
    lines = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError([f"{path}: {exc}"])

    problems = []
    loc = lambda sec, key=None: f"{path}:{lines.get((sec, key), lines.get((sec, None), '?'))}"
    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            problems.append(f"{loc(sec)}: unknown section [{sec}]")
            continue
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                problems.append(f"{loc(sec, key)}: unknown key '{key}' in [{sec}]")
    for sec in REQUIRED_SECTIONS:
        if not cp.has_section(sec):
            problems.append(f"{path}: missing required section [{sec}]")
    for sec, keys in SCHEMA.items():
        for key, (parse, required, default) in keys.items():
            if cp.has_section(sec) and key in cp[sec]:
                raw = cp[sec][key]
                try:
                    values[(sec, key)] = parse(raw)
                except ValueError:
                    problems.append(f"{loc(sec, key)}: [{sec}] {key} = {raw!r} is not valid")
            elif required and cp.has_section(sec):
                problems.append(f"{loc(sec)}: missing required key '{key}' in [{sec}]")
            else:
                values[(sec, key)] = default
    if problems:
        raise ConfigError(problems)

    v = lambda sec, key: values[(sec, key)]

    def check(cond, sec, key, message):
        if not cond:
            problems.append(f"{loc(sec, key)}: {message}")
        return cond

    for sec in ("phase_a", "phase_b"):
        for key in ("mu1", "mu2", "gc"):
            check(v(sec, key) > 0 and np.isfinite(v(sec, key)), sec, key,
                  f"{sec}.{key} must be positive and finite")
    lam = v("laminate", "lambda")
    check(0.0 < lam < 1.0, "laminate", "lambda", "lambda must lie in (0,1)")
    n = v("laminate", "n_layers")
    check(n >= 1, "laminate", "n_layers", "n_layers must be >= 1")
    orient = v("laminate", "orientation").lower()
    if check(orient in ("vertical", "horizontal"), "laminate", "orientation",
             "orientation must be 'vertical' or 'horizontal'"):
        check(orient == "vertical" or n % 2 == 0, "laminate", "n_layers",
              "horizontal layers require an even n_layers (the crack must lie on an interface)")
    check(v("laminate", "length_L") > 0, "laminate", "length_L", "length_L must be positive")
    check(v("laminate", "height_H") > 0, "laminate", "height_H", "height_H must be positive")
    ig = v("laminate", "interface_gc")
    check(ig is None or ig > 0, "laminate", "interface_gc", "interface_gc must be positive")

    check(v("mesh", "elems_per_layer_x") >= 2, "mesh", "elems_per_layer_x",
          "elems_per_layer_x must be >= 2")
    check(v("mesh", "elems_y") >= 4, "mesh", "elems_y", "elems_y must be >= 4")
    check(1.0 <= v("mesh", "refine_near_crack") <= 4.0, "mesh", "refine_near_crack",
          "refine_near_crack must lie in [1, 4]")
    ex = v("mesh", "elems_x")
    check(ex is None or ex >= 2, "mesh", "elems_x", "elems_x must be >= 2")

    prof = v("load", "profile").lower()
    check(prof in ("linear", "triangle", "table"), "load", "profile",
          "profile must be linear, triangle or table")
    check(v("load", "T") > 0, "load", "T", "T must be positive")
    check(v("load", "steps") >= 1, "load", "steps", "steps must be >= 1")
    table = v("load", "table")
    table_path = None
    if prof == "table":
        if check(table is not None, "load", "table", "profile = table needs a table file"):
            table_path = (path.parent / table).resolve()
            check(table_path.is_file(), "load", "table", f"load table {table_path} does not exist")
    tol = v("run", "tol")
    check(0 < tol <= 1e-4, "run", "tol", "tol must lie in (0, 1e-4]")
    datum = v("run", "datum").lower()
    check(datum in ("paper-step", "zero"), "run", "datum", "datum must be paper-step or zero")
    nl = v("run", "n_list")
    check(len(nl) > 0 and all(b > a for a, b in zip(nl, nl[1:])) and nl[0] >= 1,
          "run", "n_list", "n_list must be strictly increasing positive integers")
    if orient == "horizontal":
        check(all(k % 2 == 0 for k in nl), "run", "n_list",
              "horizontal layers require even entries in n_list")
    if problems:
        raise ConfigError(problems)

    spec = LaminateSpec(v("laminate", "length_L"), v("laminate", "height_H"), n, lam,
                        MaterialPhase(v("phase_a", "mu1"), v("phase_a", "mu2"), v("phase_a", "gc")),
                        MaterialPhase(v("phase_b", "mu1"), v("phase_b", "mu2"), v("phase_b", "gc")),
                        orient, ig)
    mesh = MeshParams(v("mesh", "elems_per_layer_x"), v("mesh", "elems_y"),
                      v("mesh", "refine_near_crack"), ex)
    T, steps, peak = v("load", "T"), v("load", "steps"), v("load", "peak")
    try:
        if prof == "linear":
            load = LoadProgram.linear(T, steps, rate=peak / T)
        elif prof == "triangle":
            load = LoadProgram.triangle(T, steps, peak)
        else:
            load = _load_table(table_path)
    except ValueError as exc:
        raise ConfigError([f"{loc('load')}: {exc}"])

    L = spec.length_L
    L0 = v("run", "L0")
    L0 = L / 4 if L0 is None else L0
    tips = admissible_tips(spec, mesh)
    if not np.any(np.abs(tips - L0) <= 1e-10 * L):
        raise ConfigError([f"{loc('run', 'L0')}: L0 = {L0} is not on the tip lattice"])
    probes = v("run", "probes")
    bad = [p for p in probes if not L0 < p < L]
    if bad:
        raise ConfigError([f"{loc('run', 'probes')}: probes {bad} outside (L0, L)"])
    digest = hashlib.sha256(text.encode()).hexdigest()
    raw = {f"{s}.{k}": (list(x) if isinstance(x, tuple) else x) for (s, k), x in values.items()}
    return RunConfig(spec, mesh, load, float(L0), tol, datum, probes, nl, path, digest, raw)


def _fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format(float(x), ".17g")


class Outputs:
    """Writes CSV files into the output directory and remembers them for the manifest."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def csv(self, name: str, header, rows):
        p = self.root / name
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(x) for x in r])
        self.files.append(name)
        return p

    def text(self, name: str, body: str):
        (self.root / name).write_text(body)
        self.files.append(name)

    def manifest(self, cfg: Optional[RunConfig], command: str, extra: dict):
        def digest(name):
            return hashlib.sha256((self.root / name).read_bytes()).hexdigest()
        data = {
            "command": command,
            "version": __version__,
            "config": str(cfg.source) if cfg else None,
            "config_sha256": cfg.digest if cfg else None,
            "tolerances": {"solver_rtol": cfg.tol if cfg else None},
            "settings": cfg.raw if cfg else {},
            "files": {f: digest(f) for f in self.files},
        }
        data.update(extra)
        (self.root / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True,
                                                            default=_fmt) + "\n")


def _curve_rows(curve):
    return curve.rows()


def cmd_solve(cfg: RunConfig, out: Outputs, threads: int) -> dict:
    tips = admissible_tips(cfg.spec, cfg.mesh)
    samples = energy_curve(cfg.spec, cfg.mesh, tips, cfg.datum_object(), cfg.tol, threads)
    out.csv("energy.csv", ["l", "energy"], ((s.l, s.energy) for s in samples))
    return {}


def cmd_release(cfg: RunConfig, out: Outputs, threads: int) -> dict:
    c = release_curve(cfg.spec, cfg.mesh, cfg.datum_object(), cfg.tol, threads=threads)
    out.csv("release.csv", ["l", "energy", "release", "flag"], _curve_rows(c))
    return {}


def _evolve_any(curve, load, L0):
    if load.monotone:
        return evolve(curve, None, load, L0)
    return nonmonotone_wrap(load, lambda ld: evolve(curve, None, ld, L0))


def cmd_evolve(cfg: RunConfig, out: Outputs, threads: int) -> dict:
    c = release_curve(cfg.spec, cfg.mesh, cfg.datum_object(), cfg.tol, threads=threads)
    tr = _evolve_any(c, cfg.load, cfg.L0)
    out.csv("release.csv", ["l", "energy", "release", "flag"], _curve_rows(c))
    out.csv("trace.csv", ["t", "f", "tip", "elastic", "dissipated", "work", "jump_loss"],
            tr.rows())
    out.csv("jumps.csv", ["t", "l_minus", "l_plus", "delta_cost", "energy_drop"],
            ((j.t, j.l_minus, j.l_plus, j.delta_cost, j.energy_drop) for j in jump_cost(tr)))
    rep = griffith_check(tr, cfg.load.envelope())
    return {"griffith_pass": rep.passed,
            "identity_residual": energy_identity(tr).max_relative_residual}


def cmd_homogenize(cfg: RunConfig, out: Outputs, threads: int) -> dict:
    m = homogenized_model(cfg.spec)
    g = lambda x: "n/a" if x is None else format(x, ".12g")
    line = (f"mu_hom1={g(m.mu_hom1)}, mu_hom2={g(m.mu_hom2)}, "
            f"gc_hom={g(m.gc_hom)}, gc_eff={g(m.gc_eff_closed_form)}")
    print(line)
    out.csv("homogenized.csv", ["mu_hom1", "mu_hom2", "gc_hom", "gc_eff_closed_form"],
            [(m.mu_hom1, m.mu_hom2, m.gc_hom, m.gc_eff_closed_form)])
    return {"summary": line}


def cmd_study(cfg: RunConfig, out: Outputs, threads: int) -> dict:
    load = cfg.load if cfg.load.monotone else cfg.load.envelope()
    study = StudyConfig(cfg.spec, cfg.n_list, cfg.mesh, cfg.probes, load=load, L0=cfg.L0,
                        datum=cfg.datum_object(), tol=cfg.tol, threads=threads)
    curves = compute_curves(study)
    est = effective_toughness_estimate(study, curves)
    conv = evolution_convergence(study, load, curves, est)
    for n in study.n_list:
        out.csv(f"release_n{n}.csv", ["l", "energy", "release", "flag"],
                _curve_rows(curves.curves[n]))
        out.csv(f"trace_n{n}.csv",
                ["t", "f", "tip", "elastic", "dissipated", "work", "jump_loss"],
                conv.traces[n].rows())
    out.csv("release_hom.csv", ["l", "energy", "release", "flag"], _curve_rows(curves.hom_curve))
    out.csv("trace_hom.csv", ["t", "f", "tip", "elastic", "dissipated", "work", "jump_loss"],
            conv.hom_trace.rows())
    out.csv("summary.csv", ["n", "probe_l", "ratio", "gc_eff", "d_n", "identity_residual"],
            summary_rows(study, est, conv))
    return {"gc_eff_source": conv.gc_eff_source}


HANDLERS = {"solve": cmd_solve, "release": cmd_release, "evolve": cmd_evolve,
            "homogenize": cmd_homogenize, "study": cmd_study}


def run(command: str, cfg: RunConfig, out_dir, threads: int = 1) -> int:
    out = Outputs(Path(out_dir))
    try:
        extra = HANDLERS[command](cfg, out, threads)
    except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        out.text("error.txt", f"{type(exc).__name__}: {exc}\n\n{traceback.format_exc()}")
        out.manifest(cfg, command, {"status": "numerical failure"})
        print(f"error: {exc} (see {out.root / 'error.txt'})", file=sys.stderr)
        return 2
    out.manifest(cfg, command, {"status": "ok", **extra})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laminate-fracture",
                                description="Griffith crack growth in layered media")
    p.add_argument("--config", required=True, type=Path, help="INI run configuration")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for independent solves (default: all cores)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config error: {line}", file=sys.stderr)
        return 1
    return run(args.command, cfg, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
