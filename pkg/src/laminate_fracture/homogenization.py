"""
Studies over the layer count n.

The effective toughness at a probe l is estimated as

    gc_eff(l) = G_hom(l) / w_N,   w_n = min_{|l' - l| <= delta_n} G_n(l') / Gc_n(l'),

with delta_n = L/(2n) by default, a finite-n stand-in for the lower limit of
G_n/Gc_n over all sequences l_n -> l. The estimator is biased upward: the
window reaches delta_n to the right, where G is smaller, and the layer phase
shifts the minimum by O(1/n).

The other checks compare laminate evolutions with the homogenized one,
verify the change of variables that straightens a laminate with
mu_A1*mu_A2 = mu_B1*mu_B2 into a homogeneous problem, and account for the
energy lost in micro-jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .elastic import DEFAULT_TOL, element_energy_densities, element_moduli, solve
from .evolution import (EvolutionTrace, LoadProgram, energy_identity, evolve,
                        toughness_for)
from .materials import (LaminateSpec, Orientation, homogenized_model,
                        homogenized_spec, product_constraint_holds)
from .mesh import MeshParams, admissible_tips, build_mesh, x_grid
from .release import REGULAR, ReleaseCurve, release_curve


class StudyError(ValueError):
    pass


def default_window(spec: LaminateSpec, n: int) -> float:
    """Half-width L/(2n) of the lower-limit window: one period in total."""
    return spec.length_L / (2.0 * n)


@dataclass(frozen=True, eq=False)
class StudyConfig:
    """
    Attributes:
        spec: laminate template; ``n_layers`` is replaced by each entry of n_list
        n_list: strictly increasing layer counts
        params: mesh parameters shared by every n
        probe_points: abscissae where the effective toughness is estimated
        window_schedule: half-widths delta_n, one per n (default L/(2n))
        load: monotone load for the evolution checks
        L0: initial tip, a lattice point for every n (default L/4)
    """
    spec: LaminateSpec
    n_list: tuple = (2, 4, 8, 16)
    params: MeshParams = MeshParams()
    probe_points: tuple = (0.4, 0.55, 0.7)
    window_schedule: Optional[tuple] = None
    load: Optional[LoadProgram] = None
    L0: Optional[float] = None
    datum: object = None
    tol: float = DEFAULT_TOL
    threads: int = 1

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_list)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise StudyError("n_list must be strictly increasing positive integers")
        object.__setattr__(self, "n_list", ns)
        L = self.spec.length_L
        if self.window_schedule is None:
            sched = tuple(default_window(self.spec, n) for n in ns)
        else:
            sched = tuple(float(d) for d in self.window_schedule)
        if len(sched) != len(ns):
            raise StudyError("window_schedule needs one half-width per n")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise StudyError("window_schedule must be decreasing")
        for n, d in zip(ns, sched):
            h = float(np.max(np.diff(x_grid(self.spec.with_layers(n), self.params))))
            if d < 2 * h - 1e-12:
                raise StudyError(f"window {d} at n={n} spans fewer than 2 lattice cells")
        object.__setattr__(self, "window_schedule", sched)
        L0 = L / 4 if self.L0 is None else float(self.L0)
        for n in ns:
            tips = admissible_tips(self.spec.with_layers(n), self.params)
            if not np.any(np.abs(tips - L0) <= 1e-10 * L):
                raise StudyError(f"L0={L0} is not a lattice point at n={n}")
        object.__setattr__(self, "L0", L0)
        probes = tuple(float(p) for p in self.probe_points)
        coarse = self.spec.with_layers(ns[0])
        for p in probes:
            if not L0 < p < L:
                raise StudyError(f"probe {p} must lie in (L0, L) = ({L0}, {L})")
            if (self.spec.orientation is Orientation.VERTICAL
                    and np.any(np.abs(coarse.interfaces() - p) <= 1e-10 * L)):
                raise StudyError(f"probe {p} lies on an interface at n={ns[0]}")
        object.__setattr__(self, "probe_points", probes)
        if self.load is None:
            object.__setattr__(self, "load", LoadProgram.linear(1.0, 400, rate=3.0))

    def laminate(self, n: int) -> LaminateSpec:
        return self.spec.with_layers(n)

    @property
    def hom_spec(self) -> LaminateSpec:
        """Homogenized material on the lattice of the finest laminate."""
        return homogenized_spec(self.spec.with_layers(self.n_list[-1]))


@dataclass(eq=False)
class StudyCurves:
    curves: dict
    hom_curve: ReleaseCurve

    def toughness(self, n: int) -> np.ndarray:
        return toughness_for(self.curves[n])


def compute_curves(config: StudyConfig) -> StudyCurves:
    """Release curve for every n and for the homogenized material."""
    run = lambda s: release_curve(s, config.params, config.datum, config.tol,
                                  threads=config.threads)
    curves = {n: run(config.laminate(n)) for n in config.n_list}
    return StudyCurves(curves, run(config.hom_spec))


@dataclass(frozen=True)
class GammaRatio:
    value: float
    per_n: tuple  # (n, w_n, argmin abscissa)

    @property
    def sequence(self) -> np.ndarray:
        return np.array([w for _, w, _ in self.per_n])


def gamma_liminf_ratio(curves: dict, toughness: dict, l: float,
                       schedule: Sequence[float]) -> GammaRatio:
    """
    Window minima w_n of G_n/Gc_n around ``l``; the value is w at the last n.

    ``curves`` and ``toughness`` map n to a ReleaseCurve and its per-tip
    toughness; ``schedule`` lists delta_n in the order of sorted n.
    """
    ns = sorted(curves)
    if len(schedule) != len(ns):
        raise StudyError("schedule needs one half-width per n")
    rows = []
    for n, d in zip(ns, schedule):
        c = curves[n]
        sel = np.abs(c.tips - l) <= d + 1e-12 * c.spec.length_L
        if not np.any(sel):
            raise StudyError(f"window around {l} at n={n} contains no lattice point")
        ratio = c.release[sel] / np.asarray(toughness[n])[sel]
        i = int(np.nanargmin(ratio))
        rows.append((n, float(ratio[i]), float(c.tips[sel][i])))
    return GammaRatio(rows[-1][1], tuple(rows))


@dataclass(frozen=True)
class EffEstimate:
    l: float
    gamma_ratio: float
    g_hom: float
    gc_eff: Optional[float]
    per_n: tuple  # (n, w_n, gc_eff estimate with w_n)
    flag: str = "ok"


def effective_toughness_estimate(config: StudyConfig,
                                 curves: Optional[StudyCurves] = None) -> list[EffEstimate]:
    """gc_eff(l) = G_hom(l) / w_N at every probe."""
    curves = compute_curves(config) if curves is None else curves
    tough = {n: curves.toughness(n) for n in config.n_list}
    out = []
    for l in config.probe_points:
        gr = gamma_liminf_ratio(curves.curves, tough, l, config.window_schedule)
        g_hom = float(curves.hom_curve.interpolate(l))
        if g_hom <= 0.0 or gr.value <= 0.0:
            out.append(EffEstimate(l, gr.value, g_hom, None,
                                   tuple((n, w, None) for n, w, _ in gr.per_n),
                                   "undefined (release vanishes)"))
            continue
        per_n = tuple((n, w, g_hom / w) for n, w, _ in gr.per_n)
        out.append(EffEstimate(l, gr.value, g_hom, g_hom / gr.value, per_n))
    return out


def effective_toughness_profile(config: StudyConfig, estimates: list[EffEstimate]) -> Callable:
    """Piecewise-linear interpolant of the estimates, constant beyond the end probes."""
    pts = [(e.l, e.gc_eff) for e in estimates if e.gc_eff is not None]
    if not pts:
        raise StudyError("effective toughness unavailable")
    ls, gs = map(np.array, zip(*sorted(pts)))
    return lambda l: np.interp(l, ls, gs)


def _gc_eff_source(config: StudyConfig, curves: StudyCurves, estimates):
    model = homogenized_model(config.spec)
    if model.gc_eff_closed_form is not None:
        return (lambda l: np.full(np.shape(l), model.gc_eff_closed_form)), "closed-form"
    if estimates is None:
        estimates = effective_toughness_estimate(config, curves)
    return effective_toughness_profile(config, estimates), "estimate"


@dataclass(eq=False)
class ConvergenceReport:
    distances: dict       # n -> d_n
    traces: dict          # n -> EvolutionTrace
    hom_trace: EvolutionTrace
    gc_eff_source: str
    excluded: np.ndarray  # time samples left out of d_n

    @property
    def decreasing(self) -> bool:
        d = [self.distances[n] for n in sorted(self.distances)]
        return all(b < a for a, b in zip(d, d[1:]))


def jump_neighbourhood(trace: EvolutionTrace, width: int = 2) -> np.ndarray:
    """Mask of time samples within ``width`` steps of a logged jump."""
    mask = np.zeros(len(trace.times), dtype=bool)
    for j in trace.jumps:
        mask[max(0, j.step - width):j.step + width + 1] = True
    return mask


def evolution_convergence(config: StudyConfig, load: Optional[LoadProgram] = None,
                          curves: Optional[StudyCurves] = None,
                          estimates: Optional[list] = None) -> ConvergenceReport:
    """
    d_n = time average of |ell_n - ell_hom|, leaving out two steps either
    side of every jump of ell_hom. The homogenized toughness is the closed
    form when it applies, otherwise the interpolated estimate.
    """
    load = config.load if load is None else load
    curves = compute_curves(config) if curves is None else curves
    gc_eff, source = _gc_eff_source(config, curves, estimates)
    hc = curves.hom_curve
    hom_trace = evolve(hc, gc_eff(hc.tips), load, config.L0)
    keep = ~jump_neighbourhood(hom_trace)
    traces, dist = {}, {}
    for n in config.n_list:
        tr = evolve(curves.curves[n], None, load, config.L0)
        traces[n] = tr
        dist[n] = float(np.mean(np.abs(tr.tip - hom_trace.tip)[keep]))
    return ConvergenceReport(dist, traces, hom_trace, source, ~keep)


@dataclass(frozen=True)
class RescaleReport:
    alpha: float
    alpha_hom: float
    probes: tuple
    laminate_discrepancy: float     # max relative |G_n - Ghat(phi_n) phi_n'|
    hom_discrepancy: float          # max relative |G_hom - Ghat(alpha_hom l) alpha_hom|
    rows: tuple                     # (l, G_n, Ghat(phi_n(l)) phi_n'(l), G_hom, Ghat(a l) a)


def stretch_map(spec: LaminateSpec, alpha: float):
    """phi_n and phi_n': A layers stretched by ``alpha``, B layers kept."""
    pts = spec.interfaces()
    widths = np.diff(pts)
    # strips alternate A, B starting with A at x = 0
    slope = np.where(np.arange(len(widths)) % 2 == 0, alpha, 1.0)
    cum = np.concatenate([[0.0], np.cumsum(slope * widths)])

    def phi(x):
        return np.interp(x, pts, cum)

    def dphi(x):
        k = np.clip(np.searchsorted(pts, np.asarray(x, float), side="right") - 1,
                    0, len(widths) - 1)
        return slope[k]
    return phi, dphi


def rescale_verify(spec: LaminateSpec, params: MeshParams = MeshParams(), datum=None,
                   probes: Optional[Sequence[float]] = None, tol: float = DEFAULT_TOL,
                   hat_cells: Optional[int] = None, threads: int = 1) -> RescaleReport:
    """
    Straighten the laminate by x -> phi_n(x) and compare release rates.

    With mu_A1 mu_A2 = mu_B1 mu_B2 and alpha = mu_B1/mu_A1 the laminate
    energy equals that of the homogeneous phase-B material on
    (0, S) x (-H, H), S = lambda L alpha + (1 - lambda) L, with the tip at
    phi_n(l). The straightened problem is solved once on its own uniform
    mesh and interpolated.
    """
    if spec.orientation is not Orientation.VERTICAL:
        raise StudyError("rescaling inapplicable: needs vertical layers")
    if not product_constraint_holds(spec):
        raise StudyError("rescaling inapplicable: mu_A1*mu_A2 != mu_B1*mu_B2")
    a, b, lam, L = spec.phase_a, spec.phase_b, spec.lam, spec.length_L
    alpha = b.mu1 / a.mu1
    alpha_hom = lam * alpha + 1.0 - lam
    S = alpha_hom * L
    phi, dphi = stretch_map(spec, alpha)

    curve = release_curve(spec, params, datum, tol, threads=threads)
    hom = homogenized_spec(spec)
    hom_curve = release_curve(hom, params, datum, tol, threads=threads)

    if hat_cells is None:
        hat_cells = int(np.ceil(S / np.min(np.diff(x_grid(spec, params))) - 1e-9))
    cells = hat_cells
    hat = LaminateSpec(S, spec.height_H, 1, 0.5, b, b)
    hat_params = replace(params, elems_per_layer_x=max(2, int(np.ceil(cells / 2))))
    hat_curve = release_curve(hat, hat_params, datum, tol, threads=threads)

    if probes is None:
        ok = (curve.flags == REGULAR) & (curve.tips > L / 8) & (curve.tips < 7 * L / 8)
        probes = curve.tips[ok]
    rows = []
    for l in probes:
        g_n = curve.at(l)
        g_hat = float(hat_curve.interpolate(phi(l))) * float(dphi(l))
        g_hom = float(hom_curve.interpolate(l))
        g_hat_hom = float(hat_curve.interpolate(alpha_hom * l)) * alpha_hom
        rows.append((float(l), g_n, g_hat, g_hom, g_hat_hom))
    r = np.array(rows)
    lam_gap = float(np.max(np.abs(r[:, 1] - r[:, 2]) / np.abs(r[:, 2])))
    hom_gap = float(np.max(np.abs(r[:, 3] - r[:, 4]) / np.abs(r[:, 4])))
    return RescaleReport(alpha, alpha_hom, tuple(float(p) for p in probes),
                         lam_gap, hom_gap, tuple(rows))


@dataclass(frozen=True)
class TougheningReport:
    gc_hom: float
    gc_eff: tuple                # per probe
    lower_ok: bool               # gc_hom <= gc_eff (+ tol) and min Gc <= gc_eff
    upper_bounds: tuple          # (l, gc_eff, bound) on probes inside the swept range
    upper_ok: bool
    interval: tuple              # (t1, t2)
    hom_advance: float
    jump_dissipation: float      # sum |[[F_n]]| over jumps in (t1, t2] at the finest n
    predicted: float             # (gc_eff - gc_hom) * hom_advance
    relative_gap: float


def toughening_report(config: StudyConfig, load: Optional[LoadProgram] = None,
                      curves: Optional[StudyCurves] = None,
                      estimates: Optional[list] = None,
                      convergence: Optional[ConvergenceReport] = None,
                      interval: Optional[tuple] = None, tol: float = 1e-8) -> TougheningReport:
    """
    Three toughening relations: gc_hom <= gc_eff; gc_eff(l) bounded by
    f(T)^2 G_hom(l) max Gc / min Gc on the swept range; micro-jump losses of
    the finest laminate over a continuity interval of ell_hom against
    (gc_eff - gc_hom) times the advance of ell_hom.

    ``interval`` defaults to the times in which ell_hom crosses the middle
    half of [L0, ell_hom(T)].
    """
    load = config.load if load is None else load
    curves = compute_curves(config) if curves is None else curves
    if estimates is None:
        estimates = effective_toughness_estimate(config, curves)
    if convergence is None:
        convergence = evolution_convergence(config, load, curves, estimates)
    model = homogenized_model(config.spec)
    a, b = config.spec.phase_a, config.spec.phase_b
    gmin, gmax = min(a.gc, b.gc), max(a.gc, b.gc)
    gc_hom = model.gc_hom
    eff = tuple(e.gc_eff for e in estimates)
    lower_ok = all(g is not None and g >= gc_hom - tol and g >= gmin - tol for g in eff)

    ht = convergence.hom_trace
    lo, hi = config.L0, float(ht.tip[-1])
    f2T = float(load.f_values[-1] ** 2)
    bounds = []
    for e in estimates:
        if e.gc_eff is not None and lo <= e.l <= hi:
            bounds.append((e.l, e.gc_eff, f2T * e.g_hom * gmax / gmin))
    upper_ok = all(g <= bnd for _, g, bnd in bounds)

    gc_ref = model.gc_eff_closed_form
    if gc_ref is None:
        gc_ref = float(np.mean([g for g in eff if g is not None]))
    if interval is None:
        span = hi - lo
        t1 = float(ht.times[np.argmax(ht.tip >= lo + 0.25 * span)])
        t2 = float(ht.times[np.argmax(ht.tip >= lo + 0.75 * span)])
    else:
        t1, t2 = map(float, interval)
    k1, k2 = np.searchsorted(ht.times, [t1, t2])
    advance = float(ht.tip[k2] - ht.tip[k1])
    finest = convergence.traces[config.n_list[-1]]
    loss = 0.0
    for j in finest.jumps:
        if t1 < j.t <= t2:
            k = j.step
            loss += abs(finest.ledger.jump_loss[k] - finest.ledger.jump_loss[k - 1])
    predicted = (gc_ref - gc_hom) * advance
    gap = abs(loss - predicted) / abs(predicted) if predicted != 0 else abs(loss)
    return TougheningReport(gc_hom, eff, lower_ok, tuple(bounds), upper_ok, (t1, t2),
                            advance, loss, predicted, gap)


@dataclass(frozen=True)
class LocalEnergyReport:
    n_list: tuple
    window: tuple
    l: float
    energy_gap: tuple     # relative |W_n - W_hom| on the window
    mu1_gap: tuple        # relative gap of the mu1 |u_x|^2 part
    total_gap: tuple      # relative |E_n(l) - E_hom(l)| on the whole domain

    @property
    def shrinking(self) -> bool:
        return self.energy_gap[-1] < self.energy_gap[0] and self.mu1_gap[-1] < self.mu1_gap[0]


def _window_energies(spec, params, l, datum, tol, window):
    mesh = build_mesh(spec, params, l)
    moduli = element_moduli(mesh)
    field = solve(mesh, moduli, datum, tol)
    ex, ey = element_energy_densities(field, moduli)
    cx = mesh.centroids()[:, 0]
    inside = (cx > window[0]) & (cx < window[1])
    return float(np.sum(ex[inside] + ey[inside])), float(np.sum(ex[inside])), \
        0.5 * float(np.sum(ex + ey))


def local_energy_convergence(spec: LaminateSpec, n_list: Sequence[int], window: tuple,
                             l: float, datum=None, params: MeshParams = MeshParams(),
                             tol: float = DEFAULT_TOL) -> LocalEnergyReport:
    """
    Energies int_{(a,b) x (-H,H)} grad u C grad u and int mu1 |u_x|^2 for each
    n, compared with the homogenized solution at the same tip.
    """
    if spec.orientation is not Orientation.HORIZONTAL:
        raise StudyError("local energy convergence is a horizontal-layer check")
    a, b = window
    L = spec.length_L
    if not 0.0 < a < b < L:
        raise StudyError(f"window {window} must lie inside (0, {L})")
    ns = tuple(sorted(int(n) for n in n_list))
    hom = homogenized_spec(spec.with_layers(ns[-1]))
    W_h, X_h, E_h = _window_energies(hom, params, l, datum, tol, window)
    eg, xg, tg = [], [], []
    for n in ns:
        W, X, E = _window_energies(spec.with_layers(n), params, l, datum, tol, window)
        eg.append(abs(W - W_h) / abs(W_h))
        xg.append(abs(X - X_h) / abs(X_h))
        tg.append(abs(E - E_h) / abs(E_h))
    return LocalEnergyReport(ns, (a, b), float(l), tuple(eg), tuple(xg), tuple(tg))


def sandwich_check(curves: StudyCurves, probes: Sequence[float], tol: float = 1e-8):
    """
    min_n G_n(l) <= G_hom(l) + tol and max_n G_n(l) >= G_hom(l) - tol at each
    probe (nearest lattice sample per n). Returns the list of violating probes.
    """
    bad = []
    for l in probes:
        g_hom = float(curves.hom_curve.interpolate(l))
        vals = [float(c.interpolate(l)) for c in curves.curves.values()]
        if not (min(vals) <= g_hom + tol and max(vals) >= g_hom - tol):
            bad.append((float(l), g_hom, min(vals), max(vals)))
    return bad


def sup_gap(curves: StudyCurves, window: tuple) -> dict:
    """n -> sup over lattice samples in ``window`` of |G_n - G_hom|."""
    out = {}
    a, b = window
    for n, c in sorted(curves.curves.items()):
        sel = (c.tips >= a - 1e-12) & (c.tips <= b + 1e-12)
        out[n] = float(np.max(np.abs(c.release[sel]
                                     - curves.hom_curve.interpolate(c.tips[sel]))))
    return out


def summary_rows(config: StudyConfig, estimates: list[EffEstimate],
                 convergence: ConvergenceReport):
    """Rows "n, probe_l, ratio, gc_eff, d_n, identity_residual"."""
    ident = {n: energy_identity(tr).max_relative_residual
             for n, tr in convergence.traces.items()}
    for n in config.n_list:
        for e in estimates:
            w = next((w for m, w, _ in e.per_n if m == n), np.nan)
            g = next((g for m, _, g in e.per_n if m == n), None)
            yield (n, e.l, w, np.nan if g is None else g, convergence.distances[n], ident[n])
