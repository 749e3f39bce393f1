"""
Quasi-static Griffith evolution on the tip lattice.

Under a non-decreasing load factor f the tip position has the explicit form

    ell(t) = min { l in lattice, l >= L0 : f(t)^2 G(l) < Gc(l) },

which is evaluated independently at every time sample; G(L) = 0 makes the set
non-empty. A step that moves the tip by two or more lattice cells is logged as
a jump. The ledger tracks elastic energy f^2 E(ell), dissipation
D(ell) = int_{L0}^{ell} Gc, external work int 2 f f' E(ell) dt and the energy
lost in jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .materials import toughness_array
from .release import ReleaseCurve

# relative width of the band in which f^2 G and Gc count as equal
TIE_RTOL = 1e-14
DEFAULT_STEPS = 400


class EvolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LoadProgram:
    """Load factor samples f(t_k) on an increasing time grid, f(0) = 0."""
    times: np.ndarray
    f_values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.f_values, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or len(t) < 2:
            raise EvolutionError("times and f_values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise EvolutionError("times must be strictly increasing")
        if not np.all(np.isfinite(f)):
            raise EvolutionError("f_values must be finite")
        if f[0] != 0.0:
            raise EvolutionError(f"load must start from f(0) = 0, got {f[0]}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "f_values", f)

    @property
    def monotone(self) -> bool:
        """True when f is non-decreasing (f = 0 counts as monotone)."""
        return bool(np.all(np.diff(self.f_values) >= 0))

    @property
    def f_dot(self) -> np.ndarray:
        return np.gradient(self.f_values, self.times)

    @classmethod
    def linear(cls, T: float = 1.0, steps: int = DEFAULT_STEPS, rate: float = 1.0):
        t = np.linspace(0.0, T, steps + 1)
        return cls(t, rate * t)

    @classmethod
    def triangle(cls, T: float = 1.0, steps: int = DEFAULT_STEPS, peak: float = 1.0,
                 peak_time: Optional[float] = None):
        """Rise linearly to ``peak`` at ``peak_time`` (default T/2), then fall back to 0 at T."""
        t = np.linspace(0.0, T, steps + 1)
        tp = 0.5 * T if peak_time is None else peak_time
        if not 0 < tp < T:
            raise EvolutionError("peak_time must lie in (0, T)")
        return cls(t, np.where(t <= tp, peak * t / tp, peak * (T - t) / (T - tp)))

    @classmethod
    def zero(cls, T: float = 1.0, steps: int = DEFAULT_STEPS):
        t = np.linspace(0.0, T, steps + 1)
        return cls(t, np.zeros_like(t))

    def envelope(self) -> "LoadProgram":
        """Running maximum of |f|."""
        return LoadProgram(self.times, np.maximum.accumulate(np.abs(self.f_values)))


@dataclass(frozen=True)
class JumpRecord:
    t: float
    l_minus: float
    l_plus: float
    step: int  # time index at which the tip has arrived at l_plus


@dataclass(frozen=True, eq=False)
class EnergyLedger:
    elastic: np.ndarray
    dissipated: np.ndarray
    work: np.ndarray
    jump_loss: np.ndarray


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    f_values: np.ndarray
    tip: np.ndarray
    tip_index: np.ndarray  # index into curve.tips
    jumps: list
    ledger: EnergyLedger
    curve: ReleaseCurve
    toughness: np.ndarray
    L0: float

    @property
    def load(self) -> LoadProgram:
        return LoadProgram(self.times, self.f_values)

    def rows(self):
        lg = self.ledger
        for k in range(len(self.times)):
            yield (float(self.times[k]), float(self.f_values[k]), float(self.tip[k]),
                   float(lg.elastic[k]), float(lg.dissipated[k]), float(lg.work[k]),
                   float(lg.jump_loss[k]))


def toughness_for(curve: ReleaseCurve) -> np.ndarray:
    """Right-continuous toughness at every tip of ``curve``."""
    return toughness_array(curve.spec, curve.tips)


def _start_index(curve: ReleaseCurve, L0: float) -> int:
    i = int(np.argmin(np.abs(curve.tips - L0)))
    if abs(curve.tips[i] - L0) > 1e-10 * curve.spec.length_L:
        raise EvolutionError(f"initial tip {L0} is not on the tip lattice")
    return i


def _release_for_evolution(curve: ReleaseCurve) -> np.ndarray:
    g = np.array(curve.release, dtype=float)
    g[-1] = 0.0
    if not np.all(np.isfinite(g)):
        raise EvolutionError("release curve has undefined samples")
    return g


def _stable(f2: np.ndarray, g: np.ndarray, gc: np.ndarray) -> np.ndarray:
    """Strict f^2 G < Gc, ties within TIE_RTOL counted as not stable. Broadcasts."""
    drive = f2 * g
    return drive < gc - TIE_RTOL * np.maximum(gc, np.abs(drive))


def _dissipation_table(curve: ReleaseCurve, gc: np.ndarray, i0: int) -> np.ndarray:
    """D at every tip index: sum of Gc over the cells from tips[i0]."""
    cell = gc[:-1] * np.diff(curve.tips)
    D = np.zeros(len(curve.tips))
    D[i0 + 1:] = np.cumsum(cell[i0:])
    return D


def _build_trace(curve, gc, load, L0, idx) -> EvolutionTrace:
    tips = curve.tips
    i0 = _start_index(curve, L0)
    f = load.f_values
    E = curve.energy
    D = _dissipation_table(curve, gc, i0)

    jumps = []
    jump_loss = np.zeros(len(f))
    adv = np.diff(idx)
    for k in np.flatnonzero(adv >= 2) + 1:
        a, b = idx[k - 1], idx[k]
        jumps.append(JumpRecord(float(load.times[k]), float(tips[a]), float(tips[b]), int(k)))
        jump_loss[k] = f[k] ** 2 * (E[b] - E[a]) + D[b] - D[a]
    jump_loss = np.cumsum(jump_loss)

    elastic = f ** 2 * E[idx]
    integrand = 2.0 * f * load.f_dot * E[idx]
    work = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1])
                                            * np.diff(load.times))])
    ledger = EnergyLedger(elastic, D[idx], work, jump_loss)
    return EvolutionTrace(load.times, f, tips[idx], idx, jumps, ledger, curve,
                          np.asarray(gc, dtype=float), float(tips[i0]))


def evolve(release: ReleaseCurve, toughness: Optional[np.ndarray], load: LoadProgram,
           L0: float) -> EvolutionTrace:
    """
    Griffith evolution from the explicit representation, evaluated at every
    time sample. ``toughness`` defaults to the right-continuous toughness of
    the curve's laminate.
    """
    if not load.monotone:
        raise EvolutionError("load is not monotone: use nonmonotone_wrap")
    gc = toughness_for(release) if toughness is None else np.asarray(toughness, float)
    if gc.shape != release.tips.shape:
        raise EvolutionError("toughness must have one value per tip")
    i0 = _start_index(release, L0)
    g = _release_for_evolution(release)[i0:]
    f2 = load.f_values[:, None] ** 2
    stable = _stable(f2, g[None, :], gc[i0:][None, :])
    stable[:, -1] = True  # G(L) = 0
    if not np.all(stable.any(axis=1)):
        raise EvolutionError("invariant breach: empty candidate set")
    idx = i0 + np.argmax(stable, axis=1)
    return _build_trace(release, gc, load, L0, idx)


def brute_force_evolve(release: ReleaseCurve, toughness: Optional[np.ndarray],
                       load: LoadProgram, L0: float) -> EvolutionTrace:
    """
    Reference driver: at every time step push the tip forward one cell at a
    time while the current cell is not strictly stable.
    """
    if not load.monotone:
        raise EvolutionError("load is not monotone: use nonmonotone_wrap")
    gc = toughness_for(release) if toughness is None else np.asarray(toughness, float)
    g = _release_for_evolution(release)
    i = _start_index(release, L0)
    last = len(release.tips) - 1
    idx = np.empty(len(load.times), dtype=int)
    for k, fk in enumerate(load.f_values):
        while i < last and not _stable(np.float64(fk * fk), g[i], gc[i]):
            i += 1
        idx[k] = i
    return _build_trace(release, gc, load, L0, idx)


@dataclass(frozen=True)
class GriffithReport:
    passed: bool
    stability_violations: list = field(default_factory=list)   # i)
    flow_violations: list = field(default_factory=list)        # ii)
    jump_violations: list = field(default_factory=list)        # iii)
    monotone: bool = True


def griffith_check(trace: EvolutionTrace, load: Optional[LoadProgram] = None,
                   tol: float = 1e-8) -> GriffithReport:
    """
    Check on the lattice:

    i) f^2 G(ell) <= Gc(ell) (1 + tol) at every sample;
    ii) a tip that stays strictly stable under the load at the end of a time
        step does not move during that step;
    iii) at each advance f^2 G(l) >= Gc(l) (1 - tol) for every lattice l in
        [ell-, ell+) (this covers logged jumps and one-cell moves alike).

    ``tol`` is relative to Gc. ``load`` defaults to the trace's own load.
    """
    load = trace.load if load is None else load
    f2 = load.f_values ** 2
    g = _release_for_evolution(trace.curve)
    gc = trace.toughness
    idx = trace.tip_index

    drive = f2 * g[idx]
    bad_i = [(float(load.times[k]), float(trace.tip[k]))
             for k in np.flatnonzero(drive > gc[idx] * (1 + tol))]

    # current cell under the next load
    ahead = f2[1:] * g[idx[:-1]]
    strict = ahead < gc[idx[:-1]] * (1 - tol)
    moved = np.diff(idx) != 0
    bad_ii = [(float(load.times[k + 1]), float(trace.tip[k]))
              for k in np.flatnonzero(strict & moved)]

    bad_iii = []
    for k in range(1, len(idx)):
        if idx[k] <= idx[k - 1]:
            continue
        span = np.arange(idx[k - 1], idx[k])
        weak = f2[k] * g[span] < gc[span] * (1 - tol)
        bad_iii += [(float(load.times[k]), float(trace.curve.tips[s])) for s in span[weak]]

    mono = bool(np.all(np.diff(idx) >= 0))
    return GriffithReport(not (bad_i or bad_ii or bad_iii) and mono,
                          bad_i, bad_ii, bad_iii, mono)


@dataclass(frozen=True, eq=False)
class IdentityReport:
    max_relative_residual: float
    residual: np.ndarray


def energy_identity(trace: EvolutionTrace) -> IdentityReport:
    """
    Residual E - (work - D + jump_loss) at every sample, scaled by
    max(1, peak elastic energy).
    """
    lg = trace.ledger
    res = lg.elastic - (lg.work - lg.dissipated + lg.jump_loss)
    scale = max(1.0, float(np.max(lg.elastic)))
    return IdentityReport(float(np.max(np.abs(res))) / scale, res)


@dataclass(frozen=True)
class JumpCost:
    t: float
    l_minus: float
    l_plus: float
    delta_cost: float
    energy_drop: float  # -[[E]] = f^2 (E(l-) - E(l+))

    @property
    def relative_gap(self) -> float:
        return abs(self.delta_cost - self.energy_drop) / abs(self.energy_drop)


def jump_cost(trace: EvolutionTrace) -> list[JumpCost]:
    """Finsler cost sum max(f^2 G, Gc) dl over the cells crossed by each jump."""
    tips = trace.curve.tips
    g = _release_for_evolution(trace.curve)
    gc = trace.toughness
    E = trace.curve.energy
    dl = np.diff(tips)
    out = []
    for j in trace.jumps:
        k = j.step
        a, b = trace.tip_index[k - 1], trace.tip_index[k]
        f2 = trace.f_values[k] ** 2
        span = np.arange(a, b)
        cost = float(np.sum(np.maximum(f2 * g[span], gc[span]) * dl[span]))
        out.append(JumpCost(j.t, j.l_minus, j.l_plus, cost, float(f2 * (E[a] - E[b]))))
    return out


def nonmonotone_wrap(load: LoadProgram,
                     builder: Callable[[LoadProgram], EvolutionTrace]) -> EvolutionTrace:
    """
    Evolution under a general load: run ``builder`` on the running maximum
    of |f|, then rebuild the ledger with the actual f.

    ``builder`` maps a monotone LoadProgram to its trace, for example
    ``lambda ld: evolve(curve, None, ld, L0)``.
    """
    if load.f_values[0] != 0.0:
        raise EvolutionError("load must start from f(0) = 0")
    env = load.envelope()
    base = builder(env)
    return _build_trace(base.curve, base.toughness, load, base.L0, base.tip_index)
