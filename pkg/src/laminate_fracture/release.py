"""
Energy release rate.

The release rate G(l) = -dE/dl is obtained from a domain integral: stretch
the abscissa by a Lipschitz profile phi(x1) with phi(l) = 1 and differentiate
the elastic energy along the stretch. For a field u this gives

    G(l) = 1/2 * integral of (mu1 u_x^2 - mu2 u_y^2) phi'(x1) dx,

evaluated with the same quadrature as the stiffness, with phi' constant on
each element column. A forward difference of condensed energies is kept as an
independent check.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .elastic import (DEFAULT_TOL, DisplacementField, condensed_energy,
                      element_energy_densities, element_moduli, energy_at, solve)
from .materials import LaminateSpec, Orientation
from .mesh import CrackedMesh, MeshParams, PaperStep, admissible_tips, build_mesh

# samples to the right of an interface used for the right lower limit
M_RIGHT = 3

REGULAR = "regular"
INTERFACE = "interface-extended"
TERMINAL = "terminal"


class Source(str, enum.Enum):
    DOMAIN_INTEGRAL = "domain-integral"
    FINITE_DIFFERENCE = "finite-difference"


class InvalidExtension(ValueError):
    pass


def interface_mask(spec: LaminateSpec, tips: np.ndarray) -> np.ndarray:
    """
    True where a tip sits on a vertical interface (or at L). Layer lines of a
    homogeneous spec are not interfaces.
    """
    tips = np.asarray(tips, dtype=float)
    if spec.orientation is Orientation.HORIZONTAL or spec.is_homogeneous:
        return np.isclose(tips, spec.length_L, rtol=0, atol=1e-12)
    lam_pts = spec.interfaces()
    d = np.abs(tips[:, None] - lam_pts[None, :]).min(axis=1)
    return d <= 1e-10 * spec.length_L


def strip_bounds(spec: LaminateSpec, l: float) -> tuple[float, float]:
    """
    Material strip [a, b] containing ``l`` (left-closed: an interface belongs
    to the strip on its right). A homogeneous spec is a single strip.
    """
    if spec.is_homogeneous:
        return 0.0, spec.length_L
    pts = spec.interfaces()
    k = int(np.searchsorted(pts, l + 1e-10 * spec.length_L, side="right")) - 1
    k = min(max(k, 0), len(pts) - 2)
    return float(pts[k]), float(pts[k + 1])


def hat_profile(left: float, peak: float, right: float) -> Callable:
    """Piecewise-linear profile: 0 outside (left, right), 1 at ``peak``."""
    def phi(x):
        x = np.asarray(x, dtype=float)
        up = np.where(peak > left, (x - left) / max(peak - left, 1e-300), 1.0)
        down = np.where(right > peak, (right - x) / max(right - peak, 1e-300), 1.0)
        out = np.where(x <= peak, up, down)
        return np.clip(np.where((x <= left) | (x >= right), 0.0, out), 0.0, 1.0)
    return phi


def trapezoid_profile(a: float, b: float, c: float, d: float) -> Callable:
    """0 outside (a, d), affine on (a, b) and (c, d), 1 on [b, c]; b == a or c == d drops that ramp."""
    def phi(x):
        x = np.asarray(x, dtype=float)
        up = (x - a) / (b - a) if b > a else np.where(x > a, 1.0, 0.0)
        down = (d - x) / (d - c) if d > c else np.where(x < d, 1.0, 0.0)
        return np.clip(np.minimum(up, down), 0.0, 1.0)
    return phi


def canonical_profile(spec: LaminateSpec, xs: np.ndarray, l: float) -> Callable:
    """
    Default virtual extension for a tip at ``l``.

    Vertical layers: trapezoid supported on the strip (a, b) containing ``l``,
    equal to 1 on a plateau around the tip that covers about half the room on
    each side (whole lattice cells), with affine ramps down to a and b.
    Horizontal layers: the fixed trapezoid 0 on (0, L/8), ramps on (L/8, L/4)
    and (3L/4, 7L/8); a tip outside the plateau gets the nearer ramp pulled in.

    The plateau matters: the domain integral is the exact derivative of the
    discrete energy under the stretch x -> x + eps*phi(x), so a ramp through
    the tip element also differentiates the tip discretisation error.
    """
    L = spec.length_L
    if spec.orientation is Orientation.VERTICAL:
        a, b = strip_bounds(spec, l)
        h = float(np.min(np.diff(xs[(xs >= a - 1e-12) & (xs <= b + 1e-12)])))
        left = l - np.floor(0.5 * (l - a) / h + 1e-9) * h
        right = l + np.floor(0.5 * (b - l) / h + 1e-9) * h
        return trapezoid_profile(a, left, right, b)
    r = L / 8
    if 2 * r <= l <= L - 2 * r:
        return trapezoid_profile(r, 2 * r, L - 2 * r, L - r)
    if l < 2 * r:
        return trapezoid_profile(l / 4, l / 2, L - 2 * r, L - r)
    return trapezoid_profile(r, 2 * r, l + (L - l) / 2, l + 3 * (L - l) / 4)


def _check_profile(spec: LaminateSpec, mesh: CrackedMesh, nodal: np.ndarray, l: float):
    xs = mesh.xs
    itip = int(np.argmin(np.abs(xs - l)))
    if abs(nodal[itip] - 1.0) > 1e-12:
        raise InvalidExtension(f"phi(l) must equal 1, got {nodal[itip]}")
    if spec.orientation is Orientation.VERTICAL:
        a, b = strip_bounds(spec, l)
        if l <= a + 1e-12 or l >= b - 1e-12:
            raise InvalidExtension(f"tip {l} lies on an interface")
        outside = (xs <= a + 1e-12) | (xs >= b - 1e-12)
        if np.any(nodal[outside] != 0.0):
            raise InvalidExtension(
                f"invalid virtual extension: support of phi leaves the strip ({a}, {b})")
    elif nodal[0] != 0.0 or nodal[-1] != 0.0:
        raise InvalidExtension("invalid virtual extension: phi must vanish at x=0 and x=L")


def release_domain_integral(mesh: CrackedMesh, field: DisplacementField,
                            moduli: Optional[np.ndarray] = None,
                            phi: Optional[Callable] = None) -> float:
    """Release rate at ``mesh.crack_tip_l`` from the domain integral with profile ``phi``."""
    spec, l = mesh.spec, mesh.crack_tip_l
    if moduli is None:
        moduli = element_moduli(mesh)
    if phi is None:
        phi = canonical_profile(spec, mesh.xs, l)
    nodal = np.asarray(phi(mesh.xs), dtype=float)
    _check_profile(spec, mesh, nodal, l)
    dphi = np.diff(nodal) / np.diff(mesh.xs)
    ex, ey = element_energy_densities(field, moduli)
    return 0.5 * float(np.sum((ex - ey) * dphi[mesh.elem_column]))


def release_fd_oracle(spec: LaminateSpec, params: MeshParams, l: float, h: float,
                      datum=None, tol: float = DEFAULT_TOL) -> float:
    """Forward difference (E(l) - E(l+h)) / h of condensed energies."""
    if spec.orientation is Orientation.VERTICAL:
        a, b = strip_bounds(spec, l)
        if l + h > b + 1e-10 * spec.length_L:
            raise ValueError(f"step [{l}, {l + h}] straddles interface {b}")
    e0 = energy_at(spec, params, l, datum, tol).energy
    e1 = energy_at(spec, params, l + h, datum, tol).energy
    return (e0 - e1) / h


@dataclass(frozen=True, eq=False)
class ReleaseCurve:
    tips: np.ndarray
    energy: np.ndarray
    release: np.ndarray
    flags: np.ndarray
    source: Source
    spec: LaminateSpec
    params: MeshParams
    datum: str = "paper-step"

    def at(self, l: float) -> float:
        """Value at a lattice tip."""
        i = int(np.argmin(np.abs(self.tips - l)))
        if abs(self.tips[i] - l) > 1e-10 * self.spec.length_L:
            raise ValueError(f"{l} is not a sample of this curve")
        return float(self.release[i])

    def interpolate(self, l) -> np.ndarray:
        return np.interp(l, self.tips, self.release)

    def scaled(self, factor: float) -> "ReleaseCurve":
        return ReleaseCurve(self.tips, self.energy * factor, self.release * factor,
                            self.flags, self.source, self.spec, self.params, self.datum)

    def rows(self):
        for l, e, g, fl in zip(self.tips, self.energy, self.release, self.flags):
            yield float(l), float(e), float(g), str(fl)


def _sample(spec, params, l, datum, tol, need_release):
    mesh = build_mesh(spec, params, l)
    field = solve(mesh, datum=datum, tol=tol)
    e = condensed_energy(mesh, field).energy
    g = release_domain_integral(mesh, field) if need_release else np.nan
    return e, g


def release_curve(spec: LaminateSpec, params: MeshParams, datum=None,
                  tol: float = DEFAULT_TOL, source: Source = Source.DOMAIN_INTEGRAL,
                  threads: int = 1, tips: Optional[np.ndarray] = None) -> ReleaseCurve:
    """
    Condensed energy and release rate at every lattice tip.

    Interface tips take the minimum over the next ``M_RIGHT`` samples to the
    right; the last tip (l = L) has release 0.
    """
    source = Source(source)
    if spec.orientation is Orientation.VERTICAL and params.elems_per_layer_x < 4:
        raise ValueError("release curves need elems_per_layer_x >= 4")
    datum = PaperStep() if datum is None else datum
    all_tips = admissible_tips(spec, params)
    tips = all_tips if tips is None else np.asarray(tips, dtype=float)
    on_iface = interface_mask(spec, tips)
    need = (~on_iface) & (source is Source.DOMAIN_INTEGRAL)

    job = lambda k: _sample(spec, params, tips[k], datum, tol, bool(need[k]))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(job, range(len(tips))))
    else:
        out = [job(k) for k in range(len(tips))]
    energy = np.array([o[0] for o in out])
    release = np.array([o[1] for o in out])

    if source is Source.FINITE_DIFFERENCE:
        release = np.empty_like(energy)
        release[:-1] = (energy[:-1] - energy[1:]) / np.diff(tips)
        release[-1] = np.nan

    flags = np.full(len(tips), REGULAR, dtype=object)
    L = spec.length_L
    for k in np.flatnonzero(on_iface):
        if abs(tips[k] - L) <= 1e-12 * L:
            release[k] = 0.0
            flags[k] = TERMINAL
            continue
        window = release[k + 1:k + 1 + M_RIGHT]
        window = window[np.isfinite(window)]
        release[k] = float(window.min()) if len(window) else np.nan
        flags[k] = INTERFACE
    name = getattr(datum, "__class__", type(datum)).__name__
    return ReleaseCurve(tips, energy, release, flags, source, spec, params,
                        "paper-step" if isinstance(datum, PaperStep) else name)


def holder_check(curve: ReleaseCurve, window: tuple[float, float]) -> float:
    """Largest |G(l1) - G(l2)| / |l1 - l2|^(1/2) over samples in ``window``."""
    lo, hi = window
    L = curve.spec.length_L
    if not 0.0 < lo < hi < L:
        raise ValueError(f"window {window} must lie inside (0, {L})")
    sel = (curve.tips >= lo) & (curve.tips <= hi) & (curve.flags == REGULAR)
    t, g = curve.tips[sel], curve.release[sel]
    if len(t) < 2:
        raise ValueError("insufficient samples in window")
    dl = np.abs(t[:, None] - t[None, :])
    dg = np.abs(g[:, None] - g[None, :])
    off = dl > 0
    return float(np.max(dg[off] / np.sqrt(dl[off])))


def integral_consistency(curve: ReleaseCurve) -> float:
    """
    Largest |E(l1) - E(l2) - trapezoid(G)| over consecutive regular samples
    inside one strip (no interface between them).
    """
    t, e, g, fl = curve.tips, curve.energy, curve.release, curve.flags
    ok = (fl[:-1] == REGULAR) & (fl[1:] == REGULAR)
    drop = e[:-1] - e[1:]
    trap = 0.5 * (g[:-1] + g[1:]) * np.diff(t)
    gap = np.abs(drop - trap)[ok]
    return float(gap.max()) if len(gap) else 0.0
