"""
Laminate geometry and material laws
===================================

Two-phase periodic laminates in anti-plane shear. The domain is the rectangle
(0, L) x (-H, H) with the crack running along y = 0 from x = 0.

Vertical laminates stack ``n_layers`` periods of width L/n along x; each period
holds a phase-A strip of width lambda*L/n followed by a phase-B strip.
Horizontal laminates stack ``n_layers`` periods of thickness 2H/n along y,
starting at y = -H, phase A in the lower part of each period. With n even the
line y = 0 is a period boundary, so the crack runs along an A/B interface.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# relative tolerance for the product constraint mu_A1*mu_A2 == mu_B1*mu_B2
PRODUCT_RTOL = 1e-12


class Orientation(str, enum.Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


class ClosedFormNotApplicable(ValueError):
    """Raised when the explicit effective-toughness formula does not apply."""


@dataclass(frozen=True)
class MaterialPhase:
    """
    Orthotropic anti-plane phase.

    Attributes:
        mu1: shear modulus along x1
        mu2: shear modulus along x2
        gc: toughness (energy per unit crack length)
    """
    mu1: float
    mu2: float
    gc: float

    def __post_init__(self):
        for name in ("mu1", "mu2", "gc"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def tensor(self) -> np.ndarray:
        return np.diag([self.mu1, self.mu2])


@dataclass(frozen=True)
class LaminateSpec:
    """
    Periodic two-phase laminate on (0, L) x (-H, H).

    ``interface_gc`` is the toughness of the crack path for horizontal layers;
    when omitted it falls back to ``phase_a.gc``. It is ignored for vertical
    layers, where the toughness alternates with the layers.
    """
    length_L: float
    height_H: float
    n_layers: int
    lam: float
    phase_a: MaterialPhase
    phase_b: MaterialPhase
    orientation: Orientation = Orientation.VERTICAL
    interface_gc: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if not (self.length_L > 0 and self.height_H > 0):
            raise ValueError("length_L and height_H must be positive")
        if int(self.n_layers) != self.n_layers or self.n_layers < 1:
            raise ValueError(f"n_layers must be a positive integer, got {self.n_layers}")
        object.__setattr__(self, "n_layers", int(self.n_layers))
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0,1), got {self.lam}")
        if self.orientation is Orientation.HORIZONTAL and self.n_layers % 2:
            raise ValueError(
                f"horizontal layers require an even n_layers so that the crack "
                f"lies on an interface, got {self.n_layers}")
        if self.interface_gc is not None and not self.interface_gc > 0:
            raise ValueError("interface_gc must be positive")

    @property
    def period(self) -> float:
        """Period length along the layering direction."""
        if self.orientation is Orientation.VERTICAL:
            return self.length_L / self.n_layers
        return 2.0 * self.height_H / self.n_layers

    @property
    def is_homogeneous(self) -> bool:
        return self.phase_a == self.phase_b

    @property
    def crack_gc(self) -> float:
        """Constant crack-path toughness of a horizontal laminate."""
        return self.phase_a.gc if self.interface_gc is None else self.interface_gc

    def interfaces(self) -> np.ndarray:
        """
        Sorted interface abscissae {kL/n, (k+lambda)L/n} in [0, L] (vertical),
        or ordinates of the layer boundaries in [-H, H] (horizontal).
        """
        k = np.arange(self.n_layers, dtype=float)
        p = self.period
        start = 0.0 if self.orientation is Orientation.VERTICAL else -self.height_H
        pts = np.concatenate([start + k * p, start + (k + self.lam) * p,
                              [start + self.n_layers * p]])
        return np.sort(pts)

    def with_layers(self, n_layers: int) -> "LaminateSpec":
        return LaminateSpec(self.length_L, self.height_H, n_layers, self.lam,
                            self.phase_a, self.phase_b, self.orientation,
                            self.interface_gc)

    def swapped(self) -> "LaminateSpec":
        """Same laminate with the roles of A and B exchanged (lambda -> 1 - lambda)."""
        return LaminateSpec(self.length_L, self.height_H, self.n_layers, 1.0 - self.lam,
                            self.phase_b, self.phase_a, self.orientation,
                            self.interface_gc)


def _layer_coordinate(spec: LaminateSpec, point) -> float:
    x, y = float(point[0]), float(point[1])
    if not (0.0 < x < spec.length_L and -spec.height_H < y < spec.height_H):
        raise ValueError(f"point {point} is not inside the domain")
    if spec.orientation is Orientation.VERTICAL:
        return x / spec.period
    return (y + spec.height_H) / spec.period


def phase_index(spec: LaminateSpec, coords: np.ndarray) -> np.ndarray:
    """
    Vectorised phase lookup: 0 for phase A, 1 for phase B.

    ``coords`` is an (m, 2) array of points off the interfaces, typically
    element centroids.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if spec.orientation is Orientation.VERTICAL:
        s = coords[:, 0] / spec.period
    else:
        s = (coords[:, 1] + spec.height_H) / spec.period
    frac = s - np.floor(s)
    return np.where(frac < spec.lam, 0, 1)


def stiffness_at(spec: LaminateSpec, point) -> np.ndarray:
    """Diagonal stiffness tensor of the phase occupying ``point``."""
    s = _layer_coordinate(spec, point)
    frac = s - math.floor(s)
    tol = 1e-12 * max(1.0, s)
    if frac < tol or abs(frac - spec.lam) < tol or 1.0 - frac < tol:
        raise ValueError(f"interface point {tuple(point)}: stiffness undefined")
    phase = spec.phase_a if frac < spec.lam else spec.phase_b
    return phase.tensor


def toughness_at(spec: LaminateSpec, l: float) -> float:
    """
    Right-continuous toughness at tip abscissa ``l``.

    On an interface the value of the layer to the right is returned; at the
    end of the domain the toughness of phase A is used by convention.
    """
    if spec.orientation is Orientation.HORIZONTAL:
        raise ValueError("toughness_at is for vertical layers; use spec.crack_gc")
    L = spec.length_L
    if not 0.0 <= l <= L:
        raise ValueError(f"tip abscissa {l} outside [0, {L}]")
    if l == L:
        return spec.phase_a.gc
    return float(toughness_array(spec, np.array([l]))[0])


def toughness_array(spec: LaminateSpec, tips: np.ndarray) -> np.ndarray:
    """Vectorised :func:`toughness_at`; horizontal laminates give the constant crack toughness."""
    tips = np.asarray(tips, dtype=float)
    if spec.orientation is Orientation.HORIZONTAL:
        return np.full(tips.shape, spec.crack_gc)
    s = tips / spec.period
    # snap values that sit on an interface up to float noise
    k = np.floor(s + 1e-9)
    frac = np.clip(s - k, 0.0, None)
    on_lambda = np.abs(frac - spec.lam) < 1e-9
    is_a = (frac < spec.lam) & ~on_lambda
    gc = np.where(is_a, spec.phase_a.gc, spec.phase_b.gc)
    return np.where(np.isclose(tips, spec.length_L, rtol=0, atol=1e-12 * spec.length_L),
                    spec.phase_a.gc, gc)


@dataclass(frozen=True)
class HomogenizedModel:
    mu_hom1: float
    mu_hom2: float
    gc_hom: float
    gc_eff_closed_form: Optional[float] = None

    @property
    def phase(self) -> MaterialPhase:
        """Homogenized stiffness packaged as a phase, toughness set to gc_hom."""
        return MaterialPhase(self.mu_hom1, self.mu_hom2, self.gc_hom)


def product_constraint_holds(spec: LaminateSpec, rtol: float = PRODUCT_RTOL) -> bool:
    a, b = spec.phase_a, spec.phase_b
    pa, pb = a.mu1 * a.mu2, b.mu1 * b.mu2
    return abs(pa - pb) <= rtol * max(abs(pa), abs(pb))


def effective_toughness_closed_form(spec: LaminateSpec) -> float:
    """
    Explicit effective toughness of a vertical laminate whose phases satisfy
    mu_A1*mu_A2 = mu_B1*mu_B2::

        lam * max(Gc_A, Gc_B mu_B1/mu_A1) + (1 - lam) * max(Gc_A mu_A1/mu_B1, Gc_B)

    For horizontal laminates the effective toughness is the crack-path
    toughness itself.
    """
    if spec.orientation is Orientation.HORIZONTAL:
        return spec.crack_gc
    if not product_constraint_holds(spec):
        raise ClosedFormNotApplicable(
            "closed form not applicable: mu_A1*mu_A2 != mu_B1*mu_B2")
    a, b, lam = spec.phase_a, spec.phase_b, spec.lam
    return (lam * max(a.gc, b.gc * b.mu1 / a.mu1)
            + (1.0 - lam) * max(a.gc * a.mu1 / b.mu1, b.gc))


def homogenized_model(spec: LaminateSpec) -> HomogenizedModel:
    a, b, lam = spec.phase_a, spec.phase_b, spec.lam
    harmonic = lambda pa, pb: 1.0 / (lam / pa + (1.0 - lam) / pb)
    arithmetic = lambda pa, pb: lam * pa + (1.0 - lam) * pb
    if spec.orientation is Orientation.VERTICAL:
        mu1, mu2 = harmonic(a.mu1, b.mu1), arithmetic(a.mu2, b.mu2)
        gc_hom = arithmetic(a.gc, b.gc)
    else:
        mu1, mu2 = arithmetic(a.mu1, b.mu1), harmonic(a.mu2, b.mu2)
        gc_hom = spec.crack_gc
    try:
        gc_eff = effective_toughness_closed_form(spec)
    except ClosedFormNotApplicable:
        gc_eff = None
    return HomogenizedModel(mu1, mu2, gc_hom, gc_eff)


def homogenized_spec(spec: LaminateSpec) -> LaminateSpec:
    """
    Homogeneous laminate carrying the homogenized stiffness, on the same layer
    lattice as ``spec`` so that meshes and tip lattices coincide.
    """
    model = homogenized_model(spec)
    gc = model.gc_eff_closed_form if model.gc_eff_closed_form is not None else model.gc_hom
    phase = MaterialPhase(model.mu_hom1, model.mu_hom2, gc)
    return LaminateSpec(spec.length_L, spec.height_H, spec.n_layers, spec.lam,
                        phase, phase, spec.orientation, spec.interface_gc)


def ref1(orientation: Orientation = Orientation.VERTICAL, n_layers: int = 2) -> LaminateSpec:
    """Reference laminate: L=1, H=0.5, lambda=0.5, A=(1,1,1), B=(4,0.25,1)."""
    return LaminateSpec(1.0, 0.5, n_layers, 0.5,
                        MaterialPhase(1.0, 1.0, 1.0), MaterialPhase(4.0, 0.25, 1.0),
                        Orientation(orientation))
