"""
Structured meshes of the cracked rectangle.

Node numbering is column-major on the base tensor grid: node ``i*(ny+1) + j``
sits at ``(x[i], y[j])``. The crack occupies the row ``y == 0`` for ``x < l``;
each of those nodes gets a duplicate appended after the base grid. The base
node belongs to the upper face and the duplicate to the lower face; elements
below the crack are rewired to the duplicates. The tip node is not split.

Quadrilaterals are listed counter-clockwise starting at the lower-left corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .materials import LaminateSpec, Orientation, phase_index


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class MeshParams:
    """
    Attributes:
        elems_per_layer_x: elements across each material strip along x1
            (vertical layers)
        elems_y: elements across each half-height
        refine_near_crack: power-law grading exponent toward y = 0, in [1, 4];
            1 (uniform) keeps the domain-integral release consistent with
            energy differences next to interfaces, grading makes it worse
        elems_x: uniform element count along x1 for horizontal layers; defaults
            to ``8 * elems_per_layer_x``
    """
    elems_per_layer_x: int = 8
    elems_y: int = 16
    refine_near_crack: float = 1.0
    elems_x: Optional[int] = None

    def __post_init__(self):
        if self.elems_per_layer_x < 2:
            raise MeshError("misaligned mesh: elems_per_layer_x must be >= 2")
        if self.elems_y < 4:
            raise MeshError("elems_y must be >= 4")
        if not 1.0 <= self.refine_near_crack <= 4.0:
            raise MeshError("refine_near_crack must lie in [1, 4]")
        if self.elems_x is not None and self.elems_x < 2:
            raise MeshError("elems_x must be >= 2")

    @property
    def horizontal_elems_x(self) -> int:
        return self.elems_x if self.elems_x is not None else 8 * self.elems_per_layer_x


def x_grid(spec: LaminateSpec, params: MeshParams) -> np.ndarray:
    """Mesh abscissae, uniform inside each material strip."""
    L = spec.length_L
    if spec.orientation is Orientation.HORIZONTAL:
        return np.linspace(0.0, L, params.horizontal_elems_x + 1)
    bounds = spec.interfaces()
    m = params.elems_per_layer_x
    pieces = [np.linspace(a, b, m + 1)[:-1] for a, b in zip(bounds[:-1], bounds[1:])]
    xs = np.concatenate(pieces + [[L]])
    # pin every interface exactly
    xs[::m] = bounds
    return xs


def y_grid(spec: LaminateSpec, params: MeshParams) -> np.ndarray:
    """Mesh ordinates over (-H, H), symmetric about y = 0."""
    H = spec.height_H
    if spec.orientation is Orientation.VERTICAL:
        s = np.linspace(0.0, 1.0, params.elems_y + 1)
        upper = H * s ** params.refine_near_crack
    else:
        bounds = spec.interfaces()
        bounds = bounds[bounds >= -1e-14 * H]
        bounds[0] = 0.0
        per_strip = max(2, math.ceil(params.elems_y / (len(bounds) - 1)))
        pieces = [np.linspace(a, b, per_strip + 1)[:-1]
                  for a, b in zip(bounds[:-1], bounds[1:])]
        upper = np.concatenate(pieces + [[H]])
    # lower half mirrors the upper so that y=0 symmetry is exact
    return np.concatenate([-upper[:0:-1], upper])


def admissible_tips(spec: LaminateSpec, params: MeshParams) -> np.ndarray:
    """Mesh abscissae in (0, L]: the lattice on which the crack tip may sit."""
    return x_grid(spec, params)[1:]


@dataclass(frozen=True)
class PaperStep:
    """Step datum: -1 on the lower left edge, +1 on the upper left edge, 0 on the right edge."""

    def __call__(self, x, y, side, L, H):
        x, y, side = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                         np.asarray(side))
        upper = (y > 0) | ((y == 0) & (side > 0))
        return np.where(x == L, 0.0, np.where(upper, 1.0, -1.0))


@dataclass(frozen=True)
class CustomDatum:
    """Datum given by ``profile(x, y, side)``; ``side`` is +1/-1 on crack faces, 0 elsewhere."""
    profile: Callable

    def __call__(self, x, y, side, L, H):
        return np.asarray(self.profile(x, y, side), dtype=float) * np.ones(np.shape(x))


def on_dirichlet_boundary(x, y, side, L: float) -> np.ndarray:
    x, y, side = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                     np.asarray(side))
    return (x == L) | ((x == 0) & ((y != 0) | (side != 0)))


def boundary_datum(mode, node, spec: LaminateSpec, side: int = 0) -> float:
    """
    Datum at one boundary node. ``side`` distinguishes the two copies of the
    corner node at the crack mouth.
    """
    x, y = float(node[0]), float(node[1])
    if not on_dirichlet_boundary(x, y, side, spec.length_L):
        raise MeshError(f"node {tuple(node)} is not on the Dirichlet boundary")
    return float(mode(x, y, side, spec.length_L, spec.height_H))


@dataclass(frozen=True, eq=False)
class CrackedMesh:
    spec: LaminateSpec
    params: MeshParams
    xs: np.ndarray
    ys: np.ndarray
    nodes: np.ndarray
    elems: np.ndarray
    elem_phase: np.ndarray
    elem_column: np.ndarray
    crack_tip_l: float
    upper_face: np.ndarray
    lower_face: np.ndarray
    node_side: np.ndarray
    dirichlet_nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def admissible_tips(self) -> np.ndarray:
        return self.xs[1:]

    def dirichlet_values(self, mode) -> np.ndarray:
        p = self.nodes[self.dirichlet_nodes]
        return np.asarray(mode(p[:, 0], p[:, 1], self.node_side[self.dirichlet_nodes],
                               self.spec.length_L, self.spec.height_H), dtype=float)

    def centroids(self) -> np.ndarray:
        return self.nodes[self.elems].mean(axis=1)

    def dump(self, path) -> None:
        """Write "nodes elems" header, node lines "id x y", element lines "id n1 n2 n3 n4 phase"."""
        with open(path, "w") as fh:
            fh.write(f"{self.n_nodes} {len(self.elems)}\n")
            for i, (x, y) in enumerate(self.nodes):
                fh.write(f"{i} {x!r} {y!r}\n")
            for e, (conn, ph) in enumerate(zip(self.elems, self.elem_phase)):
                fh.write(f"{e} {conn[0]} {conn[1]} {conn[2]} {conn[3]} {'AB'[ph]}\n")


def _tip_index(xs: np.ndarray, l: float) -> int:
    i = int(np.searchsorted(xs, l))
    for k in (i - 1, i, i + 1):
        if 1 <= k < len(xs) and abs(xs[k] - l) <= 1e-10 * xs[-1]:
            return k
    raise MeshError(f"inadmissible tip {l}: not on the tip lattice")


def build_mesh(spec: LaminateSpec, params: MeshParams, l: float) -> CrackedMesh:
    xs = x_grid(spec, params)
    ys = y_grid(spec, params)
    itip = _tip_index(xs, l)
    nx, ny = len(xs) - 1, len(ys) - 1
    j0 = ny // 2
    if ys[j0] != 0.0:
        raise MeshError("misaligned mesh: y = 0 is not a mesh line")

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    base = np.column_stack([X.ravel(), Y.ravel()])
    nid = lambda i, j: i * (ny + 1) + j

    upper_face = nid(np.arange(itip), j0)
    n_base = len(base)
    lower_face = n_base + np.arange(itip)
    nodes = np.vstack([base, base[upper_face]])
    node_side = np.zeros(len(nodes), dtype=int)
    node_side[upper_face] = 1
    node_side[lower_face] = -1

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    elems = np.column_stack([nid(ii, jj), nid(ii + 1, jj), nid(ii + 1, jj + 1), nid(ii, jj + 1)])
    # elements just below the crack line take the lower-face copies
    below = jj == j0 - 1
    remap = np.arange(len(nodes))
    remap[upper_face] = lower_face
    for c in (2, 3):
        col = elems[below, c]
        elems[below, c] = remap[col]

    centroids = nodes[elems].mean(axis=1)
    elem_phase = phase_index(spec, centroids)

    L = spec.length_L
    on_d = on_dirichlet_boundary(nodes[:, 0], nodes[:, 1], node_side, L)
    dirichlet = np.flatnonzero(on_d)

    return CrackedMesh(spec, params, xs, ys, nodes, elems, elem_phase, ii,
                       float(xs[itip]), upper_face, lower_face, node_side, dirichlet)
