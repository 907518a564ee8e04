"""Conforming 2D triangular meshes with full facet connectivity.

A mesh stores vertices, counterclockwise triangles, and a facet table in
struct-of-arrays layout. Every facet carries a fixed unit normal oriented
from its first owner element outward, so jump/average quantities downstream
have an unambiguous sign.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# Reference coordinates of the three local vertices of a triangle.
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class MeshTopologyError(Exception):
    """Element list does not describe a valid conforming 2D triangulation."""


@dataclass(frozen=True)
class FacetGeom:
    """Per-facet view: endpoints, owners, oriented normal, measures."""

    endpoints: tuple[int, int]
    elements: tuple[int, int]  # (K1, K2); K2 == -1 on the boundary
    normal: np.ndarray
    measure: float
    diameter: float
    midpoint: np.ndarray

    @property
    def is_boundary(self) -> bool:
        return self.elements[1] < 0


@dataclass
class Mesh:
    """Triangular mesh with facet connectivity.

    Facet arrays are indexed by facet id, deterministically ordered by the
    sorted endpoint pair. `f_elems[:, 1] == -1` marks boundary facets.
    `f_ref_ends[f, side, endpoint]` gives the reference-triangle coordinates
    of the facet endpoints inside each owner, so facet quadrature points map
    consistently into both neighbouring elements.
    """

    vertices: np.ndarray          # (nv, 2)
    elements: np.ndarray          # (nel, 3) CCW vertex triples
    dim: int = 2
    # filled by __post_init__
    areas: np.ndarray = field(init=False)
    diameters: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)
    f_vertices: np.ndarray = field(init=False)   # (nf, 2) sorted endpoint ids
    f_elems: np.ndarray = field(init=False)      # (nf, 2)
    f_normal: np.ndarray = field(init=False)     # (nf, 2), K1 -> K2 / outward
    f_measure: np.ndarray = field(init=False)    # (nf,)
    f_midpoint: np.ndarray = field(init=False)   # (nf, 2)
    f_ref_ends: np.ndarray = field(init=False)   # (nf, 2, 2, 2), nan on side 2 of boundary
    elem_facets: np.ndarray = field(init=False)  # (nel, 3)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshTopologyError("vertices must be an (nv, 2) array")
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise MeshTopologyError("elements must be an (nel, 3) array")
        p = self.vertices[self.elements]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        signed = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(signed <= 0.0):
            bad = int(np.argmin(signed))
            raise MeshTopologyError(
                f"element {bad} is degenerate or not counterclockwise "
                f"(signed area {signed[bad]:.3e})")
        self.areas = signed
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        self.diameters = np.linalg.norm(edges, axis=2).max(axis=1)
        self.centroids = p.mean(axis=1)
        self._build_facets()

    # -- facet extraction ------------------------------------------------

    def _build_facets(self):
        nel = len(self.elements)
        owners: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for e in range(nel):
            tri = self.elements[e]
            for loc, (a, b) in enumerate(((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))):
                key = (min(a, b), max(a, b))
                owners.setdefault(key, []).append((e, loc))
        for key, lst in owners.items():
            if len(lst) > 2:
                raise MeshTopologyError(f"non-manifold edge {key}: {len(lst)} owner elements")

        keys = sorted(owners)
        nf = len(keys)
        self.f_vertices = np.array(keys, dtype=int).reshape(nf, 2)
        self.f_elems = np.full((nf, 2), -1, dtype=int)
        self.f_normal = np.zeros((nf, 2))
        self.f_measure = np.zeros(nf)
        self.f_midpoint = np.zeros((nf, 2))
        self.f_ref_ends = np.full((nf, 2, 2, 2), np.nan)
        self.elem_facets = np.full((nel, 3), -1, dtype=int)

        for fid, key in enumerate(keys):
            lst = sorted(owners[key])  # K1 = lower element index
            pa, pb = self.vertices[key[0]], self.vertices[key[1]]
            t = pb - pa
            length = float(np.hypot(*t))
            n = np.array([t[1], -t[0]]) / length
            mid = 0.5 * (pa + pb)
            k1 = lst[0][0]
            if np.dot(n, mid - self.centroids[k1]) < 0.0:
                n = -n
            self.f_measure[fid] = length
            self.f_midpoint[fid] = mid
            self.f_normal[fid] = n
            for side, (e, _loc) in enumerate(lst):
                self.f_elems[fid, side] = e
                tri = self.elements[e]
                la = int(np.where(tri == key[0])[0][0])
                lb = int(np.where(tri == key[1])[0][0])
                self.f_ref_ends[fid, side, 0] = _REF_VERTS[la]
                self.f_ref_ends[fid, side, 1] = _REF_VERTS[lb]
            for e, loc in lst:
                self.elem_facets[e, loc] = fid

        if np.any(self.elem_facets < 0):
            raise MeshTopologyError("element with unmatched edge")

    # -- accessors -------------------------------------------------------

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_facets(self) -> int:
        return len(self.f_vertices)

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.f_elems[:, 1] < 0

    def facet(self, fid: int) -> FacetGeom:
        return FacetGeom(
            endpoints=tuple(self.f_vertices[fid]),
            elements=tuple(self.f_elems[fid]),
            normal=self.f_normal[fid].copy(),
            measure=float(self.f_measure[fid]),
            diameter=float(self.f_measure[fid]),
            midpoint=self.f_midpoint[fid].copy(),
        )

    def facet_points(self, s: np.ndarray) -> np.ndarray:
        """Physical points on every facet at arclength parameters s in [0,1].

        Returns an (nf, len(s), 2) array; the parameterization runs from the
        lower to the higher endpoint id, identically on both sides.
        """
        s = np.asarray(s, dtype=float)
        pa = self.vertices[self.f_vertices[:, 0]][:, None, :]
        pb = self.vertices[self.f_vertices[:, 1]][:, None, :]
        return pa * (1.0 - s)[None, :, None] + pb * s[None, :, None]

    def facet_ref_points(self, fid: int, side: int, s: np.ndarray) -> np.ndarray:
        """Reference coordinates of facet points inside owner `side` (0/1)."""
        ra = self.f_ref_ends[fid, side, 0]
        rb = self.f_ref_ends[fid, side, 1]
        if np.any(np.isnan(ra)):
            raise ValueError(f"facet {fid} has no side {side}")
        s = np.asarray(s, dtype=float)
        return ra[None, :] * (1.0 - s)[:, None] + rb[None, :] * s[:, None]

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Mesh":
        doc = json.loads(text)
        return cls(vertices=np.array(doc["vertices"], dtype=float),
                   elements=np.array(doc["elements"], dtype=int))


def build_structured_triangular(n: int, rect=(0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """Uniform triangulation of an axis-aligned rectangle: n x n cells, each
    split along the lower-left to upper-right diagonal (2 n^2 triangles)."""
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    x0, y0, x1, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle")
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    elements = []
    for i in range(n):
        for j in range(n):
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            elements.append((a, b, c))
            elements.append((a, c, d))
    return Mesh(vertices=vertices, elements=np.array(elements, dtype=int))


def extract_facets(mesh: Mesh) -> list[FacetGeom]:
    """Facet table in deterministic (sorted endpoint) order."""
    return [mesh.facet(f) for f in range(mesh.n_facets)]


def mesh_quality_report(mesh: Mesh) -> dict:
    """Shape-regularity ratio |dK| h_K / |K| and the nonconformity ratio
    max_facet |L|^{(d-2)/(d-1)} h_K^2 / |K| per element, plus mesh maxima."""
    d = mesh.dim
    perims = np.zeros(mesh.n_elements)
    nonconf = np.zeros(mesh.n_elements)
    for e in range(mesh.n_elements):
        fids = mesh.elem_facets[e]
        meas = mesh.f_measure[fids]
        perims[e] = meas.sum()
        nonconf[e] = (meas ** ((d - 2) / (d - 1))).max() * mesh.diameters[e] ** 2 / mesh.areas[e]
    shape = perims * mesh.diameters / mesh.areas
    return {
        "shape_ratio": shape,
        "nonconformity_ratio": nonconf,
        "max_shape_ratio": float(shape.max()),
        "max_nonconformity_ratio": float(nonconf.max()),
    }
