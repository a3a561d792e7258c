"""Gluing manifolds along boundary components, surface torsion, and the composition laws."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .complex import anchor_rows, subdivide_for_anchors, torsion_prefactor, volume_length_factor
from .errors import Degenerate, IncompatibleBoundary, NonManifold, NonOrientable, PlacementMismatch, SingularPlanMinor
from .geometry import Placement, angle_jacobian, metric_cache, random_placement, velocity_matrix
from .grassmann import (GeneratorRegistry, GrassmannElement, gaussian_integral, generating_data, multiply,
                        multiple_integral, pair_differentials, relabel_edges)
from .rigidity import RigidConstruction, rigid_construction_surface, surface_length_differential
from .triangulation import BoundaryComponent, Edge, Triangulation, builtin, permutation_sign


@dataclass(frozen=True)
class GluingMap:
    """Vertex bijection from component ``source`` of M1 onto component ``target``.

    ``target`` refers to M2, or to M1 itself when ``self_glue`` is set.
    """

    source: int
    target: int
    vertex_map: Mapping[int, int]
    self_glue: bool = False

    def edge(self, e: Edge) -> Edge:
        return tuple(sorted(self.vertex_map[v] for v in e))  # type: ignore[return-value]

    def inverse(self) -> dict[int, int]:
        return {b: a for a, b in self.vertex_map.items()}

    def to_json(self) -> str:
        return json.dumps({"source": self.source, "target": self.target, "self_glue": self.self_glue,
                           "map": sorted([int(a), int(b)] for a, b in self.vertex_map.items())})

    @classmethod
    def from_json(cls, text: str) -> "GluingMap":
        doc = json.loads(text)
        if isinstance(doc, list):
            doc = {"map": doc}
        return cls(int(doc.get("source", 0)), int(doc.get("target", 0)),
                   {int(a): int(b) for a, b in doc["map"]}, bool(doc.get("self_glue", False)))


def _component(t: Triangulation, k: int) -> BoundaryComponent:
    if not 0 <= k < t.m:
        raise IncompatibleBoundary(f"no boundary component {k}")
    return t.boundary_components[k]


def check_gluing_map(m1: Triangulation, m2: Triangulation, gmap: GluingMap) -> None:
    """Simplicial, bijective and orientation reversing on the induced boundary orientations."""
    g1 = _component(m1, gmap.source)
    g2 = _component(m2, gmap.target)
    if gmap.self_glue and gmap.source == gmap.target:
        raise IncompatibleBoundary("self gluing needs two distinct components")
    vm = gmap.vertex_map
    if sorted(vm) != list(g1.vertices) or sorted(vm.values()) != list(g2.vertices):
        raise IncompatibleBoundary("map is not a bijection between the component vertex sets")
    target_faces = {f: s for f, s in zip(g2.faces, g2.face_signs)}
    for f, s in zip(g1.faces, g1.face_signs):
        img = [vm[v] for v in f]
        key = tuple(sorted(img))
        if key not in target_faces:
            raise IncompatibleBoundary(f"face {f} is not mapped to a face")
        # the oriented face (sorted f, sign s) lands on (img, s), i.e. on the
        # sorted image with sign s * parity(img)
        if s * permutation_sign(img) != -target_faces[key]:
            raise IncompatibleBoundary("map does not reverse the boundary orientation")


def check_placements(gmap: GluingMap, p1: Placement, p2: Placement) -> None:
    for a, b in gmap.vertex_map.items():
        if tuple(p1.coords[a]) != tuple(p2.coords[b]):
            raise PlacementMismatch(f"vertex {a} and its image {b} are placed differently")


@dataclass(frozen=True)
class GlueResult:
    triangulation: Triangulation
    placement: Placement | None
    relabel: dict[int, int]  # vertex ids of M2 (or of the glued copy) -> ids in the result
    gamma_vertices: tuple[int, ...]


def glue(m1: Triangulation, m2: Triangulation | None, gmap: GluingMap, p1: Placement | None = None,
         p2: Placement | None = None) -> GlueResult:
    """Glue M2 to M1 (or M1 to itself) along the mapped components.

    Vertices of the target component are replaced by their preimages; other
    vertices of M2 get fresh ids above those of M1 in increasing order.
    """
    if gmap.self_glue:
        m2 = m1
        p2 = p1 if p2 is None else p2
    if m2 is None:
        raise IncompatibleBoundary("second manifold missing")
    check_gluing_map(m1, m2, gmap)
    if p1 is not None and p2 is not None:
        check_placements(gmap, p1, p2)
    inv = gmap.inverse()
    if gmap.self_glue:
        relabel = {v: inv.get(v, v) for v in m1.vertices}
        tets = [tuple(relabel[v] for v in t) for t in m1.tetrahedra]
    else:
        nxt = max(m1.vertices) + 1
        relabel = {}
        for v in m2.vertices:
            if v in inv:
                relabel[v] = inv[v]
            else:
                relabel[v] = nxt
                nxt += 1
        tets = list(m1.tetrahedra) + [tuple(relabel[v] for v in t) for t in m2.tetrahedra]
    try:
        out = Triangulation(tets)
    except (NonManifold, NonOrientable, Degenerate) as exc:
        raise IncompatibleBoundary(f"glued complex is not a simplicial manifold: {exc}") from exc
    placement = None
    if p1 is not None and p2 is not None:
        coords = {v: p1.coords[v] for v in out.vertices if v in p1.coords}
        if not gmap.self_glue:
            for v, w in relabel.items():
                coords.setdefault(w, p2.coords[v])
        placement = Placement({v: coords[v] for v in out.vertices}, p1.seed)
    return GlueResult(out, placement, relabel, tuple(sorted(gmap.vertex_map)))


def transport_placement(p2: Placement, gmap: GluingMap, p1: Placement, tol: float = 1e-9) -> Placement:
    """Move M2 rigidly so its glued component lands on M1's, then snap it exactly.

    The motion is the least-squares rotation plus translation (Kabsch); the
    two components must be congruent to within ``tol``.
    """
    src = np.array([p2[b] for a, b in sorted(gmap.vertex_map.items())])
    dst = np.array([p1[a] for a, b in sorted(gmap.vertex_map.items())])
    cs, cd = src.mean(0), dst.mean(0)
    u, _, vt = np.linalg.svd((src - cs).T @ (dst - cd))
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    moved = p2.transformed(rot, cd - rot @ cs)
    resid = max(np.linalg.norm(moved[b] - p1[a]) for a, b in gmap.vertex_map.items())
    if resid > tol:
        raise PlacementMismatch(f"components are not congruent (residual {resid:.3g})")
    return moved.with_coords({b: p1.coords[a] for a, b in gmap.vertex_map.items()})


# ----------------------------------------------------------------------------
# surface torsion


@dataclass(frozen=True)
class SurfaceComplexData:
    g1: np.ndarray
    g2: np.ndarray
    rows: tuple  # coordinate labels (vertex, axis)
    rc: RigidConstruction
    anchors: tuple[int, int, int]
    tau: float

    def residual(self) -> float:
        return float(np.linalg.norm(self.g2 @ self.g1) / (np.linalg.norm(self.g2) * np.linalg.norm(self.g1)))


def surface_complex(gamma: BoundaryComponent, p: Placement, rc: RigidConstruction | None = None) -> SurfaceComplexData:
    rc = rc or rigid_construction_surface(gamma, p)
    labels = tuple(("x", v, c) for v in gamma.vertices for c in range(3))
    g1 = np.vstack([velocity_matrix(p[v]) for v in gamma.vertices])
    g2 = surface_length_differential(gamma, p, rc.edges)
    anchors = None
    verts = list(gamma.vertices)
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            for k in range(j + 1, len(verts)):
                a, b, c = verts[i], verts[j], verts[k]
                if np.linalg.norm(np.cross(p[b] - p[a], p[c] - p[a])) > 1e-9:
                    anchors = (a, b, c)
                    break
            if anchors:
                break
        if anchors:
            break
    if anchors is None:
        raise SingularPlanMinor("surface vertices are collinear")
    r1 = anchor_rows(*anchors)
    pos = {lab: k for k, lab in enumerate(labels)}
    m1 = g1[[pos[r] for r in r1], :]
    cols = [k for k, lab in enumerate(labels) if lab not in set(r1)]
    m2 = g2[:, cols]
    d1, d2 = np.linalg.det(m1), np.linalg.det(m2)
    if abs(d1) < 1e-8 or abs(d2) < 1e-8:
        raise SingularPlanMinor("surface plan minor vanishes")
    return SurfaceComplexData(g1, g2, labels, rc, anchors, float(d1 / d2))


def surface_torsion(gamma: BoundaryComponent, p: Placement, rc: RigidConstruction | None = None) -> float:
    """minor g1 / minor g2 for 0 -> e(3) -> (dx)_Gamma -> (dl)_rc -> 0."""
    return surface_complex(gamma, p, rc).tau


@dataclass(frozen=True)
class GammaData:
    """What the composition laws need to know about the glued surface."""

    n_vertices: int
    tau: float
    log_length_sq: float  # log of prod l^2 over all edges of the surface
    free_edges: tuple[Edge, ...]  # E_Gamma, in the labels of M1's copy
    edge_map: Mapping[Edge, Edge] = field(default_factory=dict)  # edges of the other copy -> M1 labels

    @property
    def factor(self) -> float:
        sign = -1.0 if self.n_vertices % 2 else 1.0
        return sign * self.tau ** 2 * math.exp(-self.log_length_sq)


def gamma_data(t: Triangulation, p: Placement, component: int, gmap: GluingMap | None = None,
               rc: RigidConstruction | None = None) -> GammaData:
    gamma = _component(t, component)
    sc = surface_complex(gamma, p, rc)
    log_l2 = sum(2.0 * math.log(float(np.linalg.norm(p[a] - p[b]))) for a, b in gamma.edges)
    emap = {}
    if gmap is not None:
        emap = {gmap.edge(e): e for e in gamma.edges}
    return GammaData(len(gamma.vertices), sc.tau, log_l2, tuple(sc.rc.complement), emap)


def transported_surface_rc(rc: RigidConstruction, gmap: GluingMap) -> RigidConstruction:
    return RigidConstruction(tuple(gmap.edge(e) for e in rc.edges), ("surface", gmap.target),
                             tuple(gmap.edge(e) for e in rc.complement))


# ----------------------------------------------------------------------------
# composition laws


def _lift(u: GrassmannElement, registry: GeneratorRegistry, edge_map: Mapping[Edge, Edge]) -> GrassmannElement:
    return relabel_edges(u, registry, edge_map)


def compose_invariants(i1: GrassmannElement, i2: GrassmannElement, gamma: GammaData) -> GrassmannElement:
    """(-1)^N tau^2 / prod l^2 * int I1 I2 prod_{E_Gamma} da* da.

    Generators of I2 on the glued surface are renamed through ``gamma.edge_map``
    onto those of I1 before multiplying.
    """
    e2 = [gamma.edge_map.get(e, e) for e in i2.registry.edges]
    reg = GeneratorRegistry.for_edges(list(i1.registry.edges) + e2)
    u = multiply(_lift(i1, reg, {}), _lift(i2, reg, gamma.edge_map))
    u = multiple_integral(u, pair_differentials(reg, gamma.free_edges))
    keep = [e for e in reg.edges if e not in set(gamma.free_edges)]
    out = _drop_to(u, GeneratorRegistry.for_edges(keep))
    return gamma.factor * out


def _drop_to(u: GrassmannElement, registry: GeneratorRegistry) -> GrassmannElement:
    from .grassmann import _restrict

    return _restrict(u, registry)


def self_glue_compose(i: GrassmannElement, gamma: GammaData) -> GrassmannElement:
    """Self-gluing analogue: identify generators of the two copies, then integrate over E_Gamma."""
    reg = GeneratorRegistry.for_edges({gamma.edge_map.get(e, e) for e in i.registry.edges})
    u = _lift(i, reg, gamma.edge_map)
    u = multiple_integral(u, pair_differentials(reg, gamma.free_edges))
    keep = [e for e in reg.edges if e not in set(gamma.free_edges)]
    return gamma.factor * _drop_to(u, GeneratorRegistry.for_edges(keep))


@dataclass(frozen=True)
class FoldedResult:
    value: float
    scale: float  # |prefactor| times the Hadamard bound of the folded matrix
    rank_deficiency: int


def self_glue_folded(t: Triangulation, p: Placement, gmap: GluingMap, surface_rc: RigidConstruction | None = None,
                     sway_component: int | None = None) -> FoldedResult:
    """Self-gluing law with the generators identified before exponentiating.

    Identification is an algebra homomorphism, so substituting it into
    f(a, a*) first and integrating every pair afterwards gives the same
    number as expanding the generating function of M' and then identifying.
    This keeps the Grassmann support at the size of the folded surface.
    """
    if sway_component is None and len(t.inner_vertices) < 3:
        t, p, _ = subdivide_for_anchors(t, p)
    rc1 = surface_rc or rigid_construction_surface(_component(t, gmap.source), p)
    g = gamma_data(t, p, gmap.source, gmap, rc1)
    rc2 = transported_surface_rc(rc1, gmap)
    data = generating_data_parts(t, p, {gmap.source: rc1, gmap.target: rc2}, sway_component)
    pre, inner_free, bfree, cache = data
    edges = list(inner_free) + sorted(e for comp in bfree for e in comp)
    h = angle_jacobian(t, cache, edges)
    # fold rows and columns of the second copy onto the first
    fold = {e: g.edge_map.get(e, e) for e in edges}
    targets = sorted(set(fold.values()), key=lambda e: edges.index(e))
    tpos = {e: k for k, e in enumerate(targets)}
    proj = np.zeros((len(targets), len(edges)))
    for k, e in enumerate(edges):
        proj[tpos[fold[e]], k] = 1.0
    hf = proj @ h @ proj.T
    scale_det, el = gaussian_integral(hf, targets, targets)
    value = g.factor * pre.value * scale_det * el.constant()
    hadamard = float(np.prod(np.linalg.norm(hf, axis=1)))
    s = np.linalg.svd(hf, compute_uv=False)
    deficiency = int(np.sum(s <= 1e-12 * s[0]))
    return FoldedResult(value, abs(g.factor * pre.value) * hadamard, deficiency)


def generating_data_parts(t: Triangulation, p: Placement, surface_rcs, sway_component=None):
    from .complex import build_complex
    from .grassmann import boundary_generator_edges

    bfree = boundary_generator_edges(t, p, surface_rcs)
    cache = metric_cache(t, p)
    c = build_complex(t, p, cache, sway_component=sway_component)
    pre = torsion_prefactor(c) * volume_length_factor(t, cache)
    return pre, tuple(c.rc.complement), bfree, cache


# ----------------------------------------------------------------------------
# fixtures


@dataclass(frozen=True)
class GluingFixture:
    name: str
    m1: Triangulation
    m2: Triangulation | None
    gmap: GluingMap
    p1: Placement
    p2: Placement | None


def _subdivided_ball(seed: int) -> tuple[Triangulation, Placement]:
    t = builtin("B3")
    p = random_placement(t, seed)
    t, p, _ = subdivide_for_anchors(t, p)
    return t, p


def ball_pair_fixture(seed: int) -> GluingFixture:
    """Two subdivided tetrahedra glued along their boundary spheres; the result is S^3."""
    t1, p1 = _subdivided_ball(seed)
    shift = {v: v + 100 for v in t1.inner_vertices}
    t2 = t1.mirrored().relabel(shift)
    # fresh interior for the second ball, same boundary
    p2 = random_placement(t2, seed + 1, fixed={v: p1.coords[v] for v in t1.boundary_vertices})
    gmap = GluingMap(0, 0, {v: v for v in t1.boundary_vertices})
    return GluingFixture("B3+B3", t1, t2, gmap, p1, p2)


def solid_torus_pair_fixture(seed: int) -> GluingFixture:
    """Heegaard splitting of S^3: meridian of one solid torus to the longitude of the other."""
    t1 = builtin("solid-torus")
    p1 = random_placement(t1, seed)
    vm = {i + 3 * k: k + 3 * i for i in range(3) for k in range(3)}
    gmap = GluingMap(0, 0, vm)
    t2 = t1
    fixed = {vm[v]: p1.coords[v] for v in vm}
    p2 = random_placement(t2, seed + 1, fixed=fixed)
    return GluingFixture("solid-torus+solid-torus", t1, t2, gmap, p1, p2)


def self_glue_fixture(name: str, seed: int) -> GluingFixture:
    """S2xI or T2xI with the top layer identified with the bottom one."""
    t = builtin(name)
    shift = {"S2xI": 12, "T2xI": 27}[name]
    bottom, top = t.boundary_components
    vm = {v: v + shift for v in bottom.vertices}
    if sorted(vm.values()) != list(top.vertices):
        raise IncompatibleBoundary("fixture layers do not match")
    p = random_placement(t, seed)
    p = p.with_coords({v + shift: p.coords[v] for v in bottom.vertices})
    return GluingFixture(f"{name} self", t, None, GluingMap(0, 1, vm, self_glue=True), p, None)


@dataclass(frozen=True)
class CompositionCheck:
    composed: float
    direct: float
    glued: Triangulation
    free_edges: int

    @property
    def rel_error(self) -> float:
        return abs(self.composed - self.direct) / max(abs(self.direct), 1e-300)

    @property
    def sign_flag(self) -> int:
        """-1 when composed and direct agree only after a global sign flip."""
        if abs(self.composed + self.direct) < abs(self.composed - self.direct):
            return -1
        return 1


def check_composition(fx: GluingFixture, sway_plan: bool = True) -> CompositionCheck:
    """Evaluate both sides of the gluing law on a fixture."""
    sway = 0 if sway_plan else None
    rc1 = rigid_construction_surface(_component(fx.m1, fx.gmap.source), fx.p1)
    rc2 = transported_surface_rc(rc1, fx.gmap)
    d1 = generating_data(fx.m1, fx.p1, {fx.gmap.source: rc1}, sway)
    d2 = generating_data(fx.m2, fx.p2, {fx.gmap.target: rc2}, sway)
    g = gamma_data(fx.m1, fx.p1, fx.gmap.source, fx.gmap, rc1)
    composed = compose_invariants(d1.element, d2.element, g)
    res = glue(fx.m1, fx.m2, fx.gmap, fx.p1, fx.p2)
    direct = generating_data(res.triangulation, res.placement)  # type: ignore[arg-type]
    if composed.registry.edges or direct.element.registry.edges:
        raise IncompatibleBoundary("fixture result is expected to be closed")
    return CompositionCheck(composed.constant(), direct.element.constant(), res.triangulation, len(g.free_edges))
