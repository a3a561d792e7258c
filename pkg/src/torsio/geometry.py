"""Euclidean placements and metric quantities with exact first derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateTetrahedron, GeneralPositionFailure, ZeroLength
from .triangulation import Edge, Triangulation

MIN_SIX_VOLUME = 1e-6
MIN_LENGTH = 1e-3
SEED_STRIDE = 1_000_003

# local edge order inside a tetrahedron (indices into its 4-tuple)
TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class Placement:
    """Coordinates of every vertex, plus the seed that generated them."""

    coords: Mapping[int, tuple[float, float, float]]
    seed: int | None = None

    def __getitem__(self, v: int) -> np.ndarray:
        return np.asarray(self.coords[v], dtype=float)

    def array(self, vertices: Sequence[int]) -> np.ndarray:
        return np.array([self.coords[v] for v in vertices], dtype=float)

    def with_coords(self, updates: Mapping[int, Sequence[float]]) -> "Placement":
        new = dict(self.coords)
        new.update({int(v): tuple(float(x) for x in c) for v, c in updates.items()})
        return Placement(new, self.seed)

    def restricted(self, vertices) -> "Placement":
        return Placement({v: self.coords[v] for v in vertices}, self.seed)

    def transformed(self, rotation: np.ndarray, translation: Sequence[float]) -> "Placement":
        """Apply the Euclidean motion x -> R x + b to every vertex."""
        R = np.asarray(rotation, dtype=float)
        b = np.asarray(translation, dtype=float)
        return Placement({v: tuple(R @ np.asarray(c) + b) for v, c in self.coords.items()}, self.seed)


@dataclass(frozen=True)
class MotionGenerator:
    """Element of e(3): translation (tx, ty, tz) and rotation (rx, ry, rz)."""

    components: tuple[float, float, float, float, float, float]

    @classmethod
    def basis(cls, k: int) -> "MotionGenerator":
        c = [0.0] * 6
        c[k] = 1.0
        return cls(tuple(c))  # type: ignore[arg-type]


def motion_velocity(g: MotionGenerator | Sequence[float], x: Sequence[float]) -> np.ndarray:
    """Velocity of point ``x`` under ``g``; rotations are about the origin."""
    c = np.asarray(g.components if isinstance(g, MotionGenerator) else g, dtype=float)
    return c[:3] + np.cross(c[3:], np.asarray(x, dtype=float))


def velocity_matrix(x: Sequence[float]) -> np.ndarray:
    """3x6 matrix sending a motion generator to the velocity at ``x``."""
    x0, x1, x2 = (float(c) for c in x)
    # (r x x) = [[0, x2, -x1], [-x2, 0, x0], [x1, -x0, 0]] @ r
    return np.array([
        [1.0, 0.0, 0.0, 0.0, x2, -x1],
        [0.0, 1.0, 0.0, -x2, 0.0, x0],
        [0.0, 0.0, 1.0, x1, -x0, 0.0],
    ])


# ----------------------------------------------------------------------------


def six_volume(p0, p1, p2, p3) -> float:
    """Six times the signed volume of the ordered tetrahedron."""
    return float(np.linalg.det(np.array([np.subtract(p1, p0), np.subtract(p2, p0), np.subtract(p3, p0)])))


def dihedral_angle(p: np.ndarray, q: np.ndarray, r: np.ndarray, s: np.ndarray) -> float:
    """Dihedral angle at edge pq of tetrahedron pqrs, in (0, pi)."""
    u = q - p
    u = u / np.linalg.norm(u)
    a = r - p
    b = s - p
    a = a - a.dot(u) * u
    b = b - b.dot(u) * u
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(a.dot(b)))


def check_general_position(t: Triangulation, p: Placement) -> None:
    for v in t.vertices:
        if v not in p.coords:
            raise GeneralPositionFailure(f"vertex {v} has no coordinates")
    for e in t.edges:
        if np.linalg.norm(p[e[0]] - p[e[1]]) <= MIN_LENGTH:
            raise GeneralPositionFailure(f"edge {e} is too short")
    for tet in t.tetrahedra:
        if abs(six_volume(*(p[v] for v in tet))) <= MIN_SIX_VOLUME:
            raise GeneralPositionFailure(f"tetrahedron {tet} is nearly flat")


def random_placement(t: Triangulation, seed: int, max_retries: int = 25,
                     fixed: Mapping[int, Sequence[float]] | None = None) -> Placement:
    """Uniform coordinates in [0, 1]^3 from numpy's PCG64 generator.

    Vertices draw their coordinates in increasing id order.  Vertices listed
    in ``fixed`` keep the given coordinates (their draws are still consumed,
    so the stream does not shift).  If the general position guard fails the
    seed is advanced by a fixed stride and the placement is resampled.
    """
    last: Exception | None = None
    for attempt in range(max_retries):
        s = int(seed) + attempt * SEED_STRIDE
        xyz = np.random.default_rng(s).random((len(t.vertices), 3))
        coords = {v: tuple(float(c) for c in row) for v, row in zip(t.vertices, xyz)}
        if fixed:
            coords.update({int(v): tuple(float(c) for c in x) for v, x in fixed.items() if v in coords})
        p = Placement(coords, s)
        try:
            check_general_position(t, p)
        except GeneralPositionFailure as exc:
            last = exc
            continue
        return p
    raise GeneralPositionFailure(f"no admissible placement after {max_retries} seeds: {last}")


def boundary_coordinates(t: Triangulation, p: Placement) -> dict[int, tuple[float, float, float]]:
    return {v: tuple(p.coords[v]) for v in t.boundary_vertices}  # type: ignore[misc]


# ----------------------------------------------------------------------------
# dihedral angles and their derivatives in terms of edge lengths

_B = np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def _dgram(j: int) -> np.ndarray:
    """Derivative of the edge-vector Gram matrix w.r.t. squared length j."""
    a, b = TET_EDGES[j]
    D = np.zeros((3, 3))
    if a == 0:
        k = b - 1
        D[k, k] = 1.0
        for m in range(3):
            if m != k:
                D[k, m] += 0.5
                D[m, k] += 0.5
    else:
        D[a - 1, b - 1] = D[b - 1, a - 1] = -0.5
    return D


_DGRAM = [_dgram(j) for j in range(6)]


def _inverse3(g: np.ndarray) -> tuple[np.ndarray, object]:
    """Adjugate inverse and determinant of a 3x3 matrix; works in any float dtype."""
    adj = np.empty_like(g)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            adj[i, j] = (-1) ** (i + j) * (g[r[0], c[0]] * g[r[1], c[1]] - g[r[0], c[1]] * g[r[1], c[0]])
    det = g[0, 0] * adj[0, 0] + g[0, 1] * adj[1, 0] + g[0, 2] * adj[2, 0]
    return adj / det, det


def tetra_angles_from_lengths(lengths: Sequence[float], gram: np.ndarray | None = None,
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Dihedral angles and their Jacobian, both from the six edge lengths.

    ``lengths`` follow ``TET_EDGES``.  Returns ``(theta, J)`` with
    ``J[i, j] = d theta_i / d l_j``.  The Gram matrix of the edge vectors at
    vertex 0 (entries from the squared lengths) is inverted to give the dual
    vectors w^a, the gradients of barycentric coordinates.  For edge cd with
    complementary faces a, b:
    cos theta = -Q_ab / sqrt(Q_aa Q_bb) and sin theta = l_cd / (6V |w^a| |w^b|),
    where Q = B G^-1 B^T.  Differentiating those
    closed forms gives J.

    ``gram`` may supply G directly (edge vectors dotted together); for thin
    tetrahedra that avoids the cancellation in forming G from squared lengths.
    The algebra runs in extended precision: thin tetrahedra have large,
    mutually cancelling entries once summed around an edge.
    """
    wide = np.longdouble
    l = np.asarray(lengths, dtype=wide)
    if gram is None:
        d = l * l
        G = np.empty((3, 3), dtype=wide)
        for a in range(3):
            for b in range(3):
                dab = 0.0 if a == b else d[TET_EDGES.index(tuple(sorted((a + 1, b + 1))))]
                G[a, b] = (d[a] + d[b] - dab) / 2
    else:
        G = np.asarray(gram, dtype=wide)
    Gi, det = _inverse3(G)
    if not det > 0:
        raise DegenerateTetrahedron("edge lengths do not span a tetrahedron")
    six_v = np.sqrt(det)
    B = _B.astype(wide)
    Q = B @ Gi @ B.T
    dQ = [-B @ Gi @ D.astype(wide) @ Gi @ B.T for D in _DGRAM]
    theta = np.empty(6, dtype=wide)
    J = np.empty((6, 6), dtype=wide)
    for i, (c_, d_) in enumerate(TET_EDGES):
        a, b = (k for k in range(4) if k not in (c_, d_))
        norm = np.sqrt(Q[a, a] * Q[b, b])
        cos_t = -Q[a, b] / norm
        sin_t = l[i] / (six_v * norm)
        theta[i] = np.arctan2(sin_t, cos_t)
        for j in range(6):
            dq = dQ[j]
            dcos = -dq[a, b] / norm + Q[a, b] / norm * (dq[a, a] / Q[a, a] + dq[b, b] / Q[b, b]) / 2
            J[i, j] = -dcos / sin_t * 2 * l[j]
    return theta.astype(float), J.astype(float)


def coordinates_from_lengths(lengths: Sequence[float]) -> np.ndarray:
    """A 4x3 realization of the six lengths (order ``TET_EDGES``), positively oriented."""
    d = np.asarray(lengths, dtype=float) ** 2
    G = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            dab = 0.0 if a == b else d[TET_EDGES.index(tuple(sorted((a + 1, b + 1))))]
            G[a, b] = 0.5 * (d[a] + d[b] - dab)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise DegenerateTetrahedron("edge lengths do not span a tetrahedron") from exc
    return np.vstack([np.zeros(3), L])


@dataclass
class MetricCache:
    """Lengths, signed volumes, dihedral, deficit and alpha angles."""

    lengths: dict[Edge, float]
    six_volumes: tuple[float, ...]
    dihedral: dict[tuple[int, Edge], float]
    omega: dict[Edge, float]
    alpha: dict[Edge, float]
    tet_jacobians: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def volumes(self) -> tuple[float, ...]:
        return tuple(v / 6.0 for v in self.six_volumes)


def tet_edges(tet: Sequence[int]) -> list[Edge]:
    return [tuple(sorted((tet[a], tet[b]))) for a, b in TET_EDGES]  # type: ignore[misc]


def metric_cache(t: Triangulation, p: Placement) -> MetricCache:
    lengths = {}
    for e in t.edges:
        lengths[e] = float(np.linalg.norm(p[e[0]] - p[e[1]]))
        if lengths[e] == 0.0:
            raise ZeroLength(f"edge {e} has zero length")
    six_vols = []
    dihedral: dict[tuple[int, Edge], float] = {}
    jacs = []
    for idx, tet in enumerate(t.tetrahedra):
        pts = [p[v] for v in tet]
        sv = six_volume(*pts)
        if abs(sv) <= MIN_SIX_VOLUME:
            raise DegenerateTetrahedron(f"tetrahedron {tet} is degenerate")
        six_vols.append(sv)
        for (a, b), e in zip(TET_EDGES, tet_edges(tet)):
            rest = [k for k in range(4) if k not in (a, b)]
            dihedral[(idx, e)] = dihedral_angle(pts[a], pts[b], pts[rest[0]], pts[rest[1]])
        vecs = np.array([pts[k] - pts[0] for k in (1, 2, 3)])
        _, J = tetra_angles_from_lengths([lengths[e] for e in tet_edges(tet)], vecs @ vecs.T)
        jacs.append(J)
    # angles enter the deficit with the sign of their tetrahedron's oriented
    # volume, so that the sum around an edge is a locally constant multiple
    # of 2 pi whatever the placement
    sums: dict[Edge, float] = {e: 0.0 for e in t.edges}
    for (idx, e), th in dihedral.items():
        sums[e] += math.copysign(th, six_vols[idx])
    omega = {e: 2.0 * math.pi - sums[e] for e in t.inner_edges}
    alpha = {e: -sums[e] for e in t.edges if e in t.boundary_edges}
    return MetricCache(lengths, tuple(six_vols), dihedral, omega, alpha, tuple(jacs))


def d_length_d_coords(edge: Edge, p: Placement) -> dict[tuple[int, int], float]:
    """Gradient of the length of ``edge`` over the (vertex, axis) basis."""
    a, b = edge
    diff = p[a] - p[b]
    l = float(np.linalg.norm(diff))
    if l == 0.0:
        raise ZeroLength(f"edge {edge} has zero length")
    row = {}
    for c in range(3):
        row[(a, c)] = float(diff[c] / l)
        row[(b, c)] = float(-diff[c] / l)
    return row


def d_angle_d_lengths(t: Triangulation, tet_index: int, edge: Edge, cache: MetricCache) -> dict[Edge, float]:
    """Row d theta_{tet, edge} / d l_j over the six edges of the tetrahedron."""
    edges = tet_edges(t.tetrahedra[tet_index])
    i = edges.index(tuple(sorted(edge)))
    J = cache.tet_jacobians[tet_index]
    return {e: float(J[i, j]) for j, e in enumerate(edges)}


def angle_jacobian(t: Triangulation, cache: MetricCache, edges: Sequence[Edge] | None = None) -> np.ndarray:
    """Matrix of d(omega or alpha)_i / d l_j over ``edges`` (default: all).

    Both omega (inner edges) and alpha (boundary edges) are minus the signed
    sum of incident dihedral angles up to a constant, so one formula serves
    all rows.
    """
    edges = list(t.edges if edges is None else edges)
    index = {e: k for k, e in enumerate(edges)}
    H = np.zeros((len(edges), len(edges)))
    for idx, tet in enumerate(t.tetrahedra):
        te = tet_edges(tet)
        pos = [index.get(e) for e in te]
        J = math.copysign(1.0, cache.six_volumes[idx]) * cache.tet_jacobians[idx]
        for a in range(6):
            if pos[a] is None:
                continue
            for b in range(6):
                if pos[b] is not None:
                    H[pos[a], pos[b]] -= J[a, b]
    return H


def placement_after_move(t_new: Triangulation, p: Placement, new_vertex: int | None,
                         coords: Sequence[float] | None = None) -> Placement:
    """Extend a placement across a Pachner move.

    Only a 1-4 move creates a vertex; without explicit ``coords`` it is drawn
    uniformly from [0, 1]^3 by a generator seeded from the placement seed and
    the vertex id.
    """
    if new_vertex is None:
        q = p.restricted(t_new.vertices)
    else:
        if coords is None:
            rng = np.random.default_rng([0 if p.seed is None else int(p.seed), int(new_vertex)])
            coords = rng.random(3)
        q = p.with_coords({new_vertex: coords}).restricted(t_new.vertices)
    check_general_position(t_new, q)
    return q
