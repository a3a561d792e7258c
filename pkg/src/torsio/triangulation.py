"""Oriented simplicial 3-manifolds with boundary, Pachner moves, fixtures.

A triangulation is given by a list of ordered vertex 4-tuples.  The order of
a tuple fixes the orientation of its tetrahedron; all tuples of one
triangulation must be coherent, i.e. the two tetrahedra sharing an inner face
induce opposite orientations on it.
"""

from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import Degenerate, NonManifold, NonOrientable, NotApplicable, UnknownName

Edge = tuple[int, int]
Face = tuple[int, int, int]
Tet = tuple[int, int, int, int]


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation that sorts ``seq`` (entries assumed distinct)."""
    inv = 0
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


def induced_face_sign(tet: Sequence[int], face: Iterable[int]) -> int:
    """Orientation that the oriented tetrahedron ``tet`` induces on ``face``.

    Returned relative to the sorted order of the face: +1 means the induced
    boundary orientation equals the sorted tuple.
    """
    fs = set(face)
    (i,) = [k for k, v in enumerate(tet) if v not in fs]
    rest = [v for k, v in enumerate(tet) if k != i]
    return (-1 if i % 2 else 1) * permutation_sign(rest)


def _oriented(vertex_set: Iterable[int], sign: int) -> Tet:
    s = sorted(vertex_set)
    if sign < 0:
        s[0], s[1] = s[1], s[0]
    return tuple(s)  # type: ignore[return-value]


@dataclass(frozen=True)
class BoundaryComponent:
    """One connected component of the boundary surface."""

    index: int
    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    faces: tuple[Face, ...]
    # induced orientation of each face (+1: sorted tuple order)
    face_signs: tuple[int, ...]

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    def oriented_faces(self) -> list[tuple[int, int, int]]:
        out = []
        for f, s in zip(self.faces, self.face_signs):
            a, b, c = f
            out.append((a, b, c) if s > 0 else (b, a, c))
        return out


class Triangulation:
    """Validated, immutable oriented triangulated 3-manifold.

    Construct through :func:`build_triangulation`.
    """

    def __init__(self, tetrahedra: Sequence[Sequence[int]], vertices: Iterable[int] | None = None):
        tets: list[Tet] = []
        for t in tetrahedra:
            t = tuple(int(v) for v in t)
            if len(t) != 4:
                raise Degenerate(f"tetrahedron {t} does not have 4 vertices")
            if len(set(t)) != 4:
                raise Degenerate(f"repeated vertex in tetrahedron {t}")
            tets.append(t)  # type: ignore[arg-type]
        if not tets:
            raise NonManifold("empty triangulation")
        used = sorted({v for t in tets for v in t})
        if vertices is not None:
            given = sorted({int(v) for v in vertices})
            if given != used:
                raise NonManifold("vertex list does not match the vertices used by tetrahedra")
        self.tetrahedra: tuple[Tet, ...] = tuple(tets)
        self.vertices: tuple[int, ...] = tuple(used)
        self.signs: tuple[int, ...] = tuple(permutation_sign(t) for t in tets)
        self._derive()
        self._check_orientation()
        self._check_links()
        self._find_components()

    # ------------------------------------------------------------------
    def _derive(self) -> None:
        seen: set[tuple[int, ...]] = set()
        edge_tets: dict[Edge, list[int]] = defaultdict(list)
        face_tets: dict[Face, list[int]] = defaultdict(list)
        vert_tets: dict[int, list[int]] = defaultdict(list)
        for idx, t in enumerate(self.tetrahedra):
            key = tuple(sorted(t))
            if key in seen:
                raise NonManifold(f"tetrahedron {key} appears twice")
            seen.add(key)
            for v in t:
                vert_tets[v].append(idx)
            for e in itertools.combinations(key, 2):
                edge_tets[e].append(idx)  # type: ignore[index]
            for f in itertools.combinations(key, 3):
                face_tets[f].append(idx)  # type: ignore[index]
        for f, ts in face_tets.items():
            if len(ts) > 2:
                raise NonManifold(f"face {f} lies in {len(ts)} tetrahedra")
        self.edges: tuple[Edge, ...] = tuple(sorted(edge_tets))
        self.faces: tuple[Face, ...] = tuple(sorted(face_tets))
        self.edge_tetrahedra = {e: tuple(v) for e, v in edge_tets.items()}
        self.face_tetrahedra = {f: tuple(v) for f, v in face_tets.items()}
        self.vertex_tetrahedra = {v: tuple(ts) for v, ts in vert_tets.items()}

        bfaces = [f for f in self.faces if len(self.face_tetrahedra[f]) == 1]
        self.boundary_faces: tuple[Face, ...] = tuple(bfaces)
        bedges: set[Edge] = set()
        bverts: set[int] = set()
        for f in bfaces:
            bverts.update(f)
            bedges.update(itertools.combinations(f, 2))  # type: ignore[arg-type]
        self.boundary_edges: frozenset[Edge] = frozenset(bedges)
        self.boundary_vertices: frozenset[int] = frozenset(bverts)
        self.inner_vertices: tuple[int, ...] = tuple(v for v in self.vertices if v not in bverts)
        self.inner_edges: tuple[Edge, ...] = tuple(e for e in self.edges if e not in bedges)

    def _check_orientation(self) -> None:
        for f, ts in self.face_tetrahedra.items():
            if len(ts) == 2:
                s1 = induced_face_sign(self.tetrahedra[ts[0]], f)
                s2 = induced_face_sign(self.tetrahedra[ts[1]], f)
                if s1 == s2:
                    raise NonOrientable(f"tetrahedra {ts} induce the same orientation on face {f}")

    def _check_links(self) -> None:
        for v in self.vertices:
            tris = [tuple(sorted(set(self.tetrahedra[i]) - {v})) for i in self.vertex_tetrahedra[v]]
            _check_vertex_link(v, tris, v in self.boundary_vertices)

    def _find_components(self) -> None:
        parent = {f: f for f in self.boundary_faces}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        by_edge: dict[Edge, list[Face]] = defaultdict(list)
        for f in self.boundary_faces:
            for e in itertools.combinations(f, 2):
                by_edge[e].append(f)  # type: ignore[index]
        for e, fs in by_edge.items():
            if len(fs) != 2:
                raise NonManifold(f"boundary edge {e} lies in {len(fs)} boundary faces")
            parent[find(fs[0])] = find(fs[1])
        groups: dict[Face, list[Face]] = defaultdict(list)
        for f in self.boundary_faces:
            groups[find(f)].append(f)
        comps = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
        out = []
        for k, faces in enumerate(comps):
            verts = sorted({x for f in faces for x in f})
            edges = sorted({e for f in faces for e in itertools.combinations(f, 2)})
            signs = tuple(induced_face_sign(self.tetrahedra[self.face_tetrahedra[f][0]], f) for f in faces)
            comp = BoundaryComponent(k, tuple(verts), tuple(edges), tuple(faces), signs)  # type: ignore[arg-type]
            if comp.euler_characteristic % 2:
                raise NonManifold(f"boundary component {k} has odd Euler characteristic")
            out.append(comp)
        self.boundary_components: tuple[BoundaryComponent, ...] = tuple(out)

    # ------------------------------------------------------------------
    @property
    def m(self) -> int:
        """Number of boundary components."""
        return len(self.boundary_components)

    @property
    def is_closed(self) -> bool:
        return not self.boundary_faces

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces) - len(self.tetrahedra)

    def is_inner_edge(self, e: Edge) -> bool:
        return e not in self.boundary_edges

    def component_of_vertex(self) -> dict[int, int]:
        """Map boundary vertex -> index of its boundary component."""
        return {v: c.index for c in self.boundary_components for v in c.vertices}

    def canonical(self) -> tuple[tuple[Tet, ...], ...]:
        """Label-preserving canonical form: sorted oriented tetrahedra."""
        return tuple(sorted(_oriented(t, s) for t, s in zip(self.tetrahedra, self.signs)))  # type: ignore[return-value]

    def canonical_boundary(self) -> list[tuple[Face, int]]:
        return [(f, s) for c in self.boundary_components for f, s in zip(c.faces, c.face_signs)]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Triangulation) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return (f"Triangulation(vertices={len(self.vertices)}, edges={len(self.edges)}, "
                f"faces={len(self.faces)}, tetrahedra={len(self.tetrahedra)}, m={self.m})")

    def summary(self) -> dict:
        return {
            "vertices": len(self.vertices),
            "inner_vertices": len(self.inner_vertices),
            "edges": len(self.edges),
            "inner_edges": len(self.inner_edges),
            "faces": len(self.faces),
            "tetrahedra": len(self.tetrahedra),
            "boundary_components": self.m,
            "boundary_euler": [c.euler_characteristic for c in self.boundary_components],
        }

    def relabel(self, mapping: Mapping[int, int]) -> "Triangulation":
        return Triangulation([tuple(mapping.get(v, v) for v in t) for t in self.tetrahedra])

    def mirrored(self) -> "Triangulation":
        """Same triangulation with the opposite orientation."""
        return Triangulation([(t[1], t[0], t[2], t[3]) for t in self.tetrahedra])


def _check_vertex_link(v: int, tris: list[tuple[int, ...]], on_boundary: bool) -> None:
    edge_count: dict[tuple[int, int], int] = defaultdict(int)
    star: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for a, b, c in tris:
        for e in ((a, b), (a, c), (b, c)):
            edge_count[e] += 1
        star[a].append((b, c))
        star[b].append((a, c))
        star[c].append((a, b))
    if any(n > 2 for n in edge_count.values()):
        raise NonManifold(f"link of vertex {v} is not a surface")
    # each link vertex must itself have a circle or arc as link
    for w, es in star.items():
        if not _is_path_or_cycle(es):
            raise NonManifold(f"edge ({v}, {w}) has a non-manifold link")
    # connectivity
    parent = list(range(len(tris)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner: dict[tuple[int, int], int] = {}
    for i, (a, b, c) in enumerate(tris):
        for e in ((a, b), (a, c), (b, c)):
            if e in owner:
                parent[find(i)] = find(owner[e])
            else:
                owner[e] = i
    if len({find(i) for i in range(len(tris))}) != 1:
        raise NonManifold(f"link of vertex {v} is disconnected")
    nv = len(star)
    chi = nv - len(edge_count) + len(tris)
    boundary = [e for e, n in edge_count.items() if n == 1]
    if not boundary:
        if chi != 2 or on_boundary:
            raise NonManifold(f"link of inner vertex {v} is not a sphere")
    else:
        if chi != 1 or not on_boundary or not _is_path_or_cycle(boundary, cycle=True):
            raise NonManifold(f"link of boundary vertex {v} is not a disk")


def _is_path_or_cycle(edges: list[tuple[int, int]], cycle: bool = False) -> bool:
    deg: dict[int, int] = defaultdict(int)
    adj: dict[int, list[int]] = defaultdict(list)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
        adj[a].append(b)
        adj[b].append(a)
    if any(d > 2 for d in deg.values()):
        return False
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    if len(seen) != len(adj):
        return False
    n_e, n_v = len(edges), len(adj)
    if cycle:
        return n_e == n_v
    return n_e in (n_v, n_v - 1)


def build_triangulation(tetra_list: Sequence[Sequence[int]], vertices: Iterable[int] | None = None) -> Triangulation:
    """Validate ordered tetrahedra and derive the full combinatorial data."""
    return Triangulation(tetra_list, vertices)


def orient_coherently(tet_sets: Sequence[Iterable[int]]) -> list[Tet]:
    """Greedy face-matching sweep assigning coherent orientations.

    The first tetrahedron keeps its given vertex order; every other one is
    flipped if needed to induce the opposite orientation of its already
    oriented neighbour.  Raises :class:`NonOrientable` on conflict.
    """
    tets = [tuple(t) for t in tet_sets]
    by_face: dict[Face, list[int]] = defaultdict(list)
    for i, t in enumerate(tets):
        for f in itertools.combinations(sorted(t), 3):
            by_face[f].append(i)  # type: ignore[index]
    out: list[Tet | None] = [None] * len(tets)
    for root in range(len(tets)):
        if out[root] is not None:
            continue
        out[root] = tets[root]  # type: ignore[assignment]
        queue = [root]
        while queue:
            i = queue.pop()
            ti = out[i]
            for f in itertools.combinations(sorted(ti), 3):  # type: ignore[arg-type]
                for j in by_face[f]:  # type: ignore[index]
                    if j == i:
                        continue
                    want = -induced_face_sign(ti, f)  # type: ignore[arg-type]
                    if out[j] is None:
                        cand = _oriented(tets[j], 1)
                        if induced_face_sign(cand, f) != want:
                            cand = _oriented(tets[j], -1)
                        out[j] = cand
                        queue.append(j)
                    elif induced_face_sign(out[j], f) != want:  # type: ignore[arg-type]
                        raise NonOrientable("no coherent orientation exists")
    return out  # type: ignore[return-value]


# ----------------------------------------------------------------------------
# Pachner moves


@dataclass(frozen=True)
class PachnerMove:
    """An interior Pachner move.

    ``kind`` is one of ``"2-3"``, ``"3-2"``, ``"1-4"``, ``"4-1"``; ``locus`` is
    respectively a face, an edge, a tetrahedron or a single vertex (as vertex
    ids).  ``new_vertex`` is the fresh id required by ``"1-4"``.
    """

    kind: str
    locus: tuple[int, ...]
    new_vertex: int | None = None


_LOCUS_SIZE = {"2-3": 3, "3-2": 2, "1-4": 4, "4-1": 1}


def apply_pachner(t: Triangulation, move: PachnerMove) -> Triangulation:
    """Apply an interior Pachner move and return the new triangulation."""
    if move.kind not in _LOCUS_SIZE:
        raise NotApplicable(f"unknown move kind {move.kind!r}")
    locus = tuple(sorted(move.locus))
    if len(set(locus)) != _LOCUS_SIZE[move.kind]:
        raise NotApplicable(f"move {move.kind} needs a locus of {_LOCUS_SIZE[move.kind]} vertices")

    if move.kind == "2-3":
        ts = t.face_tetrahedra.get(locus)  # type: ignore[arg-type]
        if ts is None or len(ts) != 2:
            raise NotApplicable(f"{locus} is not an inner face")
        d, e = (next(iter(set(t.tetrahedra[i]) - set(locus))) for i in ts)
        if tuple(sorted((d, e))) in t.edge_tetrahedra:
            raise NotApplicable(f"edge {(d, e)} already exists")
        a, b, c = locus
        new_sets = [(a, b, d, e), (b, c, d, e), (a, c, d, e)]
    elif move.kind == "3-2":
        ts = t.edge_tetrahedra.get(locus)  # type: ignore[arg-type]
        if ts is None or len(ts) != 3 or locus in t.boundary_edges:
            raise NotApplicable(f"{locus} is not an inner edge of degree 3")
        link = sorted({v for i in ts for v in t.tetrahedra[i]} - set(locus))
        if len(link) != 3 or tuple(link) in t.face_tetrahedra:
            raise NotApplicable(f"edge {locus} has no valid 3-2 configuration")
        d, e = locus
        new_sets = [(*link, d), (*link, e)]
    elif move.kind == "1-4":
        idx = [i for i, tt in enumerate(t.tetrahedra) if tuple(sorted(tt)) == locus]
        if not idx:
            raise NotApplicable(f"{locus} is not a tetrahedron")
        x = move.new_vertex
        if x is None or x in t.vertex_tetrahedra:
            raise NotApplicable("1-4 needs a fresh vertex id")
        ts = tuple(idx)
        new_sets = [tuple(sorted(set(locus) - {v})) + (x,) for v in locus]
    else:  # 4-1
        (x,) = locus
        ts = t.vertex_tetrahedra.get(x)
        if ts is None or len(ts) != 4 or x in t.boundary_vertices:
            raise NotApplicable(f"vertex {x} is not an inner vertex of degree 4")
        outer = sorted({v for i in ts for v in t.tetrahedra[i]} - {x})
        if len(outer) != 4 or tuple(outer) in {tuple(sorted(tt)) for tt in t.tetrahedra}:
            raise NotApplicable(f"vertex {x} has no valid 4-1 configuration")
        new_sets = [tuple(outer)]

    removed = [t.tetrahedra[i] for i in ts]
    oriented_new = [_orient_like_neighbours(s, removed) for s in new_sets]
    kept = [tt for i, tt in enumerate(t.tetrahedra) if i not in set(ts)]
    # new tetrahedra take the position of the first removed one
    pos = min(ts)
    tets = kept[:pos] + oriented_new + kept[pos:]
    try:
        out = Triangulation(tets)
    except (NonManifold, NonOrientable) as exc:  # pragma: no cover - guarded above
        raise NotApplicable(f"move produces an invalid triangulation: {exc}") from exc
    if sorted(out.canonical_boundary()) != sorted(t.canonical_boundary()):
        raise NotApplicable("move would change the boundary")
    return out


def _orient_like_neighbours(vertex_set: Sequence[int], removed: Sequence[Tet]) -> Tet:
    for f in itertools.combinations(sorted(vertex_set), 3):
        owners = [r for r in removed if set(f) <= set(r)]
        if len(owners) == 1:
            want = induced_face_sign(owners[0], f)
            cand = _oriented(vertex_set, 1)
            if induced_face_sign(cand, f) != want:
                cand = _oriented(vertex_set, -1)
            return cand
    raise NotApplicable("cannot orient new tetrahedron")  # pragma: no cover


def random_interior_move(t: Triangulation, kind: str, rng, new_vertex: int | None = None) -> PachnerMove:
    """Pick an applicable move of the given kind uniformly among candidates."""
    if kind == "1-4":
        tet = t.tetrahedra[int(rng.integers(len(t.tetrahedra)))]
        nv = new_vertex if new_vertex is not None else max(t.vertices) + 1
        return PachnerMove("1-4", tuple(sorted(tet)), nv)
    if kind == "2-3":
        cands = []
        for f, ts in t.face_tetrahedra.items():
            if len(ts) == 2:
                d, e = (next(iter(set(t.tetrahedra[i]) - set(f))) for i in ts)
                if tuple(sorted((d, e))) not in t.edge_tetrahedra:
                    cands.append(f)
        if not cands:
            raise NotApplicable("no 2-3 move available")
        return PachnerMove("2-3", cands[int(rng.integers(len(cands)))])
    raise NotApplicable(f"random selection not supported for {kind}")


# ----------------------------------------------------------------------------
# builtin fixtures


def _product_with_interval(triangles: Sequence[tuple[int, int, int]], nverts: int, segments: int,
                           cyclic: bool) -> list[tuple[int, int, int, int]]:
    """Staircase triangulation of (surface) x (path or cycle).

    Vertex ``v`` of layer ``k`` gets id ``v + nverts*k``; the vertex order of
    each triangle fixes the staircase so shared prism walls agree.
    """
    out = []
    for k in range(segments):
        k2 = (k + 1) % segments if cyclic else k + 1
        for tri in triangles:
            a, b, c = sorted(tri)
            lo = lambda v: v + nverts * k  # noqa: E731
            hi = lambda v: v + nverts * k2  # noqa: E731
            out.append((lo(a), lo(b), lo(c), hi(c)))
            out.append((lo(a), lo(b), hi(b), hi(c)))
            out.append((lo(a), hi(a), hi(b), hi(c)))
    return out


SPHERE4 = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]


def grid_torus(n: int = 3) -> list[tuple[int, int, int]]:
    """Triangles of the n x n grid torus; vertex (i, j) has id i + n*j.

    Every square [i, i+1] x [j, j+1] is cut by the diagonal (i, j)-(i+1, j+1),
    so the swap (i, j) -> (j, i) is a simplicial automorphism.
    """
    vid = lambda i, j: (i % n) + n * (j % n)  # noqa: E731
    tris = []
    for i in range(n):
        for j in range(n):
            tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            tris.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
    return tris


def _solid_torus(n: int = 3) -> list[tuple[int, ...]]:
    # boundary vertex (i, k) -> i + n*k: i runs around the meridian disk,
    # k along the core circle.  Each prism over the triangle between layers
    # k and k+1 has cyclically twisted walls and is coned from a centre vertex.
    vid = lambda i, k: (i % 3) + 3 * (k % n)  # noqa: E731
    tets = []
    for k in range(n):
        centre = 3 * n + k
        faces = [(vid(0, k), vid(1, k), vid(2, k)), (vid(0, k + 1), vid(1, k + 1), vid(2, k + 1))]
        for i in range(3):
            faces.append((vid(i, k), vid(i + 1, k), vid(i + 1, k + 1)))
            faces.append((vid(i, k), vid(i + 1, k + 1), vid(i, k + 1)))
        tets.extend((centre, *f) for f in faces)
    return tets


BUILTIN_NAMES = ("S3", "B3", "S2xI", "S2xS1", "solid-torus", "T2xI")


def builtin(name: str) -> Triangulation:
    """Fixed small triangulations used as fixtures.

    ``S3``           boundary of the 4-simplex (5 tetrahedra).
    ``B3``           a single tetrahedron.
    ``S2xI``         boundary of a tetrahedron times a path of 3 segments;
                     layer k vertex v has id v + 4k, boundary layers 0 and 3.
    ``S2xS1``        the same product over a 3-cycle, i.e. S2xI with its two
                     boundary spheres identified by v <-> v + 12.
    ``solid-torus``  triangle times a 3-cycle with twisted prisms, each coned
                     from an inner vertex: 12 vertices (3 inner), 24 tetrahedra;
                     the boundary is the 3x3 grid torus.
    ``T2xI``         3x3 grid torus times a path of 3 segments; layer k
                     vertex v has id v + 9k.
    """
    if name == "S3":
        tets = []
        for i in range(5):
            rest = [v for v in range(5) if v != i]
            if i % 2:
                rest[0], rest[1] = rest[1], rest[0]
            tets.append(tuple(rest))
        return Triangulation(tets)
    if name == "B3":
        return Triangulation([(0, 1, 2, 3)])
    if name == "S2xI":
        return Triangulation(orient_coherently(_product_with_interval(SPHERE4, 4, 3, cyclic=False)))
    if name == "S2xS1":
        return Triangulation(orient_coherently(_product_with_interval(SPHERE4, 4, 3, cyclic=True)))
    if name == "solid-torus":
        return Triangulation(orient_coherently(_solid_torus()))
    if name == "T2xI":
        return Triangulation(orient_coherently(_product_with_interval(grid_torus(3), 9, 3, cyclic=False)))
    raise UnknownName(f"unknown builtin manifold {name!r}; expected one of {BUILTIN_NAMES}")


# ----------------------------------------------------------------------------
# JSON file format


def to_json_dict(t: Triangulation, coordinates: Mapping[int, Sequence[float]] | None = None) -> dict:
    doc: dict = {"vertices": list(t.vertices), "tetrahedra": [list(tt) for tt in t.tetrahedra]}
    if coordinates is not None:
        doc["coordinates"] = {str(v): [float(c) for c in coordinates[v]] for v in t.vertices}
    return doc


def dumps(t: Triangulation, coordinates: Mapping[int, Sequence[float]] | None = None) -> str:
    return json.dumps(to_json_dict(t, coordinates), indent=1)


def from_json_dict(doc: Mapping) -> tuple[Triangulation, dict[int, tuple[float, float, float]] | None]:
    if not isinstance(doc, Mapping) or "tetrahedra" not in doc:
        raise ValueError("triangulation document needs a 'tetrahedra' list")
    t = Triangulation(doc["tetrahedra"], doc.get("vertices"))
    coords = None
    if doc.get("coordinates") is not None:
        raw = doc["coordinates"]
        coords = {int(k): tuple(float(x) for x in v) for k, v in raw.items()}
        for v, c in coords.items():
            if len(c) != 3:
                raise ValueError(f"coordinates of vertex {v} must have 3 entries")
    return t, coords  # type: ignore[return-value]


def loads(text: str):
    return from_json_dict(json.loads(text))
