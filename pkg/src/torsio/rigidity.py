"""Minimal rigid constructions of edges, for 3-manifolds and boundary surfaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import RankDeficient
from .geometry import Placement, d_length_d_coords, velocity_matrix
from .triangulation import BoundaryComponent, Edge, Triangulation

RANK_RTOL = 1e-8


def numerical_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


# ----------------------------------------------------------------------------
# column bases


def interior_columns(t: Triangulation) -> list[tuple]:
    """Coordinates of inner vertices, then six sway parameters per boundary component."""
    cols: list[tuple] = [("x", v, c) for v in t.inner_vertices for c in range(3)]
    cols += [("sway", k, j) for k in range(t.m) for j in range(6)]
    return cols


def length_differential(t: Triangulation, p: Placement, edges: Sequence[Edge]) -> np.ndarray:
    """Rows dl_e over the interior column basis.

    A boundary vertex only moves with the sway of its component, so its
    coordinate gradient is pulled back through the velocity matrix.
    """
    cols = interior_columns(t)
    index = {c: k for k, c in enumerate(cols)}
    comp = t.component_of_vertex()
    out = np.zeros((len(edges), len(cols)))
    for r, e in enumerate(edges):
        grad = d_length_d_coords(e, p)
        for v in e:
            g = np.array([grad[(v, c)] for c in range(3)])
            if v in comp:
                k = comp[v]
                start = index[("sway", k, 0)]
                out[r, start:start + 6] += g @ velocity_matrix(p[v])
            else:
                for c in range(3):
                    out[r, index[("x", v, c)]] += g[c]
    return out


def surface_length_differential(gamma: BoundaryComponent, p: Placement,
                                edges: Sequence[Edge] | None = None) -> np.ndarray:
    edges = gamma.edges if edges is None else edges
    pos = {v: k for k, v in enumerate(gamma.vertices)}
    out = np.zeros((len(edges), 3 * len(gamma.vertices)))
    for r, e in enumerate(edges):
        for (v, c), val in d_length_d_coords(e, p).items():
            out[r, 3 * pos[v] + c] = val
    return out


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RigidConstruction:
    """Selected edges plus the complement left for torsion bookkeeping.

    ``context`` is ``"interior"`` or ``("surface", k)``.  For the interior
    the complement is the set of inner edges outside the construction; for a
    surface it is the set of edges of that component outside it.
    """

    edges: tuple[Edge, ...]
    context: object
    complement: tuple[Edge, ...]

    def __len__(self) -> int:
        return len(self.edges)


def _greedy(rows: np.ndarray, target: int, rtol: float) -> list[int]:
    chosen: list[int] = []
    basis = np.zeros((0, rows.shape[1]))
    for i in range(rows.shape[0]):
        trial = np.vstack([basis, rows[i]])
        if numerical_rank(trial, rtol) > len(chosen):
            chosen.append(i)
            basis = trial
            if len(chosen) == target:
                break
    return chosen


def interior_target_rank(t: Triangulation) -> int:
    return 3 * len(t.inner_vertices) + 6 * t.m - 6


def rigid_construction_interior(t: Triangulation, p: Placement, override: Iterable[Edge] | None = None,
                                rtol: float = RANK_RTOL) -> RigidConstruction:
    target = interior_target_rank(t)
    candidates = list(t.inner_edges)
    if override is not None:
        chosen = [tuple(sorted(e)) for e in override]
        bad = [e for e in chosen if e not in t.inner_edges]
        if bad:
            raise RankDeficient(f"override contains non-inner edges {bad}")
        rows = length_differential(t, p, chosen)
        if len(chosen) != target or numerical_rank(rows, rtol) != target:
            raise RankDeficient("override is not a minimal rigid construction")
    else:
        rows = length_differential(t, p, candidates)
        idx = _greedy(rows, target, rtol)
        if len(idx) != target:
            raise RankDeficient(f"interior rank {len(idx)} short of target {target}")
        chosen = [candidates[i] for i in idx]
    rest = tuple(e for e in candidates if e not in set(chosen))
    return RigidConstruction(tuple(chosen), "interior", rest)  # type: ignore[arg-type]


def rigid_construction_surface(gamma: BoundaryComponent, p: Placement, override: Iterable[Edge] | None = None,
                               rtol: float = RANK_RTOL) -> RigidConstruction:
    target = 3 * len(gamma.vertices) - 6
    if override is not None:
        chosen = [tuple(sorted(e)) for e in override]
        rows = surface_length_differential(gamma, p, chosen)
        if len(chosen) != target or numerical_rank(rows, rtol) != target:
            raise RankDeficient("override is not a minimal rigid construction of the surface")
    else:
        rows = surface_length_differential(gamma, p)
        idx = _greedy(rows, target, rtol)
        if len(idx) != target:
            raise RankDeficient(f"surface rank {len(idx)} short of target {target}")
        chosen = [gamma.edges[i] for i in idx]
    rest = tuple(e for e in gamma.edges if e not in set(chosen))
    return RigidConstruction(tuple(chosen), ("surface", gamma.index), rest)  # type: ignore[arg-type]


def boundary_free_edges(t: Triangulation, p: Placement) -> list[tuple[Edge, ...]]:
    """Per boundary component, the edges left out of its rigid construction."""
    return [rigid_construction_surface(g, p).complement for g in t.boundary_components]


def check_seed_stability(t: Triangulation, placements: Sequence[Placement]) -> RigidConstruction:
    """Return the interior construction if it is the same for every placement."""
    first = rigid_construction_interior(t, placements[0])
    for p in placements[1:]:
        other = rigid_construction_interior(t, p)
        if other.edges != first.edges:
            diff = sorted(set(first.edges) ^ set(other.edges))
            raise RankDeficient(f"rigid construction depends on placement (seed {p.seed}); differing edges {diff}")
    return first
