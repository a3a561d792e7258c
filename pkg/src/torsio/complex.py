"""The acyclic chain complex of a triangulated manifold, its torsion and the scalar invariants."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import EdgeNotEligible, MissingInnerVertices, SingularPlanMinor, TorsioError
from .geometry import (MetricCache, Placement, angle_jacobian, metric_cache, random_placement,
                       velocity_matrix)
from .rigidity import (RigidConstruction, boundary_free_edges, interior_columns, length_differential,
                       rigid_construction_interior)
from .triangulation import Edge, PachnerMove, Triangulation, apply_pachner

# a minor is "singular" when its smallest singular value is below this
# fraction of the largest one.  The f3 minor gets a tighter bound: large
# manifolds with random placements produce honest condition numbers far
# beyond 1e8, while structural zeros sit at rounding level.
SINGULAR_RTOL = 1e-8
F3_ZERO_RTOL = 1e-12
ZERO_SEEDS = 3


@dataclass(frozen=True)
class LabeledMatrix:
    data: np.ndarray
    rows: tuple[Hashable, ...]
    cols: tuple[Hashable, ...]

    def __post_init__(self):
        if self.data.shape != (len(self.rows), len(self.cols)):
            raise ValueError(f"shape {self.data.shape} does not match labels "
                             f"({len(self.rows)}, {len(self.cols)})")
        if len(set(self.rows)) != len(self.rows) or len(set(self.cols)) != len(self.cols):
            raise ValueError("labels must be unique on each side")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    def take(self, rows: Sequence[Hashable], cols: Sequence[Hashable]) -> np.ndarray:
        ri = {r: k for k, r in enumerate(self.rows)}
        ci = {c: k for k, c in enumerate(self.cols)}
        return self.data[np.ix_([ri[r] for r in rows], [ci[c] for c in cols])]

    def entry(self, row: Hashable, col: Hashable) -> float:
        return float(self.data[self.rows.index(row), self.cols.index(col)])

    @property
    def T(self) -> "LabeledMatrix":
        return LabeledMatrix(self.data.T.copy(), self.cols, self.rows)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


def dual(label: Hashable) -> tuple:
    return ("*", label)


@dataclass(frozen=True)
class Minor:
    sign: float
    logabs: float
    singular: bool
    ratio: float  # smallest over largest singular value

    @property
    def value(self) -> float:
        if self.singular:
            return 0.0
        return self.sign * math.exp(self.logabs)


def minor(m: LabeledMatrix, rows: Sequence[Hashable], cols: Sequence[Hashable],
          rtol: float = SINGULAR_RTOL) -> Minor:
    if len(rows) != len(cols):
        raise ValueError("minor must be square")
    if not rows:
        return Minor(1.0, 0.0, False, 1.0)
    a = m.take(rows, cols)
    s = np.linalg.svd(a, compute_uv=False)
    ratio = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    sign, logabs = np.linalg.slogdet(a)
    return Minor(float(sign), float(logabs), ratio < rtol, ratio)


@dataclass(frozen=True)
class MinorPlan:
    """Row and column choices of the five minors entering the torsion."""

    f1_rows: tuple
    f2_rows: tuple
    f2_cols: tuple
    f3_rows: tuple
    f3_cols: tuple
    f4_rows: tuple
    f4_cols: tuple
    f5_cols: tuple
    anchor_vertices: tuple[int, ...] | None = None
    sway_component: int | None = None


@dataclass(frozen=True)
class ChainComplex:
    f1: LabeledMatrix
    f2: LabeledMatrix
    f3: LabeledMatrix
    f4: LabeledMatrix
    f5: LabeledMatrix
    mode: str
    plan: MinorPlan
    rc: RigidConstruction
    C: tuple[Edge, ...] = ()
    D: tuple[Edge, ...] = ()
    cache: MetricCache | None = field(default=None, repr=False)

    @property
    def maps(self) -> tuple[LabeledMatrix, ...]:
        return (self.f1, self.f2, self.f3, self.f4, self.f5)


E3 = tuple(("e", j) for j in range(6))


def anchor_vertices(t: Triangulation, p: Placement) -> tuple[int, int, int]:
    """Three lowest-id inner vertices that are not collinear."""
    inner = list(t.inner_vertices)
    for a, b, c in itertools.combinations(inner, 3):
        u = p[b] - p[a]
        w = p[c] - p[a]
        if np.linalg.norm(np.cross(u, w)) > 1e-9 * max(1.0, np.linalg.norm(u) * np.linalg.norm(w)):
            return a, b, c
    raise MissingInnerVertices("need three affinely independent inner vertices")


def anchor_rows(a: int, b: int, c: int) -> tuple:
    return (("x", a, 0), ("x", a, 1), ("x", a, 2), ("x", b, 1), ("x", b, 2), ("x", c, 2))


def _check_boundary_sets(t: Triangulation, C: Sequence[Edge], D: Sequence[Edge]) -> None:
    if len(C) != len(D):
        raise EdgeNotEligible("C and D must have the same size")
    for e in list(C) + list(D):
        if e not in t.boundary_edges:
            raise EdgeNotEligible(f"edge {e} is not a boundary edge")
    if len(set(C)) != len(C) or len(set(D)) != len(D):
        raise EdgeNotEligible("repeated edge in C or D")


def build_complex(t: Triangulation, p: Placement, cache: MetricCache | None = None,
                  rc: RigidConstruction | None = None, C: Sequence[Edge] = (), D: Sequence[Edge] = (),
                  sway_component: int | None = None) -> ChainComplex:
    """Assemble f1..f5 and the minor plan.

    With ``sway_component`` set, the six rows of the f1 minor are the sway
    parameters of that boundary component (so minor f1 = 1) instead of
    coordinates of three inner vertices.
    """
    C = tuple(tuple(sorted(e)) for e in C)  # type: ignore[misc]
    D = tuple(tuple(sorted(e)) for e in D)  # type: ignore[misc]
    _check_boundary_sets(t, C, D)
    if sway_component is None and len(t.inner_vertices) < 3:
        raise MissingInnerVertices(f"{len(t.inner_vertices)} inner vertices, need 3")
    if sway_component is not None and not 0 <= sway_component < t.m:
        raise ValueError(f"no boundary component {sway_component}")
    cache = cache or metric_cache(t, p)
    rc = rc or rigid_construction_interior(t, p)

    c1 = tuple(interior_columns(t))
    inner = list(t.inner_edges)
    c2 = tuple(("l", e) for e in inner + list(C))
    c3 = tuple([("w", e) for e in inner] + [("a", e) for e in D])

    f1 = np.zeros((len(c1), 6))
    for r, lab in enumerate(c1):
        if lab[0] == "x":
            f1[r] = velocity_matrix(p[lab[1]])[lab[2]]
        else:
            f1[r, lab[2]] = 1.0
    f2 = length_differential(t, p, inner + list(C))
    f2_d = length_differential(t, p, inner + list(D))
    H = angle_jacobian(t, cache, inner + sorted(set(C) | set(D)))
    hidx = {e: k for k, e in enumerate(inner + sorted(set(C) | set(D)))}
    f3 = H[np.ix_([hidx[e] for e in inner + list(D)], [hidx[e] for e in inner + list(C)])]

    F1 = LabeledMatrix(f1, c1, E3)
    F2 = LabeledMatrix(f2, c2, c1)
    F3 = LabeledMatrix(f3, c3, c2)
    F4 = LabeledMatrix(-f2_d.T, tuple(dual(c) for c in c1), c3)
    F5 = LabeledMatrix(f1.T.copy(), tuple(dual(e) for e in E3), tuple(dual(c) for c in c1))

    if sway_component is None:
        anchors: tuple[int, ...] | None = anchor_vertices(t, p)
        r1 = anchor_rows(*anchors)  # type: ignore[misc]
    else:
        anchors = None
        r1 = tuple(("sway", sway_component, j) for j in range(6))
    f2_cols = tuple(c for c in c1 if c not in set(r1))
    plan = MinorPlan(
        f1_rows=r1,
        f2_rows=tuple(("l", e) for e in rc.edges),
        f2_cols=f2_cols,
        f3_rows=tuple([("w", e) for e in rc.complement] + [("a", e) for e in D]),
        f3_cols=tuple(("l", e) for e in list(rc.complement) + list(C)),
        f4_rows=tuple(dual(c) for c in f2_cols),
        f4_cols=tuple(("w", e) for e in rc.edges),
        f5_cols=tuple(dual(r) for r in r1),
        anchor_vertices=anchors,
        sway_component=sway_component,
    )
    mode = "closed" if t.m == 0 else "boundary"
    return ChainComplex(F1, F2, F3, F4, F5, mode, plan, rc, C, D, cache)  # type: ignore[arg-type]


def theorem1_residuals(c: ChainComplex) -> list[float]:
    """Relative norms of the consecutive compositions f_{k+1} f_k."""
    out = []
    for a, b in zip(c.maps, c.maps[1:]):
        prod = b.data @ a.data
        scale = b.norm() * a.norm()
        out.append(float(np.linalg.norm(prod) / scale) if scale else 0.0)
    return out


def plan_minors(c: ChainComplex) -> dict[str, Minor]:
    pl = c.plan
    return {
        "f1": minor(c.f1, pl.f1_rows, E3),
        "f2": minor(c.f2, pl.f2_rows, pl.f2_cols),
        "f3": minor(c.f3, pl.f3_rows, pl.f3_cols, F3_ZERO_RTOL),
        "f4": minor(c.f4, pl.f4_rows, pl.f4_cols),
        "f5": minor(c.f5, tuple(dual(e) for e in E3), pl.f5_cols),
    }


@dataclass(frozen=True)
class LogScalar:
    """A real number stored as sign and log of its absolute value."""

    sign: float
    logabs: float

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logabs)

    def __mul__(self, other: "LogScalar") -> "LogScalar":
        return LogScalar(self.sign * other.sign, self.logabs + other.logabs)

    def __truediv__(self, other: "LogScalar") -> "LogScalar":
        return LogScalar(self.sign * other.sign, self.logabs - other.logabs)


ZERO = LogScalar(0.0, -math.inf)


def _as_log(mn: Minor) -> LogScalar:
    return LogScalar(mn.sign, mn.logabs)


def torsion_prefactor(c: ChainComplex) -> LogScalar:
    """minor f1 * minor f5 / (minor f2 * minor f4)."""
    ms = plan_minors(c)
    for k in ("f1", "f2", "f4", "f5"):
        if ms[k].singular:
            raise SingularPlanMinor(f"minor of {k} is singular (ratio {ms[k].ratio:.3g})")
    return _as_log(ms["f1"]) * _as_log(ms["f5"]) / (_as_log(ms["f2"]) * _as_log(ms["f4"]))


def log_torsion(c: ChainComplex) -> LogScalar:
    pre = torsion_prefactor(c)
    m3 = minor(c.f3, c.plan.f3_rows, c.plan.f3_cols, F3_ZERO_RTOL)
    if m3.singular:
        return ZERO
    return pre * _as_log(m3)


def torsion(c: ChainComplex) -> float:
    """(minor f1 minor f3 minor f5) / (minor f2 minor f4), zero if f3's minor vanishes."""
    return log_torsion(c).value


def volume_length_factor(t: Triangulation, cache: MetricCache) -> LogScalar:
    """prod(-6V) over tetrahedra divided by prod l^2 over inner edges."""
    sign = 1.0
    log = 0.0
    for v in cache.six_volumes:
        sign *= -math.copysign(1.0, v)
        log += math.log(abs(v))
    for e in t.inner_edges:
        log -= 2.0 * math.log(cache.lengths[e])
    return LogScalar(sign, log)


# ----------------------------------------------------------------------------
# subdivision to get enough inner vertices


def subdivide_for_anchors(t: Triangulation, p: Placement, needed: int = 3,
                          ) -> tuple[Triangulation, Placement, list[PachnerMove]]:
    """Apply 1-4 moves to the first tetrahedron until ``needed`` inner vertices exist.

    Each new vertex sits at a barycenter with weights jittered by a generator
    seeded from the placement seed, so the result is reproducible.
    """
    moves = []
    rng = np.random.default_rng([0 if p.seed is None else int(p.seed), 7])
    while len(t.inner_vertices) < needed:
        tet = t.tetrahedra[0]
        new = max(t.vertices) + 1
        w = 1.0 + 0.4 * (rng.random(4) - 0.5)
        w /= w.sum()
        x = sum(wi * p[v] for wi, v in zip(w, tet))
        move = PachnerMove("1-4", tuple(sorted(tet)), new)
        t = apply_pachner(t, move)
        p = p.with_coords({new: x})
        moves.append(move)
    return t, p, moves


@dataclass(frozen=True)
class InvariantResult:
    value: float
    log: LogScalar
    f3_ratio: float
    moves: tuple[PachnerMove, ...] = ()
    complex: ChainComplex | None = field(default=None, repr=False)

    @property
    def is_zero(self) -> bool:
        return self.log.sign == 0


def evaluate_invariant(t: Triangulation, p: Placement, C: Sequence[Edge] = (), D: Sequence[Edge] = (),
                       rc: RigidConstruction | None = None, sway_component: int | None = None,
                       check_eligible: bool = True) -> InvariantResult:
    """tau * prod(-6V) / prod_{inner} l^2 with full diagnostics."""
    moves: list[PachnerMove] = []
    if sway_component is None and len(t.inner_vertices) < 3:
        t, p, moves = subdivide_for_anchors(t, p)
    if check_eligible and (C or D):
        eligible = {e for comp in boundary_free_edges(t, p) for e in comp}
        for e in list(C) + list(D):
            if tuple(sorted(e)) not in eligible:
                raise EdgeNotEligible(
                    f"edge {e} is not among the boundary edges outside the surface rigid constructions")
    cache = metric_cache(t, p)
    c = build_complex(t, p, cache, rc, C, D, sway_component)
    m3 = minor(c.f3, c.plan.f3_rows, c.plan.f3_cols, F3_ZERO_RTOL)
    pre = torsion_prefactor(c)
    tau = ZERO if m3.singular else pre * _as_log(m3)
    val = tau * volume_length_factor(t, cache) if tau.sign else ZERO
    return InvariantResult(val.value, val, m3.ratio, tuple(moves), c)


def invariant_closed(t: Triangulation, p: Placement) -> float:
    if t.m:
        raise TorsioError("manifold has boundary; use invariant_boundary")
    return evaluate_invariant(t, p).value


def invariant_boundary(t: Triangulation, p: Placement, C: Sequence[Edge] = (), D: Sequence[Edge] = ()) -> float:
    return evaluate_invariant(t, p, C, D).value


def structurally_zero(t: Triangulation, seed: int = 0, C: Sequence[Edge] = (), D: Sequence[Edge] = (),
                      seeds: int = ZERO_SEEDS) -> bool:
    """True when minor f3 is singular for ``seeds`` independent placements."""
    for k in range(seeds):
        p = random_placement(t, seed + 104729 * k)
        if not evaluate_invariant(t, p, C, D).is_zero:
            return False
    return True
