"""Real Grassmann algebra with Berezin integration, and the generating functions built on it.

Monomials are stored as bit masks over the generator indices of a
:class:`GeneratorRegistry`; the monomial value is the product of its
generators in ascending index order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import OddGeneratorCount, OddInput, RegistryMismatch, ShapeMismatch

Edge = tuple[int, int]


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _popcount(x: int) -> int:
    return bin(x).count("1")


def merge_sign(left: int, right: int) -> int:
    """Sign of reordering (left monomial)(right monomial) into ascending order."""
    n = 0
    for y in _bits(right):
        n += _popcount(left >> (y + 1))
    return -1 if n & 1 else 1


class GeneratorRegistry:
    """Ordered, named generators.  Index order is the canonical monomial order."""

    def __init__(self, names: Sequence[str]):
        self.names: tuple[str, ...] = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError("generator names must be unique")
        self._index = {n: k for k, n in enumerate(self.names)}
        self.edges: tuple[Edge, ...] = ()

    @classmethod
    def for_edges(cls, edges: Iterable[Sequence[int]]) -> "GeneratorRegistry":
        """Pairs a_e, a*_e for each edge, edges in ascending order."""
        es = sorted({tuple(sorted(e)) for e in edges})
        names = []
        for a, b in es:
            names += [f"a{a},{b}", f"a*{a},{b}"]
        reg = cls(names)
        reg.edges = tuple(es)  # type: ignore[assignment]
        return reg

    def __len__(self) -> int:
        return len(self.names)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GeneratorRegistry) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"GeneratorRegistry({list(self.names)})"

    def index(self, name: str) -> int:
        return self._index[name]

    def a(self, edge: Sequence[int]) -> int:
        e = tuple(sorted(edge))
        return self._index[f"a{e[0]},{e[1]}"]

    def a_star(self, edge: Sequence[int]) -> int:
        e = tuple(sorted(edge))
        return self._index[f"a*{e[0]},{e[1]}"]


class GrassmannElement:
    __slots__ = ("registry", "terms")

    def __init__(self, registry: GeneratorRegistry, terms: Mapping[int, float] | None = None):
        self.registry = registry
        self.terms: dict[int, float] = {m: float(c) for m, c in (terms or {}).items() if c != 0.0}

    # construction -------------------------------------------------------
    @classmethod
    def scalar(cls, registry: GeneratorRegistry, c: float) -> "GrassmannElement":
        return cls(registry, {0: c})

    @classmethod
    def generator(cls, registry: GeneratorRegistry, name: str | int) -> "GrassmannElement":
        k = name if isinstance(name, int) else registry.index(name)
        return cls(registry, {1 << k: 1.0})

    @classmethod
    def monomial(cls, registry: GeneratorRegistry, factors: Sequence[str | int], c: float = 1.0) -> "GrassmannElement":
        """c times the product of ``factors`` in the order given."""
        out = cls.scalar(registry, c)
        for f in factors:
            out = out * cls.generator(registry, f)
        return out

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "GrassmannElement") -> None:
        if self.registry != other.registry:
            raise RegistryMismatch("elements live on different generator registries")

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            other = GrassmannElement.scalar(self.registry, other)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return GrassmannElement(self.registry, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement(self.registry, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, GrassmannElement):
            return GrassmannElement(self.registry, {m: c * other for m, c in self.terms.items()})
        return multiply(self, other)

    def __rmul__(self, other):
        return GrassmannElement(self.registry, {m: c * other for m, c in self.terms.items()})

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, GrassmannElement) and self.registry == other.registry
                and self.terms == other.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=lambda m: (_popcount(m), m)):
            names = "".join(self.registry.names[k] for k in _bits(m)) or "1"
            parts.append(f"{self.terms[m]:+.6g}*{names}")
        return " ".join(parts)

    # inspection ---------------------------------------------------------
    def is_even(self) -> bool:
        return all(_popcount(m) % 2 == 0 for m in self.terms)

    def constant(self) -> float:
        return self.terms.get(0, 0.0)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def coefficient(self, factors: Sequence[str | int]) -> float:
        """Coefficient at the product of ``factors`` taken in the given order."""
        idx = [f if isinstance(f, int) else self.registry.index(f) for f in factors]
        if len(set(idx)) != len(idx):
            return 0.0
        mask = 0
        sign = 1
        for k in idx:
            sign *= merge_sign(mask, 1 << k)
            mask |= 1 << k
        return sign * self.terms.get(mask, 0.0)

    def pair_coefficient(self, rows: Sequence[Edge], cols: Sequence[Edge]) -> float:
        """Coefficient at prod_k a_{rows[k]} a*_{cols[k]}."""
        if len(rows) != len(cols):
            return 0.0
        factors: list[int] = []
        for r, c in zip(rows, cols):
            factors += [self.registry.a(r), self.registry.a_star(c)]
        return self.coefficient(factors)

    def balanced(self) -> bool:
        """Every monomial has as many starred as unstarred generators."""
        for m in self.terms:
            names = [self.registry.names[k] for k in _bits(m)]
            starred = sum(1 for n in names if n.startswith("a*"))
            if 2 * starred != len(names):
                return False
        return True

    # serialization ------------------------------------------------------
    def to_json(self) -> list:
        out = []
        for m in sorted(self.terms, key=lambda m: (_popcount(m), _bits(m))):
            out.append([[self.registry.names[k] for k in _bits(m)], self.terms[m]])
        return out

    def dumps(self) -> str:
        return json.dumps({"generators": list(self.registry.names), "terms": self.to_json()})

    @classmethod
    def from_json(cls, registry: GeneratorRegistry, data: Sequence) -> "GrassmannElement":
        terms: dict[int, float] = {}
        for names, c in data:
            mask = 0
            for n in names:
                mask |= 1 << registry.index(n)
            terms[mask] = terms.get(mask, 0.0) + float(c)
        return cls(registry, terms)

    @classmethod
    def loads(cls, text: str) -> "GrassmannElement":
        doc = json.loads(text)
        return cls.from_json(GeneratorRegistry(doc["generators"]), doc["terms"])


def multiply(u: GrassmannElement, v: GrassmannElement) -> GrassmannElement:
    u._check(v)
    out: dict[int, float] = {}
    for mv, cv in v.terms.items():
        vbits = _bits(mv)
        for mu, cu in u.terms.items():
            if mu & mv:
                continue
            n = 0
            for y in vbits:
                n += _popcount(mu >> (y + 1))
            m = mu | mv
            out[m] = out.get(m, 0.0) + (-cu * cv if n & 1 else cu * cv)
    return GrassmannElement(u.registry, out)


def exponential(u: GrassmannElement) -> GrassmannElement:
    """exp of an even element as the product of exp over its terms.

    Even monomials commute and square to zero, so exp(c m) = 1 + c m.
    """
    if not u.is_even():
        raise OddInput("exponential needs an even element")
    out = GrassmannElement.scalar(u.registry, math.exp(u.constant()))
    for m, c in u.terms.items():
        if m:
            out = out + out * GrassmannElement(u.registry, {m: c})
    return out


def berezin_integral(u: GrassmannElement, g: str | int) -> GrassmannElement:
    """Integrate over one generator: move it to the right end of each monomial, then strip it."""
    k = g if isinstance(g, int) else u.registry.index(g)
    bit = 1 << k
    out: dict[int, float] = {}
    for m, c in u.terms.items():
        if m & bit:
            sign = -1.0 if _popcount(m >> (k + 1)) & 1 else 1.0
            out[m ^ bit] = sign * c
    return GrassmannElement(u.registry, out)


def multiple_integral(u: GrassmannElement, differentials: Sequence[str | int]) -> GrassmannElement:
    """Iterated integral; ``differentials[0]`` sits next to the integrand and acts first."""
    for g in differentials:
        u = berezin_integral(u, g)
    return u


def pair_differentials(registry: GeneratorRegistry, edges: Iterable[Edge]) -> list[int]:
    """The list for prod_i da*_i da_i: ascending edges, da*_i before da_i."""
    out = []
    for e in sorted(tuple(sorted(e)) for e in edges):
        out += [registry.a_star(e), registry.a(e)]
    return out


def substitute(u: GrassmannElement, images: Mapping[int, GrassmannElement],
               registry: GeneratorRegistry | None = None) -> GrassmannElement:
    """Algebra homomorphism sending generator k to ``images[k]`` (identity otherwise).

    Images must be odd and live on ``registry`` (default: u's own).
    """
    reg = registry or u.registry
    for img in images.values():
        if img.registry != reg:
            raise RegistryMismatch("substitution images live on another registry")
    if reg != u.registry:
        missing = [k for m in u.terms for k in _bits(m) if k not in images]
        if missing:
            raise RegistryMismatch("every generator needs an image when changing registry")
    out = GrassmannElement(reg)
    for m, c in u.terms.items():
        term = GrassmannElement.scalar(reg, c)
        for k in _bits(m):
            term = term * images.get(k, GrassmannElement.generator(reg, k))
        out = out + term
    return out


def relabel_edges(u: GrassmannElement, registry: GeneratorRegistry,
                  edge_map: Mapping[Edge, Edge]) -> GrassmannElement:
    """Move a pair-generator element onto ``registry`` sending edge e to edge_map[e]."""
    images = {}
    for e in u.registry.edges:
        f = tuple(sorted(edge_map.get(e, e)))
        images[u.registry.a(e)] = GrassmannElement.generator(registry, registry.a(f))
        images[u.registry.a_star(e)] = GrassmannElement.generator(registry, registry.a_star(f))
    return substitute(u, images, registry)


# ----------------------------------------------------------------------------
# generating functions of minors


def bilinear_form(registry: GeneratorRegistry, matrix: np.ndarray, rows: Sequence[Edge],
                  cols: Sequence[Edge]) -> GrassmannElement:
    """f(a, a*) = sum_ij M_ij a_{rows i} a*_{cols j}."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (len(rows), len(cols)):
        raise ShapeMismatch(f"matrix shape {matrix.shape} vs labels ({len(rows)}, {len(cols)})")
    terms: dict[int, float] = {}
    for i, r in enumerate(rows):
        ai = registry.a(r)
        for j, c in enumerate(cols):
            if matrix[i, j] == 0.0:
                continue
            aj = registry.a_star(c)
            mask = (1 << ai) | (1 << aj)
            sign = 1.0 if ai < aj else -1.0
            terms[mask] = terms.get(mask, 0.0) + sign * matrix[i, j]
    return GrassmannElement(registry, terms)


def minor_generating_function(matrix: np.ndarray, rows: Sequence[Edge] | None = None,
                              cols: Sequence[Edge] | None = None,
                              registry: GeneratorRegistry | None = None) -> GrassmannElement:
    """exp f(a, a*); its coefficient at prod_k a_{i_k} a*_{j_k} is the (i | j) minor.

    Without labels, rows and columns are indexed by pseudo-edges (0, k+1).
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ShapeMismatch("expected a matrix")
    if rows is None:
        rows = [(0, k + 1) for k in range(matrix.shape[0])]
    if cols is None:
        cols = [(0, k + 1) for k in range(matrix.shape[1])]
    registry = registry or GeneratorRegistry.for_edges(list(rows) + list(cols))
    return exponential(bilinear_form(registry, matrix, rows, cols))


# ----------------------------------------------------------------------------
# Gaussian integration over pairs


def _principal_pivots(h: np.ndarray, candidates: Sequence[int], rtol: float) -> list[int]:
    chosen: list[int] = []
    for k in candidates:
        trial = chosen + [k]
        s = np.linalg.svd(h[np.ix_(trial, trial)], compute_uv=False)
        if s[0] > 0 and s[-1] > rtol * s[0]:
            chosen = trial
    return chosen


def gaussian_integral(h: np.ndarray, edges: Sequence[Edge], integrate: Iterable[Edge],
                      method: str = "schur", rtol: float = 1e-12, max_literal_edges: int = 12
                      ) -> tuple[float, GrassmannElement]:
    """int exp(sum_ij h_ij a_i a*_j) prod_{integrate} da*_i da_i.

    ``h`` is square, indexed by ``edges`` on both sides (rows pair with a,
    columns with a*).  Returns ``(scale, element)``; the integral equals
    scale * element, with element on the registry of the kept edges.

    ``method="berezin"`` expands exp f and integrates literally.
    ``method="schur"`` first integrates a block P of integrated edges with
    invertible h_PP in closed form (giving det h_PP and the Schur complement)
    and only then integrates the leftover edges literally.
    """
    edges = [tuple(sorted(e)) for e in edges]
    h = np.asarray(h, dtype=float)
    if h.shape != (len(edges), len(edges)):
        raise ShapeMismatch("h must be square over edges")
    integ = {tuple(sorted(e)) for e in integrate}
    keep = [e for e in edges if e not in integ]
    pos = {e: k for k, e in enumerate(edges)}
    if method == "berezin":
        reg = GeneratorRegistry.for_edges(edges)
        el = multiple_integral(exponential(bilinear_form(reg, h, edges, edges)), pair_differentials(reg, integ))
        return 1.0, _restrict(el, GeneratorRegistry.for_edges(keep))
    if method != "schur":
        raise ValueError(f"unknown method {method!r}")
    if not keep:
        # everything is integrated: the Gaussian integral is the determinant,
        # declared zero when h is numerically singular
        empty = GeneratorRegistry([])
        if not edges:
            return 1.0, GrassmannElement.scalar(empty, 1.0)
        sv = np.linalg.svd(h, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] < rtol * sv[0]:
            return 0.0, GrassmannElement(empty)
        sgn, logdet = np.linalg.slogdet(h)
        return float(sgn * math.exp(logdet)), GrassmannElement.scalar(empty, 1.0)
    inner_idx = [pos[e] for e in edges if e in integ]
    piv = _principal_pivots(h, inner_idx, rtol) if inner_idx else []
    rest = [k for k in range(len(edges)) if k not in set(piv)]
    if piv:
        hpp = h[np.ix_(piv, piv)]
        sgn, logdet = np.linalg.slogdet(hpp)
        scale = float(sgn * math.exp(logdet))
        s = h[np.ix_(rest, rest)] - h[np.ix_(rest, piv)] @ np.linalg.solve(hpp, h[np.ix_(piv, rest)])
        # entries at rounding level are exact zeros when h_II is rank deficient
        s[np.abs(s) < rtol * np.abs(h).max()] = 0.0
    else:
        scale, s = 1.0, h[np.ix_(rest, rest)]
    rest_edges = [edges[k] for k in rest]
    if len(rest_edges) > max_literal_edges:
        raise ShapeMismatch(f"{len(rest_edges)} edges left for literal integration (limit {max_literal_edges})")
    reg = GeneratorRegistry.for_edges(rest_edges)
    el = exponential(bilinear_form(reg, s, rest_edges, rest_edges))
    el = multiple_integral(el, pair_differentials(reg, [e for e in rest_edges if e in integ]))
    return scale, _restrict(el, GeneratorRegistry.for_edges(keep))


def _restrict(u: GrassmannElement, registry: GeneratorRegistry) -> GrassmannElement:
    """Re-home an element whose generators all exist (by name) in ``registry``."""
    out: dict[int, float] = {}
    for m, c in u.terms.items():
        mask = 0
        idx = []
        for k in _bits(m):
            idx.append(registry.index(u.registry.names[k]))
        sign = 1
        for k in idx:
            sign *= merge_sign(mask, 1 << k)
            mask |= 1 << k
        out[mask] = out.get(mask, 0.0) + sign * c
    return GrassmannElement(registry, out)


# ----------------------------------------------------------------------------
# kernel trace


def kernel_registry(n: int) -> GeneratorRegistry:
    """Generators a1..a_{2n} followed by b1..b_{2n}."""
    return GeneratorRegistry([f"a{k}" for k in range(1, 2 * n + 1)] + [f"b{k}" for k in range(1, 2 * n + 1)])


def _kernel_split(reg: GeneratorRegistry) -> tuple[list[int], list[int]]:
    a = [k for k, nme in enumerate(reg.names) if nme.startswith("a")]
    b = [k for k, nme in enumerate(reg.names) if nme.startswith("b")]
    if len(a) != len(b) or len(a) % 2:
        raise OddGeneratorCount(f"need 2n generators on each side, got {len(a)} and {len(b)}")
    return a, b


def kernel_trace(K: GrassmannElement, n: int) -> float:
    """Trace of f(b) -> int f(a) K(a, b) da_{2n} ... da_1, computed as int K(a, -a) da_{2n} ... da_1."""
    a, b = _kernel_split(K.registry)
    if len(a) != 2 * n:
        raise OddGeneratorCount(f"registry has {len(a)} a-generators, expected {2 * n}")
    images = {bk: -GrassmannElement.generator(K.registry, ak) for ak, bk in zip(a, b)}
    u = substitute(K, images)
    return multiple_integral(u, list(reversed(a))).constant()


def kernel_operator_trace(K: GrassmannElement, n: int) -> float:
    """Brute force: build the operator on every monomial b_S and sum the diagonal."""
    a, b = _kernel_split(K.registry)
    if len(a) != 2 * n:
        raise OddGeneratorCount(f"registry has {len(a)} a-generators, expected {2 * n}")
    total = 0.0
    reg = K.registry
    for s in range(1 << len(a)):
        sub = [a[k] for k in range(len(a)) if s >> k & 1]
        f = GrassmannElement.monomial(reg, sub)
        image = multiple_integral(f * K, list(reversed(a)))
        total += image.coefficient([b[k] for k in range(len(b)) if s >> k & 1])
    return total


def random_element(registry: GeneratorRegistry, rng: np.random.Generator, density: float = 0.3,
                   integer: bool = True) -> GrassmannElement:
    """Random element with roughly ``density`` of all monomials present (for tests)."""
    n = len(registry)
    terms = {}
    for m in range(1 << n):
        if rng.random() < density:
            terms[m] = float(rng.integers(-3, 4)) if integer else float(rng.normal())
    return GrassmannElement(registry, terms)


def map_coefficients(u: GrassmannElement, fn: Callable[[float], float]) -> GrassmannElement:
    return GrassmannElement(u.registry, {m: fn(c) for m, c in u.terms.items()})


# ----------------------------------------------------------------------------
# generating functions of a triangulated manifold


@dataclass(frozen=True)
class GeneratingData:
    """Everything behind a generating function, kept for diagnostics and gluing."""

    element: GrassmannElement
    prefactor: object  # LogScalar: torsion prefactor times the volume/length factor
    phi_scale: object  # LogScalar: closed-form part of the inner integration
    inner_free: tuple[Edge, ...]
    boundary_free: tuple[tuple[Edge, ...], ...]
    triangulation: object
    placement: object
    complex: object


def boundary_generator_edges(t, p, surface_rcs: Mapping[int, object] | None = None) -> list[tuple[Edge, ...]]:
    from .rigidity import rigid_construction_surface

    out = []
    for g in t.boundary_components:
        rc = (surface_rcs or {}).get(g.index) or rigid_construction_surface(g, p)
        out.append(tuple(rc.complement))
    return out


def generating_data(t, p, surface_rcs: Mapping[int, object] | None = None, sway_component: int | None = None,
                    method: str = "schur", rc=None) -> GeneratingData:
    from .complex import LogScalar, build_complex, subdivide_for_anchors, torsion_prefactor, volume_length_factor
    from .geometry import angle_jacobian, metric_cache

    if sway_component is None and len(t.inner_vertices) < 3:
        t, p, _ = subdivide_for_anchors(t, p)
    bfree = boundary_generator_edges(t, p, surface_rcs)
    cache = metric_cache(t, p)
    c = build_complex(t, p, cache, rc, sway_component=sway_component)
    inner_free = tuple(c.rc.complement)
    edges = list(inner_free) + sorted(e for comp in bfree for e in comp)
    h = angle_jacobian(t, cache, edges)
    scale, el = gaussian_integral(h, edges, inner_free, method)
    pre = torsion_prefactor(c) * volume_length_factor(t, cache)
    total = pre * LogScalar(math.copysign(1.0, scale), math.log(abs(scale))) if scale else LogScalar(0.0, -math.inf)
    return GeneratingData(total.value * el, pre, scale, inner_free, tuple(bfree), t, p, c)


def phi(t, p, surface_rcs: Mapping[int, object] | None = None, method: str = "schur", rc=None) -> GrassmannElement:
    """int exp f(a, a*) over the inner free edges; a function of boundary generators only."""
    from .complex import subdivide_for_anchors
    from .geometry import angle_jacobian, metric_cache
    from .rigidity import rigid_construction_interior

    if len(t.inner_vertices) < 3:
        t, p, _ = subdivide_for_anchors(t, p)
    rc = rc or rigid_construction_interior(t, p)
    bfree = boundary_generator_edges(t, p, surface_rcs)
    edges = list(rc.complement) + sorted(e for comp in bfree for e in comp)
    h = angle_jacobian(t, metric_cache(t, p), edges)
    scale, el = gaussian_integral(h, edges, rc.complement, method)
    return scale * el


def generating_invariant(t, p, surface_rcs: Mapping[int, object] | None = None,
                         sway_component: int | None = None, method: str = "schur") -> GrassmannElement:
    """Generating function whose coefficient at prod_k a_{D_k} a*_{C_k} is I_{C,D}."""
    return generating_data(t, p, surface_rcs, sway_component, method).element
