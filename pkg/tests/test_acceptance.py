"""Acceptance criteria 1-10, each ending in one PASS/FAIL line."""

import itertools

import numpy as np
import pytest

from torsio.cli import derivative_errors
from torsio.complex import build_complex, evaluate_invariant, theorem1_residuals
from torsio.geometry import angle_jacobian, metric_cache, placement_after_move, random_placement
from torsio.gluing import (ball_pair_fixture, check_composition, glue, self_glue_fixture, self_glue_folded,
                           solid_torus_pair_fixture)
from torsio.grassmann import (GeneratorRegistry, GrassmannElement, berezin_integral, boundary_generator_edges,
                              generating_data, kernel_operator_trace, kernel_registry, kernel_trace,
                              minor_generating_function, phi, random_element)
from torsio.rigidity import rigid_construction_interior
from torsio.triangulation import BUILTIN_NAMES, apply_pachner, builtin, random_interior_move

SEEDS = range(10)


def _fixed_boundary_placements(t, seeds):
    p0 = random_placement(t, seeds[0])
    fixed = {v: p0.coords[v] for v in t.boundary_vertices}
    return [p0] + [random_placement(t, s, fixed=fixed) for s in seeds[1:]]


def _element_spread(elements):
    ref = elements[0]
    scale = max(e.max_abs() for e in elements)
    return max((e - ref).max_abs() for e in elements) / scale


def test_criterion_01_complex_identities(verdict):
    worst = {}
    for name in BUILTIN_NAMES:
        t = builtin(name)
        for s in SEEDS:
            p = random_placement(t, s)
            for sway in ((None, 0) if t.m else (None,)):
                if sway is None and len(t.inner_vertices) < 3:
                    continue
                c = build_complex(t, p, sway_component=sway)
                worst[name] = max(worst.get(name, 0.0), *theorem1_residuals(c))
    top = max(worst.values())
    ok = verdict(1, "f(k+1) f(k) = 0 on every builtin, 10 seeds", top <= 1e-8, f"max residual {top:.2e}")
    assert ok, worst


def test_criterion_02_f3_symmetry(verdict):
    worst = 0.0
    cases = [(builtin(n), random_placement(builtin(n), s)) for n in BUILTIN_NAMES for s in range(3)]
    for fx in (ball_pair_fixture(0), solid_torus_pair_fixture(0)):
        res = glue(fx.m1, fx.m2, fx.gmap, fx.p1, fx.p2)
        cases.append((res.triangulation, res.placement))
    for t, p in cases:
        h = angle_jacobian(t, metric_cache(t, p))
        worst = max(worst, float(np.abs(h - h.T).max() / np.linalg.norm(h)))
    ok = verdict(2, "f3 symmetric on all fixtures", worst <= 1e-9, f"max asymmetry {worst:.2e}")
    assert ok


def test_criterion_03_derivative_oracles(verdict):
    err_len, err_ang = derivative_errors(120, seed=2024)
    ok = verdict(3, "analytic derivatives vs Richardson differences, 120 tetrahedra",
                 err_len <= 1e-6 and err_ang <= 1e-6, f"lengths {err_len:.1e}, angles {err_ang:.1e}")
    assert ok


def test_criterion_04_placement_independence(verdict):
    details = []
    ok = True
    s3 = [evaluate_invariant(builtin("S3"), random_placement(builtin("S3"), s)).value for s in SEEDS]
    spread = (max(s3) - min(s3)) / max(abs(v) for v in s3)
    ok &= spread <= 1e-6
    details.append(f"S3 {s3[0]:.6g} spread {spread:.1e}")
    zeros = [evaluate_invariant(builtin("S2xS1"), random_placement(builtin("S2xS1"), s)).is_zero for s in SEEDS]
    ok &= all(zeros)
    details.append(f"S2xS1 zero on {sum(zeros)}/10")
    for name in ("B3", "solid-torus"):
        t = builtin(name)
        els = [generating_data(t, p).element for p in _fixed_boundary_placements(t, list(SEEDS))]
        spread = _element_spread(els)
        ok &= spread <= 1e-6
        details.append(f"{name} spread {spread:.1e}")
    ok = verdict(4, "placement independence", ok, "; ".join(details))
    assert ok


def _pachner_values(name, seed):
    """Invariant before a move, after a 1-4 move and after a further 2-3 move."""
    t = builtin(name)
    p = random_placement(t, seed)
    rng = np.random.default_rng(seed)
    out = []
    for kind in (None, "1-4", "2-3"):
        if kind is not None:
            move = random_interior_move(t, kind, rng)
            t = apply_pachner(t, move)
            p = placement_after_move(t, p, move.new_vertex)
        if t.m:
            out.append(generating_data(t, p).element)
        else:
            out.append(evaluate_invariant(t, p))
    return out


def test_criterion_05_pachner_invariance(verdict):
    worst = {"S3": 0.0, "solid-torus": 0.0}
    zero = True
    for seed in range(3):
        s3 = [r.value for r in _pachner_values("S3", seed)]
        worst["S3"] = max(worst["S3"], max(abs(v - s3[0]) for v in s3) / abs(s3[0]))
        zero &= all(r.is_zero for r in _pachner_values("S2xS1", seed))
        worst["solid-torus"] = max(worst["solid-torus"], _element_spread(_pachner_values("solid-torus", seed)))
    ok = zero and max(worst.values()) <= 1e-6
    ok = verdict(5, "invariance under 1-4 and 2-3 moves on S3, S2xS1, solid-torus", ok,
                 f"S3 {worst['S3']:.1e}, S2xS1 {'zero' if zero else 'nonzero'}, "
                 f"solid-torus {worst['solid-torus']:.1e}")
    assert ok


def _hadamard(m):
    return float(np.prod(np.linalg.norm(m, axis=1))) if m.size else 1.0


def test_criterion_06_minor_oracle(verdict):
    rng = np.random.default_rng(6)
    worst = 0.0
    for n_rows, n_cols in [(1, 1), (2, 3), (3, 3), (4, 2), (4, 5), (5, 5)]:
        m = rng.normal(size=(n_rows, n_cols))
        g = minor_generating_function(m)
        rows = [(0, k + 1) for k in range(n_rows)]
        cols = [(0, k + 1) for k in range(n_cols)]
        for k in range(0, min(n_rows, n_cols) + 1):
            for r in itertools.permutations(range(n_rows), k):
                for c in itertools.combinations(range(n_cols), k):
                    sub = m[np.ix_(r, c)]
                    want = np.linalg.det(sub) if k else 1.0
                    got = g.pair_coefficient([rows[i] for i in r], [cols[j] for j in c])
                    worst = max(worst, abs(got - want) / max(abs(want), _hadamard(sub) * 1e-3))
    # bordered minors of the manifold matrix, all of E_inner included
    t = builtin("solid-torus")
    bordered = 0.0
    for seed in range(2):
        p = random_placement(t, seed)
        rc = rigid_construction_interior(t, p)
        bnd = sorted(e for comp in boundary_generator_edges(t, p) for e in comp)
        edges = list(rc.complement) + bnd
        h = angle_jacobian(t, metric_cache(t, p), edges)
        pos = {e: k for k, e in enumerate(edges)}
        inner = [pos[e] for e in rc.complement]
        ph = phi(t, p, rc=rc)
        for k in range(3):
            for D in itertools.combinations(bnd, k):
                for C in itertools.permutations(bnd, k):
                    sub = h[np.ix_(inner + [pos[e] for e in D], inner + [pos[e] for e in C])]
                    got = ph.pair_coefficient(list(D), list(C))
                    bordered = max(bordered, abs(got - np.linalg.det(sub)) / _hadamard(sub))
    ok = verdict(6, "exp f coefficients are minors; Phi gives bordered minors",
                 worst <= 1e-10 and bordered <= 1e-10, f"random {worst:.1e}, bordered {bordered:.1e}")
    assert ok


def test_criterion_07_berezin_axioms(verdict):
    reg = GeneratorRegistry(["a0", "a1", "a2", "a3"])
    one = GrassmannElement.scalar(reg, 1.0)
    checks = []
    rng = np.random.default_rng(7)
    for name in reg.names:
        a = GrassmannElement.generator(reg, name)
        checks.append(berezin_integral(one, name) == GrassmannElement(reg))
        checks.append(berezin_integral(a, name) == one)
        others = GeneratorRegistry([n for n in reg.names if n != name])
        for _ in range(20):
            g = random_element(others, rng)
            g = GrassmannElement(reg, {_lift_mask(m, others, reg): c for m, c in g.terms.items()})
            h = random_element(reg, rng)
            checks.append(berezin_integral(g * h, name) == g * berezin_integral(h, name))
    ok = verdict(7, "Berezin integral axioms hold exactly", all(checks), f"{len(checks)} identities")
    assert ok


def _lift_mask(mask, src, dst):
    out = 0
    for k, n in enumerate(src.names):
        if mask >> k & 1:
            out |= 1 << dst.index(n)
    return out


def test_criterion_08_gluing_theorem(verdict):
    errors = []
    flags = set()
    for seed in range(5):
        for fx in (ball_pair_fixture(seed), solid_torus_pair_fixture(seed)):
            r = check_composition(fx)
            flags.add(r.sign_flag)
            errors.append(r.rel_error if r.sign_flag == 1 else abs(r.composed + r.direct) / abs(r.direct))
    ok = max(errors) <= 1e-6 and len(flags) == 1
    ok = verdict(8, "gluing law: B3+B3 and solid-torus+solid-torus, 5 seeds", ok,
                 f"max rel error {max(errors):.1e}, sign flag {flags.pop() if len(flags) == 1 else 'inconsistent'}")
    assert ok


@pytest.mark.parametrize("name", ["S2xI", "T2xI"])
def test_criterion_09_zero_lemmas(verdict, name):
    rels = []
    values = []
    deficient = []
    for seed in range(5):
        fx = self_glue_fixture(name, seed)
        r = self_glue_folded(fx.m1, fx.p1, fx.gmap)
        rels.append(abs(r.value) / r.scale)
        values.append(r.value)
        res = glue(fx.m1, None, fx.gmap, fx.p1)
        deficient.append(evaluate_invariant(res.triangulation, res.placement).is_zero)
    ok = max(rels) <= 1e-8 and all(deficient)
    ok = verdict(9, f"self-glued {name} gives zero", ok,
                 f"composed values {', '.join(f'{v:.3g}' for v in values)}; max |value|/scale {max(rels):.1e}; "
                 f"glued f3 rank deficient on {sum(deficient)}/5")
    assert ok


def test_criterion_10_trace_formula(verdict):
    rng = np.random.default_rng(10)
    worst = 0.0
    count = 0
    for n in (1, 2):
        reg = kernel_registry(n)
        for _ in range(50):
            K = random_element(reg, rng, density=0.5, integer=False)
            worst = max(worst, abs(kernel_trace(K, n) - kernel_operator_trace(K, n)))
            count += 1
    ok = verdict(10, "trace formula vs brute-force operator trace", worst <= 1e-12,
                 f"{count} kernels, max difference {worst:.1e}")
    assert ok
