import numpy as np
import pytest

from torsio.complex import evaluate_invariant
from torsio.errors import IncompatibleBoundary, PlacementMismatch
from torsio.geometry import Placement, random_placement
from torsio.gluing import (GluingMap, ball_pair_fixture, check_composition, check_gluing_map, compose_invariants,
                           gamma_data, glue, self_glue_compose, self_glue_fixture, self_glue_folded,
                           solid_torus_pair_fixture, surface_complex, transport_placement)
from torsio.grassmann import generating_data
from torsio.triangulation import builtin


def test_gluing_map_json_round_trip():
    g = GluingMap(0, 1, {0: 12, 1: 13, 2: 14, 3: 15}, self_glue=True)
    assert GluingMap.from_json(g.to_json()) == g


def test_orientation_preserving_map_is_rejected():
    t = builtin("B3")
    with pytest.raises(IncompatibleBoundary):
        check_gluing_map(t, t, GluingMap(0, 0, {v: v for v in t.vertices}))
    check_gluing_map(t, t.mirrored(), GluingMap(0, 0, {v: v for v in t.vertices}))


def test_non_bijective_map_is_rejected():
    t = builtin("B3")
    with pytest.raises(IncompatibleBoundary):
        check_gluing_map(t, t.mirrored(), GluingMap(0, 0, {0: 0, 1: 1, 2: 2, 3: 2}))


def test_mismatched_coordinates_are_rejected():
    fx = ball_pair_fixture(0)
    moved = {v: tuple(np.add(c, 1e-3)) for v, c in fx.p2.coords.items()}
    with pytest.raises(PlacementMismatch):
        glue(fx.m1, fx.m2, fx.gmap, fx.p1, Placement(moved))


def test_ball_pair_glues_to_s3():
    fx = ball_pair_fixture(1)
    res = glue(fx.m1, fx.m2, fx.gmap, fx.p1, fx.p2)
    t = res.triangulation
    assert t.is_closed and t.euler_characteristic == 0
    assert evaluate_invariant(t, res.placement).value == pytest.approx(-1.0, rel=1e-9)


def test_surface_complex_is_a_complex():
    t = builtin("solid-torus")
    p = random_placement(t, 0)
    sc = surface_complex(t.boundary_components[0], p)
    assert sc.residual() < 1e-12
    assert sc.tau != 0.0


def test_transport_placement_matches_boundary():
    fx = solid_torus_pair_fixture(2)
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    shifted = fx.p2.transformed(q, np.array([0.3, -1.0, 2.0]))
    back = transport_placement(shifted, fx.gmap, fx.p1)
    for a, b in fx.gmap.vertex_map.items():
        assert back.coords[b] == fx.p1.coords[a]


@pytest.mark.parametrize("make", [ball_pair_fixture, solid_torus_pair_fixture])
def test_composition_matches_direct(make):
    r = check_composition(make(3))
    assert r.sign_flag == 1
    assert r.rel_error < 1e-6


def test_solid_torus_composition_integrates_over_free_edges():
    r = check_composition(solid_torus_pair_fixture(0))
    assert r.free_edges == 6


def test_folded_self_glue_matches_expanded_route():
    fx = self_glue_fixture("S2xI", 1)
    folded = self_glue_folded(fx.m1, fx.p1, fx.gmap)
    d = generating_data(fx.m1, fx.p1)
    g = gamma_data(d.triangulation, d.placement, fx.gmap.source, fx.gmap)
    expanded = self_glue_compose(d.element, g).constant()
    assert folded.value == pytest.approx(expanded, rel=1e-8)


def test_self_glued_torus_layers_vanish():
    fx = self_glue_fixture("T2xI", 0)
    r = self_glue_folded(fx.m1, fx.p1, fx.gmap)
    assert r.value == 0.0
    assert r.rank_deficiency >= 1
    res = glue(fx.m1, None, fx.gmap, fx.p1)
    assert evaluate_invariant(res.triangulation, res.placement).is_zero


def test_self_glued_sphere_layers_do_not_vanish():
    # the empty set of free edges leaves nothing to integrate: the law returns the prefactor times I(S2xI)
    fx = self_glue_fixture("S2xI", 0)
    r = self_glue_folded(fx.m1, fx.p1, fx.gmap)
    assert r.value == pytest.approx(1.0, rel=1e-8)
    res = glue(fx.m1, None, fx.gmap, fx.p1)
    assert evaluate_invariant(res.triangulation, res.placement).is_zero


def test_compose_scalar_case_by_hand():
    fx = ball_pair_fixture(0)
    d1 = generating_data(fx.m1, fx.p1, sway_component=0)
    d2 = generating_data(fx.m2, fx.p2, sway_component=0)
    g = gamma_data(fx.m1, fx.p1, 0, fx.gmap)
    assert g.free_edges == ()
    composed = compose_invariants(d1.element, d2.element, g).constant()
    assert composed == pytest.approx(g.factor * d1.element.constant() * d2.element.constant())
    assert composed == pytest.approx(-1.0, rel=1e-9)
