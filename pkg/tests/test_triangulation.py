import numpy as np
import pytest

from torsio.errors import Degenerate, NonManifold, NonOrientable, NotApplicable, UnknownName
from torsio.triangulation import (BUILTIN_NAMES, PachnerMove, Triangulation, apply_pachner, builtin, dumps,
                                  induced_face_sign, loads, permutation_sign, random_interior_move)

EXPECTED = {
    # name: (vertices, tetrahedra, boundary components, euler characteristic of each boundary)
    "S3": (5, 5, 0, []),
    "B3": (4, 1, 1, [2]),
    "S2xI": (16, 36, 2, [2, 2]),
    "S2xS1": (12, 36, 0, []),
    "solid-torus": (12, 24, 1, [0]),
    "T2xI": (36, 162, 2, [0, 0]),
}


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtin_counts(name):
    t = builtin(name)
    nv, nt, m, chis = EXPECTED[name]
    assert len(t.vertices) == nv
    assert len(t.tetrahedra) == nt
    assert t.m == m
    assert sorted(c.euler_characteristic for c in t.boundary_components) == chis
    assert t.euler_characteristic == sum(chis) // 2


def test_unknown_builtin():
    with pytest.raises(UnknownName):
        builtin("RP3")


def test_permutation_sign():
    assert permutation_sign([0, 1, 2, 3]) == 1
    assert permutation_sign([1, 0, 2, 3]) == -1
    assert permutation_sign([3, 0, 1, 2]) == -1
    assert permutation_sign([2, 3, 0, 1]) == 1


def test_face_signs_cancel_on_inner_faces():
    t = builtin("S3")
    for f, ts in t.face_tetrahedra.items():
        a, b = ts
        assert induced_face_sign(t.tetrahedra[a], f) == -induced_face_sign(t.tetrahedra[b], f)


def test_rejects_repeated_vertex():
    with pytest.raises(Degenerate):
        Triangulation([(0, 1, 1, 2)])


def test_rejects_inconsistent_orientation():
    with pytest.raises(NonOrientable):
        Triangulation([(0, 1, 2, 3), (0, 1, 2, 4)])


def test_rejects_pinched_vertex():
    # two tetrahedra meeting at a single vertex: the link of 0 is two disjoint triangles
    with pytest.raises(NonManifold):
        Triangulation([(0, 1, 2, 3), (0, 4, 5, 6)])


def test_mirrored_flips_orientation_signs():
    t = builtin("solid-torus")
    assert t.mirrored().signs == tuple(-s for s in t.signs)


def test_json_round_trip():
    t = builtin("S2xI")
    coords = {v: (0.1 * v, 0.2, 0.3) for v in t.vertices}
    t2, c2 = loads(dumps(t, coords))
    assert t2 == t
    assert c2 == coords


@pytest.mark.parametrize("doc", ['{"vertices": [0, 1]}',
                                 '{"tetrahedra": [[0, 1, 2, 3]], "coordinates": {"0": [1, 2]}}'])
def test_json_rejects_bad_documents(doc):
    with pytest.raises(ValueError):
        loads(doc)


def test_one_four_and_back():
    t = builtin("S3")
    t4 = apply_pachner(t, PachnerMove("1-4", (0, 1, 2, 3), 9))
    assert len(t4.tetrahedra) == 8
    assert 9 in t4.inner_vertices
    back = apply_pachner(t4, PachnerMove("4-1", (9,)))
    assert back == t


def test_two_three_and_back():
    t = apply_pachner(builtin("S3"), PachnerMove("1-4", (0, 1, 2, 3), 9))
    move = random_interior_move(t, "2-3", np.random.default_rng(1))
    t23 = apply_pachner(t, move)
    assert len(t23.tetrahedra) == len(t.tetrahedra) + 1
    new_edge = tuple(sorted(set(t23.edges) - set(t.edges)))
    assert len(new_edge) == 1
    assert apply_pachner(t23, PachnerMove("3-2", new_edge[0])) == t


def test_moves_keep_the_boundary():
    t = builtin("solid-torus")
    rng = np.random.default_rng(3)
    for kind in ("1-4", "2-3", "2-3"):
        t2 = apply_pachner(t, random_interior_move(t, kind, rng))
        assert sorted(t2.canonical_boundary()) == sorted(t.canonical_boundary())
        t = t2


def test_s3_has_no_two_three_move():
    # every pair of tetrahedra in the 4-simplex boundary already shares the would-be new edge
    with pytest.raises(NotApplicable):
        random_interior_move(builtin("S3"), "2-3", np.random.default_rng(0))


def test_boundary_face_is_not_a_two_three_locus():
    with pytest.raises(NotApplicable):
        apply_pachner(builtin("B3"), PachnerMove("2-3", (0, 1, 2)))
