import numpy as np
import pytest

from torsio.complex import subdivide_for_anchors
from torsio.errors import RankDeficient
from torsio.geometry import random_placement, velocity_matrix
from torsio.rigidity import (boundary_free_edges, check_seed_stability, interior_columns, interior_target_rank,
                             length_differential, numerical_rank, rigid_construction_interior,
                             rigid_construction_surface, surface_length_differential)
from torsio.triangulation import builtin


@pytest.mark.parametrize("name, rank", [("S3", 9), ("S2xI", 30), ("solid-torus", 9), ("T2xI", 60)])
def test_interior_construction_size(name, rank):
    t = builtin(name)
    p = random_placement(t, 0)
    rc = rigid_construction_interior(t, p)
    assert len(rc) == interior_target_rank(t) == rank
    rows = length_differential(t, p, rc.edges)
    assert numerical_rank(rows) == rank
    assert set(rc.edges) | set(rc.complement) == set(t.inner_edges)


def test_length_differential_annihilates_global_motion():
    # a global motion moves inner vertices and sways every boundary component in the same way
    t = builtin("S2xI")
    p = random_placement(t, 1)
    cols = interior_columns(t)
    g = np.random.default_rng(0).normal(size=6)
    vec = np.zeros(len(cols))
    for k, c in enumerate(cols):
        if c[0] == "x":
            vec[k] = (velocity_matrix(p[c[1]]) @ g)[c[2]]
        else:
            vec[k] = g[c[2]]
    dl = length_differential(t, p, t.edges)
    assert np.abs(dl @ vec).max() < 1e-12


def test_surface_construction_of_torus():
    t = builtin("solid-torus")
    p = random_placement(t, 2)
    gamma = t.boundary_components[0]
    rc = rigid_construction_surface(gamma, p)
    assert len(rc) == 3 * len(gamma.vertices) - 6
    assert len(rc.complement) == len(gamma.edges) - len(rc)
    assert numerical_rank(surface_length_differential(gamma, p, rc.edges)) == len(rc)


def test_sphere_boundary_has_no_free_edges():
    t = builtin("B3")
    assert boundary_free_edges(t, random_placement(t, 0)) == [()]


def test_override_must_be_rigid():
    t = builtin("S3")
    p = random_placement(t, 0)
    rc = rigid_construction_interior(t, p)
    assert rigid_construction_interior(t, p, override=rc.edges).edges == rc.edges
    with pytest.raises(RankDeficient):
        rigid_construction_interior(t, p, override=rc.edges[:-1])
    with pytest.raises(RankDeficient):
        rigid_construction_interior(t, p, override=[(0, 99)])


def test_surface_override_rejects_wrong_size():
    t = builtin("solid-torus")
    p = random_placement(t, 0)
    gamma = t.boundary_components[0]
    with pytest.raises(RankDeficient):
        rigid_construction_surface(gamma, p, override=gamma.edges[:5])


@pytest.mark.parametrize("name", ["S3", "S2xI", "S2xS1", "solid-torus", "T2xI"])
def test_construction_is_seed_stable(name):
    t = builtin(name)
    rc = check_seed_stability(t, [random_placement(t, s) for s in range(4)])
    assert len(rc) == interior_target_rank(t)


def test_numerical_rank_edge_cases():
    assert numerical_rank(np.zeros((0, 3))) == 0
    assert numerical_rank(np.zeros((2, 2))) == 0
    assert numerical_rank(np.array([[1.0, 0.0], [0.0, 1e-12]])) == 1


def test_s3_after_three_subdivisions():
    # every vertex of a closed manifold is inner: 8 of them after three 1-4 moves
    t, p, _ = subdivide_for_anchors(builtin("S3"), random_placement(builtin("S3"), 0), needed=8)
    rc = rigid_construction_interior(t, p)
    assert len(t.inner_vertices) == 8
    assert len(rc) == 18
