import math

import numpy as np
import pytest

from lingrowth.errors import InvalidParameter, MeshTooCoarse
from lingrowth.solver import Domain2D, annulus, convex_polygon, disk, generate_mesh

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def _check_conforming(mesh):
    assert np.all(mesh.areas > 0)
    # every interior edge is shared by exactly two triangles, boundary edges by one
    e = np.sort(np.concatenate([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]],
                                mesh.triangles[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert set(counts) <= {1, 2}
    edges, counts = np.unique(e, axis=0, return_counts=True)
    outer = edges[counts == 1]
    assert np.all(mesh.boundary[outer])
    # no hanging vertices: every vertex is used
    assert len(np.unique(mesh.triangles)) == len(mesh.vertices)


@pytest.mark.parametrize("D,h", [(disk(1.0), 0.5), (disk(1.0), 0.1), (annulus(1, 2), 0.1),
                                 (convex_polygon(SQUARE), 0.1),
                                 (convex_polygon([[0, 0], [2, 0], [1.5, 1], [0.2, 0.8]]), 0.2)])
def test_meshes_conform(D, h):
    mesh = generate_mesh(D, h)
    _check_conforming(mesh)
    assert mesh.h <= 1.5 * h


def test_disk_boundary_on_circle():
    mesh = generate_mesh(disk(1.0), 0.5)
    assert len(mesh.triangles) >= 4
    r = np.linalg.norm(mesh.vertices[mesh.boundary], axis=1)
    assert np.max(np.abs(r - 1.0)) <= 1e-14


def test_annulus_boundary_flags():
    mesh = generate_mesh(annulus(1.0, 2.0), 0.1)
    r = np.linalg.norm(mesh.vertices, axis=1)
    on = (np.abs(r - 1) <= 0.01 ** 2) | (np.abs(r - 2) <= 0.01 ** 2)
    assert np.array_equal(on, mesh.boundary)
    assert len(mesh.boundary_polyline) == 2


def test_unit_square_count():
    mesh = generate_mesh(convex_polygon(SQUARE), 0.1)
    assert 150 <= len(mesh.triangles) <= 600
    loop = mesh.boundary_polyline[0]
    assert len(loop) == np.count_nonzero(mesh.boundary)
    assert mesh.areas.sum() == pytest.approx(1.0, abs=1e-14)


def test_area_convergence():
    for D in (disk(1.0), annulus(1, 2)):
        err = [abs(generate_mesh(D, h).areas.sum() - D.area) for h in (0.2, 0.1)]
        assert err[1] < err[0] / 3


def test_gradients_exact_for_linear_and_constant():
    mesh = generate_mesh(annulus(1, 2), 0.2)
    k = np.array([0.7, -1.3])
    G = mesh.gradients(mesh.vertices @ k + 4.0)
    assert np.allclose(G, k, atol=1e-12)
    assert np.all(mesh.gradients(np.full(len(mesh.vertices), 3.0)) == 0)


def test_graded_annulus():
    mesh = generate_mesh(annulus(1, 2), 0.1, grading=2.0)
    _check_conforming(mesh)
    r = np.unique(np.round(np.linalg.norm(mesh.vertices, axis=1), 12))
    assert r[1] - r[0] < r[-1] - r[-2]


def test_hash_deterministic():
    a = generate_mesh(disk(1.0), 0.2).hash()
    b = generate_mesh(disk(1.0), 0.2).hash()
    assert a == b and a != generate_mesh(disk(1.0), 0.25).hash()


def test_domain_validation():
    with pytest.raises(InvalidParameter):
        convex_polygon([[0, 0], [1, 0], [0.5, 0.1], [1, 1], [0, 1]])
    with pytest.raises(InvalidParameter):
        annulus(2.0, 1.0)
    with pytest.raises(InvalidParameter):
        Domain2D("ellipse", {})
    with pytest.raises(MeshTooCoarse):
        generate_mesh(convex_polygon(SQUARE), 5.0)


def test_polygon_orientation_normalised():
    cw = convex_polygon(SQUARE[::-1])
    assert cw.area == pytest.approx(1.0)
    assert cw.inradius == pytest.approx(0.5)
    assert cw.exterior_ball_radius == pytest.approx(0.5)


def test_domain_geometry():
    D = annulus(1, 2)
    assert D.exterior_ball_radius == 0.5 and D.diameter == 4.0
    assert disk(2.0).area == pytest.approx(4 * math.pi)
