import numpy as np
import pytest

from loopcmc.closing import check_closing
from loopcmc.frame import monodromy
from loopcmc.loopalg import H3
from loopcmc.pipeline import (BIGCELL, CROSSED, OUTSIDE, TSV_HEADER, VALID, BasepointError, DomainSpec, Job,
                              SurfaceMesh, export_obj, invalid_bands, quad_faces, read_obj, run_report,
                              sample_surface, spanning_tree)
from loopcmc.potential import delaunay_potential_h3, sphere_potential
from loopcmc.sym import SymPoints

PTS = SymPoints(1.0, -1.0, H3, 0.0)


def sphere_model(z):
    zz = np.abs(z) ** 2
    out = np.empty(z.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = (1 + zz) / (1 - zz)
    out[..., 0, 1] = 2 * z / (1 - zz)
    out[..., 1, 0] = 2 * np.conj(z) / (1 - zz)
    return out


def toy_mesh(validity):
    validity = np.asarray(validity)
    shape = validity.shape
    k = np.arange(validity.size, dtype=float).reshape(shape)
    valid = validity >= VALID
    viz = np.where(valid[..., None], np.stack([k / 3, k * np.pi, -k / 7], axis=-1), np.nan)
    lc = np.where(valid[..., None], np.stack([k, k + 0.1, k + 0.2, k + 0.3, k + 0.4], axis=-1), np.nan)
    return SurfaceMesh(k.astype(complex), np.zeros(shape + (2, 2), dtype=complex), lc, viz, validity,
                       np.where(valid, 0.5, -0.5), np.ones(shape), np.zeros(shape), quad_faces(validity),
                       {"potential": "toy", "form": "H3"})


@pytest.fixture(scope="module")
def sphere_mesh():
    dom = DomainSpec("disk", (8, 12), r1=0.9)
    return sample_surface(sphere_potential(), dom, H3, PTS, trunc=32, tol_ode=1e-11)


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec("torus")
    with pytest.raises(ValueError):
        DomainSpec("disk", (1, 5))
    with pytest.raises(ValueError):
        DomainSpec("annulus", (4, 4), r0=0.5, r1=0.2)
    with pytest.raises(ValueError):
        DomainSpec("rect", (4, 4), punctures=[0.0, 0.05], delta=0.05)


def test_domain_nodes_and_mask():
    dom = DomainSpec("holed", (5, 9), r1=0.9, holes=[0.5], delta=0.1)
    z = dom.nodes()
    assert z.shape == (5, 9)
    assert np.isclose(np.abs(z[-1]).max(), 0.9)
    assert not dom.mask(np.array([0.52]))[0] and dom.mask(np.array([0.0]))[0]
    rect = DomainSpec("rect", (3, 4), box=(-1, 1, 0, 2)).nodes()
    assert rect[0, 0] == -1 and rect[-1, -1] == 1 + 2j


def test_spanning_tree():
    allowed = np.ones((3, 3), dtype=bool)
    allowed[1, 1] = False
    tree = spanning_tree(allowed, (0, 0))
    assert len(tree) == 8 and tree[(0, 0)] is None and (1, 1) not in tree
    for child, par in tree.items():
        if par is not None:
            assert abs(child[0] - par[0]) + abs(child[1] - par[1]) == 1
    assert spanning_tree(allowed, (0, 0), "vu")[(0, 1)] == (0, 0)


def test_quad_faces_omit_invalid():
    assert quad_faces(np.ones((2, 2), dtype=int)) == [(0, 2, 3, 1)]
    v = np.ones((3, 3), dtype=int)
    v[1, 1] = BIGCELL
    assert quad_faces(v) == []
    v[1, 1] = CROSSED
    assert len(quad_faces(v)) == 4


def test_export_two_by_two(tmp_path):
    obj, side = export_obj(toy_mesh(np.ones((2, 2), dtype=int)), tmp_path / "m.obj")
    text = open(obj).read().splitlines()
    assert sum(line.startswith("v ") for line in text) == 4
    assert sum(line.startswith("f ") for line in text) == 1
    rows = open(side).read().splitlines()
    assert rows[0] == TSV_HEADER and rows[0].split("\t") == ["index", "validity", "pivot", "metric",
                                                             "x0", "x1", "x2", "x3", "x4"]
    assert len(rows) == 5


def test_export_drops_invalid(tmp_path):
    v = np.ones((3, 3), dtype=int)
    v[0, 0] = BIGCELL
    obj, side = export_obj(toy_mesh(v), tmp_path / "m.obj")
    verts, faces = read_obj(obj)
    assert verts.shape == (8, 3) and len(faces) == 3
    assert all(1 <= i <= 8 for f in faces for i in f)
    assert open(side).read().splitlines()[1].split("\t")[4] == "nan"


def test_round_trip_bit_exact(tmp_path):
    v = np.ones((3, 4), dtype=int)
    v[2, 3] = OUTSIDE
    mesh = toy_mesh(v)
    obj, _ = export_obj(mesh, tmp_path / "m.obj")
    verts, _ = read_obj(obj)
    assert np.array_equal(verts, mesh.viz[mesh.valid])


def test_export_empty_rejected(tmp_path):
    mesh = toy_mesh(np.ones((2, 2), dtype=int))
    mesh.validity = np.zeros((0, 0), dtype=int)
    with pytest.raises(ValueError):
        export_obj(mesh, tmp_path / "e.obj")


def test_invalid_bands():
    assert invalid_bands([1, 1, 1]) == 0
    assert invalid_bands([1, 0, 0, 1, 0, 1]) == 2
    assert invalid_bands([0, 1, 2, 2, 1]) == 3
    assert invalid_bands([-1, 1, -1]) == 0


def test_sphere_disk_matches_closed_form(sphere_mesh):
    assert np.all(sphere_mesh.validity == VALID)
    err = np.max(np.abs(sphere_mesh.matrices - sphere_model(sphere_mesh.z)))
    assert err < 1e-6
    assert np.all(np.isfinite(sphere_mesh.pivot))


def test_sphere_beyond_unit_circle():
    dom = DomainSpec("disk", (9, 4), r1=1.2)
    mesh = sample_surface(sphere_potential(), dom, H3, PTS, trunc=32)
    r = np.abs(mesh.z[:, 0])
    assert np.all(mesh.validity[r < 0.95] == VALID)
    ring = (r > 0.95) & (r < 1.05)
    assert np.all(mesh.validity[ring] == BIGCELL)
    assert np.all(np.isnan(mesh.viz[mesh.validity == BIGCELL]))


def test_path_and_thread_independence(sphere_mesh):
    dom = DomainSpec("disk", (8, 12), r1=0.9)
    other = sample_surface(sphere_potential(), dom, H3, PTS, trunc=32, tol_ode=1e-11, order="vu", workers=3)
    assert np.max(np.abs(other.matrices - sphere_mesh.matrices)) < 10 * 1e-11 * 100
    same = sample_surface(sphere_potential(), dom, H3, PTS, trunc=32, tol_ode=1e-11, workers=3)
    assert same.payload_hash() == sphere_mesh.payload_hash()


def test_basepoint_outside_big_cell():
    dom = DomainSpec("disk", (3, 4), r0=1.0, r1=1.0, basepoint=0.0)
    with pytest.raises(BasepointError):
        sample_surface(sphere_potential(), dom, H3, PTS, trunc=32)


def test_delaunay_bands_per_period():
    pot = delaunay_potential_h3(2.0)
    # one period in log r is about 7 for q = 2
    dom = DomainSpec("annulus", (71, 2), r0=1.0, r1=np.exp(7.0), theta=(0.0, 0.1), basepoint=1.0)
    pts = SymPoints(1.0, -1.0, H3, 0.0)
    mesh = sample_surface(pot, dom, H3, pts, trunc=32, keep_crossing=True)
    line = mesh.validity[:, 0]
    assert line[0] == VALID
    assert invalid_bands(line) >= 2 and np.any(line == CROSSED)


def test_run_report(sphere_mesh):
    M = monodromy(delaunay_potential_h3(2.0), 0, 1.0, 32, 1.0)
    job = Job("delaunay", {"q": 2.0}, check_closing([M], "H3", 1.0, -1.0), {"end": 1e-12}, sphere_mesh,
              flags=["sign mismatch"])
    text = run_report(job)
    lines = dict(line.split(": ", 1) for line in text.splitlines())
    assert lines["job"] == "delaunay" and lines["param.q"] == "2.0"
    assert lines["mesh.hash"] == sphere_mesh.payload_hash()
    assert "flag: sign mismatch" in text
    assert lines["closes"] == "True" and float(lines["extrinsic_max"]) < 1e-6
    assert run_report(job) == text
