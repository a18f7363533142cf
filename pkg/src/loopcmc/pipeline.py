"""Domain sampling, surface meshing, OBJ export and run reports.

Frames are propagated from the basepoint along a breadth-first spanning
tree of the grid graph, then every vertex is factorized and evaluated
independently.
"""

from __future__ import annotations

import hashlib
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .factor import PIVOT_TOL, BigCellError, iwasawa
from .frame import TOL_ODE, FrameError, FramePath, integrate_samples
from .loopalg import MatrixLoop, eval_plus, get_form, grid
from .potential import Potential
from .sym import MembershipError, SymPoints, lightcone, metric_factor, sym_evaluate, visualize

VALID = 1
CROSSED = 2
BIGCELL = 0
OUTSIDE = -1
MEMBERSHIP = -2

DOMAIN_KINDS = ("disk", "annulus", "rect", "holed")


class BasepointError(RuntimeError):
    """The basepoint itself lies outside the big cell."""


@dataclass
class DomainSpec:
    """Parameter grid of a domain in the ``z``-plane.

    Parameters
    ----------
    kind : str
        ``disk`` (polar, radius ``r1``), ``annulus`` (polar, radii ``r0 < r1``,
        geometric radial spacing), ``rect`` (box ``[x0, x1] x [y0, y1]``, the
        punctured-sphere grid) or ``holed`` (polar disk of radius ``r1`` with
        disks of radius ``delta`` removed around ``holes``).
    res : (int, int)
        Grid resolution ``(n_u, n_v)``, both at least 2.
    delta : float
        Exclusion radius around punctures and holes.
    """

    kind: str = "disk"
    res: tuple = (24, 48)
    r0: float = 0.0
    r1: float = 0.9
    box: tuple = (-2.0, 2.0, -2.0, 2.0)
    holes: list = field(default_factory=list)
    punctures: list = field(default_factory=list)
    delta: float = 0.05
    basepoint: complex = 0.0
    theta: tuple = (0.0, 2 * np.pi)

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}; choose from {DOMAIN_KINDS}")
        nu, nv = (int(r) for r in self.res)
        if nu < 2 or nv < 2:
            raise ValueError("resolution must be at least 2x2")
        self.res = (nu, nv)
        if self.kind == "annulus" and not 0 < self.r0 < self.r1:
            raise ValueError("annulus needs 0 < r0 < r1")
        excl = [complex(c) for c in list(self.holes) + list(self.punctures) if np.isfinite(c)]
        for i, c in enumerate(excl):
            for d in excl[:i]:
                if abs(c - d) <= 2 * self.delta:
                    raise ValueError(f"exclusion disks at {d} and {c} overlap")

    def nodes(self) -> np.ndarray:
        nu, nv = self.res
        if self.kind == "rect":
            x0, x1, y0, y1 = self.box
            x = np.linspace(x0, x1, nv)
            y = np.linspace(y0, y1, nu)
            return x[None, :] + 1j * y[:, None]
        th = np.linspace(self.theta[0], self.theta[1], nv)
        if self.kind == "annulus":
            r = np.geomspace(self.r0, self.r1, nu)
        else:
            r = np.linspace(self.r0, self.r1, nu)
        return r[:, None] * np.exp(1j * th[None, :])

    def mask(self, z: np.ndarray) -> np.ndarray:
        ok = np.ones(z.shape, dtype=bool)
        for c in list(self.holes) + list(self.punctures):
            if np.isfinite(c):
                ok &= np.abs(z - c) > self.delta
        return ok


@dataclass
class SurfaceMesh:
    """Quad-grid mesh with per-vertex model points and diagnostics.

    ``validity`` uses 1 valid, 2 valid on the crossed sheet, 0 outside the
    big cell, -1 outside the domain, -2 membership failure.  ``pivot`` is
    negated on the crossed sheet.
    """

    z: np.ndarray
    matrices: np.ndarray
    lightcone: np.ndarray
    viz: np.ndarray
    validity: np.ndarray
    pivot: np.ndarray
    metric: np.ndarray
    proximity: np.ndarray
    faces: list
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return self.z.shape

    @property
    def valid(self) -> np.ndarray:
        return self.validity >= VALID

    def stats(self) -> dict:
        v = self.validity
        return {
            "vertices": int(v.size),
            "valid": int(np.sum(v == VALID)),
            "crossed": int(np.sum(v == CROSSED)),
            "bigcell_fail": int(np.sum(v == BIGCELL)),
            "outside": int(np.sum(v == OUTSIDE)),
            "membership_fail": int(np.sum(v == MEMBERSHIP)),
            "faces": len(self.faces),
        }

    def payload_hash(self) -> str:
        """SHA-256 of the exported vertex data (deterministic text form)."""
        h = hashlib.sha256()
        for i in range(self.validity.size):
            row = _tsv_row(self, i)
            h.update(row.encode())
        return h.hexdigest()


# ------------------------------------------------------------- frame pass

def spanning_tree(allowed: np.ndarray, root: tuple, order: str = "uv", edge_ok=None) -> dict:
    """Breadth-first spanning tree of the 4-neighbour grid graph.

    ``order`` sets the neighbour priority: ``uv`` tries the ``u`` direction
    first, ``vu`` the ``v`` direction.  Returns ``{child: parent}`` in
    visiting order (the root maps to None).
    """
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    if order == "vu":
        steps = steps[2:] + steps[:2]
    nu, nv = allowed.shape
    parent = {root: None}
    queue = deque([root])
    while queue:
        i, j = queue.popleft()
        for di, dj in steps:
            c = (i + di, j + dj)
            if 0 <= c[0] < nu and 0 <= c[1] < nv and allowed[c] and c not in parent:
                if edge_ok is None or edge_ok((i, j), c):
                    parent[c] = (i, j)
                    queue.append(c)
    return parent


def frame_pass(pot: Potential, domain: DomainSpec, lam: np.ndarray, tol: float = TOL_ODE,
               order: str = "uv", phi0=None):
    """Holomorphic frame samples at all reachable grid vertices.

    Returns ``(z, reached, frames)`` with ``frames`` of shape
    ``(n_u, n_v, len(lam), 2, 2)`` (NaN where not reached).
    """
    z = domain.nodes()
    allowed = domain.mask(z)
    finite = [complex(p) for p in list(pot.finite_punctures()) + list(domain.punctures) if np.isfinite(p)]
    clear = 0.5 * domain.delta

    def edge_ok(a, b):
        path = FramePath.polyline([z[a], z[b]])
        return not finite or path.clearance(finite, 16) > clear

    base = complex(domain.basepoint)
    d = np.abs(z - base)
    d[~allowed] = np.inf
    root = tuple(int(k) for k in np.unravel_index(np.argmin(d), z.shape))
    tree = spanning_tree(allowed, root, order, edge_ok)
    m = lam.size
    frames = np.full(z.shape + (m, 2, 2), np.nan, dtype=complex)
    start = np.broadcast_to(np.eye(2, dtype=complex), (m, 2, 2)).copy() if phi0 is None else phi0
    if z[root] != base:
        start = integrate_samples(pot, FramePath.polyline([base, z[root]]), lam, start, tol)
    frames[root] = start
    reached = np.zeros(z.shape, dtype=bool)
    reached[root] = True
    for child, par in tree.items():
        if par is None:
            continue
        if z[child] == z[par]:
            frames[child] = frames[par]
        else:
            frames[child] = integrate_samples(pot, FramePath.polyline([z[par], z[child]]), lam,
                                              frames[par], tol)
        reached[child] = True
    return z, reached, frames


# ---------------------------------------------------------------- vertices

@dataclass
class VertexResult:
    validity: int
    pivot: float
    matrix: np.ndarray | None = None
    metric: float = np.nan
    proximity: float = np.nan
    viz: np.ndarray | None = None
    lightcone: np.ndarray | None = None


def _eval_positive(B: MatrixLoop, lam: complex) -> np.ndarray:
    return eval_plus(B, lam)


def process_vertex(pot: Potential, z: complex, phi: np.ndarray, phi_l0: np.ndarray, trunc: int, form,
                   pts: SymPoints, unitarizer: MatrixLoop | None = None, pivot_tol: float = PIVOT_TOL,
                   keep_crossing: bool = False, viz: str = "default") -> VertexResult:
    """Unitarize, factor, evaluate and chart one vertex.

    ``phi`` are the frame samples on the loop grid and ``phi_l0`` the frame
    at ``lam0`` (integrated directly, so no Laurent sum is taken off the
    unit circle).
    """
    if unitarizer is not None:
        phi = unitarizer.retrunc(trunc).samples @ phi
        phi_l0 = _eval_positive(unitarizer, pts.lam0) @ phi_l0
    try:
        res = iwasawa(MatrixLoop.from_samples(phi, trunc), form, pivot_tol, keep_crossing)
    except BigCellError as err:
        return VertexResult(BIGCELL, float(err.margin))
    B = res.positive
    F0 = phi_l0 @ np.linalg.inv(_eval_positive(B, pts.lam0))
    try:
        mp = sym_evaluate(res.unitary, pts, F0=F0, crossed=res.crossed)
    except MembershipError:
        return VertexResult(MEMBERSHIP, res.pivot)
    try:
        v2 = metric_factor(pot, B, pts, z)
    except ValueError:
        v2 = np.nan
    coords, prox = visualize(mp.matrix, form, viz, res.crossed)
    pivot = -res.pivot if res.crossed else res.pivot
    return VertexResult(CROSSED if res.crossed else VALID, pivot, mp.matrix, v2, float(prox),
                        np.asarray(coords, dtype=float), lightcone(mp.matrix, form))


def quad_faces(validity: np.ndarray) -> list:
    """Quads ``(a, b, c, d)`` of row-major vertex indices whose corners are all valid."""
    nu, nv = validity.shape
    ok = validity >= VALID
    faces = []
    for i in range(nu - 1):
        for j in range(nv - 1):
            if ok[i, j] and ok[i + 1, j] and ok[i + 1, j + 1] and ok[i, j + 1]:
                faces.append((i * nv + j, (i + 1) * nv + j, (i + 1) * nv + j + 1, i * nv + j + 1))
    return faces


def sample_surface(pot: Potential, domain: DomainSpec, form, pts: SymPoints, unitarizer: MatrixLoop | None = None,
                   trunc: int = 32, tol_ode: float = TOL_ODE, pivot_tol: float = PIVOT_TOL,
                   keep_crossing: bool = False, viz: str = "default", order: str = "uv",
                   workers: int = 1, metadata: dict | None = None) -> SurfaceMesh:
    """Mesh the surface of ``pot`` over ``domain``.

    Parameters
    ----------
    pot : Potential
    domain : DomainSpec
    form : RealForm or str
    pts : SymPoints
    unitarizer : MatrixLoop, optional
        Left factor applied to every frame before factorization.
    trunc : int
        Loop truncation.
    order : str
        Spanning-tree neighbour priority, ``uv`` or ``vu``.
    workers : int
        Threads for the per-vertex stage; results do not depend on it.

    Raises
    ------
    BasepointError
        If the vertex nearest the basepoint fails the factorization.
    FrameError
        On ODE failure.
    """
    form = get_form(form)
    lam = grid(trunc)
    lam_all = np.concatenate([lam, [pts.lam0]])
    z, reached, frames = frame_pass(pot, domain, lam_all, tol_ode, order)
    shape = z.shape
    idx = [(i, j) for i in range(shape[0]) for j in range(shape[1])]

    def work(ij):
        if not reached[ij]:
            return VertexResult(OUTSIDE, np.nan)
        fr = frames[ij]
        return process_vertex(pot, z[ij], fr[:-1], fr[-1], trunc, form, pts, unitarizer, pivot_tol,
                              keep_crossing, viz)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(work, idx))
    else:
        results = [work(ij) for ij in idx]

    mats = np.full(shape + (2, 2), np.nan, dtype=complex)
    lc = np.full(shape + (5,), np.nan)
    vz = np.full(shape + (3,), np.nan)
    validity = np.empty(shape, dtype=int)
    pivot = np.full(shape, np.nan)
    metric = np.full(shape, np.nan)
    prox = np.full(shape, np.nan)
    for ij, r in zip(idx, results):
        validity[ij] = r.validity
        pivot[ij] = r.pivot
        if r.validity >= VALID:
            mats[ij] = r.matrix
            lc[ij] = np.real(r.lightcone)
            vz[ij] = r.viz
            metric[ij] = r.metric
            prox[ij] = r.proximity
    root_d = np.abs(z - complex(domain.basepoint))
    root_d[~reached] = np.inf
    root = np.unravel_index(np.argmin(root_d), shape)
    if validity[root] == BIGCELL:
        raise BasepointError(f"basepoint vertex {z[root]} lies outside the big cell (pivot {pivot[root]:.3e})")
    meta = {"potential": pot.name, "params": dict(pot.params), "form": form.name,
            "lambda0": complex(pts.lam0), "lambda1": complex(pts.lam1), "H": pts.H,
            "trunc": trunc, "tol_ode": tol_ode, "pivot_tol": pivot_tol, "domain": domain.kind,
            "res": domain.res, "keep_crossing": keep_crossing}
    meta.update(metadata or {})
    return SurfaceMesh(z, mats, lc, vz, validity, pivot, metric, prox, quad_faces(validity), meta)


# ------------------------------------------------------------------ export

TSV_HEADER = "index\tvalidity\tpivot\tmetric\tx0\tx1\tx2\tx3\tx4"


def _fmt(x: float) -> str:
    return "nan" if not np.isfinite(x) else f"{x:.17g}"


def _tsv_row(mesh: SurfaceMesh, k: int) -> str:
    i, j = divmod(k, mesh.shape[1])
    vals = [mesh.pivot[i, j], mesh.metric[i, j]] + list(mesh.lightcone[i, j])
    return f"{k}\t{mesh.validity[i, j]}\t" + "\t".join(_fmt(float(v)) for v in vals) + "\n"


def export_obj(mesh: SurfaceMesh, path) -> tuple:
    """Write ``path`` (OBJ ``v``/``f`` records) and ``path + '.tsv'``.

    Only valid vertices are written; faces use the OBJ 1-based indices of
    the written vertices.  Returns the two file paths.
    """
    path = str(path)
    if mesh.validity.size == 0:
        raise ValueError("empty mesh")
    flat = mesh.validity.ravel()
    vz = mesh.viz.reshape(-1, 3)
    remap = {}
    lines = [f"# {mesh.metadata.get('potential', 'surface')} {mesh.metadata.get('form', '')}\n"]
    for k in range(flat.size):
        if flat[k] >= VALID:
            remap[k] = len(remap) + 1
            x, y, w = vz[k]
            lines.append(f"v {x:.17g} {y:.17g} {w:.17g}\n")
    for f in mesh.faces:
        lines.append("f " + " ".join(str(remap[k]) for k in f) + "\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines)
    side = path + ".tsv"
    with open(side, "w", encoding="utf-8") as fh:
        fh.write(TSV_HEADER + "\n")
        for k in range(flat.size):
            fh.write(_tsv_row(mesh, k))
    return path, side


def read_obj(path) -> tuple:
    """Read ``v`` and ``f`` records; returns ``(vertices (n, 3), faces list)``."""
    verts, faces = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                faces.append(tuple(int(p.split("/")[0]) for p in parts[1:]))
    return np.array(verts, dtype=float).reshape(-1, 3), faces


# ---------------------------------------------------------------- analysis

def invalid_bands(validity_line) -> int:
    """Number of places along a 1-D vertex line where the factorization fails.

    A band is a maximal run of big-cell failures, or a direct step between
    a valid and a crossed vertex (the failure set then lies inside one cell).
    """
    v = np.asarray(validity_line)
    bad = v == BIGCELL
    runs = int(np.sum(bad[1:] & ~bad[:-1]) + (1 if bad.size and bad[0] else 0))
    jumps = int(np.sum(((v[1:] == VALID) & (v[:-1] == CROSSED)) | ((v[1:] == CROSSED) & (v[:-1] == VALID))))
    return runs + jumps


def pivot_profile(pot: Potential, zs, form, trunc: int = 32, tol: float = TOL_ODE, basepoint: complex = 0.0):
    """Iwasawa pivot along the polyline ``zs``, negative on the crossed sheet.

    Frames are propagated node to node from ``basepoint``.
    """
    form = get_form(form)
    lam = grid(trunc)
    nodes = [complex(basepoint)] + [complex(z) for z in zs]
    out = []
    phi = None
    for a, b in zip(nodes[:-1], nodes[1:]):
        phi = integrate_samples(pot, FramePath.polyline([a, b]), lam, phi, tol) if a != b else \
            (phi if phi is not None else np.broadcast_to(np.eye(2, dtype=complex), (lam.size, 2, 2)).copy())
        loop = MatrixLoop.from_samples(phi, trunc)
        try:
            out.append(iwasawa(loop, form, 0.0).pivot)
        except BigCellError:
            try:
                out.append(-iwasawa(loop, form, 0.0, keep_crossing=True).pivot)
            except BigCellError as err:
                out.append(float(err.margin))
    return np.array(out)


def point_evaluator(pot: Potential, form, pts: SymPoints, anchor: complex, basepoint: complex = 0.0,
                    unitarizer: MatrixLoop | None = None, trunc: int = 32, tol: float = 1e-12,
                    keep_crossing: bool = False, waypoints=()):
    """Return ``f(z) -> model matrix`` for ``z`` near ``anchor``.

    The frame is integrated once from ``basepoint`` to ``anchor`` (through
    ``waypoints``) and then along the straight segment to each query point;
    used for finite-difference geometry checks.
    """
    form = get_form(form)
    lam = np.concatenate([grid(trunc), [pts.lam0]])
    path = FramePath.polyline([basepoint, *waypoints, anchor])
    phi_a = integrate_samples(pot, path, lam, None, tol) if path.segments else \
        np.broadcast_to(np.eye(2, dtype=complex), (lam.size, 2, 2)).copy()

    def f(z):
        z = complex(z)
        phi = phi_a if z == anchor else integrate_samples(pot, FramePath.polyline([anchor, z]), lam, phi_a, tol)
        r = process_vertex(pot, z, phi[:-1], phi[-1], trunc, form, pts, unitarizer, 0.0, keep_crossing)
        if r.validity < VALID:
            raise BigCellError(f"point {z} outside the big cell", r.pivot)
        return r.matrix

    return f


@dataclass
class Job:
    """Everything a run report summarizes."""

    name: str
    params: dict = field(default_factory=dict)
    closing: object = None
    eigen: dict = field(default_factory=dict)
    mesh: SurfaceMesh | None = None
    geometry: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def run_report(job: Job) -> str:
    """Plain-text ``key: value`` report of a completed job."""
    out = [f"job: {job.name}"]
    for k, v in job.params.items():
        out.append(f"param.{k}: {v}")
    if job.closing is not None:
        out.extend(job.closing.lines())
    for k, v in job.eigen.items():
        out.append(f"eigen.{k}: {v:.3e}" if isinstance(v, float) else f"eigen.{k}: {v}")
    if job.mesh is not None:
        for k, v in job.mesh.stats().items():
            out.append(f"mesh.{k}: {v}")
        piv = job.mesh.pivot[np.isfinite(job.mesh.pivot)]
        if piv.size:
            out.append(f"mesh.pivot_min: {piv.min():.3e}")
        out.append(f"mesh.hash: {job.mesh.payload_hash()}")
    for k, v in job.geometry.items():
        out.append(f"geometry.{k}: {v:.3e}" if isinstance(v, float) else f"geometry.{k}: {v}")
    for k, v in job.extra.items():
        out.append(f"{k}: {v}")
    for f in job.flags:
        out.append(f"flag: {f}")
    for k, v in job.timing.items():
        out.append(f"time.{k}: {v:.3f}")
    return "\n".join(out) + "\n"


class Timer:
    def __init__(self):
        self.marks = {}
        self._t = time.perf_counter()

    def mark(self, name: str):
        now = time.perf_counter()
        self.marks[name] = now - self._t
        self._t = now


__all__ = [
    "DomainSpec", "SurfaceMesh", "Job", "BasepointError", "VertexResult", "sample_surface", "frame_pass",
    "spanning_tree", "process_vertex", "point_evaluator", "quad_faces", "export_obj", "read_obj", "run_report",
    "invalid_bands", "pivot_profile", "Timer", "VALID", "CROSSED", "BIGCELL", "OUTSIDE", "MEMBERSHIP",
    "FrameError",
]
