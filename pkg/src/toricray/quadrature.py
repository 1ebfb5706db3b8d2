"""Adaptive quadrature engines.

1-D: adaptive Gauss-Legendre with panel bisection, seeded at structurally
special points (facets, support endpoints, density minimizers) so that
sharply peaked integrands are bracketed before refinement starts.

2-D: adaptive triangle meshes over convex polygons.  Each leaf stores both a
one-level and a four-child rule value; their difference drives refinement
and the fine value is the leaf's contribution.  Meshes are reusable: after
refining against a driver function (the density), any number of secondary
integrands (battery members) are integrated on the same nodes, which-keeps
pairings mutually consistent and deterministic.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

__all__ = [
    "adaptive_panels", "integrate_1d", "log_integral_1d",
    "TriangleMesh", "polygon_mesh", "QuadratureError",
]


class QuadratureError(RuntimeError):
    pass


_NODES15, _WEIGHTS15 = np.polynomial.legendre.leggauss(15)


def _gl_panel_values(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid + half * _NODES15
    vals = np.asarray(f(pts), dtype=float)
    return half * float(vals @ _WEIGHTS15)


def adaptive_panels(f, a: float, b: float, *, rel_tol: float = 1e-10,
                    seeds=(), max_panels: int = 20000,
                    abs_floor: float = 1e-300):
    """Refine [a, b] into panels until the GL15 bisection error is small.

    Returns (value, panels) where panels is the sorted list of (lo, hi)
    intervals at convergence.  ``seeds`` are interior split points inserted
    before adaptivity starts.
    """
    if not b > a:
        raise QuadratureError(f"empty interval [{a}, {b}]")
    cuts = sorted({float(a), float(b), *(float(s) for s in seeds
                                         if a < float(s) < b)})
    heap = []
    counter = 0
    total = 0.0

    def push(lo, hi):
        nonlocal counter, total
        coarse = _gl_panel_values(f, lo, hi)
        mid = 0.5 * (lo + hi)
        fine = _gl_panel_values(f, lo, mid) + _gl_panel_values(f, mid, hi)
        err = abs(fine - coarse)
        total += fine
        heapq.heappush(heap, (-err, counter, lo, hi, fine))
        counter += 1

    for lo, hi in zip(cuts[:-1], cuts[1:]):
        push(lo, hi)

    while len(heap) < max_panels:
        err_total = -sum(item[0] for item in heap)
        if err_total <= rel_tol * abs(total) + abs_floor:
            break
        neg_err, _, lo, hi, fine = heapq.heappop(heap)
        if -neg_err <= 1e-18 * abs(total) + abs_floor or hi - lo < 1e-15:
            heapq.heappush(heap, (0.0, counter, lo, hi, fine))
            counter += 1
            break
        total -= fine
        mid = 0.5 * (lo + hi)
        push(lo, mid)
        push(mid, hi)
    else:
        err_total = -sum(item[0] for item in heap)
        if err_total > 100.0 * rel_tol * abs(total) + abs_floor:
            raise QuadratureError(
                f"interval refinement exhausted {max_panels} panels with "
                f"relative error {err_total / max(abs(total), 1e-300):.2e} "
                f"(tolerance {rel_tol})")

    panels = sorted((item[2], item[3]) for item in heap)
    value = math.fsum(item[4] for item in heap)
    return value, panels


def integrate_on_panels(f, panels):
    return math.fsum(_gl_panel_values(f, lo, hi) for lo, hi in panels)


def integrate_1d(f, a, b, *, rel_tol=1e-10, seeds=()):
    value, _ = adaptive_panels(f, a, b, rel_tol=rel_tol, seeds=seeds)
    return value


def log_integral_1d(log_f, a, b, *, rel_tol=1e-10, seeds=(), probe: int = 2049):
    """log of integral of exp(log_f) over [a, b], max-factored for stability.

    The reference level is the maximum of log_f over a probe grid joined
    with the seeds, so exp never overflows for peaked integrands.
    Returns (log_value, panels, ref).
    """
    grid = np.linspace(a, b, probe)
    extra = np.array([s for s in seeds if a <= s <= b], dtype=float)
    if extra.size:
        grid = np.concatenate([grid, extra])
    ref = float(np.max(log_f(grid)))
    if not np.isfinite(ref):
        finite = np.asarray(log_f(grid))
        finite = finite[np.isfinite(finite)]
        if finite.size == 0:
            raise QuadratureError("log integrand is nowhere finite")
        ref = float(finite.max())

    def f(x):
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(log_f(x), dtype=float) - ref)

    value, panels = adaptive_panels(f, a, b, rel_tol=rel_tol, seeds=seeds)
    if value <= 0:
        raise QuadratureError("integral underflowed to zero")
    return ref + math.log(value), panels, ref


# ---------------------------------------------------------------------------
# 2-D: adaptive triangle meshes
# ---------------------------------------------------------------------------

# Degree-5 seven-point symmetric rule (barycentric points, weights sum to 1).
_T_A = 0.4701420641051151
_T_B = 0.1012865073234563
_T_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_T_A, _T_A, 1 - 2 * _T_A],
    [_T_A, 1 - 2 * _T_A, _T_A],
    [1 - 2 * _T_A, _T_A, _T_A],
    [_T_B, _T_B, 1 - 2 * _T_B],
    [_T_B, 1 - 2 * _T_B, _T_B],
    [1 - 2 * _T_B, _T_B, _T_B],
])
_T_W = np.array([0.225,
                 0.1323941527885062, 0.1323941527885062, 0.1323941527885062,
                 0.1259391805448271, 0.1259391805448271, 0.1259391805448271])


def _tri_area(tri):
    (x0, y0), (x1, y1), (x2, y2) = tri
    return 0.5 * abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def _split4_batch(tris):
    """(B, 3, 2) -> (4B, 3, 2) children in blocks of four per parent."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    m01 = 0.5 * (a + b)
    m12 = 0.5 * (b + c)
    m20 = 0.5 * (c + a)
    out = np.empty((len(tris), 4, 3, 2))
    out[:, 0] = np.stack([a, m01, m20], axis=1)
    out[:, 1] = np.stack([m01, b, m12], axis=1)
    out[:, 2] = np.stack([m20, m12, c], axis=1)
    out[:, 3] = np.stack([m01, m12, m20], axis=1)
    return out.reshape(-1, 3, 2)


def _areas_batch(tris):
    d1 = tris[:, 1] - tris[:, 0]
    d2 = tris[:, 2] - tris[:, 0]
    return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


class TriangleMesh:
    """Adaptive triangle mesh over a convex polygon, reusable for pairings.

    Each leaf stores a coarse (degree-5, 7-point) value and the four-child
    fine value; their difference is the refinement indicator and the fine
    value the contribution.  Refinement proceeds in batches so the driver
    is always evaluated on large arrays.
    """

    def __init__(self, polygon_vertices: np.ndarray):
        self.polygon = np.asarray(polygon_vertices, dtype=float)
        center = self.polygon.mean(axis=0)
        order = np.argsort(np.arctan2(self.polygon[:, 1] - center[1],
                                      self.polygon[:, 0] - center[0]))
        ring = self.polygon[order]
        tris = []
        for i in range(len(ring)):
            tri = np.array([center, ring[i], ring[(i + 1) % len(ring)]])
            if _tri_area(tri) > 0:
                tris.append(tri)
        self._initial = np.array(tris)
        self.tris = None        # (L, 3, 2)
        self.fine_nodes = None  # (L, 28, 2)
        self.fine_vals = None   # (L, 28)
        self.fine_weights = None  # (L, 28)
        self.values = None      # (L,)
        self.errs = None        # (L,)

    def _measure(self, tris, f):
        """Coarse/fine rule data for a batch of triangles."""
        B = len(tris)
        children = _split4_batch(tris)              # (4B, 3, 2)
        child_nodes = np.einsum("rb,tbj->trj", _T_BARY, children)  # (4B,7,2)
        child_areas = _areas_batch(children)
        vals = np.asarray(f(child_nodes.reshape(-1, 2)), dtype=float)
        vals = vals.reshape(4 * B, 7)
        child_int = child_areas * (vals @ _T_W)
        fine = child_int.reshape(B, 4).sum(axis=1)
        coarse_nodes = np.einsum("rb,tbj->trj", _T_BARY, tris)
        cvals = np.asarray(f(coarse_nodes.reshape(-1, 2)), dtype=float)
        cvals = cvals.reshape(B, 7)
        coarse = _areas_batch(tris) * (cvals @ _T_W)
        fine_nodes = child_nodes.reshape(B, 28, 2)
        fine_vals = vals.reshape(B, 28)
        fine_weights = np.repeat(child_areas.reshape(B, 4), 7, axis=1) * \
            np.tile(_T_W, 4)[None, :]
        return fine_nodes, fine_vals, fine_weights, fine, np.abs(fine - coarse)

    def refine(self, f, *, rel_tol=1e-6, max_leaves=30000,
               presplit_depth=0, zoom=None):
        """Adapt the mesh to the driver f (values at (k, 2) arrays).

        ``zoom`` is an optional (predicate, target_size) pair: triangles for
        which the predicate holds are pre-split until their diameter drops
        below target_size, which points the mesh at an analytically known
        concentration set before error-driven refinement starts.
        """
        work = self._initial
        for _ in range(presplit_depth):
            work = _split4_batch(work)
        if zoom is not None:
            predicate, target = zoom
            budget = max(len(work) + 16, max_leaves // 3)
            # coarsen the zoom target until the pre-split plan leaves the
            # error-driven stage most of the leaf budget
            while True:
                out = []
                stack = list(work)
                over = False
                while stack:
                    tri = stack.pop()
                    diam = max(np.linalg.norm(tri[0] - tri[1]),
                               np.linalg.norm(tri[1] - tri[2]),
                               np.linalg.norm(tri[2] - tri[0]))
                    if diam > target and predicate(tri):
                        stack.extend(_split4_batch(tri[None]))
                        if len(out) + len(stack) > budget:
                            over = True
                            break
                    else:
                        out.append(tri)
                if not over:
                    work = np.array(out)
                    break
                target *= 2.0

        nodes, vals, weights, fine, errs = self._measure(work, f)
        tris = work
        total = float(fine.sum())
        err_total = float(errs.sum())
        while len(tris) < max_leaves and err_total > rel_tol * abs(total) + 1e-300:
            k = max(16, len(tris) // 8)
            order = np.argsort(errs)
            hot = order[-k:]
            hot = hot[errs[hot] > (rel_tol * abs(total)) / max(len(tris), 1)]
            if len(hot) == 0:
                break
            cold = np.setdiff1d(order, hot, assume_unique=True)
            children = _split4_batch(tris[hot])
            cn, cv, cw, cf, ce = self._measure(children, f)
            tris = np.concatenate([tris[cold], children])
            nodes = np.concatenate([nodes[cold], cn])
            vals = np.concatenate([vals[cold], cv])
            weights = np.concatenate([weights[cold], cw])
            fine = np.concatenate([fine[cold], cf])
            errs = np.concatenate([errs[cold], ce])
            total = float(fine.sum())
            err_total = float(errs.sum())
        self.tris = tris
        self.fine_nodes = nodes
        self.fine_vals = vals
        self.fine_weights = weights
        self.values = fine
        self.errs = errs
        self.value = total
        self.err_estimate = err_total
        return self.value

    @property
    def leaves(self):
        return self.tris

    # -- reuse ---------------------------------------------------------------

    def nodes(self) -> np.ndarray:
        return self.fine_nodes.reshape(-1, 2)

    def node_weights(self) -> np.ndarray:
        return self.fine_weights.ravel()

    def driver_values(self) -> np.ndarray:
        return self.fine_vals.ravel()

    def integrate_values(self, values: np.ndarray) -> float:
        return float(self.node_weights() @ values)

    def integrate(self, g) -> float:
        return self.integrate_values(np.asarray(g(self.nodes()), dtype=float))

    def pair_against_driver(self, g) -> float:
        """Integral of driver * g on the refined mesh."""
        vals = np.asarray(g(self.nodes()), dtype=float)
        return float(self.node_weights() @ (self.driver_values() * vals))


def polygon_mesh(vertices) -> TriangleMesh:
    return TriangleMesh(np.asarray(vertices, dtype=float))
