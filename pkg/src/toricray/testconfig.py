"""Test-configuration combinatorics of a rational PL convex function on P.

The non-differentiability locus W of f = max_i a_i stratifies into faces
indexed by maximal active sets; the closures of the activity regions give
the sub-polytope decomposition P = union P_j.  Each face carries (when the
normal directions are lattice-adapted) a unimodular frame in which it lies
in a coordinate slab, which is what the epsilon-thickening W_eps and the
nice smoothings are built from.  All geometry here is exact rational;
floating point enters only through membership tests and volumes-by-float
conveniences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

from ._exact import (SaturationError, dot, frac, primitivize, rank_exact,
                     solve_exact)
from .generators import PLConvex
from .polytope import (FaceFrame, Polytope, PolytopeError, face_frame,
                       make_polytope)

__all__ = [
    "Face", "Decomposition", "QPolytope", "nondiff_locus", "decompose",
    "thickening_membership", "build_Q", "central_fiber_report",
    "CentralFiberReport",
]


def _nullspace_exact(rows, n):
    """Rational basis of {u : rows @ u = 0} for independent rational rows."""
    mat = [[Fraction(v) for v in row] for row in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = None
        for k in range(r, len(mat)):
            if mat[k][col] != 0:
                piv = k
                break
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = mat[r][col]
        mat[r] = [v / inv for v in mat[r]]
        for k in range(len(mat)):
            if k != r and mat[k][col] != 0:
                fct = mat[k][col]
                mat[k] = [v - fct * w for v, w in zip(mat[k], mat[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for row_i, pc in enumerate(pivots):
            vec[pc] = -mat[row_i][fc]
        basis.append(tuple(vec))
    return basis


def _vertices_of_system(normals, offsets, dim):
    """Exact vertices of {u : <v_j, u> >= o_j} assumed bounded; may be empty."""
    if dim == 0:
        return [()] if all(Fraction(0) >= o for o in offsets) else []
    verts = {}
    idx = range(len(normals))
    for subset in combinations(idx, dim):
        rows = [normals[j] for j in subset]
        if rank_exact(rows) != dim:
            continue
        u = solve_exact(rows, [offsets[j] for j in subset])
        if u is None:
            continue
        if all(dot(normals[j], u) >= offsets[j] for j in idx):
            verts.setdefault(u, None)
    return sorted(verts)


@dataclass
class Face:
    """A relatively open stratum of W: the locus where exactly the pieces in
    ``active`` achieve the maximum, together with codimension data."""
    active: frozenset
    codim: int
    normals: tuple              # primitive integer normal directions (j of them)
    offsets: tuple              # rational c_F with the face in {<nu_k, x> = c_k}
    vertices: tuple             # rational vertices of the closed face
    frame: Optional[FaceFrame]
    frame_error: Optional[str] = None
    _shadow: Optional[tuple] = field(default=None, repr=False)

    def barycenter(self) -> np.ndarray:
        v = np.array([[float(c) for c in p] for p in self.vertices])
        return v.mean(axis=0)

    def shadow_rows(self):
        """Constraints on the parallel frame coordinates cut out by the face."""
        return self._shadow

    def contains_parallel(self, x_par, tol: float = 1e-12) -> bool:
        if self._shadow is None:
            return True
        x_par = np.atleast_1d(np.asarray(x_par, dtype=float))
        for coef, rhs in self._shadow:
            if float(np.dot(coef, x_par)) < rhs - tol:
                return False
        return True

    def in_slab(self, x, eps: float, tol: float = 1e-12) -> bool:
        """Membership in the open transverse box over the face's shadow."""
        if self.frame is None:
            return False
        xt = self.frame.to_frame(np.asarray(x, dtype=float))
        trans = xt[self.frame.n_parallel:]
        c = self.frame.offsets_np
        if np.any(np.abs(trans - c) >= eps):
            return False
        return self.contains_parallel(xt[:self.frame.n_parallel], tol=tol)


def _face_for_subset(f: PLConvex, P: Polytope, subset):
    pieces = [f.pieces[i] for i in subset]
    g0, b0 = pieces[0]
    diffs, rhs = [], []
    for g, b in pieces[1:]:
        diffs.append(tuple(gi - g0i for gi, g0i in zip(g, g0)))
        rhs.append(b0 - b)
    j = rank_exact(diffs)
    if j == 0 or j > P.dim:
        return None
    # a particular solution of the equality system
    indep = []
    indep_rhs = []
    for d, r in zip(diffs, rhs):
        if rank_exact(indep + [d]) > len(indep):
            indep.append(d)
            indep_rhs.append(r)
    if len(indep) != j:
        return None
    # pad to a square system with nullspace directions to pick one solution
    null = _nullspace_exact(indep, P.dim)
    rows = indep + [n for n in null]
    x0 = solve_exact(rows, indep_rhs + [Fraction(0)] * len(null))
    if x0 is None:
        return None
    # consistency: all equalities must hold at x0
    for d, r in zip(diffs, rhs):
        if dot(d, x0) != r:
            return None

    # constraints restricted to the affine subspace x0 + span(null)
    con_normals, con_offsets = [], []
    for v, lam in zip(P.normals, P.offsets):
        coef = tuple(dot(v, n) for n in null)
        con_normals.append(coef)
        con_offsets.append(lam - dot(v, x0))
    for k in range(f.npieces):
        if k in subset:
            continue
        gk, bk = f.pieces[k]
        d = tuple(g0i - gki for g0i, gki in zip(g0, gk))
        coef = tuple(dot(d, n) for n in null)
        con_normals.append(coef)
        con_offsets.append((bk - b0) - dot(d, x0))

    dim_face = P.dim - j
    uverts = _vertices_of_system(con_normals, con_offsets, dim_face)
    if not uverts:
        return None
    verts = []
    for u in uverts:
        x = tuple(x0[i] + sum(u[k] * null[k][i] for k in range(len(null)))
                  for i in range(P.dim))
        verts.append(x)
    verts = sorted(set(verts))
    if dim_face > 0:
        if len(verts) < dim_face + 1:
            return None
        if rank_exact([[v[i] - verts[0][i] for i in range(P.dim)]
                       for v in verts[1:]]) != dim_face:
            return None

    # maximality of the active set at the barycenter
    bary = tuple(sum(v[i] for v in verts) / len(verts) for i in range(P.dim))
    if f.active_set_exact(bary) != frozenset(subset):
        return None

    prim_normals = [primitivize(d)[0] for d in indep]
    offsets = [dot(nu, x0) for nu in prim_normals]
    frame = None
    err = None
    try:
        frame = face_frame(P, prim_normals, offsets)
    except (SaturationError, PolytopeError) as exc:
        err = str(exc)

    face = Face(active=frozenset(subset), codim=j,
                normals=tuple(prim_normals), offsets=tuple(offsets),
                vertices=tuple(verts), frame=frame, frame_error=err)
    if frame is not None:
        # slab shadow: the activity constraints bounding the face; the
        # polytope's own facets only truncate through the final cap with P,
        # so boundary slivers beyond a chord's endpoint on a transversal
        # facet still count as thickening (f is affine there anyway).
        shadow = []
        Winv = frame.inverse  # exact integer columns
        npar = frame.n_parallel
        c = frame.offsets
        all_rows = []
        for k in range(f.npieces):
            if k in subset:
                continue
            gk, bk = f.pieces[k]
            d = tuple(frac(g0i) - frac(gki) for g0i, gki in zip(g0, gk))
            all_rows.append((d, bk - b0))
        for w, lam in all_rows:
            coef_full = [sum(frac(w[i]) * Winv[i][col] for i in range(P.dim))
                         for col in range(P.dim)]
            coef_par = coef_full[:npar]
            rhs = frac(lam) - sum(coef_full[npar + t] * c[t] for t in range(j))
            if all(cc == 0 for cc in coef_par):
                continue
            shadow.append((np.array([float(cc) for cc in coef_par]), float(rhs)))
        face._shadow = tuple(shadow)
    return face


def nondiff_locus(f: PLConvex, P: Polytope):
    """All faces of the non-differentiability locus of f inside P.

    Faces are keyed by maximal active sets; each carries its codimension,
    primitive normal directions, exact vertices, and (when lattice-adapted)
    a unimodular frame.
    """
    faces = []
    for size in range(2, f.npieces + 1):
        for subset in combinations(range(f.npieces), size):
            face = _face_for_subset(f, P, subset)
            if face is not None:
                faces.append(face)
    faces.sort(key=lambda F: (F.codim, sorted(F.active)))
    return faces


@dataclass
class Decomposition:
    pl: PLConvex
    polytope: Polytope
    subpolytopes: list          # list of (piece index, Polytope)
    faces: list                 # list of Face
    delzant_flags: dict

    def faces_of_codim(self, j: int):
        return [F for F in self.faces if F.codim == j]

    def volumes_exact(self):
        return [Q.volume_exact() for _, Q in self.subpolytopes]

    def volume_defect(self) -> Fraction:
        return self.polytope.volume_exact() - sum(self.volumes_exact())

    def region_of(self, x, tol: float = 1e-12):
        """Index into subpolytopes of the activity region containing x."""
        vals = self.pl.piece_values(np.asarray(x, dtype=float))
        best = None
        for pos, (i, Q) in enumerate(self.subpolytopes):
            if np.all(Q.ell(np.asarray(x, dtype=float)) >= -tol):
                if best is None or vals[i] > vals[self.subpolytopes[best][0]]:
                    best = pos
        return best

    def activity_consistency_exact(self) -> bool:
        """f at every vertex of every region equals its piece's affine value."""
        for i, Q in self.subpolytopes:
            g, b = self.pl.pieces[i]
            for v in Q.vertices:
                if self.pl.value_exact(v) != dot(g, v) + b:
                    return False
        return True


def decompose(f: PLConvex, P: Polytope) -> Decomposition:
    """Sub-polytope decomposition of P by the activity regions of f."""
    subs = []
    seen_pieces = set()
    for i, (g, b) in enumerate(f.pieces):
        if (g, b) in seen_pieces:
            continue
        seen_pieces.add((g, b))
        normals = [list(v) for v in P.normals]
        offsets = list(P.offsets)
        for k, (gk, bk) in enumerate(f.pieces):
            if (gk, bk) == (g, b):
                continue
            diff = tuple(gi - gki for gi, gki in zip(g, gk))
            if all(d == 0 for d in diff):
                continue
            nu, scale = primitivize(diff)
            normals.append(list(nu))
            offsets.append((bk - b) * scale)
        try:
            Q = make_polytope(normals, offsets, require_delzant=False, prune=True)
        except PolytopeError:
            continue
        subs.append((i, Q))
    faces = nondiff_locus(f, P)
    flags = {i: Q.delzant_ok for i, Q in subs}
    return Decomposition(pl=f, polytope=P, subpolytopes=subs, faces=faces,
                         delzant_flags=flags)


def thickening_membership(decomp: Decomposition, eps: float, x):
    """(inside W_eps, attributed face) with minimal-dimension attribution.

    The thickening is the union over faces of (activity shadow of F) x
    (open transverse eps-box in the face frame), capped with P; when several
    slabs contain x the face of maximal codimension (minimal dimension) wins.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(decomp.polytope.contains(x, tol=1e-12)):
        return False, None
    for face in sorted(decomp.faces, key=lambda F: -F.codim):
        if face.in_slab(x, eps):
            return True, face
    return False, None


@dataclass
class QPolytope:
    """(n+1)-dimensional test-configuration polytope over (P, f, K)."""
    base: Polytope
    pl: PLConvex
    K: Fraction
    polytope: Polytope
    integral: bool

    @property
    def vertices(self):
        return self.polytope.vertices


def build_Q(f: PLConvex, P: Polytope, K) -> QPolytope:
    """Halfspace system {x in P, 0 <= y <= K - f(x)} with exact vertices."""
    K = frac(K)
    fmax = f.max_over(P)
    if K < fmax:
        raise ValueError(f"ceiling K={K} is below max f = {fmax}")
    n = P.dim
    normals = [list(v) + [0] for v in P.normals]
    offsets = list(P.offsets)
    normals.append([0] * n + [1])
    offsets.append(Fraction(0))
    for g, b in f.pieces:
        row = tuple([-gi for gi in g] + [Fraction(-1)])
        nu, scale = primitivize(row)
        normals.append(list(nu))
        offsets.append((b - K) * scale)
    Q = make_polytope(normals, offsets, require_delzant=False, prune=True)
    integral = all(all(c.denominator == 1 for c in v) for v in Q.vertices)
    return QPolytope(base=P, pl=f, K=K, polytope=Q, integral=integral)


@dataclass
class CentralFiberReport:
    pieces: list      # (piece index, region Polytope, lifted vertices, label)
    q: QPolytope

    def piece_count(self) -> int:
        return len(self.pieces)

    def as_text(self) -> str:
        lines = [f"central fiber: {len(self.pieces)} ceiling piece(s), "
                 f"Q integral: {self.q.integral}"]
        for i, region, lifted, label in self.pieces:
            vs = ", ".join("(" + ", ".join(str(c) for c in v) + ")"
                           for v in lifted)
            lines.append(f"  piece {i}: {label}; lifted vertices {vs}")
        return "\n".join(lines)


def central_fiber_report(decomp: Decomposition, q: QPolytope) -> CentralFiberReport:
    """Ceiling pieces {(x, K - a_i(x)) : x in P_i}, one per sub-polytope.

    Each piece is tagged with the ray-limit region it corresponds to: the
    sub-polytope itself keeps its initial complex structure, while the
    seams between pieces are the mixed-polarization faces of W.
    """
    entries = []
    for i, region in decomp.subpolytopes:
        g, b = decomp.pl.pieces[i]
        lifted = []
        for v in region.vertices:
            height = q.K - (dot(g, v) + b)
            lifted.append(tuple(list(v) + [height]))
        label = (f"uniform component over P_{i} "
                 f"(holomorphic structure retained off W_eps)")
        entries.append((i, region, tuple(lifted), label))
    return CentralFiberReport(pieces=entries, q=q)
