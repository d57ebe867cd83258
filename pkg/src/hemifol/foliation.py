"""Executable leaf families phi_lambda(omega) = lambda v e1 + lambda omega
+ lambda^2 f[lambda, omega]: ray intersections, pairwise leaf disjointness,
coverage of a deleted neighborhood, and the v < 1 / v > 1 dichotomy.

Inside/outside queries reflect the leaf across the boundary plane z = 0 to
a closed surface and use ray-crossing parity against a triangulation, the
numeric counterpart of the reflection device in the abstract foliation
argument.  Smoothness of the leaf map is not certified, only injectivity,
monotonicity and coverage; reports say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex

__all__ = [
    "LeafFamily", "RayIntersection", "PairResult", "FoliationReport",
    "NoIntersection", "NoConvergence", "InconclusiveOverlap",
    "ray_intersect", "leaves_intersect", "foliation_report",
    "load_family_file",
]

SMOOTHNESS_NOTE = ("leaf-map smoothness is not certified numerically; "
                   "this report checks injectivity, ray monotonicity and "
                   "coverage only")

CONTACT_TOL = 1e-9
INCONCLUSIVE_TOL = 1e-6
E1 = np.array([1.0, 0.0, 0.0])


class NoIntersection(Exception):
    pass


class NoConvergence(Exception):
    pass


class InconclusiveOverlap(Exception):
    """Minimum leaf distance falls in the tangency band [1e-9, 1e-6] where
    intersection cannot be certified numerically; refine the grid."""


class LeafFamily:
    """Family of perturbed hemispheres with speed v >= 0 and smooth
    second-order perturbation f given by three expressions in
    lambda, w1, w2, w3 with f3 = 0 on the equator."""

    def __init__(self, v: float, f_exprs=(ex.ZERO, ex.ZERO, ex.ZERO),
                 lambda_max: float = 0.1):
        if v < 0:
            raise ValueError("v must be non-negative")
        if lambda_max <= 0:
            raise ValueError("lambda_max must be positive")
        self.v = float(v)
        self.f_exprs = tuple(f_exprs)
        self.lambda_max = float(lambda_max)
        self._df = [[ex.diff(c, w) for w in ("w1", "w2", "w3")]
                    for c in self.f_exprs]
        self._check_boundary_condition()
        self.c_bound = self._estimate_bound()
        self._mesh_cache: dict[float, tuple] = {}

    def _check_boundary_condition(self):
        phi = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        for lam in np.linspace(0.0, self.lambda_max, 5):
            vals = ex.evaluate(self.f_exprs[2], {
                "lambda": np.full_like(phi, lam),
                "w1": np.cos(phi), "w2": np.sin(phi),
                "w3": np.zeros_like(phi)})
            if np.max(np.abs(np.asarray(vals, dtype=float))) > 1e-12:
                raise ValueError("f3 must vanish on the equator")

    def _estimate_bound(self):
        t = np.linspace(0.0, 1.0, 12)
        phi = np.linspace(0.0, 2 * np.pi, 24, endpoint=False)
        tt, pp = np.meshgrid(t, phi, indexing="ij")
        s = np.sqrt(np.clip(1 - tt ** 2, 0.0, None))
        b = {"w1": (s * np.cos(pp)).ravel(), "w2": (s * np.sin(pp)).ravel(),
             "w3": tt.ravel()}
        sup = 0.0
        for lam in np.linspace(0.0, self.lambda_max, 4):
            bl = dict(b, **{"lambda": np.full_like(b["w3"], lam)})
            mag = np.zeros_like(b["w3"])
            dmag = np.zeros_like(b["w3"])
            for i in range(3):
                mag = mag + np.broadcast_to(
                    np.asarray(ex.evaluate(self.f_exprs[i], bl), dtype=float),
                    mag.shape) ** 2
                for j in range(3):
                    dmag = dmag + np.broadcast_to(
                        np.asarray(ex.evaluate(self._df[i][j], bl), dtype=float),
                        dmag.shape) ** 2
            sup = max(sup, float(np.max(np.sqrt(mag) + np.sqrt(dmag))))
        return sup

    def f(self, lam, omega):
        """Perturbation at points omega (shape (..., 3)) -> same shape."""
        omega = np.asarray(omega, dtype=float)
        b = {"lambda": np.broadcast_to(lam, omega[..., 0].shape),
             "w1": omega[..., 0], "w2": omega[..., 1], "w3": omega[..., 2]}
        out = np.empty_like(omega)
        for i in range(3):
            out[..., i] = np.broadcast_to(
                np.asarray(ex.evaluate(self.f_exprs[i], b), dtype=float),
                omega[..., 0].shape)
        return out

    def jacobian_f(self, lam, omega):
        """df/domega at points omega (..., 3) -> (..., 3, 3)."""
        omega = np.asarray(omega, dtype=float)
        b = {"lambda": np.broadcast_to(lam, omega[..., 0].shape),
             "w1": omega[..., 0], "w2": omega[..., 1], "w3": omega[..., 2]}
        out = np.zeros(omega.shape[:-1] + (3, 3))
        for i in range(3):
            for j in range(3):
                out[..., i, j] = np.broadcast_to(
                    np.asarray(ex.evaluate(self._df[i][j], b), dtype=float),
                    omega[..., 0].shape)
        return out

    def leaf(self, lam, omega):
        """phi_lambda(omega) for points omega (..., 3)."""
        omega = np.asarray(omega, dtype=float)
        return lam * self.v * E1 + lam * omega + lam ** 2 * self.f(lam, omega)


@dataclass(frozen=True)
class RayIntersection:
    t: float
    omega: np.ndarray
    residual: float


@dataclass(frozen=True)
class PairResult:
    lambda1: float
    lambda2: float
    intersects: bool
    min_distance: float
    witness: tuple | None          # (point on leaf 1-ish, point on leaf 2) or None
    method: str                    # 'distance' | 'interior' | 'disjoint'


@dataclass
class FoliationReport:
    verdict: str                   # 'Foliates' | 'Overlaps'
    witness_pair: tuple | None
    pair_results: list
    monotone: bool
    monotone_witness: tuple | None
    coverage: list
    note: str = SMOOTHNESS_NOTE


# ---------------------------------------------------------------------------
# ray intersection
# ---------------------------------------------------------------------------

def ray_intersect(fam: LeafFamily, lam: float, theta0,
                  tol: float = 1e-12, max_iter: int = 200) -> RayIntersection:
    """Unique intersection t(lambda, theta0) theta0 of the ray R+ theta0
    with the leaf, solved as a coupled fixed point: t from the quadratic
    |t theta0 - center|^2 = lambda^2 (non-negative root), omega by
    renormalizing the pullback; contraction for small lambda."""
    if not 0 < lam <= fam.lambda_max:
        raise ValueError("lambda must lie in (0, lambda_max]")
    theta0 = np.asarray(theta0, dtype=float)
    theta0 = theta0 / np.linalg.norm(theta0)
    omega = theta0.copy()
    t_val = lam
    for _ in range(max_iter):
        center = lam * fam.v * E1 + lam ** 2 * fam.f(lam, omega)
        b = float(theta0 @ center)
        c = float(center @ center) - lam ** 2
        disc = b * b - c
        if disc < 0:
            raise NoIntersection(
                f"ray misses the leaf (discriminant {disc:.3e})")
        t_new = b + math.sqrt(disc)
        if t_new < 0:
            raise NoIntersection("leaf lies behind the ray origin")
        om_raw = (t_new * theta0 - center) / lam
        nrm = np.linalg.norm(om_raw)
        if nrm == 0:
            raise NoConvergence("degenerate pullback")
        om_new = om_raw / nrm
        delta = abs(t_new - t_val) + float(np.linalg.norm(om_new - omega))
        t_val, omega = t_new, om_new
        if delta < tol:
            break
    else:
        raise NoConvergence(f"fixed point not contracting after {max_iter} iterations")
    if omega[2] < -1e-9:
        raise NoIntersection("intersection lies below the boundary plane")
    residual = float(np.linalg.norm(t_val * theta0 - fam.leaf(lam, omega)))
    return RayIntersection(t_val, omega, residual)


# ---------------------------------------------------------------------------
# inside / outside by reflected-surface ray parity
# ---------------------------------------------------------------------------

_RAY_DIRECTIONS = [
    np.array([0.12345678, 0.67891234, 0.45678912]),
    np.array([-0.52341234, 0.31415926, 0.78901234]),
    np.array([0.33219876, -0.61234567, 0.41421356]),
    np.array([0.70710678, 0.40824829, -0.57735027]),
    np.array([-0.26794919, -0.57735027, 0.73205081]),
]


def _leaf_mesh(fam: LeafFamily, lam: float, n_t: int = 48, n_phi: int = 96):
    """Triangulated doubled (reflected) leaf as vertex triples."""
    cached = fam._mesh_cache.get((lam, n_t, n_phi))
    if cached is not None:
        return cached
    t = np.linspace(0.0, 1.0, n_t)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    s = np.sqrt(np.clip(1.0 - tt ** 2, 0.0, None))
    omega = np.stack([s * np.cos(pp), s * np.sin(pp), tt], axis=-1)
    upper = fam.leaf(lam, omega.reshape(-1, 3)).reshape(n_t, n_phi, 3)
    lower = upper.copy()
    lower[..., 2] *= -1.0

    def quads(vgrid, flip):
        tris = []
        for i in range(n_t - 1):
            for j in range(n_phi):
                j2 = (j + 1) % n_phi
                a, bq = vgrid[i, j], vgrid[i, j2]
                cq, d = vgrid[i + 1, j], vgrid[i + 1, j2]
                if flip:
                    tris.append((a, cq, bq))
                    tris.append((bq, cq, d))
                else:
                    tris.append((a, bq, cq))
                    tris.append((bq, d, cq))
        return tris

    tris = quads(upper, False) + quads(lower, True)
    v0 = np.array([tr[0] for tr in tris])
    v1 = np.array([tr[1] for tr in tris])
    v2 = np.array([tr[2] for tr in tris])
    # drop degenerate pole triangles
    area2 = np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
    keep = area2 > 1e-18
    mesh = (v0[keep], v1[keep], v2[keep])
    fam._mesh_cache[(lam, n_t, n_phi)] = mesh
    return mesh


def _ray_parity(origin, direction, mesh, eps=1e-12):
    """Number of Moller-Trumbore crossings of origin + s*direction, s > 0;
    returns None when the ray passes suspiciously близко to an edge."""
    v0, v1, v2 = mesh
    e1 = v1 - v0
    e2 = v2 - v0
    h = np.cross(direction[None, :], e2)
    a = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(a) > eps
    f = np.zeros_like(a)
    f[ok] = 1.0 / a[ok]
    sv = origin[None, :] - v0
    u = f * np.einsum("ij,ij->i", sv, h)
    qv = np.cross(sv, e1)
    vv = f * np.einsum("ij,ij->i", qv, np.broadcast_to(direction, e2.shape))
    s = f * np.einsum("ij,ij->i", e2, qv)
    hits = ok & (u >= 0) & (vv >= 0) & (u + vv <= 1) & (s > 1e-12)
    margin = np.minimum.reduce([np.abs(u[hits]), np.abs(vv[hits]),
                                np.abs(1 - u[hits] - vv[hits])]) if np.any(hits) else None
    if margin is not None and np.any(margin < 1e-9):
        return None
    return int(np.count_nonzero(hits))


def point_inside_leaf(fam: LeafFamily, lam: float, point) -> bool:
    """Ray-crossing parity against the doubled (reflected) leaf surface."""
    point = np.asarray(point, dtype=float)
    mesh = _leaf_mesh(fam, lam)
    for d in _RAY_DIRECTIONS:
        parity = _ray_parity(point, d / np.linalg.norm(d), mesh)
        if parity is not None:
            return parity % 2 == 1
    raise NoConvergence("all parity rays hit mesh edges")


# ---------------------------------------------------------------------------
# pairwise leaf intersection
# ---------------------------------------------------------------------------

def _sphere_grid(n: int):
    t = np.linspace(0.0, 1.0, n)
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    s = np.sqrt(np.clip(1.0 - tt ** 2, 0.0, None))
    return np.stack([s * np.cos(pp), s * np.sin(pp), tt], axis=-1).reshape(-1, 3)


def _min_distance(fam: LeafFamily, lam1: float, lam2: float,
                  n_grid: int = 32, steps: int = 50):
    """Coarse grid seeding then projected gradient descent on the squared
    distance between the two leaves; deterministic."""
    grid = _sphere_grid(n_grid)
    p1 = fam.leaf(lam1, grid)
    p2 = fam.leaf(lam2, grid)
    d2 = np.sum((p1[:, None, :] - p2[None, :, :]) ** 2, axis=2)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    om1, om2 = grid[i].copy(), grid[j].copy()

    def project(g, om):
        g = g - (g @ om) * om
        return g

    def tangent_step(om, g, size):
        cand = om - size * g
        cand = cand / np.linalg.norm(cand)
        if cand[2] < 0.0:
            cand = cand.copy()
            cand[2] = 0.0
            cand = cand / np.linalg.norm(cand)
        return cand

    def dval(o1, o2):
        return float(np.linalg.norm(fam.leaf(lam1, o1) - fam.leaf(lam2, o2)))

    cur = dval(om1, om2)
    step = 0.1
    for _ in range(steps):
        x1 = fam.leaf(lam1, om1)
        x2 = fam.leaf(lam2, om2)
        diff = x1 - x2
        j1 = lam1 * (np.eye(3) + lam1 * fam.jacobian_f(lam1, om1))
        j2 = lam2 * (np.eye(3) + lam2 * fam.jacobian_f(lam2, om2))
        g1 = project(2.0 * diff @ j1, om1)
        g2 = project(-2.0 * diff @ j2, om2)
        norm = math.sqrt(float(g1 @ g1 + g2 @ g2))
        if norm < 1e-16:
            break
        improved = False
        for _ in range(30):
            c1 = tangent_step(om1, g1 / norm, step)
            c2 = tangent_step(om2, g2 / norm, step)
            val = dval(c1, c2)
            if val < cur:
                om1, om2, cur = c1, c2, val
                improved = True
                break
            step *= 0.5
        if not improved or step < 1e-14:
            break
    return cur, (fam.leaf(lam1, om1), fam.leaf(lam2, om2))


def _interior_crossing(fam: LeafFamily, lam1: float, lam2: float):
    """Interior test: phi_{lam2}(-e1) strictly inside the region bounded by
    leaf lam1 while phi_{lam2}(+e1) is outside forces a crossing along any
    connecting curve; returns the crossing point or None."""
    p_minus = fam.leaf(lam2, np.array([-1.0, 0.0, 0.0]))
    p_plus = fam.leaf(lam2, np.array([1.0, 0.0, 0.0]))
    if not (point_inside_leaf(fam, lam1, p_minus)
            and not point_inside_leaf(fam, lam1, p_plus)):
        return None
    # bisection along the equator path gamma(s) from -e1 to +e1 on leaf lam2
    def gamma(s):
        ang = math.pi * (1.0 - s)
        return np.array([math.cos(ang), math.sin(ang), 0.0])

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if point_inside_leaf(fam, lam1, fam.leaf(lam2, gamma(mid))):
            lo = mid
        else:
            hi = mid
    crossing = fam.leaf(lam2, gamma(0.5 * (lo + hi)))
    return crossing


def leaves_intersect(fam: LeafFamily, lam1: float, lam2: float) -> PairResult:
    """Decide im(phi_{lam1}) intersect im(phi_{lam2}): near-contact by
    minimum distance below 1e-9, or the interior test firing; distances in
    [1e-9, 1e-6] raise :class:`InconclusiveOverlap`."""
    if not 0 < lam1 < lam2 <= fam.lambda_max:
        raise ValueError("need 0 < lambda1 < lambda2 <= lambda_max")
    dist, witness = _min_distance(fam, lam1, lam2)
    if dist < CONTACT_TOL:
        return PairResult(lam1, lam2, True, dist, witness, "distance")
    crossing = _interior_crossing(fam, lam1, lam2)
    if crossing is not None:
        return PairResult(lam1, lam2, True, dist,
                          (crossing, crossing), "interior")
    if dist <= INCONCLUSIVE_TOL:
        raise InconclusiveOverlap(
            f"minimum leaf distance {dist:.3e} in the tangency band; "
            "grid refinement advised")
    return PairResult(lam1, lam2, False, dist, None, "disjoint")


# ---------------------------------------------------------------------------
# the full report
# ---------------------------------------------------------------------------

def _theta_grid():
    out = [np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]),
           np.array([-1.0, 0.0, 0.0])]
    for tz in (0.2, 0.5, 0.8):
        s = math.sqrt(1 - tz * tz)
        for ang in np.linspace(0.0, 2 * np.pi, 8, endpoint=False):
            out.append(np.array([s * math.cos(ang), s * math.sin(ang), tz]))
    return out


def foliation_report(fam: LeafFamily, lambda_grid, sample_points=()) -> FoliationReport:
    """Verdict 'Foliates' when consecutive-and-skip leaf pairs are disjoint,
    t(lambda, theta0) is strictly increasing on a ray grid, and every sample
    point is hit by exactly one leaf (bisection through the monotone ray
    map); otherwise 'Overlaps' with a witness.  For v > 1 the constructed
    pairs (lambda1, lambda1 * v/(v-1)) are tested first so the witness
    realizes the eps = lambda1/(v-1) construction."""
    lam = sorted(float(x) for x in lambda_grid)
    if not lam or lam[0] <= 0 or lam[-1] > fam.lambda_max:
        raise ValueError("lambda grid must lie in (0, lambda_max]")

    pairs = []
    if fam.v > 1.0:
        # eps = lambda1/(v-1), i.e. lambda2 = lambda1 * v/(v-1); take grid
        # starts when they fit under lambda_max and one guaranteed-feasible
        # start otherwise
        ratio = fam.v / (fam.v - 1.0)
        feasible = [l1 for l1 in lam if l1 * ratio <= fam.lambda_max]
        if not feasible:
            feasible = [0.9 * fam.lambda_max / ratio]
        for l1 in feasible:
            pairs.append((l1, l1 * ratio))
    pairs += [(lam[i], lam[i + 1]) for i in range(len(lam) - 1)]
    pairs += [(lam[i], lam[i + 2]) for i in range(len(lam) - 2)]

    pair_results = []
    witness_pair = None
    for l1, l2 in pairs:
        res = leaves_intersect(fam, l1, l2)
        pair_results.append(res)
        if res.intersects and witness_pair is None:
            witness_pair = (l1, l2, res)

    monotone = True
    mono_witness = None
    for theta0 in _theta_grid():
        try:
            ts = [ray_intersect(fam, l, theta0).t for l in lam]
        except NoIntersection:
            continue
        diffs = np.diff(ts)
        if np.any(diffs <= 0):
            monotone = False
            k = int(np.argmax(diffs <= 0))
            mono_witness = (theta0, lam[k], lam[k + 1])
            break

    coverage = []
    for p in sample_points:
        p = np.asarray(p, dtype=float)
        r = float(np.linalg.norm(p))
        theta0 = p / r
        try:
            t_lo = ray_intersect(fam, lam[0], theta0).t
            t_hi = ray_intersect(fam, lam[-1], theta0).t
        except NoIntersection:
            coverage.append({"point": p, "lambda": None, "hits": 0,
                             "status": "ray-misses"})
            continue
        if not t_lo <= r <= t_hi:
            coverage.append({"point": p, "lambda": None, "hits": 0,
                             "status": "not-covered"})
            continue
        lo, hi = lam[0], lam[-1]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ray_intersect(fam, mid, theta0).t < r:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-14:
                break
        lam_star = 0.5 * (lo + hi)
        resid = abs(ray_intersect(fam, lam_star, theta0).t - r)
        coverage.append({"point": p, "lambda": lam_star,
                         "hits": 1 if resid < 1e-8 else 0,
                         "status": "unique" if resid < 1e-8 else "ambiguous"})

    covered = all(c["hits"] == 1 for c in coverage)
    if witness_pair is None and monotone and covered:
        verdict = "Foliates"
    else:
        verdict = "Overlaps"
    return FoliationReport(
        verdict=verdict,
        witness_pair=witness_pair,
        pair_results=pair_results,
        monotone=monotone,
        monotone_witness=mono_witness,
        coverage=coverage,
    )


def load_family_file(path) -> tuple[LeafFamily, dict]:
    """Family description file: lines ``v = <real>``, ``f1|f2|f3 = <expr in
    lambda, w1, w2, w3>``, ``lambda_max = <real>``."""
    v = None
    lam_max = None
    fs = {"f1": ex.ZERO, "f2": ex.ZERO, "f3": ex.ZERO}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key == "v":
                v = float(val)
            elif key == "lambda_max":
                lam_max = float(val)
            elif key in fs:
                fs[key] = ex.parse(val)
            else:
                raise ValueError(f"unrecognized family-file key {key!r}")
    if v is None or lam_max is None:
        raise ValueError("family file needs 'v' and 'lambda_max'")
    fam = LeafFamily(v, (fs["f1"], fs["f2"], fs["f3"]), lam_max)
    return fam, {"v": v, "lambda_max": lam_max}
