"""Curvature analysis of graph surfaces z = u(x, y): mean and Gauss
curvature with their derivatives, critical points of H, the foliation
criterion, and the explicit cubic example family.

Sign convention: H is anchored to the example family's closed-form
dH/dx = -2(a - a^3 + 3 c1 + 9 a^2 c1 + 6 a^4 c1) / (1 + 2 a^2)^(5/2)
at the origin, which corresponds to H = (1 + u_y^2) u_xx - 2 u_x u_y u_xy
+ (1 + u_x^2) u_yy over W^3 and gives H = kappa_1 + kappa_2 (not the mean).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expr as ex

__all__ = [
    "GraphSurface", "CurvatureData", "FoliationVerdict", "GalleryParams",
    "NoConvergence", "DegenerateHessian",
    "curvature_at", "find_critical_point", "foliation_criterion",
    "gallery_surface", "gallery_params", "hessH_and_gradK_gallery",
    "gallery_v0_norm", "gallery_root", "load_surface_file",
]

NEWTON_TOL = 1e-12
DEGENERACY_TOL = 1e-10


class NoConvergence(Exception):
    pass


class DegenerateHessian(Exception):
    pass


@dataclass(frozen=True)
class GalleryParams:
    """Parameters of the cubic family u = a x + a y + x y - c1 x^3 - c2 y^3."""
    a: float
    c1: float
    c2: float


def gallery_params(a: float) -> GalleryParams:
    """c1 = c2 = (-a + a^3) / (3 + 9 a^2 + 6 a^4) makes the origin critical."""
    c = (-a + a ** 3) / (3.0 + 9.0 * a ** 2 + 6.0 * a ** 4)
    return GalleryParams(a, c, c)


class GraphSurface:
    """Immutable graph z = u(x, y) with symbolically derived curvature
    fields; safe to share across threads."""

    def __init__(self, u: ex.Expr, domain=((-1.0, 1.0), (-1.0, 1.0)),
                 name: str = ""):
        extra = ex.free_variables(u) - {"x", "y"}
        if extra:
            raise ValueError(f"unbound surface parameters: {sorted(extra)}")
        self.u = u
        self.domain = domain
        self.name = name
        ux = ex.diff(u, "x")
        uy = ex.diff(u, "y")
        uxx = ex.diff(ux, "x")
        uxy = ex.diff(ux, "y")
        uyy = ex.diff(uy, "y")
        w2 = 1 + ux ** 2 + uy ** 2
        self.grad_u = (ux, uy)
        self.H = ((1 + uy ** 2) * uxx - 2 * ux * uy * uxy
                  + (1 + ux ** 2) * uyy) / (w2 * ex.sqrt(w2))
        self.K = (uxx * uyy - uxy ** 2) / w2 ** 2
        self.gradH = (ex.diff(self.H, "x"), ex.diff(self.H, "y"))
        self.gradK = (ex.diff(self.K, "x"), ex.diff(self.K, "y"))
        self.hessH = (
            (ex.diff(self.gradH[0], "x"), ex.diff(self.gradH[0], "y")),
            (ex.diff(self.gradH[1], "x"), ex.diff(self.gradH[1], "y")),
        )

    def contains(self, x, y):
        (x0, x1), (y0, y1) = self.domain
        return x0 <= x <= x1 and y0 <= y <= y1


@dataclass(frozen=True)
class CurvatureData:
    point: tuple[float, float]
    H: float
    K: float
    gradH: np.ndarray
    hessH: np.ndarray              # coordinate Hessian; covariant only at critical points
    gradK: np.ndarray
    grad_u: np.ndarray
    hess_is_covariant: bool        # true iff |gradH| < Newton tolerance
    nondegenerate: bool | None = None


@dataclass(frozen=True)
class FoliationVerdict:
    case: str                      # 'willmore' or 'cmc'
    v0_component: np.ndarray       # scaled coordinate components of dot-gamma(0)
    v0_norm_lower: float           # |v0_component|
    v0_norm_upper: float           # |v0_component| * sqrt(1 + |grad u|^2)
    v0_norm_induced: float         # exact norm in the induced metric
    verdict: str                   # 'Foliates' | 'DoesNotFoliate' | 'Inconclusive'


def curvature_at(s: GraphSurface, x: float, y: float) -> CurvatureData:
    """H, K and their symbolically derived first/second derivatives at a
    point.  The Hessian of H is reported in coordinates; it is the covariant
    Hessian only where gradH vanishes."""
    if not s.contains(x, y):
        raise ValueError(f"({x}, {y}) outside surface domain {s.domain}")
    b = {"x": float(x), "y": float(y)}
    gradH = np.array([ex.evaluate(g, b) for g in s.gradH])
    hessH = np.array([[ex.evaluate(h, b) for h in row] for row in s.hessH])
    hessH = 0.5 * (hessH + hessH.T)
    return CurvatureData(
        point=(float(x), float(y)),
        H=ex.evaluate(s.H, b),
        K=ex.evaluate(s.K, b),
        gradH=gradH,
        hessH=hessH,
        gradK=np.array([ex.evaluate(g, b) for g in s.gradK]),
        grad_u=np.array([ex.evaluate(g, b) for g in s.grad_u]),
        hess_is_covariant=bool(np.linalg.norm(gradH) < NEWTON_TOL),
        nondegenerate=bool(abs(np.linalg.det(hessH)) > DEGENERACY_TOL),
    )


def find_critical_point(s: GraphSurface, guess=(0.0, 0.0),
                        max_iter: int = 50) -> CurvatureData:
    """Newton iteration on gradH to |gradH| < 1e-12; raises
    :class:`DegenerateHessian` when the Hessian determinant drops below
    1e-10 and :class:`NoConvergence` after 50 steps."""
    p = np.asarray(guess, dtype=float)
    for _ in range(max_iter):
        b = {"x": p[0], "y": p[1]}
        g = np.array([ex.evaluate(gg, b) for gg in s.gradH])
        if np.linalg.norm(g) < NEWTON_TOL:
            data = curvature_at(s, p[0], p[1])
            if not data.nondegenerate:
                raise DegenerateHessian(
                    f"critical point at {tuple(p)} has |det hessH| <= {DEGENERACY_TOL}")
            return data
        h = np.array([[ex.evaluate(hh, b) for hh in row] for row in s.hessH])
        if abs(np.linalg.det(h)) < DEGENERACY_TOL:
            raise DegenerateHessian(f"Hessian of H nearly singular at {tuple(p)}")
        p = p - np.linalg.solve(h, g)
        if not s.contains(p[0], p[1]):
            raise NoConvergence(f"Newton iterate left the domain: {tuple(p)}")
    raise NoConvergence(f"no critical point within {max_iter} Newton steps")


_CASE_FACTOR = {"willmore": 0.5, "cmc": 1.0 / 3.0}


def foliation_criterion(s: GraphSurface, data: CurvatureData,
                        case: str) -> FoliationVerdict:
    """Scaled criterion vector (1/2 Willmore, 1/3 CMC applied to
    hessH^{-1} gradK), the rigorous coordinate-norm bracket, and the
    verdict.  Inconclusive when the bracket straddles 1."""
    factor = _CASE_FACTOR[case.lower()]
    if not data.nondegenerate:
        raise DegenerateHessian("foliation criterion needs a nondegenerate critical point")
    v = factor * np.linalg.solve(data.hessH, data.gradK)
    lower = float(np.linalg.norm(v))
    du = data.grad_u
    upper = lower * math.sqrt(1.0 + float(du @ du))
    induced = math.sqrt(float(v @ v) + float(v @ du) ** 2)
    if upper < 1.0:
        verdict = "Foliates"
    elif lower > 1.0:
        verdict = "DoesNotFoliate"
    else:
        verdict = "Inconclusive"
    return FoliationVerdict(case.lower(), v, lower, upper, induced, verdict)


# ---------------------------------------------------------------------------
# the explicit cubic family
# ---------------------------------------------------------------------------

_GALLERY_U = "a*x + a*y + x*y - c1*x^3 - c2*y^3"


def gallery_surface(a: float, c1: float | None = None,
                    c2: float | None = None) -> GraphSurface:
    if c1 is None or c2 is None:
        params = gallery_params(a)
        c1 = params.c1 if c1 is None else c1
        c2 = params.c2 if c2 is None else c2
    u = ex.substitute(ex.parse(_GALLERY_U), {
        "a": ex.const(Fraction(repr(float(a)))),
        "c1": ex.const(Fraction(repr(float(c1)))),
        "c2": ex.const(Fraction(repr(float(c2)))),
    })
    return GraphSurface(u, name=f"gallery a={a}")


def gallery_dHdx(a: float, c1: float) -> float:
    """Closed form of dH/dx at the origin for the cubic family."""
    return (-2.0 * (a - a ** 3 + 3 * c1 + 9 * a ** 2 * c1 + 6 * a ** 4 * c1)
            / (1.0 + 2.0 * a ** 2) ** 2.5)


def hessH_and_gradK_gallery(a: float):
    """Closed forms of the Hessian of H and gradient of K at the origin
    with c1 = c2 chosen so the origin is critical."""
    pref = -2.0 / (1.0 + 2.0 * a ** 2) ** 3.5
    diag = a ** 2 * (-5.0 - 20.0 * a ** 2 + a ** 4) / (1.0 + a ** 2)
    off = 1.0 + 4.0 * a ** 2 + a ** 4
    hess = pref * np.array([[diag, off], [off, diag]])
    gradK = 4.0 * a / (1.0 + 2.0 * a ** 2) ** 3 * np.array([1.0, 1.0])
    return hess, gradK


def gallery_v0_norm(a: float) -> float:
    """Closed-form |hessH^{-1} gradK| = 2a(1+a^2) sqrt(2(1+2a^2)) / |1 - 15a^4 + 2a^6|
    (no Willmore/CMC scaling)."""
    return (2.0 * a * (1.0 + a ** 2) * math.sqrt(2.0 * (1.0 + 2.0 * a ** 2))
            / abs(1.0 - 15.0 * a ** 4 + 2.0 * a ** 6))


def gallery_root(tol: float = 1e-12) -> float:
    """Bisection root of 1 - 15 a^4 + 2 a^6 on [0.5, 0.52]."""
    def p(x):
        return 1.0 - 15.0 * x ** 4 + 2.0 * x ** 6

    lo, hi = 0.5, 0.52
    flo = p(lo)
    if flo <= 0 or p(hi) >= 0:
        raise ValueError("bracket does not straddle the root")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# surface files
# ---------------------------------------------------------------------------

def load_surface_file(path) -> GraphSurface:
    """Text format: lines ``name = <string>``, ``u = <expr>`` and optional
    ``params: a=..., c1=...``; params are substituted into u before
    analysis."""
    name = ""
    u_text = None
    params: dict[str, ex.Expr] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("params:"):
                for item in line[len("params:"):].split(","):
                    key, _, val = item.partition("=")
                    params[key.strip()] = ex.const(Fraction(val.strip()))
            elif line.startswith("name"):
                name = line.partition("=")[2].strip()
            elif line.startswith("u"):
                u_text = line.partition("=")[2].strip()
            else:
                raise ValueError(f"unrecognized surface-file line: {line!r}")
    if u_text is None:
        raise ValueError("surface file has no 'u = <expr>' line")
    u = ex.substitute(ex.parse(u_text), params)
    return GraphSurface(u, name=name)
