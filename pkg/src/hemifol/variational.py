"""Variational engine: area, volume, Willmore energy, barycenter and
boundary functionals of deformed hemisphere immersions
f(omega) = (1 + eps*u(omega)) omega inside a perturbed ambient metric
delta + eps*q(x), all evaluated as order-2 jets in the shared parameter eps.

Every second derivative of a functional is obtained from a single jet
evaluation along a diagonal direction; the mixed term is separated by
polarization.  The mean curvature uses the normal-coordinate device
h_ij = -1/2 d/dz s_ij with s_ij the pullback metric along the normal graph,
which reduces to metric position-derivatives plus tangential derivatives of
the unit normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expr as ex
from . import linearized as lin
from . import quadrature as hq
from . import sphere

__all__ = [
    "MetricPerturbation", "FunctionalValue", "TermDecomposition",
    "DegenerateMetric", "InconsistentProbes",
    "functionals", "normal_field", "mean_curvature_field", "field_jets",
    "second_derivative_terms", "assemble_expansion",
    "PROBE_PAIRS", "WILLMORE_TERMS", "CMC_TERMS",
    "metric_first_order", "metric_second_order", "metric_zero",
]

EPS = ex.var("eps")
S = ex.var("s")
_X = ("x1", "x2", "x3")
_K1, _K2 = ex.var("k1"), ex.var("k2")

DH_NAMES = ("dh111", "dh112", "dh122", "dh211", "dh212", "dh222")

PROBE_PAIRS = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, -1.0))


class DegenerateMetric(Exception):
    pass


class InconsistentProbes(Exception):
    pass


@dataclass(frozen=True)
class MetricPerturbation:
    """Symmetric 3x3 of expressions in x1, x2, x3 (a metric direction q;
    the ambient metric is delta + eps*q)."""
    entries: tuple

    def __post_init__(self):
        for m in range(3):
            for n in range(3):
                if self.entries[m][n] is not self.entries[n][m]:
                    raise ValueError("metric perturbation must be symmetric")

    def at(self, position) -> list:
        """Entries with x substituted by the given position expressions."""
        subst = {name: pos for name, pos in zip(_X, position)}
        return [[ex.substitute(self.entries[m][n], subst) for n in range(3)]
                for m in range(3)]

    def position_derivatives(self):
        """d q_{mn} / d x_mu as symbolic entries (before substitution)."""
        return [[[ex.diff(self.entries[m][n], xmu) for n in range(3)]
                 for m in range(3)] for xmu in _X]

    def cache_key(self):
        return tuple(id(self.entries[m][n]) for m in range(3) for n in range(3))


def metric_zero() -> MetricPerturbation:
    z = ex.ZERO
    return MetricPerturbation(((z, z, z), (z, z, z), (z, z, z)))


def metric_first_order() -> MetricPerturbation:
    """First metric derivative of the boundary blow-up: off-diagonal block
    kappa_i x_i in the third row/column (symbolic k1, k2); traceless."""
    x1, x2 = ex.var("x1"), ex.var("x2")
    z = ex.ZERO
    a = _K1 * x1
    b = _K2 * x2
    return MetricPerturbation(((z, z, a), (z, z, b), (a, b, z)))


def metric_second_order() -> MetricPerturbation:
    """Second metric derivative: quadratic block 2 kappa_i kappa_j x_i x_j
    plus third-column entries d_i h_ab x_a x_b carried as free symbols
    (dh111 ... dh222); all implemented integrals must be independent of
    them, which the tests assert by comparing two settings."""
    x1, x2 = ex.var("x1"), ex.var("x2")
    d = {name: ex.var(name) for name in DH_NAMES}
    e11 = 2 * _K1 ** 2 * x1 ** 2
    e22 = 2 * _K2 ** 2 * x2 ** 2
    e12 = 2 * _K1 * _K2 * x1 * x2
    e13 = d["dh111"] * x1 ** 2 + 2 * d["dh112"] * x1 * x2 + d["dh122"] * x2 ** 2
    e23 = d["dh211"] * x1 ** 2 + 2 * d["dh212"] * x1 * x2 + d["dh222"] * x2 ** 2
    z = ex.ZERO
    return MetricPerturbation(((e11, e12, e13), (e12, e22, e23), (e13, e23, z)))


# ---------------------------------------------------------------------------
# symbolic field construction (cached per direction pair)
# ---------------------------------------------------------------------------

_FIELD_CACHE: dict[tuple, dict] = {}

_DELTA = tuple(tuple(ex.ONE if m == n else ex.ZERO for n in range(3))
               for m in range(3))


def _build_fields(u_dir: ex.Expr, metric: MetricPerturbation) -> dict:
    key = (id(u_dir),) + metric.cache_key()
    cached = _FIELD_CACHE.get(key)
    if cached is not None:
        return cached

    om = sphere.OMEGA
    u = sphere.to_tphi(u_dir)
    radial = 1 + EPS * u
    f = tuple(radial * om[m] for m in range(3))

    q_at_f = metric.at(f)
    gt = [[_DELTA[m][n] + EPS * q_at_f[m][n] for n in range(3)] for m in range(3)]

    params = ("t", "phi")
    df = [[ex.diff(f[m], v) for m in range(3)] for v in params]

    def pair(vec_a, vec_b):
        total = ex.ZERO
        for m in range(3):
            for n in range(3):
                total = total + gt[m][n] * vec_a[m] * vec_b[n]
        return total

    g = [[pair(df[i], df[j]) for j in range(2)] for i in range(2)]
    det_g = g[0][0] * g[1][1] - g[0][1] * g[0][1]
    density = ex.sqrt(det_g)
    ginv = [[g[1][1] / det_g, -(g[0][1] / det_g)],
            [-(g[0][1] / det_g), g[0][0] / det_g]]

    b = [pair(om, df[i]) for i in range(2)]
    radicand = pair(om, om)
    for i in range(2):
        for j in range(2):
            radicand = radicand - ginv[i][j] * b[i] * b[j]
    norm = ex.sqrt(radicand)
    nu = []
    for m in range(3):
        tangential = ex.ZERO
        for i in range(2):
            for j in range(2):
                tangential = tangential + ginv[i][j] * b[i] * df[j][m]
        nu.append(-((om[m] - tangential) / norm))
    dnu = [[ex.diff(nu[m], v) for m in range(3)] for v in params]

    dq_sym = metric.position_derivatives()
    subst_f = {name: pos for name, pos in zip(_X, f)}
    dq = [[[EPS * ex.substitute(dq_sym[mu][a][bb], subst_f) for bb in range(3)]
           for a in range(3)] for mu in range(3)]

    h = [[ex.ZERO] * 2 for _ in range(2)]
    for i in range(2):
        for j in range(2):
            term = ex.ZERO
            for mu in range(3):
                inner = ex.ZERO
                for a in range(3):
                    for bb in range(3):
                        inner = inner + dq[mu][a][bb] * df[i][a] * df[j][bb]
                term = term + nu[mu] * inner
            for a in range(3):
                for bb in range(3):
                    term = term + gt[a][bb] * (df[i][a] * dnu[j][bb]
                                               + df[j][a] * dnu[i][bb])
            h[i][j] = -(term / 2)

    H = ex.ZERO
    for i in range(2):
        for j in range(2):
            H = H + ginv[i][j] * h[i][j]

    b1 = om[2]
    for i in range(2):
        for j in range(2):
            b1 = b1 - ginv[i][j] * b[i] * df[j][2]

    # volume integrand over the radial shell r = s * (1 + eps*u), s in [0, 1]
    xpos = tuple(S * f[m] for m in range(3))
    qv = metric.at(xpos)
    gv = [[_DELTA[m][n] + EPS * qv[m][n] for n in range(3)] for m in range(3)]
    det3 = (gv[0][0] * (gv[1][1] * gv[2][2] - gv[1][2] * gv[2][1])
            - gv[0][1] * (gv[1][0] * gv[2][2] - gv[1][2] * gv[2][0])
            + gv[0][2] * (gv[1][0] * gv[2][1] - gv[1][1] * gv[2][0]))
    vol_integrand = ex.sqrt(det3) * S ** 2 * radial ** 3

    fields = {
        "u": u,
        "density": density,
        "radicand": radicand,
        "normal": tuple(nu),
        "H": H,
        "W_density": H * H * density / 4,
        "B1": b1,
        "vol_integrand": vol_integrand,
    }
    _FIELD_CACHE[key] = fields
    return fields


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _bindings(t, phi, k1, k2, dh, eps):
    b = {"t": t, "phi": phi, "eps": eps,
         "k1": float(k1), "k2": float(k2)}
    for name in DH_NAMES:
        b[name] = float(dh)
    return b


def _jet_sum(jet: ex.Jet2, w) -> ex.Jet2:
    def red(part):
        return float(np.sum(np.broadcast_to(part, w.shape) * w))
    return ex.Jet2(red(jet.f), red(jet.d1), red(jet.d2))


_EPS_JET = ex.Jet2(0.0, 1.0, 0.0)

_GAUSS_S = np.polynomial.legendre.leggauss(32)


def functionals(u_dir: ex.Expr, metric: MetricPerturbation,
                grid: hq.QuadratureGrid = hq.QuadratureGrid(),
                k1: float = 1.0, k2: float = 1.0, dh: float = 0.0) -> dict:
    """All functionals of f = (1 + eps*u_dir) omega in delta + eps*metric as
    order-2 jets in eps: area A, volume V, Willmore energy W, linearized
    barycenter components C1, C2, and the equator integral of the first
    boundary operator B1."""
    fields = _build_fields(u_dir, metric)
    t, phi, w = grid.nodes()
    b = _bindings(t, phi, k1, k2, dh, _EPS_JET)

    rad = ex.evaluate_jet(fields["radicand"], b)
    if np.min(np.asarray(rad.f)) <= 0:
        raise DegenerateMetric("normal radicand not positive on the grid")

    out = {}
    out["A"] = _jet_sum(ex.evaluate_jet(fields["density"], b), w)
    out["W"] = _jet_sum(ex.evaluate_jet(fields["W_density"], b), w)

    # volume: radial Gauss shells; integrand is polynomial in s for these
    # perturbations, so 32 nodes are exact
    xs, ws = _GAUSS_S
    s_nodes = 0.5 * (xs + 1.0)
    s_w = 0.5 * ws
    bv = _bindings(t[None, :], phi[None, :], k1, k2, dh, _EPS_JET)
    bv["s"] = s_nodes[:, None]
    vol_jet = ex.evaluate_jet(fields["vol_integrand"], bv)
    w2 = s_w[:, None] * w[None, :]
    out["V"] = _jet_sum(vol_jet, w2)

    # linearized barycenter: D1C only, exactly linear in the graph direction
    u_vals = ex.evaluate(fields["u"], {"t": t, "phi": phi,
                                       "k1": float(k1), "k2": float(k2)})
    w1v, w2v, _ = sphere.omega_values(t, phi)
    for i, wi in enumerate((w1v, w2v), start=1):
        d1 = 1.5 / math.pi * float(np.sum(
            np.broadcast_to(u_vals * wi, w.shape) * w))
        out[f"C{i}"] = ex.Jet2(0.0, d1, 0.0)

    # equator integral of B1 against the round boundary measure
    n_b = 4 * grid.n_azimuthal
    phib = 2.0 * np.pi * np.arange(n_b) / n_b
    bb = _bindings(np.zeros_like(phib), phib, k1, k2, dh, _EPS_JET)
    b1_jet = ex.evaluate_jet(fields["B1"], bb)
    out["B1int"] = _jet_sum(b1_jet, np.full(n_b, 2.0 * np.pi / n_b))
    return out


def field_jets(u_dir: ex.Expr, metric: MetricPerturbation, names,
               t, phi, k1: float = 1.0, k2: float = 1.0, dh: float = 0.0):
    """Raw jet values of named symbolic fields ('density', 'H', 'B1',
    'normal', ...) at given (t, phi) arrays; used by the variation-formula
    cross checks."""
    fields = _build_fields(u_dir, metric)
    b = _bindings(t, phi, k1, k2, dh, _EPS_JET)
    out = {}
    for name in names:
        fld = fields[name]
        if isinstance(fld, tuple):
            out[name] = tuple(ex.evaluate_jet(c, b) for c in fld)
        else:
            out[name] = ex.evaluate_jet(fld, b)
    return out


def normal_field(u_dir: ex.Expr, metric: MetricPerturbation, t, phi,
                 k1: float = 1.0, k2: float = 1.0, dh: float = 0.0,
                 eps=None):
    """Interior unit normal as a 3-tuple of jets; -omega at (0, delta).
    Pass a float ``eps`` to probe a finite deformation instead of the jet."""
    fields = _build_fields(u_dir, metric)
    b = _bindings(t, phi, k1, k2, dh, _EPS_JET if eps is None else float(eps))
    rad = ex.evaluate_jet(fields["radicand"], b)
    if np.min(np.asarray(rad.f)) <= 0:
        raise DegenerateMetric("normal radicand not positive")
    return tuple(ex.evaluate_jet(c, b) for c in fields["normal"])


def mean_curvature_field(u_dir: ex.Expr, metric: MetricPerturbation, t, phi,
                         k1: float = 1.0, k2: float = 1.0, dh: float = 0.0,
                         eps=None):
    """Scalar mean curvature as a jet field; equals 2 at (0, delta).
    Pass a float ``eps`` to probe a finite deformation instead of the jet."""
    fields = _build_fields(u_dir, metric)
    b = _bindings(t, phi, k1, k2, dh, _EPS_JET if eps is None else float(eps))
    rad = ex.evaluate_jet(fields["radicand"], b)
    if np.min(np.asarray(rad.f)) <= 0:
        raise DegenerateMetric("normal radicand not positive")
    return ex.evaluate_jet(fields["H"], b)


# ---------------------------------------------------------------------------
# closed-form metric-direction integrands (quadrature side of dual routes)
# ---------------------------------------------------------------------------

def _omega_subst(metric: MetricPerturbation):
    return metric.at(sphere.OMEGA)


def d2_willmore_g2_integrand(metric: MetricPerturbation) -> ex.Expr:
    """Integrand of D2 W [0, delta] q for homogeneous quadratic q:
    tr q / 2 + (5/2) q(omega, omega) - sum_mu d_mu q_{mu nu} omega_nu."""
    q = _omega_subst(metric)
    dq = metric.position_derivatives()
    om = sphere.OMEGA
    subst = {name: pos for name, pos in zip(_X, om)}
    tr = q[0][0] + q[1][1] + q[2][2]
    qoo = ex.ZERO
    for m in range(3):
        for n in range(3):
            qoo = qoo + q[m][n] * om[m] * om[n]
    divq = ex.ZERO
    for mu in range(3):
        for nu in range(3):
            divq = divq + ex.substitute(dq[mu][mu][nu], subst) * om[nu]
    return tr / 2 + ex.const(Fraction(5, 2)) * qoo - divq


def d2_area_g2_integrand(metric: MetricPerturbation) -> ex.Expr:
    """Integrand of D2 A [0, delta] q: (tr_R3 q - q(omega, omega)) / 2."""
    q = _omega_subst(metric)
    om = sphere.OMEGA
    tr = q[0][0] + q[1][1] + q[2][2]
    qoo = ex.ZERO
    for m in range(3):
        for n in range(3):
            qoo = qoo + q[m][n] * om[m] * om[n]
    return (tr - qoo) / 2


def d2_b1_boundary_integrand(metric: MetricPerturbation) -> ex.Expr:
    """D2 B1 [0, delta] q = -q_{a3} omega_a on the equator."""
    q = _omega_subst(metric)
    om = sphere.OMEGA
    return -(q[0][2] * om[0] + q[1][2] * om[1])


# ---------------------------------------------------------------------------
# the expansion terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalValue:
    """A machine-computed functional value decomposed over the Gauss and
    squared-mean-curvature invariants of the boundary point: value =
    K_coeff * K + H2_coeff * H^2 with both coefficients in the
    pi*(p + q*ln2) algebra."""
    K_coeff: hq.CoefficientVector
    H2_coeff: hq.CoefficientVector
    raw: dict                      # probe pair -> raw numeric value

    def of(self, k1: float, k2: float) -> float:
        return (self.K_coeff.value() * k1 * k2
                + self.H2_coeff.value() * (k1 + k2) ** 2)


@dataclass(frozen=True)
class TermDecomposition:
    case: str
    terms: dict                    # name -> FunctionalValue
    first_derivative: float        # coefficient of H in the lambda-linear term

    def total(self) -> tuple[hq.CoefficientVector, hq.CoefficientVector]:
        ktot = Fraction(0)
        kln = Fraction(0)
        htot = Fraction(0)
        hln = Fraction(0)
        for name, tv in self.terms.items():
            mult = 2 if name == "D12" else 1
            ktot += mult * tv.K_coeff.p
            kln += mult * tv.K_coeff.q
            htot += mult * tv.H2_coeff.p
            hln += mult * tv.H2_coeff.q
        return (hq.CoefficientVector(ktot, kln), hq.CoefficientVector(htot, hln))


def _fit_K_H2(values: dict, tol: float = 1e-7) -> tuple[float, float]:
    """Decompose probe values as alpha*K + beta*H^2, checking consistency
    across all probe pairs."""
    rows = []
    rhs = []
    for (k1, k2), v in values.items():
        rows.append([k1 * k2, (k1 + k2) ** 2])
        rhs.append(v)
    A = np.array(rows)
    y = np.array(rhs)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = A @ coef - y
    if np.max(np.abs(resid)) > tol:
        raise InconsistentProbes(
            f"probe pairs disagree beyond {tol}: residuals {resid}")
    return float(coef[0]), float(coef[1])


def _decompose(values: dict, tol: float = 1e-7,
               recover_tol: float = 1e-9) -> FunctionalValue:
    alpha, beta = _fit_K_H2(values, tol)
    return FunctionalValue(
        K_coeff=hq.recover_coefficients(alpha, tol=recover_tol),
        H2_coeff=hq.recover_coefficients(beta, tol=recover_tol),
        raw=dict(values),
    )


WILLMORE_TERMS = ("D1sq", "D12", "D2sq", "D1_u2", "D2_g2")
CMC_TERMS = WILLMORE_TERMS


def second_derivative_terms(case: str,
                            grid: hq.QuadratureGrid = hq.QuadratureGrid(),
                            dh: float = 0.0) -> TermDecomposition:
    """The five second-derivative contributions to d^2/dlambda^2 of the
    Willmore energy (case 'willmore') or area (case 'cmc') along the
    critical family, each decomposed as K and H^2 coefficients in the
    pi*(p + q*ln2) algebra.

    The quadratic-in-(u', g') block comes from one diagonal jet per probe
    pair with polarization; the u'' term from the volume/boundary constraint
    chains; the g'' term from the closed metric-variation integrands.
    """
    case = case.lower()
    u_dir = lin.uprime_expr(case)
    gprime = metric_first_order()
    gsecond = metric_second_order()
    functional = "W" if case == "willmore" else "A"

    diag, usq, gsq, u2term, g2term, d1 = {}, {}, {}, {}, {}, {}
    zero_u = ex.ZERO
    zero_g = metric_zero()
    for k1, k2 in PROBE_PAIRS:
        f_diag = functionals(u_dir, gprime, grid, k1, k2, dh)
        f_u = functionals(u_dir, zero_g, grid, k1, k2, dh)
        f_g = functionals(zero_u, gprime, grid, k1, k2, dh)
        diag[(k1, k2)] = f_diag[functional].d2
        usq[(k1, k2)] = f_u[functional].d2
        gsq[(k1, k2)] = f_g[functional].d2
        d1[(k1, k2)] = f_diag[functional].d1

        if case == "willmore":
            # D1 W u'' = equator integral of d^2/deps^2 B1[eps u', delta+eps g']
            # plus the boundary term of g'', which vanishes (odd integrand)
            odd = hq.integrate_boundary_tphi(
                d2_b1_boundary_integrand(gsecond),
                extra={"k1": k1, "k2": k2,
                       **{n: float(dh) for n in DH_NAMES}})
            u2term[(k1, k2)] = f_diag["B1int"].d2 + odd
            g2term[(k1, k2)] = hq.integrate_tphi(
                d2_willmore_g2_integrand(gsecond), grid,
                extra={"k1": k1, "k2": k2,
                       **{n: float(dh) for n in DH_NAMES}})
        else:
            # D1 A u'' = 2 int u'' = -4 int u'^2 from the volume constraint
            usq_int = hq.integrate_tphi(
                sphere.to_tphi(u_dir) ** 2, grid, extra={"k1": k1, "k2": k2})
            u2term[(k1, k2)] = -4.0 * usq_int
            g2term[(k1, k2)] = hq.integrate_tphi(
                d2_area_g2_integrand(gsecond), grid,
                extra={"k1": k1, "k2": k2,
                       **{n: float(dh) for n in DH_NAMES}})

    mixed = {k: 0.5 * (diag[k] - usq[k] - gsq[k]) for k in diag}
    terms = {
        "D1sq": _decompose(usq),
        "D12": _decompose(mixed),
        "D2sq": _decompose(gsq),
        "D1_u2": _decompose(u2term),
        "D2_g2": _decompose(g2term),
    }
    # lambda-linear coefficient: -pi H (Willmore) or -(pi/4) H (CMC)
    h_coef = {}
    for (k1, k2), v in d1.items():
        if abs(k1 + k2) > 1e-12:
            h_coef[(k1, k2)] = v / (k1 + k2)
    first = float(np.mean(list(h_coef.values())))
    return TermDecomposition(case, terms, first)


def assemble_expansion(case: str, decomposition: TermDecomposition | None = None,
                       grid: hq.QuadratureGrid = hq.QuadratureGrid()):
    """Expansion coefficients (c0, c1, c2) of the reduced functional:
    c0 = 2 pi, c1 = first-derivative coefficient times H, and
    c2 = (K-part, H^2-part) CoefficientVectors of half the second
    derivative."""
    dec = decomposition or second_derivative_terms(case, grid)
    ktot, htot = dec.total()
    c2 = (hq.CoefficientVector(ktot.p / 2, ktot.q / 2),
          hq.CoefficientVector(htot.p / 2, htot.q / 2))
    return {
        "c0": 2.0 * math.pi,
        "c1_per_H": dec.first_derivative,
        "c2_K": c2[0],
        "c2_H2": c2[1],
    }
