"""The colored G-Wishart distribution.

Densities are evaluated on the log scale in either the precision matrix
``K`` or its Cholesky factor ``Phi``.  ``I_G(delta, D)`` denotes the
normalizing constant

    I_G(delta, D) = int_{P_G} |K|^{(delta-2)/2} exp(-<K, D>/2) dK

with ``dK`` the Lebesgue measure on the free entries of ``K``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, multigammaln, roots_hermite

from . import kernels
from .graph import ColoredGraph, three_vertex
from .linalg import (
    EPS,
    CholeskyFactor,
    NotPositiveDefinite,
    complete,
    is_positive_definite,
    layout,
    project_to_graph,
    upper_cholesky,
)

log = logging.getLogger(__name__)

LOG2 = math.log(2.0)


class Unsupported(ValueError):
    """No closed-form normalizing constant is known for this graph."""


class NotIntegrable(ValueError):
    pass


class DimensionTooLarge(ValueError):
    pass


class InconsistentFactor(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CGWishartParams:
    delta: float = 3.0
    D: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.D is None:
            raise ValueError("scale matrix D is required")
        D = np.asarray(self.D, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or not np.allclose(D, D.T):
            raise ValueError("D must be a symmetric square matrix")
        if not is_positive_definite(D):
            raise NotPositiveDefinite("D is not positive definite")
        object.__setattr__(self, "D", D)

    @classmethod
    def identity(cls, p: int, delta: float = 3.0) -> "CGWishartParams":
        return cls(delta, np.eye(p))

    def posterior(self, S: np.ndarray, n: int) -> "CGWishartParams":
        return CGWishartParams(self.delta + n, self.D + S)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def log_unnorm_density_phi(
    f: CholeskyFactor, g: ColoredGraph, params: CGWishartParams, S=None, n: int = 0
) -> float:
    """Log of ``prod Phi_ii^(n+delta+p-i-1-v_i) exp(-<Phi'Phi, D+S>/2)``.

    This is the joint (graph, Cholesky factor) posterior density without the
    ``2^|V_G| / I_G`` factor and the graph prior; with ``n = 0`` and no
    ``S`` it is the prior in Cholesky coordinates.
    """
    if f.phi.shape != (g.p, g.p):
        raise InconsistentFactor(f"factor is {f.phi.shape}, graph has p={g.p}")
    if np.any(np.diag(f.phi) <= 0):
        raise InconsistentFactor("factor has a non-positive diagonal")
    lay = layout(g)
    M = params.D if S is None else params.D + S
    return float(kernels.log_density(np.ascontiguousarray(f.phi), lay.exponents(params.delta, n), M))


def log_unnorm_density_K(K: np.ndarray, params: CGWishartParams, S=None, n: int = 0) -> float:
    """Log of ``|K|^((n+delta-2)/2) exp(-<K, D+S>/2)``."""
    sign, logdet = np.linalg.slogdet(K)
    if sign <= 0:
        return -math.inf
    M = params.D if S is None else params.D + S
    return 0.5 * (n + params.delta - 2.0) * logdet - 0.5 * float(np.sum(K * M))


def log_jacobian(phi: np.ndarray, g: ColoredGraph) -> float:
    """Log of ``|dK^free / dPhi^free| = 2^|V_G| prod Phi_ii^(p-i+1-v_i)``."""
    lay = layout(g)
    i = np.arange(1, g.p + 1)
    return len(g.vertex_classes) * LOG2 + float(np.sum((g.p - i + 1 - lay.v) * np.log(np.diag(phi))))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def initial_factor(g: ColoredGraph, K_guess: np.ndarray | None = None) -> CholeskyFactor:
    """A valid starting factor, near ``K_guess`` when that is usable."""
    if K_guess is not None:
        P = project_to_graph(np.asarray(K_guess, dtype=float), g)
        if is_positive_definite(P):
            phi = upper_cholesky(P)
            try:
                return complete({(i, j): phi[i - 1, j - 1] for i, j in layout_free(g)}, g)
            except ValueError:
                pass
    return complete({(i, j): (1.0 if i == j else 0.0) for i, j in layout_free(g)}, g)


def layout_free(g: ColoredGraph) -> list[tuple[int, int]]:
    lay = layout(g)
    return [(int(i) + 1, int(j) + 1) for i, j in zip(lay.free_i, lay.free_j)]


def draw_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms on ``(0, 1]`` so that logs and inverse CDFs stay finite."""
    return 1.0 - rng.random(size)


def sample(
    g: ColoredGraph,
    params: CGWishartParams,
    sweeps: int,
    sigma: float,
    state: CholeskyFactor,
    rng: np.random.Generator,
    S=None,
    n: int = 0,
) -> tuple[CholeskyFactor, int]:
    """Run ``sweeps`` single-site Metropolis-Hastings sweeps.

    Each sweep updates the free entries of ``Phi`` in lexicographic order
    with a Gaussian random walk (zero-truncated on the diagonal), completing
    the non-free entries after every proposal.  Proposals whose completion
    fails are rejected.  Returns the new factor and the number of accepted
    proposals.
    """
    if state.graph != g:
        raise InconsistentFactor("state belongs to a different graph")
    lay = layout(g)
    slots = sweeps * lay.nfree
    z = rng.standard_normal(slots)
    u = draw_uniforms(rng, 2 * slots)
    phi = np.ascontiguousarray(state.phi, dtype=float).copy()
    M = params.D if S is None else params.D + S
    acc = kernels.mh_sweeps(
        phi, lay.code, lay.rep_i, lay.rep_j, lay.free_i, lay.free_j,
        lay.exponents(params.delta, n), np.ascontiguousarray(M), float(sigma), int(sweeps), z, u,
    )
    return CholeskyFactor(phi, g), int(acc)


# ---------------------------------------------------------------------------
# closed-form normalizing constants
# ---------------------------------------------------------------------------


def _log_wishart_const(delta: float, D: np.ndarray) -> float:
    """``log I`` for the complete uncolored graph (standard Wishart)."""
    p = D.shape[0]
    b = (delta + p - 1) / 2.0
    _, logdet = np.linalg.slogdet(D)
    return b * p * LOG2 + multigammaln(b, p) - b * logdet


def _log_empty_const(g: ColoredGraph, delta: float, D: np.ndarray) -> float:
    total = 0.0
    for block in g.vertex_classes:
        m = len(block)
        shape = m * (delta - 2.0) / 2.0 + 1.0
        if shape <= 0:
            raise NotIntegrable(f"delta={delta} too small for a vertex class of size {m}")
        rate = sum(D[v - 1, v - 1] for v in block) / 2.0
        total += gammaln(shape) - shape * math.log(rate)
    return total


def _log_three_vertexe_const(delta: float, D: np.ndarray) -> float:
    d11, d12, d22, d33 = D[0, 0], D[0, 1], D[1, 1], D[2, 2]
    base = 0.5 * (d22 + d33) - d12 * d12 / (2.0 * d11)
    if base <= 0:
        raise NotIntegrable("(d22 + d33)/2 - d12^2/(2 d11) must be positive")
    if delta <= 0.5:
        raise NotIntegrable("delta must exceed 1/2")
    return (
        0.5 * (delta + 1) * LOG2
        + gammaln(delta / 2.0)
        + 0.5 * math.log(math.pi)
        - 0.5 * (delta + 1) * math.log(d11)
        + gammaln(delta - 0.5)
        - (delta - 0.5) * math.log(base)
    )


def _find_hub(g: ColoredGraph) -> int | None:
    """Vertex touching every edge, alone in its class, with each edge
    class's leaves inside a single vertex class."""
    common = None
    for e in g.edges:
        common = set(e) if common is None else common & set(e)
    for h in sorted(common or ()):
        if g.vertex_class_of(h) != (h,):
            continue
        ok = True
        for block in g.edge_classes:
            leaves = {i if j == h else j for i, j in block}
            if len({g.vertex_class_of(v) for v in leaves}) != 1:
                ok = False
                break
        if ok:
            return h
    return None


def _log_hub_const(g: ColoredGraph, h: int, delta: float, D: np.ndarray) -> float:
    """Hub-and-spoke graphs.

    Write ``K`` in terms of the hub's Schur complement ``s``, the spoke
    values and the leaf diagonals.  The integral over ``s`` is a gamma
    integral, each spoke class is Gaussian given its leaf diagonal, and
    each leaf class is then a gamma integral.
    """
    dhh = D[h - 1, h - 1]
    if delta <= 0:
        raise NotIntegrable("delta must be positive")
    total = gammaln(delta / 2.0) + 0.5 * delta * (LOG2 - math.log(dhh))
    spokes: dict[tuple[int, ...], list[tuple[int, float]]] = {}
    for block in g.edge_classes:
        leaves = [i if j == h else j for i, j in block]
        c = sum(D[h - 1, v - 1] for v in leaves)
        spokes.setdefault(g.vertex_class_of(leaves[0]), []).append((len(leaves), c))
    for block in g.vertex_classes:
        if block == (h,):
            continue
        rate = sum(D[v - 1, v - 1] for v in block)
        r = 0
        for m, c in spokes.get(block, []):
            rate -= c * c / (dhh * m)
            total += 0.5 * (math.log(2 * math.pi) - math.log(dhh * m))
            r += 1
        shape = len(block) * (delta - 2.0) / 2.0 + r / 2.0 + 1.0
        if shape <= 0 or rate <= 0:
            raise NotIntegrable(f"gamma integral diverges for vertex class {block}")
        total += gammaln(shape) + shape * (LOG2 - math.log(rate))
    return total


def _is_one_class_star(g: ColoredGraph) -> int | None:
    if len(g.vertex_classes) != 1 or len(g.edge_classes) != 1 or g.p < 3:
        return None
    common = set.intersection(*(set(e) for e in g.edges))
    if len(common) != 1 or len(g.edges) != g.p - 1:
        return None
    return common.pop()


def _log_one_class_star_const(g: ColoredGraph, h: int, delta: float, D: np.ndarray) -> float:
    """Star whose vertices share one class and whose spokes share another.

    With diagonal ``a`` and spoke value ``b = a t / sqrt(p-1)`` the
    determinant is ``a^p (1 - t^2)``; the ``a`` integral is a gamma
    integral and the remaining integral over ``t`` is one-dimensional.
    """
    p = g.p
    tr = float(np.trace(D))
    c = sum(D[h - 1, v - 1] for v in range(1, p + 1) if v != h)
    k = 2.0 * c / math.sqrt(p - 1)
    if tr <= abs(k):
        raise NotIntegrable("trace(D) must exceed 2|sum_i D_hi| / sqrt(p-1)")
    shape = p * (delta - 2.0) / 2.0 + 2.0
    if shape <= 0 or delta <= 0:
        raise NotIntegrable(f"delta={delta} too small")
    alpha = (delta - 2.0) / 2.0
    return (
        -0.5 * math.log(p - 1)
        + gammaln(shape)
        + shape * (LOG2 - math.log(tr))
        + _log_alg_power_integral(alpha, abs(k) / tr, shape)
    )


def _log_alg_power_integral(alpha: float, kappa: float, s: float) -> float:
    """``log int_{-1}^{1} (1 - t^2)^alpha (1 + kappa t)^(-s) dt``, ``0 <= kappa < 1``.

    For large ``s`` the mass piles up at ``t = -1``.  Substituting
    ``1 + kappa t = (1 - kappa)(1 + u)`` moves it to ``u = 0`` on a scale
    of ``1/s``; the integrand in ``u`` is ``(1 + u)^(-s) (u (U - u))^alpha``.
    """
    if kappa < 1e-12:
        return (2 * alpha + 1) * LOG2 + 2 * gammaln(alpha + 1) - gammaln(2 * alpha + 2)
    U = 2.0 * kappa / (1.0 - kappa)
    pre = (2 * alpha + 1) * (math.log1p(-kappa) - math.log(kappa)) - s * math.log1p(-kappa)
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=400)

    if alpha < 1.0:
        # singular endpoint derivatives: let QUADPACK carry the algebraic weights
        m = min(0.5 * U, 50.0 / s)

        def f(u):
            return math.exp(-s * math.log1p(u))

        left, _ = integrate.quad(lambda u: f(u) * (U - u) ** alpha, 0.0, m,
                                 weight="alg", wvar=(alpha, 0.0), **opts)
        right, _ = integrate.quad(lambda u: f(u) * u**alpha, m, U,
                                  weight="alg", wvar=(0.0, alpha), **opts)
        return pre + math.log(left + right)

    # otherwise scale by the interior maximum so nothing under- or overflows
    def h(u):
        return -s * math.log1p(u) + alpha * (math.log(u) + math.log(U - u))

    def dh(u):
        return -s / (1.0 + u) + alpha / u - alpha / (U - u)

    tiny = U * 1e-14
    u0 = optimize.brentq(dh, tiny, U - tiny, xtol=1e-300, rtol=1e-15)
    h0 = h(u0)
    curv = alpha / u0**2 + alpha / (U - u0) ** 2 - s / (1.0 + u0) ** 2
    w = 1.0 / math.sqrt(curv) if curv > 0 else U
    cuts = sorted({0.0, max(0.0, u0 - 40 * w), u0, min(U, u0 + 40 * w), U})

    def g(u):
        if u <= 0.0 or u >= U:
            return 0.0
        return math.exp(h(u) - h0)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        total = sum(integrate.quad(g, lo, hi, **opts)[0] for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo)
    return pre + h0 + math.log(total)


def _triangle_pair_vertex(g: ColoredGraph) -> int | None:
    """Apex of a 3-vertex complete graph with one 2-edge class meeting there."""
    if g.p != 3 or len(g.vertex_classes) != 3 or len(g.edges) != 3:
        return None
    sizes = sorted(len(b) for b in g.edge_classes)
    if sizes != [1, 2]:
        return None
    pair = next(b for b in g.edge_classes if len(b) == 2)
    (common,) = set(pair[0]) & set(pair[1])
    return common


def _log_triangle_pair_const(v: int, delta: float, D: np.ndarray) -> float:
    """Complete 3-vertex graph whose two edges at ``v`` share a class.

    Integrating the apex Schur complement and the shared edge value leaves
    a 2x2 integral which, after rotating by 45 degrees, splits into two
    gamma integrals and a Gaussian one.
    """
    i, j = [k - 1 for k in (1, 2, 3) if k != v]
    v -= 1
    dv = D[v, v]
    c = D[i, v] + D[j, v]
    e11 = 0.5 * (D[i, i] + D[j, j]) - D[i, j]
    e22 = 0.5 * (D[i, i] + D[j, j]) + D[i, j]
    e12 = 0.5 * (D[i, i] - D[j, j])
    r1 = e11 - e12 * e12 / e22
    r2 = e22 - c * c / (2.0 * dv)
    if r1 <= 0 or r2 <= 0 or delta <= 0:
        raise NotIntegrable("gamma integral diverges")
    shape = 0.5 * (delta + 1.0)
    return (
        gammaln(delta / 2.0) + 0.5 * delta * (LOG2 - math.log(dv))
        + math.log(2.0 * math.pi) - 0.5 * math.log(2.0 * dv * e22)
        + 2.0 * gammaln(shape) + shape * (2.0 * LOG2 - math.log(r1) - math.log(r2))
    )


def exact_log_norm_const(g: ColoredGraph, params: CGWishartParams) -> float:
    """``log I_G(delta, D)`` for graphs with a known closed form.

    Supported families:

    * graphs without edges (a product of gamma integrals);
    * complete uncolored graphs (the Wishart constant);
    * hub-and-spoke graphs: every edge meets a hub vertex that is alone in
      its vertex class, and the leaves of each edge class share a vertex
      class.  This covers graph (e) of the 3-vertex family (which uses its
      own explicit formula), graphs (c) and (d), and stars whose hub is
      colored apart from the leaves;
    * stars with one vertex class and one edge class (one-dimensional
      quadrature);
    * complete 3-vertex graphs with singleton vertex classes whose two
      edges at one vertex share a class, graph (a) of the 3-vertex family.

    Anything else raises :class:`Unsupported`.
    """
    delta, D = float(params.delta), params.D
    if D.shape != (g.p, g.p):
        raise ValueError(f"D is {D.shape}, graph has p={g.p}")
    if not g.edges:
        return _log_empty_const(g, delta, D)
    if g.is_uncolored() and len(g.edges) == g.p * (g.p - 1) // 2:
        return _log_wishart_const(delta, D)
    if g == three_vertex("e"):
        return _log_three_vertexe_const(delta, D)
    h = _find_hub(g)
    if h is not None:
        return _log_hub_const(g, h, delta, D)
    h = _is_one_class_star(g)
    if h is not None:
        return _log_one_class_star_const(g, h, delta, D)
    h = _triangle_pair_vertex(g)
    if h is not None:
        return _log_triangle_pair_const(h, delta, D)
    raise Unsupported(f"no closed form for {g}")


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _batch_log_integrand(theta: np.ndarray, g: ColoredGraph, delta: float, D: np.ndarray) -> np.ndarray:
    """Log integrand of ``I_G`` in Cholesky coordinates, batched.

    ``theta[:, k]`` is the k-th free position in lexicographic order, with
    diagonal entries on the log scale.  Includes the ``exp`` change of
    variables and the ``2^|V_G|`` factor.  Infeasible points give ``-inf``.
    """
    lay = layout(g)
    p = g.p
    N = theta.shape[0]
    phi = np.zeros((N, p, p))
    out = np.zeros(N)
    for k, (i, j) in enumerate(zip(lay.free_i, lay.free_j)):
        if i == j:
            phi[:, i, i] = np.exp(theta[:, k])
            out += theta[:, k]
        else:
            phi[:, i, j] = theta[:, k]
    ok = np.ones(N, dtype=bool)
    for i in range(p):
        for j in range(i, p):
            c = lay.code[i, j]
            if c == 0:
                continue
            s = np.einsum("nk,nk->n", phi[:, :i, i], phi[:, :i, j])
            if c == 2:
                ri, rj = lay.rep_i[i, j], lay.rep_j[i, j]
                target = np.einsum("nk,nk->n", phi[:, : ri + 1, ri], phi[:, : ri + 1, rj])
            else:
                target = 0.0
            if i == j:
                r = target - s
                good = r > 0
                ok &= good
                phi[:, i, i] = np.sqrt(np.where(good, r, 1.0))
            else:
                phi[:, i, j] = (target - s) / phi[:, i, i]
    expo = lay.exponents(delta)
    diag = np.diagonal(phi, axis1=1, axis2=2)
    out += np.log(diag) @ expo
    out -= 0.5 * np.einsum("nki,ij,nkj->n", phi, D, phi)
    out += lay.n_vertex_classes * LOG2
    out[~ok] = -np.inf
    return out


@dataclass
class QuadratureResult:
    log_value: float
    rel_error: float
    nodes: int
    evaluations: int


def _hessian(f, x, h=1e-4):
    d = len(x)
    H = np.zeros((d, d))
    f0 = f(x)
    for a in range(d):
        for b in range(a, d):
            ea = np.zeros(d)
            eb = np.zeros(d)
            ea[a] = h
            eb[b] = h
            if a == b:
                H[a, a] = (f(x + ea) - 2 * f0 + f(x - ea)) / h**2
            else:
                H[a, b] = H[b, a] = (
                    f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)
                ) / (4 * h * h)
    return H


def numeric_log_norm_const_detail(
    g: ColoredGraph,
    params: CGWishartParams,
    rtol: float = 1e-6,
    max_dim: int = 5,
    max_points: int = 12_000_000,
) -> QuadratureResult:
    """Tensor Gauss-Hermite quadrature centered at the mode.

    The integrand is written in Cholesky coordinates with log-transformed
    diagonals, the mode and curvature are found numerically, and the rule
    order is raised until two successive estimates agree to ``rtol`` or the
    point budget runs out.
    """
    d = g.n_classes
    if d > max_dim:
        raise DimensionTooLarge(f"{d} free parameters; quadrature is limited to {max_dim}")
    delta, D = float(params.delta), params.D

    def f(x):
        return float(_batch_log_integrand(np.atleast_2d(x), g, delta, D)[0])

    def negf(x):
        v = f(x)
        return -v if np.isfinite(v) else 1e300

    lay = layout(g)
    x0 = np.zeros(d)
    # start from the mode of the matching Wishart to land near the bulk
    guess = initial_factor(g, np.linalg.inv(D) * max(delta, 1.0))
    for k, (i, j) in enumerate(zip(lay.free_i, lay.free_j)):
        x0[k] = math.log(guess.phi[i, j]) if i == j else guess.phi[i, j]
    res = optimize.minimize(negf, x0, method="Nelder-Mead" if d == 1 else "BFGS",
                            options={"gtol": 1e-9} if d > 1 else {"xatol": 1e-10, "fatol": 1e-12})
    mode = res.x
    H = -_hessian(f, mode, h=1e-4 * max(1.0, float(np.max(np.abs(mode)))))
    H = 0.5 * (H + H.T)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        w = np.maximum(w, 1e-8 * max(1.0, float(np.max(np.abs(w)))))
    scale = V * np.sqrt(2.0 / w)  # columns map standard GH nodes to theta
    log_jac = float(np.sum(0.5 * np.log(2.0 / w)))

    estimates = []
    evaluations = 0
    order = 8
    best = None
    while True:
        npts = order**d
        if npts > max_points or order > 150:
            break
        xi, wt = roots_hermite(order)
        logw = np.log(wt) + xi**2
        total = -np.inf
        grids = np.meshgrid(*([np.arange(order)] * d), indexing="ij")
        idx = np.stack([gr.ravel() for gr in grids], axis=1)
        for start in range(0, npts, 500_000):
            block = idx[start:start + 500_000]
            nodes = xi[block]
            theta = mode + nodes @ scale.T
            vals = _batch_log_integrand(theta, g, delta, D) + logw[block].sum(axis=1)
            total = np.logaddexp(total, np.logaddexp.reduce(vals))
            evaluations += len(block)
        est = total + log_jac
        estimates.append(est)
        if len(estimates) >= 2:
            err = abs(math.expm1(estimates[-1] - estimates[-2]))
            best = QuadratureResult(est, err, order, evaluations)
            if err < rtol:
                return best
        order = int(round(order * 1.5))
    if best is None:
        best = QuadratureResult(estimates[-1], math.inf, order, evaluations)
    log.warning("quadrature for %s stopped at relative change %.2e", g, best.rel_error)
    return best


def numeric_log_norm_const(g: ColoredGraph, params: CGWishartParams, rtol: float = 1e-6) -> float:
    return numeric_log_norm_const_detail(g, params, rtol=rtol).log_value


def log_norm_const(g: ColoredGraph, params: CGWishartParams) -> float:
    """Closed form when available, quadrature otherwise."""
    try:
        return exact_log_norm_const(g, params)
    except Unsupported:
        return numeric_log_norm_const(g, params)


def log_marginal_ratio(g: ColoredGraph, params: CGWishartParams, S: np.ndarray, n: int) -> float:
    """``log I_G(delta + n, D + S) - log I_G(delta, D)``.

    Up to a factor shared by all graphs, this is ``log p(G | X)`` under a
    uniform graph prior.
    """
    return log_norm_const(g, params.posterior(S, n)) - log_norm_const(g, params)


def log_rn(g1: ColoredGraph, g2: ColoredGraph, params: CGWishartParams, S: np.ndarray, n: int) -> float:
    """Log of the exact Bayes factor ``p(g1 | X) / p(g2 | X)``."""
    return log_marginal_ratio(g1, params, S, n) - log_marginal_ratio(g2, params, S, n)
