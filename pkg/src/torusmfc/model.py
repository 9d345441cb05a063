"""Problem data: Hamiltonians, Lagrangians via duality, cost functionals.

A Hamiltonian is given by closed-form evaluators of H(x,p) and D_pH(x,p)
together with a convexity certificate C_H > 1 (uniform bounds
I/C_H <= D^2_ppH <= C_H I, checked by finite-difference probes) and a cutoff
level M on |D_pH|.  Costs are functionals of the density with explicit flat
derivatives; the two built-in families are cylindrical costs
F(mu) = phi(<mu,psi_1>, ..., <mu,psi_k>) and the squared negative-order
Sobolev distance sum_k |mu(k)-mu0(k)|^2 / (1+|k|^2)^r.

All evaluators are vectorized over batches of points: x and p have shape
(n, d), values have shape (n,) and gradients (n, d).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericFailure
from .spectral import (
    SpectralField,
    add,
    alias_free_grid,
    embed,
    eval_at,
    l2_error,
    mode_max_norm_cube,
    pair,
    scale,
    to_grid,
    truncation_tail_sum,
)

UNRESTRICTED_Q = None  # trig-polynomial data supports every smoothness order


def _norms(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(v * v, axis=-1))


@dataclass(frozen=True)
class HamiltonianModel:
    """Hamiltonian H(x,p) with gradient, convexity certificate and cutoff.

    c_h certifies I/C_H <= D^2_ppH <= C_H I; cutoff_m bounds |D_pH| in the
    modified Hamiltonian used by the solver.  lagrangian, when supplied, is
    the closed-form dual L(x,a) = sup_p(-a.p - H(x,p)).
    """

    name: str
    h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dp_h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    c_h: float
    cutoff_m: float = 50.0
    lagrangian: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.c_h > 1.0:
            raise ValueError(f"c_h must exceed 1, got {self.c_h}")
        if not self.cutoff_m > 0.0:
            raise ValueError(f"cutoff_m must be positive, got {self.cutoff_m}")


@dataclass(frozen=True)
class CutoffHamiltonian(HamiltonianModel):
    """Globally Lipschitz modification agreeing with the base Hamiltonian
    wherever |D_pH| <= M; outside, the gradient is the radial clamp to norm M
    and the value is continued along rays from the clamp crossing."""

    base: HamiltonianModel = field(default=None, repr=False)

    def evaluate(self, x: np.ndarray, p: np.ndarray,
                 with_value: bool = True) -> tuple[np.ndarray | None, np.ndarray, int]:
        """(values, clamped gradients, number of clamped points)."""
        m = self.cutoff_m
        g = np.asarray(self.base.dp_h(x, p), dtype=np.float64)
        norms = _norms(g)
        mask = norms > m
        count = int(np.count_nonzero(mask))
        if count:
            g = g.copy()
            g[mask] *= (m / norms[mask])[:, None]
        if not with_value:
            return None, g, count
        vals = np.asarray(self.base.h(x, p), dtype=np.float64)
        if count:
            vals = vals.copy()
            vals[mask] = _ray_values(self.base, m, x[mask], p[mask])
        return vals, g, count


def _clamp_crossing(base: HamiltonianModel, m: float, x: np.ndarray,
                    p: np.ndarray) -> np.ndarray:
    """Largest s in [0,1] with |D_pH(x, s p)| <= m, by bisection.

    Points whose gradient already exceeds m at p = 0 get 0.  Along-ray
    uniqueness of the crossing holds when s -> |D_pH(x, s p)| is quasi-convex,
    which covers gradients affine in p (all built-ins).
    """
    n = p.shape[0]
    rho = np.zeros(n)
    inside0 = _norms(np.asarray(base.dp_h(x, np.zeros_like(p)))) <= m
    idx = np.where(inside0)[0]
    if idx.size:
        xs, ps = x[idx], p[idx]
        lo = np.zeros(idx.size)
        hi = np.ones(idx.size)
        for _ in range(55):
            mid = 0.5 * (lo + hi)
            inside = _norms(np.asarray(base.dp_h(xs, mid[:, None] * ps))) <= m
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        rho[idx] = lo
    return rho


def _ray_values(base: HamiltonianModel, m: float, x: np.ndarray, p: np.ndarray,
                n_nodes: int = 32) -> np.ndarray:
    """H-tilde at clamped points: H at the crossing plus the Gauss-Legendre
    integral of the clamped directional derivative over the rest of the ray."""
    rho = _clamp_crossing(base, m, x, p)
    vals = np.asarray(base.h(x, rho[:, None] * p), dtype=np.float64)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    acc = np.zeros(len(p))
    for t, w in zip(nodes, weights):
        s = rho + 0.5 * (t + 1.0) * (1.0 - rho)
        g = np.asarray(base.dp_h(x, s[:, None] * p), dtype=np.float64)
        norms = _norms(g)
        factor = np.where(norms > m, m / np.maximum(norms, 1e-300), 1.0)
        acc += w * np.sum(factor[:, None] * g * p, axis=-1)
    return vals + 0.5 * (1.0 - rho) * acc


def cutoff_hamiltonian(hm: HamiltonianModel) -> CutoffHamiltonian:
    """Wrap a Hamiltonian with the |D_pH| <= M clamp (idempotent)."""
    if isinstance(hm, CutoffHamiltonian):
        return hm
    holder: dict[str, CutoffHamiltonian] = {}

    def h(x, p):
        return holder["c"].evaluate(x, p)[0]

    def dp_h(x, p):
        return holder["c"].evaluate(x, p, with_value=False)[1]

    wrapped = CutoffHamiltonian(
        name=f"{hm.name}+cutoff",
        h=h,
        dp_h=dp_h,
        c_h=hm.c_h,
        cutoff_m=hm.cutoff_m,
        lagrangian=hm.lagrangian,
        base=hm,
    )
    holder["c"] = wrapped
    return wrapped


def legendre_lagrangian(hm: HamiltonianModel, x: np.ndarray,
                        a: np.ndarray) -> np.ndarray:
    """L(x,a) = sup_p(-a.p - H(x,p)), batched over points.

    Uses the closed form when the model carries one; otherwise solves the
    first-order condition D_pH(x,p*) = -a by Newton iteration (the dual
    problem is strongly concave under the convexity certificate), tolerance
    1e-10 on the gradient residual, at most 100 steps.
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if hm.lagrangian is not None:
        return np.asarray(hm.lagrangian(x, a), dtype=np.float64)
    base = hm.base if isinstance(hm, CutoffHamiltonian) else hm
    n, d = a.shape
    p = np.zeros_like(a)
    step = 1e-6
    for _ in range(100):
        residual = np.asarray(base.dp_h(x, p)) + a
        if float(np.max(np.abs(residual))) <= 1e-10:
            return -np.sum(a * p, axis=-1) - np.asarray(base.h(x, p))
        jac = np.empty((n, d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            jac[:, :, j] = (np.asarray(base.dp_h(x, p + e)) -
                            np.asarray(base.dp_h(x, p - e))) / (2 * step)
        p = p - np.linalg.solve(jac, residual[..., None])[..., 0]
    raise NumericFailure(
        f"Legendre transform: Newton stalled after 100 iterations "
        f"(worst residual {float(np.max(np.abs(np.asarray(base.dp_h(x, p)) + a))):.3e})")


# ---------------------------------------------------------------------------
# Built-in Hamiltonians
# ---------------------------------------------------------------------------


def builtin_hamiltonian_quadratic(cutoff_m: float = 50.0,
                                  c_h: float = 1.2) -> HamiltonianModel:
    """H = |p|^2/2, the model family's base case; L = |a|^2/2."""
    return HamiltonianModel(
        name="quadratic",
        h=lambda x, p: 0.5 * np.sum(p * p, axis=-1),
        dp_h=lambda x, p: np.array(p, dtype=np.float64, copy=True),
        c_h=c_h,
        cutoff_m=cutoff_m,
        lagrangian=lambda x, a: 0.5 * np.sum(a * a, axis=-1),
    )


def builtin_hamiltonian_quadratic_drift(nu: Sequence[SpectralField],
                                        cutoff_m: float = 50.0,
                                        c_h: float = 1.2) -> HamiltonianModel:
    """H = |p|^2/2 + nu(x).p with a band-limited drift field nu;
    L = |a + nu(x)|^2/2."""
    nu = tuple(nu)
    dim = nu[0].dim
    if len(nu) != dim or any(c.dim != dim for c in nu):
        raise ValueError("drift must have one component per dimension")

    def nu_at(x):
        return np.stack([eval_at(c, x) for c in nu], axis=-1)

    return HamiltonianModel(
        name="quadratic_drift",
        h=lambda x, p: 0.5 * np.sum(p * p, axis=-1) + np.sum(nu_at(x) * p, axis=-1),
        dp_h=lambda x, p: p + nu_at(x),
        c_h=c_h,
        cutoff_m=cutoff_m,
        lagrangian=lambda x, a: 0.5 * np.sum((a + nu_at(x)) ** 2, axis=-1),
    )


# ---------------------------------------------------------------------------
# Cost functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostFunctional:
    """A functional of the density with its flat derivative.

    value(mu) is the cost; delta(mu) is the function x -> dF/dmu(mu, x) as a
    band-limited field; lipschitz bounds ||delta(mu) - delta(nu)||_inf by
    lipschitz * ||mu - nu||_2; q is the smoothness order the functional
    supports (None when unrestricted).
    """

    name: str
    value: Callable[[SpectralField], float]
    delta: Callable[[SpectralField], SpectralField]
    lipschitz: float
    q: int | None = UNRESTRICTED_Q


def zero_functional(dim: int) -> CostFunctional:
    return CostFunctional(
        name="zero",
        value=lambda mu: 0.0,
        delta=lambda mu: SpectralField.zero(dim, 0),
        lipschitz=0.0,
    )


@dataclass(frozen=True)
class CostModel:
    """Running cost F and terminal cost G with flat derivatives."""

    running: CostFunctional
    terminal: CostFunctional

    def f(self, mu: SpectralField) -> float:
        return self.running.value(mu)

    def g(self, mu: SpectralField) -> float:
        return self.terminal.value(mu)

    def delta_f(self, mu: SpectralField) -> SpectralField:
        return self.running.delta(mu)

    def delta_g(self, mu: SpectralField) -> SpectralField:
        return self.terminal.delta(mu)

    @property
    def l_f(self) -> float:
        return self.running.lipschitz

    @property
    def l_g(self) -> float:
        return self.terminal.lipschitz

    @property
    def q(self) -> int | None:
        qs = [f.q for f in (self.running, self.terminal) if f.q is not None]
        return min(qs) if qs else None


def combine_costs(running_from: CostModel, terminal_from: CostModel) -> CostModel:
    """Mix the running part of one model with the terminal part of another."""
    return CostModel(running=running_from.running, terminal=terminal_from.terminal)


def zero_cost(dim: int) -> CostModel:
    z = zero_functional(dim)
    return CostModel(running=z, terminal=z)


def cylindrical_functional(phi: Callable[[np.ndarray], float],
                           phi_grad: Callable[[np.ndarray], np.ndarray],
                           psis: Sequence[SpectralField],
                           lipschitz: float,
                           q: int | None = UNRESTRICTED_Q) -> CostFunctional:
    """F(mu) = phi(<mu,psi_1>, ..., <mu,psi_k>); dF/dmu = sum_j d_j phi psi_j."""
    psis = tuple(psis)

    def brackets(mu: SpectralField) -> np.ndarray:
        return np.array([pair(psi, mu) for psi in psis])

    def value(mu: SpectralField) -> float:
        return float(phi(brackets(mu)))

    def delta(mu: SpectralField) -> SpectralField:
        grad = np.asarray(phi_grad(brackets(mu)), dtype=np.float64)
        out = scale(psis[0], grad[0])
        for gj, psi in zip(grad[1:], psis[1:]):
            out = add(out, scale(psi, gj))
        return out

    return CostFunctional("cylindrical", value, delta, lipschitz, q)


def builtin_cost_cylindrical(phi, phi_grad, psis: Sequence[SpectralField],
                             lipschitz: float | None = None,
                             q: int | None = UNRESTRICTED_Q) -> CostModel:
    """Cost model using the same cylindrical functional for F and G.

    When `lipschitz` is omitted a bound valid for affine-gradient phi (the
    linear and quadratic built-ins) is used: sum_j c_j ||psi_j||_2 ||psi_j||_inf
    with c_j the curvature of phi in slot j, measured by probing.
    """
    psis = tuple(psis)
    if lipschitz is None:
        lipschitz = 0.0
        probe = np.zeros(len(psis))
        g0 = np.asarray(phi_grad(probe), dtype=np.float64)
        for j, psi in enumerate(psis):
            unit = np.zeros(len(psis))
            unit[j] = 1.0
            curvature = float(np.abs(np.asarray(phi_grad(unit)) - g0)[j])
            norm2 = l2_error(psi, SpectralField.zero(psi.dim, psi.band))
            grid = to_grid(psi, alias_free_grid(psi.band))
            lipschitz += curvature * norm2 * float(np.max(np.abs(grid.values)))
    functional = cylindrical_functional(phi, phi_grad, psis, lipschitz, q)
    return CostModel(running=functional, terminal=functional)


def negative_sobolev_functional(mu0: SpectralField, r: int) -> CostFunctional:
    """Squared H^{-r} distance to mu0 with its closed-form flat derivative."""
    dim = mu0.dim
    if r < dim + 2:
        warnings.warn(
            f"negative-Sobolev order r={r} below {dim + 2}: the smoothness "
            f"budget q = 2r-d-1 drops under d+3", stacklevel=2)
    q = 2 * r - dim - 1
    lipschitz = 2.0 * float(np.sqrt(truncation_tail_sum(dim, 2 * r, -1, None)))

    def weights(band: int) -> np.ndarray:
        norms = mode_max_norm_cube(dim, band).astype(np.float64)
        return (1.0 + norms**2) ** (-r)

    def value(mu: SpectralField) -> float:
        band = max(mu.band, mu0.band)
        diff = embed(mu, band).coeffs - embed(mu0, band).coeffs
        return float(np.sum(np.abs(diff) ** 2 * weights(band)))

    def delta(mu: SpectralField) -> SpectralField:
        band = max(mu.band, mu0.band)
        diff = embed(mu, band).coeffs - embed(mu0, band).coeffs
        return SpectralField(dim, band, 2.0 * diff * weights(band))

    return CostFunctional("neg_sobolev", value, delta, lipschitz, q)


def builtin_cost_negative_sobolev(mu0: SpectralField, r: int) -> CostModel:
    functional = negative_sobolev_functional(mu0, r)
    return CostModel(running=functional, terminal=functional)


# ---------------------------------------------------------------------------
# Problem configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemConfig:
    """Discretization and regularity parameters of one solve.

    d, T, N: dimension, horizon, truncation band.  q: the smoothness order
    driving the expected rates.  gamma: density floor of the initial data.
    G: pseudo-spectral grid (defaults to an alias-free size for band N).
    S: number of time steps.  K_max: largest remainder mode carried
    (defaults to 4N).
    """

    d: int
    T: float
    N: int
    q: int
    gamma: float
    S: int
    G: int | None = None
    K_max: int | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.S < 1:
            raise ConfigError(f"S must be >= 1, got {self.S}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0,1), got {self.gamma}")
        if self.q < self.d + 3:
            warnings.warn(
                f"q={self.q} below d+3={self.d + 3}: outside the regime the "
                f"convergence guarantees assume", stacklevel=2)
        if self.K_max is None:
            object.__setattr__(self, "K_max", 4 * self.N)
        if self.K_max < self.N:
            raise ConfigError(f"K_max={self.K_max} below N={self.N}")
        if self.G is None:
            object.__setattr__(self, "G", alias_free_grid(self.N))
        if self.G < 2 * self.N + 1:
            raise ConfigError(
                f"grid G={self.G} cannot resolve band N={self.N} (need >= {2 * self.N + 1})")
        if self.G < 4 * self.N + 1:
            warnings.warn(
                f"grid G={self.G} below the alias-free size {4 * self.N + 1} "
                f"for quadratic nonlinearities", stacklevel=2)

    @property
    def dt(self) -> float:
        return self.T / self.S

    def times(self, from_index: int = 0) -> np.ndarray:
        return np.arange(from_index, self.S + 1) * self.dt


# ---------------------------------------------------------------------------
# Probes: executable forms of the standing assumptions
# ---------------------------------------------------------------------------


def check_h5(hm: HamiltonianModel, dim: int, rng: np.random.Generator,
             n_probes: int = 200, step: float = 1e-4,
             tol: float = 1e-4) -> dict:
    """Finite-difference eigenvalue probe of I/C_H <= D^2_ppH <= C_H I."""
    base = hm.base if isinstance(hm, CutoffHamiltonian) else hm
    x = rng.random((n_probes, dim))
    p = rng.normal(0.0, 3.0, (n_probes, dim))
    hess = np.empty((n_probes, dim, dim))
    for i in range(dim):
        for j in range(dim):
            ei = np.zeros(dim)
            ej = np.zeros(dim)
            ei[i] = step
            ej[j] = step
            hess[:, i, j] = (
                np.asarray(base.h(x, p + ei + ej))
                - np.asarray(base.h(x, p + ei - ej))
                - np.asarray(base.h(x, p - ei + ej))
                + np.asarray(base.h(x, p - ei - ej))
            ) / (4.0 * step**2)
    eigs = np.linalg.eigvalsh(0.5 * (hess + np.swapaxes(hess, 1, 2)))
    lo, hi = float(eigs.min()), float(eigs.max())
    ok = lo >= 1.0 / hm.c_h - tol and hi <= hm.c_h + tol
    return {"passed": bool(ok), "eig_min": lo, "eig_max": hi,
            "bounds": [1.0 / hm.c_h, hm.c_h]}


def check_fenchel(hm: HamiltonianModel, dim: int, rng: np.random.Generator,
                  n_probes: int = 100, tol: float = 1e-8) -> dict:
    """Equality case of Young's inequality at a = -D_pH(x,p)."""
    base = hm.base if isinstance(hm, CutoffHamiltonian) else hm
    x = rng.random((n_probes, dim))
    p = rng.normal(0.0, 2.0, (n_probes, dim))
    a = -np.asarray(base.dp_h(x, p))
    gap = legendre_lagrangian(base, x, a) + np.asarray(base.h(x, p)) + np.sum(a * p, -1)
    worst = float(np.max(np.abs(gap)))
    return {"passed": bool(worst <= tol), "worst_gap": worst, "tol": tol}


def check_cutoff_lipschitz(hm: HamiltonianModel, dim: int,
                           rng: np.random.Generator,
                           n_pairs: int = 400) -> dict:
    """Difference-quotient bound |H~(x,p1)-H~(x,p2)| <= M(1+C_H)|p1-p2|
    sampled over |p| <= 100."""
    cut = cutoff_hamiltonian(hm)
    x = rng.random((n_pairs, dim))
    p1 = rng.uniform(-100.0, 100.0, (n_pairs, dim))
    p2 = p1 + rng.normal(0.0, 5.0, (n_pairs, dim))
    v1, _, _ = cut.evaluate(x, p1)
    v2, _, _ = cut.evaluate(x, p2)
    quotients = np.abs(v1 - v2) / np.maximum(_norms(p1 - p2), 1e-12)
    worst = float(np.max(quotients))
    bound = cut.cutoff_m * (1.0 + cut.c_h)
    return {"passed": bool(worst <= bound * (1 + 1e-9)), "worst_quotient": worst,
            "bound": bound}


def _gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def check_flat_derivative(cm: CostModel, dim: int, rng: np.random.Generator,
                          n_pairs: int = 10, band: int = 6,
                          tol: float = 1e-6) -> dict:
    """Line-integral identity F(mu)-F(nu) = int_0^1 <dF(nu+t(mu-nu)), mu-nu> dt,
    16-point Gauss quadrature in t."""
    from .spectral import random_probability_field

    nodes, weights = _gauss_legendre_01(16)
    worst = 0.0
    for _ in range(n_pairs):
        mu = random_probability_field(rng, dim, band, gamma=0.2)
        nu = random_probability_field(rng, dim, band, gamma=0.2)
        diff = add(mu, scale(nu, -1.0))
        for func in (cm.running, cm.terminal):
            lhs = func.value(mu) - func.value(nu)
            rhs = 0.0
            for t, w in zip(nodes, weights):
                mix = add(scale(nu, 1.0 - t), scale(mu, t))
                rhs += w * pair(func.delta(mix), diff)
            worst = max(worst, abs(lhs - rhs))
    return {"passed": bool(worst <= tol), "worst_gap": worst, "tol": tol}


def check_monotonicity(cm: CostModel, dim: int, rng: np.random.Generator,
                       n_pairs: int = 20, band: int = 6,
                       tol: float = 1e-10) -> dict:
    """Lasry-Lions bracket <dF(mu)-dF(nu), mu-nu> >= -tol on sampled pairs."""
    from .spectral import random_probability_field

    worst = np.inf
    for _ in range(n_pairs):
        mu = random_probability_field(rng, dim, band, gamma=0.2)
        nu = random_probability_field(rng, dim, band, gamma=0.2)
        diff = add(mu, scale(nu, -1.0))
        for func in (cm.running, cm.terminal):
            bracket = pair(add(func.delta(mu), scale(func.delta(nu), -1.0)), diff)
            worst = min(worst, bracket)
    return {"passed": bool(worst >= -tol), "worst_bracket": float(worst), "tol": tol}


def check_cost_lipschitz(cm: CostModel, dim: int, rng: np.random.Generator,
                         n_pairs: int = 10, band: int = 6) -> dict:
    """||dF(mu)-dF(nu)||_inf <= L ||mu-nu||_2 on sampled pairs."""
    from .spectral import random_probability_field

    worst_excess = -np.inf
    for _ in range(n_pairs):
        mu = random_probability_field(rng, dim, band, gamma=0.2)
        nu = random_probability_field(rng, dim, band, gamma=0.2)
        dist = l2_error(mu, nu)
        for func, lip in ((cm.running, cm.running.lipschitz),
                          (cm.terminal, cm.terminal.lipschitz)):
            gap = add(func.delta(mu), scale(func.delta(nu), -1.0))
            sup = float(np.max(np.abs(to_grid(gap, alias_free_grid(gap.band)).values)))
            worst_excess = max(worst_excess, sup - lip * dist)
    return {"passed": bool(worst_excess <= 1e-10), "worst_excess": float(worst_excess)}
