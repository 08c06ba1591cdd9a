"""Generalization-rate formulas: localized complexity fixed points, global
rates, hinge constants, noise-exponent checks, the prior spectral bound and
Euclidean-vs-hyperbolic sample-size crossovers.

Two rate APIs exist on purpose.  solve_rate_m finds the positive fixed
point of r = 30 * zeta_m(r) / sqrt(S) and is the authoritative value;
rate_full_closed is the printed closed form for m equal to the couple
count, which carries an extra factor 3 relative to the fixed point.
Reports expose both.

Anything that can reach 1e70 or cosh(40)-sized factors runs on the
(sign, log-magnitude) scalars from xfloat and converts to float only in
the returned report objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .graphs import all_couples
from .measures import CoupleMeasure
from .spaces import GFunc, SpaceKind, SpaceSpec
from .xfloat import XFloat, xmax, xmin

__all__ = [
    "BoundInputs",
    "HingeParams",
    "LambdaMode",
    "RateReport",
    "GlobalBound",
    "OldBoundResult",
    "CrossoverThresholds",
    "hinge_params",
    "lambda_sq",
    "sum_probability",
    "zeta_m",
    "solve_rate_m",
    "rate_full_closed",
    "bound_global",
    "bound_local",
    "crossover_S",
    "noise_exponent_check",
    "old_bound_rc",
    "crossover_thresholds",
    "spectral_crossover_size",
    "margin_approx_gap",
]


@dataclass(frozen=True)
class BoundInputs:
    """Scalar constants feeding every rate formula.

    lip_L      Lipschitz constant of the representing function
    sup_B      loss supremum on clipped scores
    sup_B0     any constant strictly above sup_B
    var_const  constant of the hypothesis variance bound
    var_exp    exponent beta of the variance bound, in [0, 1]
    clip_M     clipping bound
    delta      failure probability
    erm_eps    optimization slack of the eps-approximate minimizer
    lambda_sq  squared score-vector bound of the hypothesis class
    """

    lip_L: float
    sup_B: float
    sup_B0: float
    var_const: float
    var_exp: float
    clip_M: float
    delta: float
    erm_eps: float
    lambda_sq: float

    def __post_init__(self):
        if not (self.sup_B0 > self.sup_B > 0):
            raise ValueError("need sup_B0 > sup_B > 0")
        if not 0 <= self.var_exp <= 1:
            raise ValueError("var_exp must lie in [0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("lip_L", "var_const", "clip_M", "erm_eps", "lambda_sq"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def lam(self) -> float:
        return math.sqrt(self.lambda_sq)


@dataclass(frozen=True)
class HingeParams:
    """Hinge-loss constants induced by a noise exponent."""

    lip_L: float
    clip_M: float
    sup_B: float
    var_exp: float
    var_const: float

    def to_inputs(
        self,
        lambda_sq: float,
        delta: float,
        erm_eps: float = 0.0,
        sup_B0: float | None = None,
    ) -> BoundInputs:
        b0 = 1.5 * self.sup_B if sup_B0 is None else sup_B0
        return BoundInputs(
            lip_L=self.lip_L,
            sup_B=self.sup_B,
            sup_B0=b0,
            var_const=self.var_const,
            var_exp=self.var_exp,
            clip_M=self.clip_M,
            delta=delta,
            erm_eps=erm_eps,
            lambda_sq=lambda_sq,
        )


def hinge_params(alpha: float, c: float) -> HingeParams:
    """Constants for the clipped hinge loss under noise exponent alpha with
    constant c: L = 1, M = 1, B = 2, beta = alpha/(alpha+1) and variance
    constant 6 c^beta; alpha = inf gives beta = 1."""
    if c <= 0:
        raise ValueError("c must be positive")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    beta = 1.0 if math.isinf(alpha) else alpha / (alpha + 1.0)
    return HingeParams(lip_L=1.0, clip_M=1.0, sup_B=2.0, var_exp=beta, var_const=6.0 * c**beta)


def margin_approx_gap(xi: float, v_min: float, n_couples: int) -> float:
    """Expected-risk gap between the best embedding of a space that forces
    v_min margin violations and the Bayes optimum: xi * v_min / n_couples."""
    return xi * v_min / n_couples


# ----------------------------------------------------------------------
# Score-vector bound (squared)
# ----------------------------------------------------------------------


class LambdaMode(str, Enum):
    WORST_METRIC = "worst_metric"
    EUCLIDEAN_LEMMA = "euclidean_lemma"
    NUMERIC_ESTIMATE = "numeric_estimate"


def lambda_sq(
    mode: LambdaMode | str,
    space: SpaceSpec,
    g: GFunc,
    nvertices: int,
    restarts: int = 8,
    steps: int = 200,
    seed: int = 0,
) -> float:
    """Bound or estimate of the maximum over embeddings of the sum of
    squared couple scores.

    worst_metric      |couples| * ((2R)^q - tau^q)^2, any metric space
    euclidean_lemma   (|V|/8) * (2R)^(2q), Euclidean balls only
    numeric_estimate  multi-restart gradient ascent, a certified lower
                      bound witnessed by an explicit embedding
    """
    mode = LambdaMode(mode)
    n_couples = nvertices * (nvertices - 1) // 2
    two_r = 2.0 * space.radius
    q = g.exponent
    g.check_against(space)
    if mode is LambdaMode.WORST_METRIC:
        return n_couples * (two_r**q - g.space_threshold**q) ** 2
    if mode is LambdaMode.EUCLIDEAN_LEMMA:
        if space.kind is not SpaceKind.EUCLIDEAN:
            raise ValueError("euclidean_lemma applies to Euclidean balls only")
        return (nvertices / 8.0) * two_r ** (2 * q)
    return _lambda_sq_ascent(space, g, nvertices, restarts, steps, seed)


def _lambda_witnesses(space: SpaceSpec, n: int) -> list[np.ndarray]:
    """Structured embeddings known to score high: a regular polygon at the
    boundary and an antipodal two-cluster split."""
    r = space.radius
    out = []
    theta = 2.0 * math.pi * np.arange(n) / max(n, 1)
    if space.kind is SpaceKind.EUCLIDEAN:
        poly = np.zeros((n, space.dim))
        poly[:, 0] = r * np.cos(theta)
        if space.dim > 1:
            poly[:, 1] = r * np.sin(theta)
        out.append(poly)
        clusters = np.zeros((n, space.dim))
        clusters[: n // 2, 0] = r
        clusters[n // 2 :, 0] = -r
        out.append(clusters)
    else:
        poly = np.zeros((n, space.ambient_dim))
        poly[:, 0] = math.cosh(r)
        poly[:, 1] = math.sinh(r) * np.cos(theta)
        poly[:, 2] = math.sinh(r) * np.sin(theta)
        out.append(poly)
        clusters = np.zeros((n, space.ambient_dim))
        clusters[:, 0] = math.cosh(r)
        clusters[: n // 2, 1] = math.sinh(r)
        clusters[n // 2 :, 1] = -math.sinh(r)
        out.append(clusters)
    return out


def _lambda_sq_ascent(
    space: SpaceSpec, g: GFunc, n: int, restarts: int, steps: int, seed: int
) -> float:
    from .optim import CoupleFrame, spawn_init
    from .spaces import lorentz_inner, acosh_one_plus
    from .optim import _step_batch

    frame = CoupleFrame.for_entities(n)
    witnesses = _lambda_witnesses(space, n)
    init = spawn_init(space, n, restarts, np.random.SeedSequence(seed), radius_frac=0.9)
    points = np.concatenate([np.stack(witnesses), init], axis=0)

    def value_grad(pts):
        a = pts[..., frame.iu, :]
        b = pts[..., frame.jv, :]
        if space.kind is SpaceKind.EUCLIDEAN:
            diff = a - b
            d = np.linalg.norm(diff, axis=-1)
        else:
            delta = a - b
            t_l = np.maximum(lorentz_inner(delta, delta), 0.0) * 0.5
            d = acosh_one_plus(t_l)
        s = g.score(d)
        val = np.sum(s * s, axis=-1)
        dv_dd = 2.0 * s * (-g.g_prime(np.maximum(d, 0.0)))
        if space.kind is SpaceKind.EUCLIDEAN:
            unit = diff / np.maximum(d, 1e-300)[..., None]
            ca = dv_dd[..., None] * unit
            cb = -ca
        else:
            denom = np.sqrt(np.maximum(t_l * (t_l + 2.0), 0.0))
            coef = np.where(denom > 0, dv_dd / np.maximum(denom, 1e-300), 0.0)
            ca = coef[..., None] * np.concatenate([b[..., :1], -b[..., 1:]], axis=-1)
            cb = coef[..., None] * np.concatenate([a[..., :1], -a[..., 1:]], axis=-1)
        grad = np.einsum("nc,bce->bne", frame.onehot_u, ca)
        grad += np.einsum("nc,bce->bne", frame.onehot_v, cb)
        return val, grad

    best, _ = value_grad(points)
    step0 = 0.1 * space.radius
    for it in range(steps):
        val, grad = value_grad(points)
        points = _step_batch(space, points, -grad, step0 / math.sqrt(1.0 + it))
        val, _ = value_grad(points)
        best = np.maximum(best, val)
    return float(np.max(best))


# ----------------------------------------------------------------------
# Localized complexity and rate fixed points
# ----------------------------------------------------------------------


def sum_probability(mu: CoupleMeasure, k: int) -> float:
    """Minimum measure of any k-couple subset: the k smallest weights."""
    return mu.smallest_mass(k)


def zeta_m(r: float, m: int, inputs: BoundInputs, mu: CoupleMeasure) -> float:
    """Localized complexity 2L sqrt(2 Lam^2 ((V r^beta / 4 Lam^2) m + P(n-m)));
    zero by convention when L * Lam * V vanishes."""
    n = mu.n_couples
    if not 0 <= m <= n:
        raise ValueError(f"m={m} out of range 0..{n}")
    if inputs.lip_L * inputs.lambda_sq * inputs.var_const == 0:
        return 0.0
    p_tail = mu.smallest_mass(n - m)
    # m = 0 kills the variance term even at r = inf (avoid inf * 0)
    variance_term = 0.0
    if m > 0:
        variance_term = (inputs.var_const * r**inputs.var_exp / (4.0 * inputs.lambda_sq)) * m
    inner = variance_term + p_tail
    return 2.0 * inputs.lip_L * math.sqrt(2.0 * inputs.lambda_sq * inner)


def solve_rate_m(sample_size: float, m: int, inputs: BoundInputs, mu: CoupleMeasure) -> float:
    """The unique positive solution of r = 30 zeta_m(r) / sqrt(S)."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    if inputs.lip_L * inputs.lambda_sq * inputs.var_const == 0:
        return 0.0
    n = mu.n_couples
    beta = inputs.var_exp
    sqrt_s = math.sqrt(sample_size)
    p_tail = mu.smallest_mass(n - m)
    if m == 0 or beta == 0.0:
        return 30.0 * zeta_m(1.0, m, inputs, mu) / sqrt_s
    if p_tail == 0.0:
        # r^(1 - beta/2) = 30 L sqrt(2 V m / S)
        base = 1800.0 * inputs.lip_L**2 * inputs.var_const * m / sample_size
        return base ** (1.0 / (2.0 - beta))

    def gap(r: float) -> float:
        return r - 30.0 * zeta_m(r, m, inputs, mu) / sqrt_s

    hi = 1.0
    while gap(hi) <= 0.0:
        hi *= 4.0
        if hi > 1e300:
            raise ArithmeticError("rate fixed point did not bracket")
    return float(brentq(gap, 1e-300, hi, xtol=1e-300, rtol=8.9e-16))


def rate_full_closed(sample_size: float, inputs: BoundInputs, n_couples: int) -> float:
    """Printed closed form 3 (1800 |couples| L^2 V / S)^(1/(2-beta)); exceeds
    the solved fixed point at m = |couples| by the leading factor 3."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    base = 1800.0 * n_couples * inputs.lip_L**2 * inputs.var_const / sample_size
    return 3.0 * base ** (1.0 / (2.0 - inputs.var_exp))


@dataclass(frozen=True)
class GlobalBound:
    r0: float
    minor: float
    total: float


def bound_global(sample_size: float, inputs: BoundInputs) -> GlobalBound:
    """Global rate 4 L Lam sqrt(2/S) plus B0 sqrt(ln(1/delta)/S) plus eps."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    r0 = 4.0 * inputs.lip_L * inputs.lam * math.sqrt(2.0 / sample_size)
    minor = inputs.sup_B0 * math.sqrt(math.log(1.0 / inputs.delta) / sample_size)
    return GlobalBound(r0, minor, r0 + minor + inputs.erm_eps)


@dataclass(frozen=True)
class RateReport:
    rates: dict
    r_global: float
    minor_a: float
    minor_b: float
    total_local: float
    total_global: float
    crossover_s: float

    @property
    def r_min(self) -> float:
        return min(self.rates.values())

    @property
    def argmin_m(self) -> int:
        return min(self.rates, key=lambda m: (self.rates[m], m))


def _m_grid(n: int, dense_limit: int = 20000) -> list[int]:
    if n <= dense_limit:
        return list(range(n + 1))
    # minimum over a log grid upper-bounds the true minimum, which is the
    # safe direction for a bound
    ms = {0, n}
    m = n
    while m > 1:
        m //= 2
        ms.add(m)
    return sorted(ms)


def bound_local(
    sample_size: float,
    inputs: BoundInputs,
    mu: CoupleMeasure,
    m_values: list[int] | None = None,
) -> RateReport:
    """Local-rate total min_m r_m(S) v a(S) v b(S) + 3 eps, with the minor
    rates a(S) = 3 (72 (B^(2-beta) v L^2 V) ln(3/delta) / S)^(1/(2-beta)) and
    b(S) = 15 B0 ln(3/delta) / S."""
    n = mu.n_couples
    ms = _m_grid(n) if m_values is None else sorted(set(m_values))
    rates = {m: solve_rate_m(sample_size, m, inputs, mu) for m in ms}
    beta = inputs.var_exp
    ln3d = math.log(3.0 / inputs.delta)
    a_const = max(inputs.sup_B ** (2.0 - beta), inputs.lip_L**2 * inputs.var_const)
    minor_a = 3.0 * (72.0 * a_const * ln3d / sample_size) ** (1.0 / (2.0 - beta))
    minor_b = 15.0 * inputs.sup_B0 * ln3d / sample_size
    total_local = max(min(rates.values()), minor_a, minor_b) + 3.0 * inputs.erm_eps
    glob = bound_global(sample_size, inputs)
    return RateReport(
        rates=rates,
        r_global=glob.r0,
        minor_a=minor_a,
        minor_b=minor_b,
        total_local=total_local,
        total_global=glob.total,
        crossover_s=crossover_S(inputs, n),
    )


def crossover_S(inputs: BoundInputs, n_couples: int) -> float:
    """Sample size where the solved m = 0 and m = |couples| rates cross:
    7200 L^2 Lam^2 (V |couples| / (4 Lam^2))^(2/beta); inf when beta = 0."""
    beta = inputs.var_exp
    if inputs.lip_L * inputs.lambda_sq * inputs.var_const == 0:
        return 0.0
    if beta == 0.0:
        return math.inf
    log_val = (
        math.log(7200.0)
        + 2.0 * math.log(inputs.lip_L)
        + math.log(inputs.lambda_sq)
        + (2.0 / beta)
        * (math.log(inputs.var_const * n_couples) - math.log(4.0 * inputs.lambda_sq))
    )
    return math.inf if log_val > 709.0 else math.exp(log_val)


# ----------------------------------------------------------------------
# Noise exponent
# ----------------------------------------------------------------------


def noise_exponent_check(dist, alpha: float, c: float) -> bool:
    """Exact check that the couple distribution has noise exponent alpha
    with constant c, by enumerating the finite couple set.

    Finite alpha: mass{|2 eta - 1| < t} <= (c t)^alpha for every t > 0,
    equivalent to mass{|2 eta - 1| <= v} <= (c v)^alpha at every attained
    margin value v.  alpha = inf: zero mass strictly below 3/c.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    margins = np.abs(2.0 * dist.eta - 1.0)
    masses = dist.mu.weights
    # eta -> |2 eta - 1| loses an ulp, so boundary comparisons carry a
    # 1e-12 relative slack; the calibration c = 3/xi sits exactly there
    if math.isinf(alpha):
        t = 3.0 / c
        return float(np.sum(masses[margins < t * (1.0 - 1e-12)])) == 0.0
    if alpha == 0.0:
        return True
    for v in np.unique(margins):
        lhs = float(np.sum(masses[margins <= v]))
        rhs = (c * v) ** alpha
        if lhs > rhs + 1e-12 * max(1.0, rhs):
            return False
    return True


# ----------------------------------------------------------------------
# Prior spectral bound and crossovers
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class OldBoundResult:
    value: float
    x_value: XFloat
    e_var: float


def _edge_moment_matrix(kind: SpaceKind, nvertices: int, mu: CoupleMeasure) -> np.ndarray:
    """Weighted second moment of the couple-incidence matrices: entries 2 on
    both diagonal slots and -2 across for Euclidean, 1/4 on the diagonal
    slots for hyperbolic."""
    couples = all_couples(nvertices)
    if len(couples) != mu.n_couples:
        raise ValueError("measure does not match the vertex count")
    m = np.zeros((nvertices, nvertices))
    w = mu.weights
    us = np.array([c[0] for c in couples])
    vs = np.array([c[1] for c in couples])
    if kind is SpaceKind.EUCLIDEAN:
        np.add.at(m, (us, us), 2.0 * w)
        np.add.at(m, (vs, vs), 2.0 * w)
        np.add.at(m, (us, vs), -2.0 * w)
        np.add.at(m, (vs, us), -2.0 * w)
    else:
        np.add.at(m, (us, us), 0.25 * w)
        np.add.at(m, (vs, vs), 0.25 * w)
    return m


def old_bound_rc(
    space_kind: SpaceKind | str,
    radius: float,
    nvertices: int,
    mu: CoupleMeasure,
    sample_size: float,
    lip_g2: float = 1.0,
) -> OldBoundResult:
    """Prior Gram-matrix complexity bound
    (omega(R)/S) * L_g2 * |V| * (sqrt(2 S ||E||_var ln|V|) + (sigma/3) ln|V|)
    with omega = (2R)^2, sigma = 2 for Euclidean balls and
    omega = cosh^2 R + sinh^2 R, sigma = 1/2 for hyperbolic balls.

    ||E||_var is the top eigenvalue of the weighted second-moment matrix;
    omega is evaluated in the log domain so large radii stay exact.
    """
    kind = SpaceKind(space_kind)
    if nvertices < 2:
        raise ValueError("need at least two vertices")
    if nvertices > 2000:
        raise ValueError("dense eigensolve limited to 2000 vertices")
    import scipy.linalg

    m = _edge_moment_matrix(kind, nvertices, mu)
    e_var = float(scipy.linalg.eigvalsh(m)[-1])
    ln_n = math.log(nvertices)
    if kind is SpaceKind.EUCLIDEAN:
        omega = XFloat.from_float((2.0 * radius) ** 2)
        sigma = 2.0
    else:
        omega = XFloat.cosh(2.0 * radius)  # cosh^2 R + sinh^2 R
        sigma = 0.5
    bracket = XFloat.from_float(2.0 * sample_size * e_var * ln_n).sqrt() + XFloat.from_float(
        sigma / 3.0 * ln_n
    )
    x_val = omega * lip_g2 * nvertices * bracket / sample_size
    return OldBoundResult(x_val.to_float(), x_val, e_var)


@dataclass(frozen=True)
class CrossoverThresholds:
    n0: XFloat
    n_full: XFloat
    n_minor: XFloat
    threshold: XFloat

    def as_floats(self) -> dict:
        return {
            "n0": self.n0.to_float(),
            "n_full": self.n_full.to_float(),
            "n_minor": self.n_minor.to_float(),
            "threshold": self.threshold.to_float(),
        }


def crossover_thresholds(
    radius: float,
    exponent: float,
    n_couples: int,
    xi: float,
    v_min: float,
    delta: float,
    drop_leading_q: bool = False,
) -> CrossoverThresholds:
    """Sample sizes beyond which the hyperbolic-ball learner provably beats
    every Euclidean-plane embedding of a tree:

      n0      = 97200 [q (2R)^(q-1)]^2 |couples|^2 / (xi^2 v_min)
      n_full  = 32 R^2 [q (2R)^(q-1)]^2 |couples|^2 / (xi^2 v_min^2)
      n_minor = 3888 ln(3/delta) / (xi^2 v_min)

    and the guarantee threshold (n0 min n_full) max n_minor.  v_min counts
    the margin violations forced on any Euclidean-plane embedding.  With
    drop_leading_q the derivative factor uses (2R)^(q-1) without the
    leading q, the reading that matches the published numbers for q = 2.
    """
    if not 0 < xi <= 1:
        raise ValueError("xi must lie in (0, 1]")
    if radius <= 0 or exponent < 1:
        raise ValueError("need radius > 0 and exponent >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    zero = XFloat.from_float(0.0)
    if v_min == 0:
        return CrossoverThresholds(zero, zero, zero, zero)
    if v_min < 1:
        raise ValueError("v_min must be 0 or >= 1")
    q = exponent
    two_r = XFloat.from_float(2.0 * radius)
    lip = two_r ** (q - 1.0)
    if not drop_leading_q:
        lip = lip * q
    lip2 = lip * lip
    xi2v = XFloat.from_float(xi * xi * v_min)
    nc2 = XFloat.from_float(float(n_couples)) ** 2.0
    n0 = XFloat.from_float(97200.0) * lip2 * nc2 / xi2v
    n_full = (
        XFloat.from_float(32.0 * radius * radius) * lip2 * nc2 / (xi2v * v_min)
    )
    n_minor = XFloat.from_float(3888.0 * math.log(3.0 / delta)) / xi2v
    return CrossoverThresholds(n0, n_full, n_minor, xmax(xmin(n0, n_full), n_minor))


def spectral_crossover_size(
    radius: float,
    nvertices: int,
    mu: CoupleMeasure,
    xi: float,
    v_min: float,
    delta: float,
    lip_g2: float = 1.0,
    space_kind: SpaceKind | str = SpaceKind.HYPERBOLIC,
    sup_B: float = 2.0,
) -> XFloat:
    """Sample size at which the prior spectral bound first certifies the
    hyperbolic learner against the Euclidean-plane approximation gap.

    Solves 2 * bound(S) + 2 B sqrt(ln(1/delta)/S) = xi v_min / |couples|
    for S; with u = 1/sqrt(S) this is a quadratic solved in rationalized
    form to avoid cancellation.  Returns 0 when v_min = 0.
    """
    if v_min == 0:
        return XFloat.from_float(0.0)
    kind = SpaceKind(space_kind)
    n_couples = nvertices * (nvertices - 1) // 2
    gap = XFloat.from_float(margin_approx_gap(xi, v_min, n_couples))
    probe = old_bound_rc(kind, radius, nvertices, mu, 1.0, lip_g2)
    ln_n = math.log(nvertices)
    sigma = 2.0 if kind is SpaceKind.EUCLIDEAN else 0.5
    omega = (
        XFloat.from_float((2.0 * radius) ** 2)
        if kind is SpaceKind.EUCLIDEAN
        else XFloat.cosh(2.0 * radius)
    )
    a_term = omega * lip_g2 * nvertices * XFloat.from_float(2.0 * probe.e_var * ln_n).sqrt()
    c_term = omega * lip_g2 * nvertices * (sigma / 3.0 * ln_n)
    d_term = a_term * 2.0 + XFloat.from_float(2.0 * sup_B * math.sqrt(math.log(1.0 / delta)))
    disc = (d_term * d_term + c_term * gap * 8.0).sqrt()
    u_star = gap * 2.0 / (d_term + disc)
    return (u_star * u_star) ** -1.0
