"""Kernel specifications (psi, s_1..s_m) and full problem scenarios.

A kernel couples m function slots to an n-dimensional integration variable
through dilation maps s_k; psi is the nonnegative density.  A Scenario adds
the ambient dimension, one homogeneous weight and one Lebesgue exponent per
slot, and (in Morrey or commutator mode) the central-Morrey exponents.

Derived quantities:

    1/p      = sum_k 1/p_k            (+ sum_k 1/q_k in commutator mode)
    alpha    = sum_k (p/p_k) alpha_k
    omega    = prod_k omega_k^{p/p_k}
    lambda   = sum_k ((d+alpha_k)/(d+alpha)) lambda_k   (morrey mode)
             = sum_k lambda_k                            (commutator mode)

p is kept as an exact rational whenever the inputs are rational, so the
defining identity of p holds exactly, not merely to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as _expr
from .expr import Expr, classify
from .quad import SingularityHints
from .weights import Weight, product_weight

__all__ = ["KernelSpec", "Scenario", "ConditionReport",
           "check_beta_condition", "check_walpha_condition", "check_morrey_balance"]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)  # exact binary expansion of a float


def _sobol_points(n: int, count: int, seed: int = 7) -> np.ndarray:
    from scipy.stats import qmc

    pts = qmc.Sobol(d=n, scramble=True, seed=seed).random(count)
    return np.clip(pts, 1e-9, 1.0 - 1e-9)


@dataclass(frozen=True)
class KernelSpec:
    """(m, n, psi, s_1..s_m) plus domain and face metadata.

    domain is 'unit-cube' or 'positive-orthant'.  ``sing`` declares the face
    exponents of psi itself (the slot factors add their own contributions at
    evaluation time).  ``beta`` is the optional lower-bound order for the
    dilation maps: |s_k(t)| >= min_i t_i^beta almost everywhere.
    """

    m: int
    n: int
    psi: Expr
    s: tuple[Expr, ...]
    domain: str = "unit-cube"
    sing: SingularityHints | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if len(self.s) != self.m:
            raise ValueError(f"expected {self.m} dilation maps, got {len(self.s)}")
        if self.domain not in ("unit-cube", "positive-orthant"):
            raise ValueError(f"unknown domain {self.domain!r}")
        bad = [i for i in self.psi.free_t_indices() if i > self.n]
        for sk in self.s:
            bad += [i for i in sk.free_t_indices() if i > self.n]
        if bad:
            raise ValueError(f"variable indices {sorted(set(bad))} exceed n={self.n}")

    def psi_class(self):
        return classify(self.psi, self.n)

    def s_classes(self):
        return tuple(classify(sk, self.n) for sk in self.s)

    def validate(self, samples: int = 1024) -> None:
        """Sample the open domain: psi >= 0, dilations finite, beta holds."""
        pts = _sobol_points(self.n, samples)
        if self.domain == "positive-orthant":
            dom_pts = pts / (1.0 - pts)
        else:
            dom_pts = pts
        psi_vals = _expr.evaluate(self.psi, t=dom_pts)
        if np.any(psi_vals < -1e-12):
            raise ValueError("psi takes negative values on the domain interior")
        for k, sk in enumerate(self.s):
            vals = _expr.evaluate(sk, t=dom_pts)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"s_{k+1} is not finite on the domain interior")
        if self.beta is not None and self.domain == "unit-cube":
            rep = check_beta_condition(self, self.beta)
            if not rep.passed:
                raise ValueError(
                    f"declared beta={self.beta} fails: margin {rep.slack:.3g} "
                    f"at t={rep.witness}"
                )


_MODES = ("lebesgue", "morrey", "commutator")


@dataclass(frozen=True)
class Scenario:
    """A full problem instance: geometry, kernel, weights and exponents."""

    d: int
    kernel: KernelSpec
    weights: tuple[Weight, ...]
    p: tuple
    q: tuple = ()
    lam: tuple = ()
    mode: str = "lebesgue"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.weights) != self.kernel.m or len(self.p) != self.kernel.m:
            raise ValueError("need one weight and one exponent p_k per slot")
        if any(w.d != self.d for w in self.weights):
            raise ValueError("weight dimensions disagree with the scenario dimension")
        for pk in self.p:
            if not 1 <= float(_as_fraction(pk)):
                raise ValueError("p_k must satisfy 1 <= p_k < infinity")
        if self.mode == "commutator":
            if len(self.q) != self.kernel.m:
                raise ValueError("commutator mode needs one q_k per slot")
        if self.mode in ("morrey", "commutator"):
            if len(self.lam) != self.kernel.m:
                raise ValueError(f"{self.mode} mode needs one lambda_k per slot")
            for pk, lk in zip(self.p, self.lam):
                pkf = float(_as_fraction(pk))
                if not (-1.0 / pkf <= lk < 0.0):
                    raise ValueError(
                        f"lambda_k={lk} outside the nontrivial range [-1/p_k, 0)"
                    )

    # -- derived exponents ----------------------------------------------------

    @property
    def m(self) -> int:
        return self.kernel.m

    def p_out_exact(self) -> Fraction:
        inv = sum((1 / _as_fraction(pk) for pk in self.p), Fraction(0))
        if self.mode == "commutator":
            inv += sum((1 / _as_fraction(qk) for qk in self.q), Fraction(0))
        return 1 / inv

    @property
    def p_out(self) -> float:
        return float(self.p_out_exact())

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(w.degree for w in self.weights)

    @property
    def alpha(self) -> float:
        p = self.p_out
        return sum((p / float(_as_fraction(pk))) * w.degree
                   for pk, w in zip(self.p, self.weights))

    @property
    def omega(self) -> Weight:
        p = self.p_out
        return product_weight(
            [(w, p / float(_as_fraction(pk))) for w, pk in zip(self.weights, self.p)]
        )

    @property
    def lam_out(self) -> float:
        if self.mode == "morrey":
            d, a = self.d, self.alpha
            return sum((self.d + w.degree) / (d + a) * lk
                       for w, lk in zip(self.weights, self.lam))
        if self.mode == "commutator":
            return float(sum(self.lam))
        raise ValueError("lambda is not defined in lebesgue mode")

    def slot_p(self, k: int) -> float:
        return float(_as_fraction(self.p[k]))

    def slot_q(self, k: int) -> float:
        return float(_as_fraction(self.q[k]))


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a structural condition check."""

    name: str
    passed: bool
    lhs: float
    rhs: float
    slack: float
    witness: tuple | None = None
    details: dict = field(default_factory=dict)


def check_beta_condition(kernel: KernelSpec, beta: float,
                         grid: int = 33) -> ConditionReport:
    """Verify |s_k(t)| >= min_i t_i^beta on a deterministic sample of the cube.

    The condition is an almost-everywhere statement, so this is a sampled
    check with margin reporting: slack is the worst value of
    |s_k(t)| - min_i t_i^beta over the sample, and the witness is where it
    is attained.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    n = kernel.n
    if n <= 3:
        axes = [(np.arange(grid) + 0.5) / grid] * n
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
    else:
        pts = _sobol_points(n, 1024)
    floor = np.min(pts ** beta, axis=1)
    worst = math.inf
    witness = None
    for sk in kernel.s:
        vals = np.abs(_expr.evaluate(sk, t=pts))
        margins = vals - floor
        i = int(np.argmin(margins))
        if margins[i] < worst:
            worst = float(margins[i])
            witness = tuple(float(v) for v in pts[i])
    passed = worst >= -1e-12
    return ConditionReport(
        name="beta-lower-bound", passed=passed, lhs=worst, rhs=0.0,
        slack=worst, witness=witness,
        details={"beta": beta, "samples": int(pts.shape[0])},
    )


def check_walpha_condition(s: Scenario, tol: float = 1e-12) -> ConditionReport:
    """Product-weight sphere mass against the product of slot sphere masses:

        omega(S_d) >= prod_k omega_k(S_d)^{p/p_k},

    with equality for pure power weights |x|^{alpha_k}.
    """
    lhs = s.omega.sphere_integral()
    p = s.p_out
    rhs = 1.0
    for w, pk in zip(s.weights, s.p):
        rhs *= w.sphere_integral() ** (p / float(_as_fraction(pk)))
    slack = lhs - rhs
    scale = max(abs(lhs), abs(rhs), 1.0)
    return ConditionReport(
        name="homogeneous-weight-vector", passed=slack >= -tol * scale,
        lhs=lhs, rhs=rhs, slack=slack,
    )


def check_morrey_balance(s: Scenario, direction: str,
                         tol: float = 1e-12) -> ConditionReport:
    """The two sphere-mass balance conditions of the central Morrey bounds.

    direction 'sufficiency':
        (omega(S_d)/(d+alpha))^{(1+lambda p)/p}
            >= prod_k (omega_k(S_d)/(d+alpha_k))^{(1+lambda_k p_k)/p_k}

    direction 'necessity':
        (omega(S_d)/(d+alpha))^{lambda} (1+lambda p)^{1/p}
            <= prod_k (omega_k(S_d)/(d+alpha_k))^{lambda_k} (1+lambda_k p_k)^{1/p_k}

    The necessity right-hand side uses the slot sphere masses omega_k(S_d);
    the variant with the product mass in every factor is also reported under
    details['rhs_product_mass_variant'] so the difference stays visible.
    """
    if s.mode not in ("morrey", "commutator"):
        raise ValueError("morrey balance checks need a morrey/commutator scenario")
    d = s.d
    p = s.p_out
    lam = s.lam_out
    alpha = s.alpha
    om = s.omega.sphere_integral()
    if direction == "sufficiency":
        lhs = (om / (d + alpha)) ** ((1.0 + lam * p) / p)
        rhs = 1.0
        for w, pk, lk in zip(s.weights, s.p, s.lam):
            pkf = float(_as_fraction(pk))
            rhs *= (w.sphere_integral() / (d + w.degree)) ** ((1.0 + lk * pkf) / pkf)
        slack = lhs - rhs
        passed = slack >= -tol * max(abs(lhs), abs(rhs), 1.0)
        return ConditionReport(name="morrey-balance-sufficiency", passed=passed,
                               lhs=lhs, rhs=rhs, slack=slack)
    if direction == "necessity":
        lhs = (om / (d + alpha)) ** lam * (1.0 + lam * p) ** (1.0 / p)
        rhs = 1.0
        rhs_printed = 1.0
        for w, pk, lk in zip(s.weights, s.p, s.lam):
            pkf = float(_as_fraction(pk))
            rhs *= (w.sphere_integral() / (d + w.degree)) ** lk \
                * (1.0 + lk * pkf) ** (1.0 / pkf)
            rhs_printed *= (om / (d + w.degree)) ** lk \
                * (1.0 + lk * pkf) ** (1.0 / pkf)
        slack = rhs - lhs
        passed = slack >= -tol * max(abs(lhs), abs(rhs), 1.0)
        return ConditionReport(
            name="morrey-balance-necessity", passed=passed, lhs=lhs, rhs=rhs,
            slack=slack, details={"rhs_product_mass_variant": rhs_printed},
        )
    raise ValueError("direction must be 'sufficiency' or 'necessity'")
