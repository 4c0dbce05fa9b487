"""Explicit fundamental solution of the two-material heat operator.

The kernel G_t(x, y) is the heat kernel of (1/(2 rho)) d/dx (rho A d/dx) with
piecewise-constant A and rho.  It is a Gaussian in the rescaled coordinates
f(x), f(y) plus a reflected Gaussian weighted by beta*sign(y); it is not
translation invariant, so it is evaluated as a two-point function G(t, x, y).

All integral functionals (mass, squared mass, cross products at two time
lags) reduce to error-function closed forms because squares and products of
Gaussians are Gaussians; those closed forms are exercised against adaptive
quadrature in the check suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .medium import MediumParams, DerivedConstants, derive_constants, position_map, A_of

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BoundConstants:
    """Constants of the pointwise, L1 and L2 kernel bounds, exact in the params.

    c_pointwise bounds |G_t(x,y)| by c * t**-0.5 * exp(-(f(x)-f(y))**2/(2t)).
    c_l1 bounds the y-integral of |G|.
    c_l2 enters the squared-integral bound c_l2**2 / (2 sqrt(pi) sqrt(t)).
    """

    c_pointwise: float
    c_l1: float
    c_l2: float


@dataclass(frozen=True)
class GreenKernel:
    """Evaluator for the fundamental solution and its closed-form integrals.

    Immutable; all methods are pure functions of (t, x, y) and safe to call
    concurrently.  Time lags must be strictly positive.
    """

    params: MediumParams
    derived: DerivedConstants = field(default=None)

    def __post_init__(self):
        if self.derived is None:
            object.__setattr__(self, "derived", derive_constants(self.params))

    # -- helpers -----------------------------------------------------------

    def _fx(self, x):
        return position_map(x, self.params)

    @staticmethod
    def _check_lag(t):
        t = np.asarray(t, dtype=float)
        if not np.all(t > 0):
            raise ValueError("time lag must be strictly positive")
        return t

    # -- pointwise kernel ---------------------------------------------------

    def evaluate(self, t, x, y):
        """Kernel value G_t(x, y).

        sign(0) is taken as -1, pairing y = 0 with the left branch exactly as
        A, rho and f do.  Strictly positive for |beta| < 1.  Broadcasts over
        array arguments; raises ValueError on nonpositive lag.
        """
        t = self._check_lag(t)
        p, beta = self.params, self.derived.beta
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx = np.where(x <= 0, x / math.sqrt(p.a1), x / math.sqrt(p.a2))
        fy = np.where(y <= 0, y / math.sqrt(p.a1), y / math.sqrt(p.a2))
        left = y <= 0
        weight = np.where(left, 1.0 / math.sqrt(p.a1), 1.0 / math.sqrt(p.a2))
        sgn = np.where(left, -1.0, 1.0)
        direct = np.exp(-((fx - fy) ** 2) / (2.0 * t))
        reflected = np.exp(-((np.abs(fx) + np.abs(fy)) ** 2) / (2.0 * t))
        out = weight / np.sqrt(2.0 * math.pi * t) * (direct + beta * sgn * reflected)
        return float(out) if out.ndim == 0 else out

    # -- closed-form integrals in y ------------------------------------------

    def l1_norm(self, t, x):
        """Exact integral of |G_t(x, y)| over the real line.

        Since |beta| < 1 keeps the kernel positive, this equals the plain
        mass integral; the four error-function pieces (direct and reflected,
        each half-line) cancel to total mass one for every t and x.
        """
        t = self._check_lag(t)
        beta = self.derived.beta
        b = np.asarray(self._fx(x), dtype=float)
        s = np.abs(b)
        rt = np.sqrt(2.0 * t)
        q_b = 0.5 * erfc(b / rt)
        q_s = 0.5 * erfc(s / rt)
        out = (q_b - beta * q_s) + (1.0 - q_b) + beta * q_s
        return float(out) if np.ndim(out) == 0 else out

    def l2_norm_sq(self, t, x):
        """Exact integral of G_t(x, y)**2 over y, via error functions."""
        t = self._check_lag(t)
        p, beta = self.params, self.derived.beta
        b = np.asarray(self._fx(x), dtype=float)
        s = np.abs(b)
        rt = np.sqrt(t)

        def upper(z):
            # Upper tail of a centered Gaussian with variance t/2.
            return 0.5 * erfc(z / rt)

        pref = 1.0 / (2.0 * np.sqrt(math.pi * t))
        left = (1.0 / math.sqrt(p.a1)) * (
            upper(b)
            - 2.0 * beta * np.exp(-((b - s) ** 2) / (4.0 * t)) * upper(0.5 * (b + s))
            + beta**2 * upper(s)
        )
        right = (1.0 / math.sqrt(p.a2)) * (
            (1.0 - upper(b))
            + 2.0 * beta * np.exp(-((b + s) ** 2) / (4.0 * t)) * upper(0.5 * (s - b))
            + beta**2 * upper(s)
        )
        out = pref * (left + right)
        return float(out) if np.ndim(out) == 0 else out

    def cross_integral(self, t1, t2, x):
        """Exact integral of G_t1(x, y) G_t2(x, y) over y.

        Symmetric in (t1, t2) and equal to l2_norm_sq when t1 == t2.  Each of
        the four product terms is a Gaussian in y whose half-line integral is
        an error function; products across the two lags use the standard
        two-Gaussian product identity.
        """
        t1 = self._check_lag(t1)
        t2 = self._check_lag(t2)
        p, beta = self.params, self.derived.beta
        b = np.asarray(self._fx(x), dtype=float)
        s = np.abs(b)
        tsum = t1 + t2
        # Variance of the product Gaussian and the erfc scale derived from it.
        scale = np.sqrt(2.0 * t1 * t2 / tsum)
        pref = 1.0 / np.sqrt(2.0 * math.pi * tsum)

        def center(c1, c2):
            return (c1 * t2 + c2 * t1) / tsum

        def lower_mass(mu):
            # integral of the product Gaussian over y-image (-inf, 0]
            return 0.5 * erfc(mu / scale)

        def upper_mass(mu):
            return 0.5 * erfc(-mu / scale)

        damp_ds = np.exp(-((b - s) ** 2) / (2.0 * tsum))
        damp_dr = np.exp(-((b + s) ** 2) / (2.0 * tsum))
        left = (1.0 / math.sqrt(p.a1)) * (
            lower_mass(center(b, b))
            - beta * damp_ds * (lower_mass(center(b, s)) + lower_mass(center(s, b)))
            + beta**2 * lower_mass(s)
        )
        right = (1.0 / math.sqrt(p.a2)) * (
            upper_mass(center(b, b))
            + beta * damp_dr * (upper_mass(center(b, -s)) + upper_mass(center(-s, b)))
            + beta**2 * upper_mass(-s)
        )
        out = pref * (left + right)
        return float(out) if np.ndim(out) == 0 else out

    # -- bounds and diagnostics ----------------------------------------------

    def bound_constants(self) -> BoundConstants:
        """Exact constants of the pointwise/L1/L2 kernel bounds.

        The L2 constant is the one produced by chaining the pointwise bound
        with the Plancherel identity for the standard heat kernel:
        c_l2 = (a1 v a2)**0.25 * (1+|beta|) * (1/sqrt(a1) + 1/sqrt(a2)).
        """
        p = self.params
        ab = abs(self.derived.beta)
        inv_sum = 1.0 / math.sqrt(p.a1) + 1.0 / math.sqrt(p.a2)
        c_pointwise = (1.0 + ab) / _SQRT_2PI * inv_sum
        c_l1 = inv_sum * (1.0 + ab) * max(math.sqrt(p.a1), math.sqrt(p.a2))
        c_l2 = max(p.a1, p.a2) ** 0.25 * (1.0 + ab) * inv_sum
        return BoundConstants(c_pointwise=c_pointwise, c_l1=c_l1, c_l2=c_l2)

    def pointwise_bound_check(self, t, x, y) -> bool:
        """True iff |G_t(x,y)| <= c_pointwise * t**-0.5 * exp(-(f(x)-f(y))**2/(2t))."""
        t = self._check_lag(t)
        c = self.bound_constants().c_pointwise
        fx = np.asarray(self._fx(x), dtype=float)
        fy = np.asarray(self._fx(y), dtype=float)
        bound = c / np.sqrt(t) * np.exp(-((fx - fy) ** 2) / (2.0 * t))
        return bool(np.all(np.abs(self.evaluate(t, x, y)) <= bound))

    def pde_residual(self, t, x, y, h) -> float:
        """Absolute residual |d/dt G - (A(x)/2) d2/dx2 G| by centered differences.

        Valid only off the interface: requires t > 2h and |x| > 2h so the
        five-point stencil never crosses x = 0 or t = 0.
        """
        if not (t > 2.0 * h):
            raise ValueError("need t > 2h to difference in time")
        if not (abs(x) > 2.0 * h):
            raise ValueError("need |x| > 2h to stay off the interface")
        g = self.evaluate
        dt = (g(t + h, x, y) - g(t - h, x, y)) / (2.0 * h)
        dxx = (g(t, x + h, y) - 2.0 * g(t, x, y) + g(t, x - h, y)) / (h * h)
        return abs(dt - 0.5 * A_of(x, self.params) * dxx)

    def time_derivative_fd(self, t, x, y, h) -> float:
        """Centered finite-difference estimate of d/dt G, for normalizing residuals."""
        g = self.evaluate
        return (g(t + h, x, y) - g(t - h, x, y)) / (2.0 * h)
