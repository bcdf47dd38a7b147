"""Laws of the radial scale R and the radial function g(r) = k_C r^(1-d) h(r)."""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, gamma as gamma_fn, inf, lgamma, log

import numpy as np
from scipy import integrate, special

from .errors import InvalidArgumentError, NumericDomainError

KINDS = {
    "gamma": ("shape", "rate"),
    "uniform": ("b",),
    "pareto": ("alpha", "x_min"),
    "frechet": ("alpha", "scale"),
}


@dataclass(frozen=True)
class RadialLaw:
    """A positive univariate law for R.

    Parametrisations:

    * ``gamma(shape, rate)``: h(r) = rate^shape r^(shape-1) e^(-rate r) / Gamma(shape)
    * ``uniform(b)``: uniform on (0, b)
    * ``pareto(alpha, x_min)``: h(r) = alpha x_min^alpha r^(-alpha-1), r >= x_min
    * ``frechet(alpha, scale)``: CDF exp(-(scale/r)^alpha), r > 0
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown radial law {self.kind!r}; expected one of {sorted(KINDS)}")
        names = KINDS[self.kind]
        params = tuple(float(x) for x in self.params)
        if len(params) != len(names):
            raise InvalidArgumentError(f"{self.kind} law takes parameters {names}")
        for name, val in zip(names, params):
            if not (np.isfinite(val) and val > 0):
                raise InvalidArgumentError(f"{self.kind} parameter {name} must be positive, got {val!r}")
        object.__setattr__(self, "params", params)

    @classmethod
    def gamma(cls, shape: float, rate: float = 1.0) -> "RadialLaw":
        return cls("gamma", (shape, rate))

    @classmethod
    def uniform(cls, b: float = 1.0) -> "RadialLaw":
        return cls("uniform", (b,))

    @classmethod
    def pareto(cls, alpha: float, x_min: float = 1.0) -> "RadialLaw":
        return cls("pareto", (alpha, x_min))

    @classmethod
    def frechet(cls, alpha: float, scale: float = 1.0) -> "RadialLaw":
        return cls("frechet", (alpha, scale))

    def as_dict(self) -> dict:
        return {"kind": self.kind, **dict(zip(KINDS[self.kind], self.params))}

    # density, cdf ---------------------------------------------------------

    def density(self, r):
        """h(r); zero for r <= 0 (and off the support)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        rp = r[pos]
        if self.kind == "gamma":
            a, lam = self.params
            with np.errstate(divide="ignore", over="ignore"):
                out[pos] = np.exp(a * log(lam) + (a - 1) * np.log(rp) - lam * rp - lgamma(a))
        elif self.kind == "uniform":
            (b,) = self.params
            out[pos] = np.where(rp < b, 1.0 / b, 0.0)
        elif self.kind == "pareto":
            alpha, xm = self.params
            inside = rp >= xm
            vals = np.zeros_like(rp)
            vals[inside] = alpha * xm**alpha * rp[inside] ** (-alpha - 1)
            out[pos] = vals
        else:
            alpha, scale = self.params
            lz = alpha * np.log(scale / rp)
            with np.errstate(over="ignore"):
                out[pos] = np.exp(log(alpha) - np.log(rp) + lz - np.exp(lz))
        return out if out.ndim else float(out)

    def cdf(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        rp = r[pos]
        if self.kind == "gamma":
            a, lam = self.params
            out[pos] = special.gammainc(a, lam * rp)
        elif self.kind == "uniform":
            out[pos] = np.minimum(rp / self.params[0], 1.0)
        elif self.kind == "pareto":
            alpha, xm = self.params
            out[pos] = np.where(rp >= xm, 1.0 - (xm / np.maximum(rp, xm)) ** alpha, 0.0)
        else:
            alpha, scale = self.params
            out[pos] = np.exp(-((scale / rp) ** alpha))
        return out if out.ndim else float(out)

    def mean(self) -> float:
        if self.kind == "gamma":
            return self.params[0] / self.params[1]
        if self.kind == "uniform":
            return self.params[0] / 2
        alpha, s = self.params
        if alpha <= 1:
            return inf
        if self.kind == "pareto":
            return alpha * s / (alpha - 1)
        return s * gamma_fn(1 - 1 / alpha)

    # sampling -------------------------------------------------------------

    def sample(self, rng: np.random.Generator, size=None):
        """Draw from the law with an explicit generator. Output is > 0."""
        if self.kind == "gamma":
            a, lam = self.params
            x = rng.gamma(a, 1.0 / lam, size)
            return np.maximum(x, np.finfo(float).tiny)
        # open interval (0, 1): never exactly 0, so inverse CDFs stay finite
        u = 1.0 - rng.random(size)
        if self.kind == "uniform":
            return self.params[0] * u
        if self.kind == "pareto":
            alpha, xm = self.params
            return xm * u ** (-1.0 / alpha)
        alpha, scale = self.params
        return scale * (-np.log(u)) ** (-1.0 / alpha)

    # behaviour of r^(1-d) h(r) at 0 ---------------------------------------

    def g0_factor(self, d: int) -> float:
        """``lim_{r -> 0} r^(1-d) h(r)`` (may be ``inf`` or 0)."""
        if self.kind == "gamma":
            a, lam = self.params
            if a < d:
                return inf
            if a > d:
                return 0.0
            return exp(d * log(lam) - lgamma(d))
        if self.kind == "uniform":
            return inf
        return 0.0


def radial_g(law: RadialLaw, k_C: float, d: int, r, g0: float | None = None):
    """The radial function ``g(r) = k_C r^(1-d) h(r)``.

    At ``r = 0`` the value is ``k_C * law.g0_factor(d)`` unless ``g0`` is
    given, in which case ``g0`` replaces the whole value ``g(0)``.
    """
    if not k_C > 0:
        raise InvalidArgumentError(f"k_C must be positive, got {k_C!r}")
    if d < 2:
        raise InvalidArgumentError(f"d must be >= 2, got {d!r}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise InvalidArgumentError("radial_g needs r >= 0")
    out = np.empty_like(r)
    zero = r == 0
    pos = ~zero
    if np.any(pos):
        rp = r[pos]
        out[pos] = k_C * rp ** (1 - d) * law.density(rp)
    if np.any(zero):
        if g0 is None:
            f0 = law.g0_factor(d)
            out[zero] = inf if f0 == inf else k_C * f0
        else:
            out[zero] = g0
    return out if out.ndim else float(out)


def radial_check(law: RadialLaw, k_C: float, d: int) -> float:
    """Numerically evaluate ``int_0^inf r^(d-1) g(r) dr``, which should equal ``k_C``."""

    def f(r):
        return r ** (d - 1) * radial_g(law, k_C, d, r) if r > 0 else 0.0

    kw = dict(epsabs=0.0, epsrel=1e-11, limit=500)
    if law.kind == "uniform":
        val, err = integrate.quad(f, 0.0, law.params[0], **kw)
    elif law.kind == "pareto":
        val, err = integrate.quad(f, law.params[1], inf, **kw)
    else:
        # split at a natural scale so quad sees the bulk of the mass
        mid = law.params[0] / law.params[1] if law.kind == "gamma" else law.params[1]
        v1, e1 = integrate.quad(f, 0.0, mid, **kw)
        v2, e2 = integrate.quad(f, mid, inf, **kw)
        val, err = v1 + v2, e1 + e2
    if not np.isfinite(val) or err > 1e-6 * abs(k_C):
        raise NumericDomainError(f"radial quadrature did not converge (estimate {val!r}, error {err!r})")
    return val
