"""Parametric Levy models and exact jump-measure functionals.

A Levy process with finite second jump moment is described here by its
triplet: diffusion coefficient ``sigma2``, an additional linear drift
``gamma``, and a jump measure selected by ``kind``:

``Gamma``
    Jump density ``c/x * exp(-lam*x)`` on ``x > 0`` (a Gamma subordinator).
``NIG``
    Normal inverse Gaussian process built by subordinating a Brownian
    motion with volatility ``s`` and drift ``theta`` by an inverse Gaussian
    clock with unit mean rate and variance rate ``kappa``.
``CompoundPoissonGauss``
    Compound Poisson jumps with rate ``intensity`` and Normal(jump_mean,
    jump_std^2) jump sizes, plus an optional diffusion part.
``BrownianOnly``
    No jumps at all.

Alongside sampling (see :mod:`levy_lab.simulate`), each model exposes the
ground-truth targets of the estimators: the clipped distribution function
``N(t)`` of the jump measure, its tail function, and the second jump
moment. These are evaluated by adaptive quadrature and, where available,
by closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError

GAMMA = "Gamma"
NIG = "NIG"
COMPOUND_POISSON_GAUSS = "CompoundPoissonGauss"
BROWNIAN_ONLY = "BrownianOnly"

MODEL_KINDS = (GAMMA, NIG, COMPOUND_POISSON_GAUSS, BROWNIAN_ONLY)

_PARAM_NAMES = {
    GAMMA: ("c", "lam"),
    NIG: ("s", "theta", "kappa"),
    COMPOUND_POISSON_GAUSS: ("intensity", "jump_mean", "jump_std"),
    BROWNIAN_ONLY: (),
}


def nig_shape_params(s: float, theta: float, kappa: float) -> tuple[float, float, float]:
    """Map subordination parameters to the (alpha, beta, delta) shape triple.

    The subordinated process ``theta*S_t + s*B(S_t)`` with an inverse
    Gaussian clock of unit mean rate and variance rate ``kappa`` has the
    classical NIG law with

        beta  = theta / s**2,
        alpha = sqrt(1/(kappa*s**2) + beta**2),
        delta = s / sqrt(kappa),

    and jump density ``delta*alpha/pi * exp(beta*x) * K1(alpha*|x|)/|x|``.
    """
    beta = theta / s**2
    gamma_bar = 1.0 / (s * math.sqrt(kappa))
    alpha = math.hypot(gamma_bar, beta)
    delta = s / math.sqrt(kappa)
    return alpha, beta, delta


@dataclass(frozen=True)
class LevyModel:
    """A Levy triplet with a parametric jump measure.

    Attributes
    ----------
    kind : str
        One of ``Gamma``, ``NIG``, ``CompoundPoissonGauss``, ``BrownianOnly``.
    params : dict
        Jump-measure parameters, keyed per kind (see module docstring).
    sigma2 : float
        Diffusion coefficient, >= 0.
    gamma : float
        Additional linear drift; each increment gains ``gamma * delta``.
        For ``NIG`` the default 0 leaves the pure subordinated diffusion,
        whose mean at unit time is ``theta``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    sigma2: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        expected = _PARAM_NAMES[self.kind]
        missing = [name for name in expected if name not in self.params]
        extra = [name for name in self.params if name not in expected]
        if missing or extra:
            raise ConfigurationError(
                f"{self.kind} expects parameters {expected}, got {tuple(self.params)}"
            )
        if self.sigma2 < 0:
            raise ConfigurationError("sigma2 must be nonnegative")
        p = self.params
        if self.kind == GAMMA and (p["c"] <= 0 or p["lam"] <= 0):
            raise ConfigurationError("Gamma model requires c > 0 and lam > 0")
        if self.kind == NIG and (p["s"] <= 0 or p["kappa"] <= 0):
            raise ConfigurationError("NIG model requires s > 0 and kappa > 0")
        if self.kind == COMPOUND_POISSON_GAUSS and (
            p["intensity"] < 0 or p["jump_std"] <= 0
        ):
            raise ConfigurationError(
                "CompoundPoissonGauss requires intensity >= 0 and jump_std > 0"
            )

    @classmethod
    def gamma_process(cls, c: float, lam: float, gamma: float = 0.0) -> "LevyModel":
        return cls(GAMMA, {"c": float(c), "lam": float(lam)}, 0.0, float(gamma))

    @classmethod
    def nig(cls, s: float, theta: float, kappa: float, gamma: float = 0.0) -> "LevyModel":
        return cls(
            NIG,
            {"s": float(s), "theta": float(theta), "kappa": float(kappa)},
            0.0,
            float(gamma),
        )

    @classmethod
    def compound_poisson_gauss(
        cls,
        intensity: float,
        jump_mean: float,
        jump_std: float,
        sigma2: float = 0.0,
        gamma: float = 0.0,
    ) -> "LevyModel":
        return cls(
            COMPOUND_POISSON_GAUSS,
            {
                "intensity": float(intensity),
                "jump_mean": float(jump_mean),
                "jump_std": float(jump_std),
            },
            float(sigma2),
            float(gamma),
        )

    @classmethod
    def brownian(cls, sigma2: float, gamma: float = 0.0) -> "LevyModel":
        return cls(BROWNIAN_ONLY, {}, float(sigma2), float(gamma))

    def tag(self) -> str:
        """Short human-readable descriptor, stable across runs."""
        inner = ",".join(f"{k}={self.params[k]:g}" for k in _PARAM_NAMES[self.kind])
        extras = []
        if self.sigma2:
            extras.append(f"sigma2={self.sigma2:g}")
        if self.gamma:
            extras.append(f"gamma={self.gamma:g}")
        return f"{self.kind}({','.join([inner] + extras if inner else extras)})"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "sigma2": self.sigma2,
            "gamma": self.gamma,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LevyModel":
        return cls(
            data["kind"],
            dict(data.get("params", {})),
            float(data.get("sigma2", 0.0)),
            float(data.get("gamma", 0.0)),
        )


@dataclass(frozen=True)
class ClipFunction:
    """Weight rho(x) taming the jump measure's singularity at the origin.

    ``min_one_inv_x2`` is rho(x) = min(1, 1/x^2) with rho(0) = 1, so that
    rho(x) * x^2 = min(1, x^2). ``rational`` is rho(x) = 1/(1 + x^2). Both
    are Lipschitz, of bounded variation, and bounded by min(1, 1/x^2) up
    to a constant.
    """

    kind: str = "min_one_inv_x2"

    KINDS = ("min_one_inv_x2", "rational")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown clip function {self.kind!r}")

    @classmethod
    def min_one_inv_x2(cls) -> "ClipFunction":
        return cls("min_one_inv_x2")

    @classmethod
    def rational(cls) -> "ClipFunction":
        return cls("rational")

    def rho(self, x):
        """Evaluate rho pointwise; accepts scalars or arrays."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "min_one_inv_x2":
            out = np.ones_like(arr)
            mask = np.abs(arr) > 1.0
            out[mask] = 1.0 / arr[mask] ** 2
        else:
            out = 1.0 / (1.0 + arr**2)
        if np.ndim(x) == 0:
            return float(out[0])
        return out

    def weight(self, x):
        """Evaluate rho(x) * x^2, the integrand weight, without overflow."""
        x = np.asarray(x, dtype=float)
        if self.kind == "min_one_inv_x2":
            out = np.minimum(1.0, x**2)
        else:
            out = x**2 / (1.0 + x**2)
        return out if out.ndim else float(out)


def levy_density(model: LevyModel, x):
    """Evaluate the Levy (jump) density of ``model`` at ``x != 0``.

    Parameters
    ----------
    model : LevyModel
    x : float or ndarray
        Evaluation points; 0 is rejected because the density may be
        singular there.

    Returns
    -------
    float or ndarray
        Nonnegative density values, zero outside the jump support.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr == 0.0):
        raise ValueError("levy density is undefined at x = 0")
    out = np.zeros_like(arr)
    if model.kind == GAMMA:
        c, lam = model.params["c"], model.params["lam"]
        pos = arr > 0
        out[pos] = c / arr[pos] * np.exp(-lam * arr[pos])
    elif model.kind == NIG:
        alpha, beta, delta = nig_shape_params(**model.params)
        out = (
            delta * alpha / np.pi
            * np.exp(beta * arr)
            * special.k1(alpha * np.abs(arr))
            / np.abs(arr)
        )
    elif model.kind == COMPOUND_POISSON_GAUSS:
        lam0 = model.params["intensity"]
        mu, sd = model.params["jump_mean"], model.params["jump_std"]
        out = lam0 * np.exp(-0.5 * ((arr - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
    return out if out.ndim else float(out)


def _x2_density(model: LevyModel, x):
    """x^2 * levy density, continued by its finite limit at the origin."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(arr)
    if model.kind == GAMMA:
        c, lam = model.params["c"], model.params["lam"]
        pos = arr > 0
        out[pos] = c * arr[pos] * np.exp(-lam * arr[pos])
    elif model.kind == NIG:
        alpha, beta, delta = nig_shape_params(**model.params)
        z = alpha * np.abs(arr)
        # z*K1(z) -> 1 as z -> 0; the series correction is O(z^2 log z)
        zk1 = np.ones_like(arr)
        big = z > 1e-8
        zk1[big] = z[big] * special.k1(z[big])
        out = delta / np.pi * np.exp(beta * arr) * zk1
    elif model.kind == COMPOUND_POISSON_GAUSS:
        nonzero = arr != 0.0
        out[nonzero] = arr[nonzero] ** 2 * levy_density(model, arr[nonzero])
    if np.ndim(x) == 0:
        return float(out[0])
    return out


def _support(model: LevyModel) -> tuple[float, float]:
    if model.kind == GAMMA:
        return 0.0, math.inf
    if model.kind == BROWNIAN_ONLY:
        return 0.0, 0.0
    return -math.inf, math.inf


def _clip_breakpoints(clip: ClipFunction) -> tuple[float, ...]:
    return (-1.0, 1.0) if clip.kind == "min_one_inv_x2" else ()


def _segmented_quad(func, lo: float, hi: float, inner: list[float], tol: float) -> float:
    """Integrate func over [lo, hi], splitting at the interior points."""
    cuts = [lo] + sorted(p for p in set(inner) if lo < p < hi) + [hi]
    nseg = len(cuts) - 1
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if a == b:
            continue
        val, _ = integrate.quad(
            func, a, b, epsabs=tol / max(nseg, 1), epsrel=1e-11, limit=200
        )
        total += val
    return total


def true_N(model: LevyModel, clip: ClipFunction, t: float, tol: float = 1e-9) -> float:
    """Clipped distribution function of the jump measure at ``t``.

    Computes ``integral over (-inf, t] of rho(x) * x^2 * nu(dx)`` by
    adaptive quadrature with absolute tolerance ``tol``. Nondecreasing in
    ``t``; ``t = +inf`` returns the total clipped mass.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    lo, hi = _support(model)
    if lo == hi:
        return 0.0
    upper = min(float(t), hi)
    if upper <= lo:
        return 0.0
    func = lambda x: _scalar_weighted_density(model, clip, x)
    inner = [0.0, *_clip_breakpoints(clip)]
    return _segmented_quad(func, lo, upper, inner, tol)


def _scalar_weighted_density(model: LevyModel, clip: ClipFunction, x: float) -> float:
    return float(clip.rho(x)) * float(_x2_density(model, x))


def true_N_curve(
    model: LevyModel, clip: ClipFunction, grid, tol: float = 1e-9
) -> np.ndarray:
    """Evaluate :func:`true_N` cumulatively on an increasing grid.

    Equivalent to calling ``true_N`` at each grid point but reuses the
    mass below ``grid[0]`` and integrates segment by segment.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ConfigurationError("grid must be a strictly increasing 1-d array")
    lo, hi = _support(model)
    out = np.empty_like(grid)
    out[0] = true_N(model, clip, grid[0], tol)
    func = lambda x: _scalar_weighted_density(model, clip, x)
    inner = [0.0, *_clip_breakpoints(clip)]
    nseg = grid.size
    acc = out[0]
    for i in range(1, grid.size):
        a, b = max(grid[i - 1], lo), min(grid[i], hi)
        if b > a:
            cuts = [a] + [p for p in inner if a < p < b] + [b]
            for s0, s1 in zip(cuts[:-1], cuts[1:]):
                val, _ = integrate.quad(
                    func, s0, s1, epsabs=tol / nseg, epsrel=1e-11, limit=200
                )
                acc += val
        out[i] = acc
    return out


def true_calN(model: LevyModel, t: float, tol: float = 1e-9) -> float:
    """Tail function of the jump measure at ``t != 0``.

    For ``t < 0`` this is the mass of ``(-inf, t]``; for ``t > 0`` the mass
    of ``[t, inf)``. The origin is rejected since the total mass may be
    infinite.
    """
    if t == 0:
        raise ValueError("tail function is undefined at t = 0")
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    lo, hi = _support(model)
    if lo == hi:
        return 0.0
    func = lambda x: float(levy_density(model, x))
    if t < 0:
        if t <= lo:
            return 0.0
        val, _ = integrate.quad(func, lo, t, epsabs=tol, epsrel=1e-11, limit=200)
    else:
        if t >= hi:
            return 0.0
        val, _ = integrate.quad(func, t, hi, epsabs=tol, epsrel=1e-11, limit=200)
    return val


def second_moment_nu(model: LevyModel) -> float:
    """Second moment of the jump measure, in closed form per model."""
    p = model.params
    if model.kind == GAMMA:
        return p["c"] / p["lam"] ** 2
    if model.kind == NIG:
        return p["s"] ** 2 + p["theta"] ** 2 * p["kappa"]
    if model.kind == COMPOUND_POISSON_GAUSS:
        return p["intensity"] * (p["jump_mean"] ** 2 + p["jump_std"] ** 2)
    return 0.0


def parse_model(spec) -> LevyModel:
    """Parse a model from a dict or a compact string.

    Accepts either the dict layout of :meth:`LevyModel.to_dict` or strings
    such as ``"Gamma(c=30,lam=1)"`` and ``"NIG(s=1.5,theta=0.1,kappa=0.5)"``.
    ``lambda`` is accepted as an alias for ``lam``, and ``sigma2``/``gamma``
    may appear among the key=value pairs.
    """
    if isinstance(spec, LevyModel):
        return spec
    if isinstance(spec, dict):
        return LevyModel.from_dict(spec)
    text = str(spec).strip()
    if not text.endswith(")") or "(" not in text:
        if text in MODEL_KINDS:
            return LevyModel(text)
        raise ConfigurationError(f"cannot parse model spec {spec!r}")
    kind, _, body = text.partition("(")
    kind = kind.strip()
    fields: dict[str, float] = {}
    body = body[:-1].strip()
    if body:
        for item in body.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if key == "lambda":
                key = "lam"
            try:
                fields[key] = float(val)
            except ValueError as exc:
                raise ConfigurationError(f"bad parameter {item!r} in model spec") from exc
    sigma2 = fields.pop("sigma2", 0.0)
    gamma = fields.pop("gamma", 0.0)
    return LevyModel(kind, fields, sigma2, gamma)
