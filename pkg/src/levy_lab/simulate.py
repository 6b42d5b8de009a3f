"""Sampling of process increments at a fixed observation distance.

Each call draws ``n`` i.i.d. increments of the model process observed at
distance ``delta``; the increment law is infinitely divisible and exactly
simulable for every supported model. Randomness comes from the
counter-based Philox generator keyed on ``(seed, stream)``, so replication
``r`` of an experiment can use ``stream=r`` and produce identical output
whether replications run serially or in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .models import (
    BROWNIAN_ONLY,
    COMPOUND_POISSON_GAUSS,
    GAMMA,
    NIG,
    LevyModel,
)


@dataclass(frozen=True, eq=False)
class IncrementSample:
    """n increments at observation distance delta, plus provenance.

    Attributes
    ----------
    increments : ndarray
        The observed increments, in draw order.
    delta : float
        Observation distance (time between samples).
    model_tag : str
        Descriptor of the generating model, or a free-form label.
    seed : int
        Base seed of the generator.
    stream : int
        Stream index (replication number) under the base seed.
    """

    increments: np.ndarray
    delta: float
    model_tag: str = ""
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        arr = np.asarray(self.increments, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ConfigurationError("increments must be a nonempty 1-d array")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        object.__setattr__(self, "increments", arr)

    @property
    def n(self) -> int:
        return self.increments.size

    def shifted(self, drift: float) -> "IncrementSample":
        """Return a copy with ``drift * delta`` removed from each increment."""
        return IncrementSample(
            self.increments - drift * self.delta,
            self.delta,
            self.model_tag,
            self.seed,
            self.stream,
        )


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for stream ``stream`` under ``seed``."""
    if seed < 0 or stream < 0:
        raise ConfigurationError("seed and stream must be nonnegative integers")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))


def sample_increments(
    model: LevyModel, n: int, delta: float, seed: int, stream: int = 0
) -> IncrementSample:
    """Draw ``n`` independent increments of ``model`` at distance ``delta``.

    The per-kind schemes, deterministic for fixed (model, n, delta, seed,
    stream):

    * ``Gamma``: Gamma(shape = c*delta, rate = lam) draws.
    * ``NIG``: subordinator draw S ~ InverseGaussian(mean = delta,
      variance = kappa*delta), then theta*S + s*sqrt(S)*Z.
    * ``CompoundPoissonGauss``: K ~ Poisson(intensity*delta) jumps whose
      Normal sum is drawn exactly as jump_mean*K + jump_std*sqrt(K)*Z,
      plus the diffusion part.
    * ``BrownianOnly``: sigma*sqrt(delta)*Z.

    Every kind finally adds the linear drift ``gamma * delta``.
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    if not delta > 0:
        raise ConfigurationError("delta must be positive")
    rng = philox_generator(seed, stream)
    p = model.params
    if model.kind == GAMMA:
        x = rng.gamma(shape=p["c"] * delta, scale=1.0 / p["lam"], size=n)
    elif model.kind == NIG:
        s, theta, kappa = p["s"], p["theta"], p["kappa"]
        clock = rng.wald(mean=delta, scale=delta**2 / kappa, size=n)
        z = rng.standard_normal(n)
        x = theta * clock + s * np.sqrt(clock) * z
    elif model.kind == COMPOUND_POISSON_GAUSS:
        counts = rng.poisson(p["intensity"] * delta, size=n)
        z_diff = rng.standard_normal(n)
        z_jump = rng.standard_normal(n)
        x = (
            np.sqrt(model.sigma2 * delta) * z_diff
            + p["jump_mean"] * counts
            + p["jump_std"] * np.sqrt(counts) * z_jump
        )
    elif model.kind == BROWNIAN_ONLY:
        x = np.sqrt(model.sigma2 * delta) * rng.standard_normal(n)
    else:  # pragma: no cover - guarded by LevyModel validation
        raise ConfigurationError(f"cannot sample kind {model.kind!r}")
    x = x + model.gamma * delta
    return IncrementSample(x, float(delta), model.tag(), int(seed), int(stream))
