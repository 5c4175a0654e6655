"""Synthetic data generation for the regression model Y = F_W0(Z) + eps.

Inputs are i.i.d. standard Gaussian, noise is i.i.d. N(0, Gamma0) built as
L u with L the Cholesky factor of Gamma0. All randomness flows through PCG64
generators derived from a user seed via SeedSequence spawn keys, so

* the same seed reproduces a dataset bitwise on any platform,
* the input stream and the noise stream are independent (changing the input
  dimension cannot perturb the noise draws),
* parallel replications get independent streams from (seed, replication).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mlp
from .cost import Dataset
from .errors import DimensionMismatch
from .mlp import ParamVector
from .spd import SpdMatrix

__all__ = [
    "RNG_KIND",
    "NoiseSpec",
    "GenSpec",
    "substream",
    "derived_seed",
    "sample_dataset",
    "make_gamma0",
]

# algorithm identifier persisted in reports; bitwise reproducibility depends on it
RNG_KIND = "pcg64-seedseq"

# spawn-key namespaces; keep stable, they are part of the reproducibility contract
STREAM_INPUTS = 0
STREAM_NOISE = 1
STREAM_RESTARTS = 2
STREAM_REPLICATIONS = 3
STREAM_REFERENCE = 4
STREAM_WARMSTART = 5


def derived_seed(seed: int, *path: int) -> int:
    """Deterministic integer seed for the stream labeled by (seed, path);
    lets a replication carry an independent self-contained seed."""
    if any(int(c) < 0 for c in path):
        raise DimensionMismatch(f"stream path must be nonnegative integers, got {path}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(c) for c in path))
    return int(ss.generate_state(1, np.uint64)[0])


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the stream labeled by (seed, path).

    Distinct paths give statistically independent PCG64 streams under the
    same seed. Path components must be nonnegative integers.
    """
    if any(int(c) < 0 for c in path):
        raise DimensionMismatch(f"stream path must be nonnegative integers, got {path}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(c) for c in path))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class NoiseSpec:
    """Noise law: zero-mean Gaussian with the given covariance."""

    gamma0: SpdMatrix
    family: str = "gaussian"

    def __post_init__(self) -> None:
        if self.family != "gaussian":
            raise DimensionMismatch(f"unsupported noise family {self.family!r}")


@dataclass(frozen=True)
class GenSpec:
    """Everything needed to draw one dataset: true weights, noise law,
    input law, sample count, seed."""

    w0: ParamVector
    noise: NoiseSpec
    n: int
    seed: int
    input_law: str = "standard_gaussian"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionMismatch("sample count must be at least 1")
        if self.input_law != "standard_gaussian":
            raise DimensionMismatch(f"unsupported input law {self.input_law!r}")
        if self.noise.gamma0.dim != self.w0.arch.output_dim:
            raise DimensionMismatch(
                f"noise covariance is {self.noise.gamma0.dim}-dimensional but the "
                f"network outputs {self.w0.arch.output_dim}"
            )


def sample_dataset(spec: GenSpec) -> Dataset:
    """Draw (Z, Y) with Y = F_W0(Z) + eps, eps ~ N(0, Gamma0)."""
    q = spec.w0.arch.input_dim
    d = spec.w0.arch.output_dim
    z = substream(spec.seed, STREAM_INPUTS).standard_normal((spec.n, q))
    u = substream(spec.seed, STREAM_NOISE).standard_normal((spec.n, d))
    eps = spec.noise.gamma0.correlate(u)
    y = mlp.forward(spec.w0, z) + eps
    return Dataset(z, y)


def make_gamma0(kind: str, d: int, scale: float = 1.0, rho: float = 0.0) -> SpdMatrix:
    """Noise covariance scenarios.

    identity        -> scale * I
    equicorrelated  -> scale * ((1-rho) I + rho J), needs rho in (-1/(d-1), 1)
    ar_like         -> scale * rho^|i-j|, needs |rho| < 1

    Positive definiteness is enforced by construction, so an out-of-range rho
    raises NotPositiveDefinite rather than producing a bad matrix.
    """
    if d < 1:
        raise DimensionMismatch("dimension must be positive")
    if scale <= 0:
        raise DimensionMismatch("scale must be positive")
    name = kind.strip().lower()
    if name == "identity":
        m = np.eye(d)
    elif name == "equicorrelated":
        m = (1.0 - rho) * np.eye(d) + rho * np.ones((d, d))
    elif name == "ar_like":
        idx = np.arange(d)
        m = np.float_power(rho, np.abs(idx[:, None] - idx[None, :]))
    else:
        raise DimensionMismatch(f"unknown covariance kind {kind!r}")
    return SpdMatrix(scale * m)
