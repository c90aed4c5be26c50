"""Network geometry, path-loss channel variances, and Rayleigh block-fading samples.

Squared channel magnitudes |h|^2 are exponential with mean sigma^2 = d^-alpha.
Phases never enter any outage expression (coherent maximum ratio combining),
so only squared magnitudes are sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

__all__ = [
    "NetworkGeometry",
    "ChannelVariances",
    "FadingSample",
    "RandomStream",
    "variances_from_geometry",
    "sample_fading",
    "draws_per_trial",
    "blocks_per_trial",
]


def _as_positive_tuple(values, name: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in np.atleast_1d(values))
    if len(out) == 0:
        raise ValueError(f"{name} must contain at least one entry")
    for v in out:
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"{name} entries must be positive and finite, got {v}")
    return out


@dataclass(frozen=True)
class NetworkGeometry:
    """Relay placement relative to a unit source-destination distance.

    Distances are normalized to d_sd = 1. ``collinear`` builds the single-relay
    layout with the relay on the source-destination line (d_rd = 1 - d_sr).
    """

    d_sr: tuple[float, ...]
    d_rd: tuple[float, ...]
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "d_sr", _as_positive_tuple(self.d_sr, "d_sr"))
        object.__setattr__(self, "d_rd", _as_positive_tuple(self.d_rd, "d_rd"))
        object.__setattr__(self, "alpha", float(self.alpha))
        if len(self.d_sr) != len(self.d_rd):
            raise ValueError("d_sr and d_rd must have one entry per relay")
        if not math.isfinite(self.alpha) or self.alpha <= 1.0:
            raise ValueError(f"path-loss exponent must exceed 1, got {self.alpha}")

    @property
    def relays(self) -> int:
        return len(self.d_sr)

    @classmethod
    def collinear(cls, d_sr: float, alpha: float) -> "NetworkGeometry":
        """Single relay on the source-destination line; requires 0 < d_sr < 1."""
        d = float(d_sr)
        if not 0.0 < d < 1.0:
            raise ValueError(f"collinear placement needs 0 < d_sr < 1, got {d}")
        return cls(d_sr=(d,), d_rd=(1.0 - d,), alpha=alpha)

    def to_kv(self) -> dict[str, str]:
        return {
            "d_sr": ",".join(repr(d) for d in self.d_sr),
            "d_rd": ",".join(repr(d) for d in self.d_rd),
            "alpha": repr(self.alpha),
        }

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "NetworkGeometry":
        d_sr = [float(x) for x in kv["d_sr"].split(",")]
        d_rd = [float(x) for x in kv["d_rd"].split(",")]
        return cls(d_sr=tuple(d_sr), d_rd=tuple(d_rd), alpha=float(kv["alpha"]))


@dataclass(frozen=True)
class ChannelVariances:
    """Mean squared channel magnitudes (sigma_sd^2, sigma_sr^2[k], sigma_rd^2[k])."""

    sigma2_sd: float
    sigma2_sr: tuple[float, ...]
    sigma2_rd: tuple[float, ...]

    def __post_init__(self):
        sd = float(self.sigma2_sd)
        if not math.isfinite(sd) or sd <= 0.0:
            raise ValueError(f"sigma2_sd must be positive and finite, got {sd}")
        object.__setattr__(self, "sigma2_sd", sd)
        object.__setattr__(self, "sigma2_sr", _as_positive_tuple(self.sigma2_sr, "sigma2_sr"))
        object.__setattr__(self, "sigma2_rd", _as_positive_tuple(self.sigma2_rd, "sigma2_rd"))
        if len(self.sigma2_sr) != len(self.sigma2_rd):
            raise ValueError("sigma2_sr and sigma2_rd must have one entry per relay")

    @property
    def relays(self) -> int:
        return len(self.sigma2_sr)

    @classmethod
    def single(cls, sd: float, sr: float, rd: float) -> "ChannelVariances":
        return cls(sigma2_sd=sd, sigma2_sr=(sr,), sigma2_rd=(rd,))

    @property
    def sr(self) -> float:
        """Single-relay source-relay variance (errors if more than one relay)."""
        (v,) = self.sigma2_sr
        return v

    @property
    def rd(self) -> float:
        (v,) = self.sigma2_rd
        return v

    def to_kv(self) -> dict[str, str]:
        return {
            "sigma2_sd": repr(self.sigma2_sd),
            "sigma2_sr": ",".join(repr(v) for v in self.sigma2_sr),
            "sigma2_rd": ",".join(repr(v) for v in self.sigma2_rd),
        }

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "ChannelVariances":
        return cls(
            sigma2_sd=float(kv["sigma2_sd"]),
            sigma2_sr=tuple(float(x) for x in kv["sigma2_sr"].split(",")),
            sigma2_rd=tuple(float(x) for x in kv["sigma2_rd"].split(",")),
        )


@dataclass(frozen=True)
class FadingSample:
    """Squared channel magnitudes for one fading block (constant within the block)."""

    g_sd: float
    g_sr: tuple[float, ...] = field(default_factory=tuple)
    g_rd: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.g_sd < 0.0 or any(g < 0.0 for g in self.g_sr) or any(g < 0.0 for g in self.g_rd):
            raise ValueError("squared magnitudes cannot be negative")


def variances_from_geometry(geometry: NetworkGeometry) -> ChannelVariances:
    """Map distances to variances via sigma^2 = d^-alpha (sigma2_sd = 1 by normalization)."""
    a = geometry.alpha

    def var(d: float) -> float:
        try:
            v = d ** -a
        except OverflowError:
            v = math.inf
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"distance {d} with alpha {a} gives non-finite variance")
        return v

    return ChannelVariances(
        sigma2_sd=1.0,
        sigma2_sr=tuple(var(d) for d in geometry.d_sr),
        sigma2_rd=tuple(var(d) for d in geometry.d_rd),
    )


# Stream layout: trial i owns the counter blocks [i*B, (i+1)*B) of a Philox
# generator keyed by the seed, where B = blocks_per_trial(K). Draw order within
# a trial is g_sd, g_sr[0..K-1], g_rd[0..K-1], then padding up to the block
# boundary. Philox emits 4 doubles per counter block and advance() moves whole
# blocks, so block alignment is what makes trial i a pure function of (seed, i)
# and worker partitions bit-identical to a serial run.

PHILOX_BLOCK = 4


def draws_per_trial(relays: int) -> int:
    """Number of exponential variates consumed per trial before padding."""
    return 1 + 2 * relays


def blocks_per_trial(relays: int) -> int:
    return -(-draws_per_trial(relays) // PHILOX_BLOCK)


class RandomStream:
    """Counter-based fading sampler: reproducible, splittable at any trial index.

    Two streams with the same seed yield bit-identical sequences. ``jump(i)``
    repositions the stream at trial i without generating the skipped trials.
    """

    def __init__(self, seed: int, relays: int = 1):
        if relays < 1:
            raise ValueError("need at least one relay")
        self.seed = int(seed)
        self.relays = int(relays)
        self._trial = 0

    @property
    def trial_index(self) -> int:
        return self._trial

    def generator_at(self, trial_index: int) -> Generator:
        """Fresh generator positioned at the first draw of the given trial."""
        bg = Philox(key=self.seed)
        bg.advance(trial_index * blocks_per_trial(self.relays))
        return Generator(bg)

    def jump(self, trial_index: int) -> "RandomStream":
        self._trial = int(trial_index)
        return self

    def next_sample(self, variances: ChannelVariances) -> FadingSample:
        sample = sample_at_trial(variances, self.seed, self._trial)
        self._trial += 1
        return sample

    def uniform_block(self, start_trial: int, n_trials: int) -> np.ndarray:
        """Raw uniforms, shape (n_trials, padded draws); mostly for diagnostics."""
        width = PHILOX_BLOCK * blocks_per_trial(self.relays)
        return self.generator_at(start_trial).random((n_trials, width))


def sample_at_trial(variances: ChannelVariances, seed: int, trial_index: int) -> FadingSample:
    """Fading sample for one trial as a pure function of (seed, trial index)."""
    k = variances.relays
    gen = RandomStream(seed, k).generator_at(trial_index)
    # method="inv" consumes exactly one uniform per variate, keeping the
    # per-trial draw budget exact; it is also bit-reproducible by the
    # compiled kernel (plain -log1p(-u) per draw).
    e = gen.standard_exponential(draws_per_trial(k), method="inv")
    return FadingSample(
        g_sd=e[0] * variances.sigma2_sd,
        g_sr=tuple(e[1 + i] * variances.sigma2_sr[i] for i in range(k)),
        g_rd=tuple(e[1 + k + i] * variances.sigma2_rd[i] for i in range(k)),
    )


def sample_fading(variances: ChannelVariances, stream: RandomStream) -> FadingSample:
    """Draw the next block's squared channel magnitudes from the stream."""
    if stream.relays != variances.relays:
        raise ValueError("stream relay count does not match variances")
    return stream.next_sample(variances)
