"""Noise sources, the Laplace mechanism, the sparse vector technique and
privacy-budget bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

_BUDGET_SLACK = 1e-9


class BudgetExceededError(RuntimeError):
    pass


class SvtExhausted(Exception):
    """The query sequence ended without any noisy answer crossing the threshold."""

    def __init__(self, evaluated: int):
        super().__init__(f"SVT did not fire after {evaluated} queries")
        self.evaluated = evaluated


# ------------------------------------------------------------------ noise ---

class NoiseSource:
    """Seeded stream of uniforms on the open interval (0, 1).

    Every draw is counted so tests can check how much randomness a mechanism
    consumed.  Child streams for repetition rounds come from :meth:`spawn`.
    """

    def __init__(self, seed: int = 0, *, _seed_seq: np.random.SeedSequence | None = None):
        if _seed_seq is None:
            if not 0 <= int(seed) < 2**64:
                raise ValueError("seed must be a 64-bit unsigned integer")
            _seed_seq = np.random.SeedSequence(int(seed))
        self._seq = _seed_seq
        self._gen = np.random.Generator(np.random.PCG64(_seed_seq))
        self.draws = 0

    @property
    def seed(self) -> int:
        return int(self._seq.entropy)

    def spawn(self, index: int) -> "NoiseSource":
        """Independent child stream, a pure function of (seed, index)."""
        child = np.random.SeedSequence(self._seq.entropy, spawn_key=(*self._seq.spawn_key, int(index)))
        return type(self)(_seed_seq=child)

    def uniform(self, size: int | None = None):
        n = 1 if size is None else int(size)
        u = self._gen.random(n)
        # redraw exact zeros so that the inverse CDF stays finite
        while np.any(u == 0.0):
            bad = u == 0.0
            u[bad] = self._gen.random(int(bad.sum()))
        self.draws += n
        return float(u[0]) if size is None else u

    def laplace(self, scale: float) -> float:
        return laplace(scale, self)

    def laplace_many(self, scale: float, size: int) -> np.ndarray:
        _check_scale(scale)
        return laplace_from_uniform(self.uniform(size), scale)


class ZeroNoise(NoiseSource):
    """Degenerate source whose uniforms are all 1/2, so every Laplace draw is 0."""

    def __init__(self, seed: int = 0, *, _seed_seq: np.random.SeedSequence | None = None):
        super().__init__(seed, _seed_seq=_seed_seq)

    def uniform(self, size: int | None = None):
        n = 1 if size is None else int(size)
        self.draws += n
        return 0.5 if size is None else np.full(n, 0.5)


def _check_scale(scale: float) -> None:
    if not scale > 0 or not math.isfinite(scale):
        raise ValueError(f"Laplace scale must be positive and finite, got {scale}")


def laplace_from_uniform(u, scale: float):
    """Inverse CDF: ``-b * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)``."""
    d = np.asarray(u, dtype=float) - 0.5
    x = -scale * np.sign(d) * np.log1p(-2.0 * np.abs(d))
    return float(x) if np.ndim(x) == 0 else x


def laplace(scale: float, src: NoiseSource) -> float:
    """One Laplace(0, scale) draw consuming one uniform from ``src``."""
    _check_scale(scale)
    return laplace_from_uniform(src.uniform(), scale) + 0.0


def laplace_cdf(x, scale: float):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(x / scale), 1.0 - 0.5 * np.exp(-x / scale))


# -------------------------------------------------------------------- SVT ---

@dataclass
class SvtResult:
    index: int
    noisy_threshold: float
    evaluated: int
    last_value: float


def svt(
    threshold: float,
    queries: Iterable[tuple[int, Callable[[], float]]],
    eps: float,
    src: NoiseSource,
    c: int = 2,
) -> SvtResult:
    """Return the first index whose noisy answer exceeds the noisy threshold.

    The threshold gets Lap(2/eps) and each query Lap(2c/eps).  ``c=1`` is only
    private when the caller guarantees the queries are sensitivity-monotonic.
    Draw order: threshold, then one draw per evaluated query.
    """
    if c not in (1, 2):
        raise ValueError("c must be 1 or 2")
    if not eps > 0:
        raise ValueError("eps must be positive")
    noisy_t = threshold + laplace(2.0 / eps, src)
    evaluated = 0
    for index, evaluate in queries:
        value = float(evaluate())
        evaluated += 1
        if value + laplace(2.0 * c / eps, src) > noisy_t:
            return SvtResult(index, noisy_t, evaluated, value)
    raise SvtExhausted(evaluated)


# ----------------------------------------------------------------- budget ---

@dataclass(frozen=True)
class PrivacyParams:
    eps: float
    delta: float = 0.0
    beta: float = 0.1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0 <= self.delta < 1:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")


def group_privacy_scale(p: PrivacyParams, group: int) -> PrivacyParams:
    """Per-unit budget whose ``group``-fold group privacy recovers ``p``."""
    if group < 1:
        raise ValueError("group size must be >= 1")
    return PrivacyParams(p.eps / group, p.delta / group, p.beta)


@dataclass
class Charge:
    label: str
    eps: float
    delta: float
    beta: float = 0.0


@dataclass
class BudgetLedger:
    """Sequential-composition ledger; refuses any charge that would overspend.

    ``beta`` is carried for utility bookkeeping only.
    """

    total: PrivacyParams
    charges: list[Charge] = field(default_factory=list)

    @property
    def spent_eps(self) -> float:
        return math.fsum(c.eps for c in self.charges)

    @property
    def spent_delta(self) -> float:
        return math.fsum(c.delta for c in self.charges)

    def charge(self, label: str, eps: float, delta: float = 0.0, beta: float = 0.0) -> "BudgetLedger":
        if eps < 0 or delta < 0:
            raise ValueError("charges must be non-negative")
        new_eps = self.spent_eps + eps
        new_delta = self.spent_delta + delta
        if new_eps > self.total.eps * (1 + _BUDGET_SLACK):
            raise BudgetExceededError(
                f"{label}: eps {new_eps:.6g} would exceed total {self.total.eps:.6g}")
        if new_delta > self.total.delta * (1 + _BUDGET_SLACK):
            raise BudgetExceededError(
                f"{label}: delta {new_delta:.6g} would exceed total {self.total.delta:.6g}")
        self.charges.append(Charge(label, eps, delta, beta))
        return self

    def as_dict(self) -> dict:
        return {
            "total": {"eps": self.total.eps, "delta": self.total.delta, "beta": self.total.beta},
            "charges": [vars(c).copy() for c in self.charges],
            "spent_eps": self.spent_eps,
            "spent_delta": self.spent_delta,
        }


@dataclass(frozen=True)
class BudgetSplit:
    """Fractions of (eps, delta, beta) for the three pipeline procedures:
    the SVT scan, the threshold post-processing and the edge-level mechanism."""

    name: str
    eps: tuple[float, float, float]
    delta: tuple[float, float, float]
    beta: tuple[float, float, float]

    def __post_init__(self):
        for label, fr in (("eps", self.eps), ("delta", self.delta), ("beta", self.beta)):
            if len(fr) != 3 or any(f < 0 for f in fr):
                raise ValueError(f"{label} fractions must be three non-negative numbers")
            if math.fsum(fr) > 1 + 1e-12:
                raise ValueError(f"{label} fractions sum to more than 1")
        if self.eps[0] <= 0 or self.eps[1] <= 0 or self.eps[2] <= 0:
            raise ValueError("every procedure needs a positive eps share")

    def parts(self, p: PrivacyParams) -> list[tuple[float, float, float]]:
        """Absolute ``(eps, delta, beta)`` for each procedure."""
        return [(p.eps * e, p.delta * d, p.beta * b) for e, d, b in zip(self.eps, self.delta, self.beta)]


THEORY = BudgetSplit("theory", (1 / 3, 1 / 3, 1 / 3), (0.0, 0.5, 0.5), (1 / 3, 1 / 3, 1 / 3))
EMPIRICAL = BudgetSplit("empirical", (0.2, 0.2, 0.6), (0.0, 1.0, 0.0), (0.2, 0.0001, 0.7999))
SPLITS = {s.name: s for s in (THEORY, EMPIRICAL)}
