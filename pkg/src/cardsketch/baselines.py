"""Reference competitors: LogLog, HyperLogLog and MinCount, all with
stochastic averaging (items split into m buckets by leading hash bits, one
register per bucket).

Each item consumes one 64-bit hash word: the top log2(m) bits pick the
bucket, the remaining bits feed the register.  With 64-bit words the
classic 32-bit large-range saturation correction never applies at the
scales this library supports, so it is omitted.
"""

from __future__ import annotations

import math

import numpy as np

from . import hashing
from .errors import DegenerateSketchError, IncompatibleSketchError, InsufficientDataError
from .estimate import Estimate, normal_interval

# Asymptotic relative efficiencies (ratio of c^2/m to the estimator's
# asymptotic variance), used for reported standard errors.
BASELINE_ARE = {"loglog": 0.592, "hll": 0.925, "mincount": 1.00}

MINCOUNT_K = 3


def _leading_zeros64(w: np.ndarray) -> np.ndarray:
    """Exact count of leading zero bits of uint64 values (64 for zero)."""
    w = np.asarray(w, dtype=np.uint64)
    zero = w == 0
    n = np.zeros(w.shape, dtype=np.int64)
    shift = 32
    while shift:
        mask = w < (np.uint64(1) << np.uint64(64 - shift))
        n[mask] += shift
        w = np.where(mask, w << np.uint64(shift), w)
        shift //= 2
    n[zero] = 64
    return n


class _BucketSketch:
    def __init__(self, m: int, seed: int = 0):
        if m < 2 or m & (m - 1):
            raise ValueError(f"m must be a power of two >= 2, got {m}")
        self.m = int(m)
        self.p = int(m).bit_length() - 1
        self.salt = int(seed)

    def _check_compatible(self, other) -> None:
        if type(self) is not type(other):
            raise IncompatibleSketchError(
                f"cannot merge {type(self).__name__} with {type(other).__name__}"
            )
        if (self.m, self.salt) != (other.m, other.salt):
            raise IncompatibleSketchError("sketch configurations differ")

    def _words(self, items) -> np.ndarray:
        keys = items if isinstance(items, np.ndarray) and items.dtype == np.uint64 \
            else np.array([hashing.item_key(it) for it in items], dtype=np.uint64)
        dig = hashing.digest_array(keys, self.salt)
        with np.errstate(over="ignore"):
            return hashing.mix64_array(dig + np.uint64(hashing._GAMMA))

    def add(self, item) -> None:
        self.add_batch([item])


class _RankSketch(_BucketSketch):
    """Shared register machinery for LogLog and HyperLogLog."""

    def __init__(self, m: int, seed: int = 0):
        super().__init__(m, seed)
        self.registers = np.zeros(m, dtype=np.uint8)
        self.max_rank = 64 - self.p + 1

    @classmethod
    def from_state(cls, m, seed, registers):
        sk = cls(m, seed)
        registers = np.asarray(registers, dtype=np.uint8)
        if registers.shape != (m,):
            raise ValueError("register state must have length m")
        sk.registers = registers.copy()
        return sk

    def add_batch(self, items) -> None:
        words = self._words(items)
        buckets = (words >> np.uint64(64 - self.p)).astype(np.int64)
        rest = words << np.uint64(self.p)
        rank = np.minimum(_leading_zeros64(rest) + 1, self.max_rank).astype(np.uint8)
        np.maximum.at(self.registers, buckets, rank)

    def merge(self, other):
        self._check_compatible(other)
        out = type(self)(self.m, self.salt)
        out.registers = np.maximum(self.registers, other.registers)
        return out

    def state_bytes(self) -> int:
        return self.registers.nbytes


def _loglog_alpha(m: int) -> float:
    return (math.gamma(-1.0 / m) * (1.0 - 2.0 ** (1.0 / m)) / math.log(2.0)) ** (-m)


class LogLogSketch(_RankSketch):
    """m first-1-bit-rank maxima; estimate from their arithmetic mean."""

    kind = "loglog"

    def estimate(self, level: float = 0.95) -> Estimate:
        if not self.registers.any():
            raise DegenerateSketchError("all registers empty")
        c_hat = _loglog_alpha(self.m) * self.m * 2.0 ** float(self.registers.mean())
        se = c_hat / math.sqrt(BASELINE_ARE["loglog"] * self.m)
        return Estimate(c_hat, se, normal_interval(c_hat, se, level),
                        level, "loglog", self.m)


def _hll_alpha(m: int) -> float:
    if m <= 16:
        return 0.673
    if m <= 32:
        return 0.697
    if m <= 64:
        return 0.709
    return 0.7213 / (1.0 + 1.079 / m)


class HyperLogLogSketch(_RankSketch):
    """Harmonic-mean estimator over the rank maxima, with the published
    bias constant and small-range (linear counting) correction."""

    kind = "hll"

    def estimate(self, level: float = 0.95) -> Estimate:
        if not self.registers.any():
            raise DegenerateSketchError("all registers empty")
        m = self.m
        raw = _hll_alpha(m) * m * m / float((2.0 ** -self.registers.astype(np.float64)).sum())
        zeros = int((self.registers == 0).sum())
        c_hat = m * math.log(m / zeros) if raw <= 2.5 * m and zeros else raw
        se = c_hat / math.sqrt(BASELINE_ARE["hll"] * m)
        return Estimate(c_hat, se, normal_interval(c_hat, se, level),
                        level, "hll", m)


class MinCountSketch(_BucketSketch):
    """Keeps the three smallest post-bucket uniforms per bucket; estimates
    each bucket's load by the unbiased (k-1)/M rule on the third minimum
    and sums the buckets."""

    kind = "mincount"

    def __init__(self, m: int, seed: int = 0):
        super().__init__(m, seed)
        self.smallest = np.full((m, MINCOUNT_K), np.inf)

    @classmethod
    def from_state(cls, m, seed, smallest):
        sk = cls(m, seed)
        smallest = np.asarray(smallest, dtype=np.float64)
        if smallest.shape != (m, MINCOUNT_K):
            raise ValueError(f"mincount state must be (m, {MINCOUNT_K})")
        sk.smallest = smallest.copy()
        return sk

    def add_batch(self, items) -> None:
        words = self._words(items)
        buckets = (words >> np.uint64(64 - self.p)).astype(np.int64)
        values = ((words << np.uint64(self.p)) >> np.uint64(11)).astype(np.float64)
        values = (values + 0.5) * 2.0**-53
        order = np.lexsort((values, buckets))
        buckets, values = buckets[order], values[order]
        starts = np.flatnonzero(np.r_[True, buckets[1:] != buckets[:-1]])
        ends = np.r_[starts[1:], len(buckets)]
        for s, e in zip(starts, ends):
            self._insert_bucket(buckets[s], values[s:min(e, s + MINCOUNT_K)])

    def _insert_bucket(self, b: int, vals: np.ndarray) -> None:
        pool = np.unique(np.concatenate([self.smallest[b], vals]))[:MINCOUNT_K]
        self.smallest[b, :len(pool)] = pool
        self.smallest[b, len(pool):] = np.inf

    def merge(self, other: "MinCountSketch") -> "MinCountSketch":
        self._check_compatible(other)
        out = MinCountSketch(self.m, self.salt)
        out.smallest = self.smallest.copy()
        for b in range(self.m):
            vals = other.smallest[b]
            out._insert_bucket(b, vals[np.isfinite(vals)])
        return out

    def estimate(self, level: float = 0.95) -> Estimate:
        third = self.smallest[:, MINCOUNT_K - 1]
        if not np.all(np.isfinite(third)):
            raise InsufficientDataError(
                f"every bucket needs at least {MINCOUNT_K} items for the "
                f"{MINCOUNT_K}rd-order-statistic estimator"
            )
        c_hat = float(((MINCOUNT_K - 1) / third).sum())
        se = c_hat / math.sqrt(BASELINE_ARE["mincount"] * self.m)
        return Estimate(c_hat, se, normal_interval(c_hat, se, level),
                        level, "mincount", self.m)

    def state_bytes(self) -> int:
        # the stored sketch is one float (the third minimum) per bucket
        return self.m * 8
