"""Seeded hashing: an item identity deterministically selects a reproducible
stream of pseudo-random variates with a chosen marginal distribution.

The item's bytes are folded to a 64-bit key (FNV-1a), avalanched together
with a global salt (splitmix64 finalizer), and the j-th variate of the item
is the finalizer applied at counter j.  This is order-invariant, needs no
per-item state, and is bit-identical across runs, platforms and the
scalar/vectorized code paths.

Do NOT use Python's built-in hash(): it is salted per process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15  # splitmix64 counter increment
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_SALT_TAG = 0x6C62272E07BB0142  # folded into the salt so salt=0 still avalanches

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_U_GAMMA = np.uint64(_GAMMA)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)

KINDS = ("uniform", "exponential", "geometric", "bernoulli", "stable")


def mix64(z: int) -> int:
    """splitmix64 finalizer: bijective 64-bit avalanche."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized mix64 on uint64 arrays; wraps modulo 2**64 like the scalar path."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _U_MIX1
        z = (z ^ (z >> np.uint64(27))) * _U_MIX2
        return z ^ (z >> np.uint64(31))


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def item_key(item) -> int:
    """Canonical 64-bit key for an item identifier.

    Integers are taken as keys directly (synthetic streams); str/bytes are
    FNV-1a folded.  Keys are avalanched with the salt before use, so raw
    integer structure is harmless.
    """
    if isinstance(item, (int, np.integer)):
        return int(item) & _MASK64
    if isinstance(item, str):
        item = item.encode("utf-8")
    if not isinstance(item, (bytes, bytearray)):
        raise TypeError(f"item must be int, str or bytes, got {type(item).__name__}")
    return fnv1a64(bytes(item))


@dataclass(frozen=True)
class HashConfig:
    """Number of hash streams, global salt and the marginal distribution.

    kind is one of "uniform", "exponential", "geometric" (parameter q),
    "bernoulli" (parameter p) or "stable" (parameter alpha).
    """

    m: int
    salt: int = 0
    kind: str = "uniform"
    q: float | None = None
    p: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "geometric" and not (self.q is not None and 0.0 < self.q < 1.0):
            raise ValueError("geometric hashing needs q strictly inside (0,1)")
        if self.kind == "bernoulli" and not (self.p is not None and 0.0 < self.p < 1.0):
            raise ValueError("bernoulli hashing needs p strictly inside (0,1)")
        if self.kind == "stable" and not (self.alpha is not None and 0.0 < self.alpha < 1.0):
            raise ValueError("stable hashing needs alpha strictly inside (0,1)")


def salt_base(salt: int) -> int:
    return mix64(salt ^ _SALT_TAG)


def digest(key: int, salt: int) -> int:
    """Per-item digest; seeds the counter-based variate stream."""
    return mix64((key ^ salt_base(salt)) & _MASK64)


def digest_array(keys: np.ndarray, salt: int) -> np.ndarray:
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    return mix64_array(keys ^ np.uint64(salt_base(salt)))


def _unit_scalar(word: int) -> float:
    # 53-bit mantissa, offset by half a step: strictly inside (0,1)
    return ((word >> 11) + 0.5) * 2.0**-53


def _unit_array(words: np.ndarray) -> np.ndarray:
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def raw_word(key: int, counter: int, salt: int) -> int:
    return mix64((digest(key, salt) + (counter + 1) * _GAMMA) & _MASK64)


def uniform_at(key: int, counter: int, salt: int) -> float:
    """Uniform(0,1) variate at a counter position; never exactly 0 or 1."""
    return _unit_scalar(raw_word(key, counter, salt))


def uniform_block(keys: np.ndarray, salt: int, counter_lo: int, counter_hi: int) -> np.ndarray:
    """(len(keys), counter_hi-counter_lo) matrix of uniforms, bit-identical
    to the scalar path element by element."""
    dig = digest_array(keys, salt)
    counters = np.arange(counter_lo + 1, counter_hi + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        words = mix64_array(dig[:, None] + counters[None, :] * _U_GAMMA)
    return _unit_array(words)


def uniform_stream(item, j: int, cfg: HashConfig) -> float:
    """j-th pseudo-uniform variate of an item under the given configuration."""
    if not 0 <= j < cfg.m:
        raise IndexError(f"stream index {j} out of range for m={cfg.m}")
    return uniform_at(item_key(item), j, cfg.salt)


# --- inverse-CDF transforms --------------------------------------------

def _check_unit(u) -> None:
    arr = np.asarray(u)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("u must lie strictly inside (0,1)")


def exponential_variate(u):
    """Exponential(mean 1) via -log(1-u)."""
    _check_unit(u)
    if np.isscalar(u):
        return -math.log1p(-u)
    return -np.log1p(-u)


def geometric_variate(u, q):
    """Smallest integer x >= 1 with 1-q**x >= u, i.e. ceil(log(1-u)/log(q))."""
    _check_unit(u)
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly inside (0,1)")
    if np.isscalar(u):
        return max(1, math.ceil(math.log1p(-u) / math.log(q)))
    x = np.ceil(np.log1p(-np.asarray(u)) / math.log(q))
    return np.maximum(x, 1.0).astype(np.uint32)


def bernoulli_variate(u, p):
    """Indicator of u < p."""
    _check_unit(u)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0,1)")
    if np.isscalar(u):
        return int(u < p)
    return (np.asarray(u) < p).astype(np.uint8)


def stable_log_variate(u, w, alpha):
    """log of a positive strictly stable variate with Laplace transform
    exp(-lambda**alpha), from one uniform u and one Exponential(1) w.

    Kanter's construction,
        X = sin(alpha*pi*u) * sin(pi*u)**(-1/alpha)
            * (sin((1-alpha)*pi*u) / w)**((1-alpha)/alpha),
    evaluated and returned entirely in log space: for small alpha the
    magnitudes reach exp(+-hundreds), far outside float64 range.
    """
    _check_unit(u)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0,1)")
    # both paths keep the identical operation order so results are bit-equal
    if np.isscalar(u) and np.isscalar(w):
        if w <= 0.0:
            raise ValueError("w must be positive")
        pu = math.pi * u
        return (
            math.log(math.sin(alpha * pu))
            - math.log(math.sin(pu)) / alpha
            + (1.0 - alpha) / alpha
            * (math.log(math.sin((1.0 - alpha) * pu)) - math.log(w))
        )
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not np.all(w > 0.0):
        raise ValueError("w must be positive")
    pu = np.pi * u
    return (
        np.log(np.sin(alpha * pu))
        - np.log(np.sin(pu)) / alpha
        + (1.0 - alpha) / alpha * (np.log(np.sin((1.0 - alpha) * pu)) - np.log(w))
    )


def stable_log_at(key: int, j: int, salt: int, alpha: float) -> float:
    """log X for hash stream j; consumes the uniform pair at counters (2j, 2j+1)."""
    u = uniform_at(key, 2 * j, salt)
    w = -math.log1p(-uniform_at(key, 2 * j + 1, salt))
    return stable_log_variate(u, w, alpha)


def stable_log_block(keys: np.ndarray, salt: int, m: int, alpha: float) -> np.ndarray:
    """(len(keys), m) matrix of log X variates; column j uses counters (2j, 2j+1)."""
    dig = digest_array(keys, salt)
    even = np.arange(1, 2 * m + 1, 2, dtype=np.uint64)
    odd = np.arange(2, 2 * m + 2, 2, dtype=np.uint64)
    with np.errstate(over="ignore"):
        u = _unit_array(mix64_array(dig[:, None] + even[None, :] * _U_GAMMA))
        w = -np.log1p(-_unit_array(mix64_array(dig[:, None] + odd[None, :] * _U_GAMMA)))
    return stable_log_variate(u, w, alpha)


def variate(item, j: int, cfg: HashConfig):
    """Dispatch on cfg.kind; stable returns the log-space value."""
    u = uniform_stream(item, j, cfg)
    if cfg.kind == "uniform":
        return u
    if cfg.kind == "exponential":
        return exponential_variate(u)
    if cfg.kind == "geometric":
        return geometric_variate(u, cfg.q)
    if cfg.kind == "bernoulli":
        return bernoulli_variate(u, cfg.p)
    return stable_log_at(item_key(item), j, cfg.salt, cfg.alpha)
