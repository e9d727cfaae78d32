"""Maximal-term and k-th order-statistic sketches over m hash streams.

Each sketch keeps one monotone slot per hash stream: the running maximum of
that stream's hash variates over all distinct items seen.  Slots only grow,
so ingestion is duplicate-insensitive and order-invariant, merge is the
slot-wise maximum, and merge(sketch(A), sketch(B)) is bit-identical to a
single pass over A union B.

Sketches are single-writer.  To ingest concurrently, shard the stream, build
one sketch per shard and merge; estimation is read-only and safe to call
concurrently once writers have stopped.
"""

from __future__ import annotations

import math

import numpy as np

from . import hashing
from .errors import (
    DegenerateSketchError,
    EmptySketchError,
    EstimationNumericError,
    IncompatibleSketchError,
    InsufficientDataError,
    SaturatedSketchError,
    UnsupportedDeletionError,
)
from .estimate import Estimate, gamma_estimate, normal_interval
from .inference import psi_infinity

_LOG_HALF = math.log(0.5)

# Ingestion is chunked so the (rows x m) hash matrix stays small; the chunk
# size is fixed so batch results are reproducible.
_CHUNK_ELEMS = 1 << 22


def _batch_rows(m: int) -> int:
    return max(1, _CHUNK_ELEMS // m)


def _keys_array(items) -> np.ndarray:
    if isinstance(items, np.ndarray) and items.dtype == np.uint64:
        return items
    return np.array([hashing.item_key(it) for it in items], dtype=np.uint64)


def _check_quantity(d: int) -> None:
    if d <= 0:
        raise UnsupportedDeletionError(
            f"max sketches cannot delete; got quantity d={d}"
        )


class _MaxSketchBase:
    """Shared sizing, compatibility and ingestion plumbing."""

    kind: str

    def __init__(self, m: int, seed: int = 0):
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = int(m)
        self.salt = int(seed)

    def _params(self) -> tuple:
        return ()

    def _check_compatible(self, other) -> None:
        if type(self) is not type(other) or self.kind != other.kind:
            raise IncompatibleSketchError(
                f"cannot merge {type(self).__name__} with {type(other).__name__}"
            )
        if (self.m, self.salt, self._params()) != (other.m, other.salt, other._params()):
            raise IncompatibleSketchError(
                "sketch configurations differ (m, salt or distribution parameters)"
            )

    def add(self, item, d: int = 1) -> None:
        _check_quantity(d)
        self._absorb_keys(np.array([hashing.item_key(item)], dtype=np.uint64))

    def add_batch(self, items, d=None) -> None:
        """Ingest many items at once; quantities, if given, must all be positive."""
        if d is not None:
            dd = np.asarray(d)
            if np.any(dd <= 0):
                raise UnsupportedDeletionError("max sketches cannot delete")
        keys = _keys_array(items)
        rows = _batch_rows(self.m)
        for lo in range(0, len(keys), rows):
            self._absorb_keys(keys[lo:lo + rows])

    def _absorb_keys(self, keys: np.ndarray) -> None:
        raise NotImplementedError


class ContinuousMaxSketch(_MaxSketchBase):
    """Max sketch with continuous hashing ("uniform" or "exponential").

    Slots store log F(M_j) <= 0, the log-CDF of the running maximum, with
    -inf marking an empty stream.  For any continuous hashing distribution
    F(h(u)) is identically the underlying uniform u (probability integral
    transform), so the slot update is max with log u regardless of kind and
    uniform/exponential hashing produce bit-identical pivots by construction.
    A single float per stream, and the pivot sum -sum(slots) is exactly the
    merge-consistent sufficient statistic.
    """

    def __init__(self, m: int, seed: int = 0, kind: str = "uniform"):
        super().__init__(m, seed)
        if kind not in ("uniform", "exponential"):
            raise ValueError(f"continuous kind must be uniform or exponential, got {kind!r}")
        self.kind = kind
        self.slots = np.full(m, -np.inf)

    @classmethod
    def from_state(cls, m, seed, slots, kind="uniform"):
        sk = cls(m, seed, kind)
        slots = np.asarray(slots, dtype=np.float64)
        if slots.shape != (m,) or np.any(slots > 0.0):
            raise ValueError("continuous slots must be m log-CDF values <= 0")
        sk.slots = slots.copy()
        return sk

    def _absorb_keys(self, keys: np.ndarray) -> None:
        u = hashing.uniform_block(keys, self.salt, 0, self.m)
        np.maximum(self.slots, np.log(u).max(axis=0), out=self.slots)

    def max_values(self) -> np.ndarray:
        """Running maxima in the hash domain (uniform: M_j, exponential: -log(1-M_j))."""
        if self.kind == "uniform":
            return np.exp(self.slots)
        return -np.log1p(-np.exp(self.slots))

    def merge(self, other: "ContinuousMaxSketch") -> "ContinuousMaxSketch":
        self._check_compatible(other)
        out = ContinuousMaxSketch(self.m, self.salt, self.kind)
        out.slots = np.maximum(self.slots, other.slots)
        return out

    def pivot_sum(self) -> float:
        """S = -sum_j log F(M_j); c*S is a Gamma(m,1) pivot."""
        if np.any(np.isneginf(self.slots)):
            raise EmptySketchError("some hash streams saw no items")
        return float(-self.slots.sum())

    def estimate(self, level: float = 0.95) -> Estimate:
        """MLE m/S with the exact Gamma-pivot confidence interval."""
        s = self.pivot_sum()
        if s <= 0.0:
            raise DegenerateSketchError("all slots at the distribution supremum")
        return gamma_estimate(s, self.m, level, f"max-{self.kind}")

    def state_bytes(self) -> int:
        return self.slots.nbytes


class GeometricMaxSketch(_MaxSketchBase):
    """Max sketch hashing to the geometric law with CDF 1 - q**x on x=1,2,...

    Slots are small unsigned integers (the expected maximum grows like
    log(c), so 32 bits cover any feasible cardinality); 0 marks empty.
    """

    kind = "geometric"

    def __init__(self, m: int, q: float, seed: int = 0):
        super().__init__(m, seed)
        if not 0.0 < q < 1.0:
            raise ValueError("q must lie strictly inside (0,1)")
        self.q = float(q)
        self.slots = np.zeros(m, dtype=np.uint32)

    @classmethod
    def from_state(cls, m, seed, slots, q):
        sk = cls(m, q, seed)
        slots = np.asarray(slots, dtype=np.uint32)
        if slots.shape != (m,):
            raise ValueError("geometric slots must be m unsigned integers")
        sk.slots = slots.copy()
        return sk

    def _params(self) -> tuple:
        return (self.q,)

    def _absorb_keys(self, keys: np.ndarray) -> None:
        u = hashing.uniform_block(keys, self.salt, 0, self.m)
        y = hashing.geometric_variate(u, self.q)
        np.maximum(self.slots, y.max(axis=0), out=self.slots)

    def merge(self, other: "GeometricMaxSketch") -> "GeometricMaxSketch":
        self._check_compatible(other)
        out = GeometricMaxSketch(self.m, self.q, self.salt)
        out.slots = np.maximum(self.slots, other.slots)
        return out

    def estimate(self, level: float = 0.95) -> Estimate:
        """Maximum-likelihood estimate via the score equation of the
        max-of-c-geometrics law, solved by damped Newton-Raphson."""
        if np.any(self.slots == 0):
            raise EmptySketchError("some hash streams saw no items")
        c_hat, c0 = solve_geometric_mle(self.slots, self.q)
        se = c_hat / math.sqrt(self.m * psi_infinity(self.q))
        return Estimate(
            c_hat=c_hat,
            std_error=se,
            ci=normal_interval(c_hat, se, level),
            level=level,
            estimator="max-geometric",
            m=self.m,
        )

    def recursive_estimate(self, continuity_correction: bool = False) -> float:
        """Exponential-approximation estimator -m / log prod(1 - q**Y_j).

        The statistic is a function of the slot-wise maxima alone, so it is
        consistent under merge and recomputable by summation; accurate for
        q near 1.  Because the slots are integer ceilings of the underlying
        continuous variable, the raw statistic overestimates by a factor of
        about 1 + log(1/q)/2 (4.8% at q=10/11); continuity_correction
        evaluates the statistic at Y_j - 1/2, which cancels that bias while
        remaining a function of the merged state.
        """
        if np.any(self.slots == 0):
            raise EmptySketchError("some hash streams saw no items")
        y = self.slots.astype(np.float64)
        if continuity_correction:
            y = y - 0.5
        log_s = _log1m_qpow(y, self.q).sum()
        return float(-self.m / log_s)

    def state_bytes(self) -> int:
        return self.slots.nbytes


def _log1m_qpow(y: np.ndarray, q: float) -> np.ndarray:
    """log(1 - q**y) evaluated stably for large y."""
    return np.log1p(-np.exp(y * math.log(q)))


def geometric_score(y: np.ndarray, counts: np.ndarray, q: float, c: float):
    """Score and its derivative for the max-of-c-geometrics likelihood.

    Each slot value y contributes
        (a*A**c - b*B**c) / (A**c - B**c),  A = 1-q**y, B = 1-q**(y-1),
        a = log A, b = log B,
    which is evaluated as (a - b*e**d) / (-expm1(d)) with d = c*(b-a) <= 0,
    so terms where A**c or B**c underflow stay finite.  y = 1 contributes
    the constant log(1-q).
    """
    logq = math.log(q)
    a = np.log1p(-np.exp(y * logq))
    score = np.where(y == 1, math.log1p(-q), 0.0)
    dscore = np.zeros_like(a)
    mask = y > 1
    if np.any(mask):
        b = np.log1p(-np.exp((y[mask] - 1) * logq))
        d = c * (b - a[mask])
        ed = np.exp(d)
        em1 = np.expm1(d)
        score[mask] = (a[mask] - b * ed) / -em1
        dscore[mask] = -((a[mask] - b) ** 2) * ed / (em1 * em1)
    return float((score * counts).sum()), float((dscore * counts).sum())


def solve_geometric_mle(slots: np.ndarray, q: float, tol: float = 1e-9,
                        max_iter: int = 50) -> tuple[float, float]:
    """Newton-Raphson on the geometric score equation.

    Starts from the consistent estimator log(r/m)/log(1-q**n) with
    n = floor(log_q(1/2)) and r = #{y_j <= n}; when r is 0 or m that
    initializer is undefined and the exponential-approximation estimator
    seeds the iteration instead.  Returns (root, initializer).
    """
    m = len(slots)
    y, counts = np.unique(slots, return_counts=True)
    y = y.astype(np.float64)
    counts = counts.astype(np.float64)

    n = math.floor(_LOG_HALF / math.log(q))
    r = float(counts[y <= n].sum())
    if r in (0.0, float(m)):
        c0 = -m / float((_log1m_qpow(y, q) * counts).sum())
    else:
        c0 = math.log(r / m) / math.log1p(-(q ** n))
    c0 = max(c0, 1e-12)

    if y.max() == 1.0:
        # score is the constant m*log(1-q): no interior root, the likelihood
        # is maximised at the small-c boundary; report the exponential-
        # approximation value
        return -1.0 / math.log1p(-q), c0

    c = c0
    for _ in range(max_iter):
        s, ds = geometric_score(y, counts, q, c)
        if ds == 0.0:
            break
        step = s / ds
        nxt = c - step
        while nxt <= 0.0:
            step *= 0.5
            nxt = c - step
        if abs(nxt - c) < tol * max(c, 1.0):
            return float(nxt), float(c0)
        c = nxt
    raise EstimationNumericError(
        f"geometric MLE did not converge within {max_iter} iterations", initial=c0
    )


class KthOrderSketch(_MaxSketchBase):
    """Keeps the k largest distinct uniform hash values per stream.

    Rows are stored descending with NaN padding; bit-exact duplicate hash
    values are kept once (set semantics), so repeated items never change
    the state.
    """

    kind = "kth"

    def __init__(self, m: int, k: int, seed: int = 0):
        super().__init__(m, seed)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = int(k)
        self.topk = np.full((m, k), np.nan)

    @classmethod
    def from_state(cls, m, seed, topk, k):
        sk = cls(m, k, seed)
        topk = np.asarray(topk, dtype=np.float64)
        if topk.shape != (m, k):
            raise ValueError("top-k state must be an (m, k) matrix")
        sk.topk = topk.copy()
        return sk

    def _params(self) -> tuple:
        return (self.k,)

    def _absorb_keys(self, keys: np.ndarray) -> None:
        u = hashing.uniform_block(keys, self.salt, 0, self.m)
        for j in range(self.m):
            self._insert_column(j, u[:, j])

    def _insert_column(self, j: int, values: np.ndarray) -> None:
        cur = self.topk[j]
        pool = np.concatenate([cur[~np.isnan(cur)], values])
        best = np.unique(pool)[::-1][: self.k]
        self.topk[j, : len(best)] = best
        self.topk[j, len(best):] = np.nan

    def merge(self, other: "KthOrderSketch") -> "KthOrderSketch":
        self._check_compatible(other)
        out = KthOrderSketch(self.m, self.k, self.salt)
        out.topk = self.topk.copy()
        for j in range(self.m):
            row = other.topk[j]
            out._insert_column(j, row[~np.isnan(row)])
        return out

    def kth_values(self) -> np.ndarray:
        """The k-th largest value per stream; errors if any stream has fewer."""
        y = self.topk[:, self.k - 1]
        if np.any(np.isnan(y)):
            raise InsufficientDataError(
                f"some streams hold fewer than k={self.k} values (cardinality < k?)"
            )
        return y

    def estimate(self, level: float = 0.95) -> Estimate:
        c_hat = kth_root_estimate(self.kth_values(), self.k)
        se = c_hat / math.sqrt(self.k * self.m)
        return Estimate(
            c_hat=c_hat,
            std_error=se,
            ci=normal_interval(c_hat, se, level),
            level=level,
            estimator="max-kth",
            m=self.m,
        )

    def state_bytes(self) -> int:
        return self.topk.nbytes


def kth_closed_form(y: np.ndarray, k: int) -> float:
    """Large-c starting point k / (1 - prod(y_j)**(1/m))."""
    log_prod = float(np.log(y).sum())
    return k / -math.expm1(log_prod / len(y))


def kth_root_estimate(y: np.ndarray, k: int, tol: float = 1e-12,
                      max_iter: int = 100) -> float:
    """Unique root c > k-1 of  sum_j log y_j + m * sum_{i=1..k} 1/(c-i+1) = 0.

    The left side is strictly decreasing in c, from +inf at c -> (k-1)+ to
    the negative value sum log y_j; Newton from the closed-form start (which
    always exceeds k) converges monotonically in practice and is damped
    against overshooting the pole.
    """
    y = np.asarray(y, dtype=np.float64)
    m = len(y)
    log_prod = float(np.log(y).sum())
    offsets = np.arange(k, dtype=np.float64) - (k - 1)  # c-i+1 = c + offsets
    c = kth_closed_form(y, k)
    for _ in range(max_iter):
        denom = c + offsets
        f = log_prod + m * float((1.0 / denom).sum())
        df = -m * float((1.0 / denom**2).sum())
        step = f / df
        nxt = c - step
        while nxt <= k - 1:
            step *= 0.5
            nxt = c - step
        if abs(nxt - c) < tol * max(c, 1.0):
            return float(nxt)
        c = nxt
    raise EstimationNumericError("k-th order-statistic root search did not converge",
                                 initial=kth_closed_form(y, k))


def combine_kth(c1: float, m1: int, c2: float, m2: int, k: int) -> float:
    """Pool two k-th order-statistic estimates of the same cardinality.

    Returns k / (1 - [(1-k/c1)**m1 * (1-k/c2)**m2]**(1/(m1+m2))), the
    large-c approximation to re-solving the score equation on the combined
    sample of m1+m2 streams.  A sample with m_i = 0 is ignored, so pooling
    with an empty side returns the other estimate unchanged.
    """
    if m1 < 0 or m2 < 0 or m1 + m2 < 1:
        raise ValueError("need m1, m2 >= 0 with m1 + m2 >= 1")
    log_terms = 0.0
    for c_i, m_i in ((c1, m1), (c2, m2)):
        if m_i == 0:
            continue
        if c_i <= k:
            raise ValueError(f"estimates must exceed k={k}, got {c_i}")
        log_terms += m_i * math.log1p(-k / c_i)
    return k / -math.expm1(log_terms / (m1 + m2))


class BernoulliSketch(_MaxSketchBase):
    """m-bit sketch: bit j is set once any item's j-th uniform falls below p.

    Choose p about 1.594/c0 for a prior guess c0 of the cardinality; the
    estimator stays within 25% relative efficiency of continuous hashing
    for true c anywhere in (0.3*c0, 4.3*c0).
    """

    kind = "bernoulli"

    def __init__(self, m: int, p: float, seed: int = 0):
        super().__init__(m, seed)
        if not 0.0 < p < 1.0:
            raise ValueError("p must lie strictly inside (0,1)")
        self.p = float(p)
        self.bits = np.zeros(m, dtype=np.uint8)

    @classmethod
    def from_state(cls, m, seed, bits, p):
        sk = cls(m, p, seed)
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (m,) or np.any(bits > 1):
            raise ValueError("bernoulli state must be m bits")
        sk.bits = bits.copy()
        return sk

    def _params(self) -> tuple:
        return (self.p,)

    def _absorb_keys(self, keys: np.ndarray) -> None:
        u = hashing.uniform_block(keys, self.salt, 0, self.m)
        np.maximum(self.bits, (u < self.p).any(axis=0).astype(np.uint8), out=self.bits)

    def merge(self, other: "BernoulliSketch") -> "BernoulliSketch":
        self._check_compatible(other)
        out = BernoulliSketch(self.m, self.p, self.salt)
        out.bits = np.maximum(self.bits, other.bits)
        return out

    def ones(self) -> int:
        return int(self.bits.sum())

    def estimate(self, level: float = 0.95) -> Estimate:
        return bernoulli_estimate(self.ones(), self.m, self.p, level)

    def state_bytes(self) -> int:
        return (self.m + 7) // 8


def bernoulli_fisher_info(c: float, m: int, p: float) -> float:
    """Fisher information m * q**c * log(q)**2 / (1 - q**c), q = 1-p."""
    logq = math.log1p(-p)
    qc = math.exp(c * logq)
    return m * qc * logq * logq / (1.0 - qc)


def bernoulli_estimate(ones: int, m: int, p: float, level: float = 0.95) -> Estimate:
    """MLE log(1 - ones/m)/log(1-p) with Fisher-information standard error.

    ones == 0 returns the boundary estimate 0 with a one-sided upper bound;
    ones == m raises SaturatedSketchError carrying the exact one-sided lower
    confidence bound (the MLE is infinite).
    """
    if not 0 <= ones <= m:
        raise ValueError(f"ones must lie in [0, m], got {ones}")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0,1)")
    logq = math.log1p(-p)
    if ones == m:
        # smallest c with P(all bits set | c) >= 1-level
        lower = math.log(-math.expm1(math.log1p(-level) / m)) / logq
        raise SaturatedSketchError(
            "all bits set; cardinality unbounded above at this p",
            lower_bound=lower, level=level,
        )
    if ones == 0:
        # largest c with P(no bit set | c) >= 1-level
        upper = math.log1p(-level) / (m * logq)
        return Estimate(0.0, 0.0, (0.0, upper), level, "bernoulli", m)
    c_hat = math.log1p(-ones / m) / logq
    se = 1.0 / math.sqrt(bernoulli_fisher_info(c_hat, m, p))
    return Estimate(c_hat, se, normal_interval(c_hat, se, level), level, "bernoulli", m)


def merge(*sketches):
    """Fold any number of same-configuration sketches into one."""
    if not sketches:
        raise ValueError("nothing to merge")
    out = sketches[0]
    for other in sketches[1:]:
        out = out.merge(other)
    return out
