"""Functions on the discrete cube {-1, 1}^n with the uniform measure.

A point of the cube is an integer index in [0, 2^n): bit (i - 1) set means
x_i = +1, bit clear means x_i = -1.  Coordinates are numbered from 1.

Boolean tables are stored bit-packed in little-endian uint64 words; real
tables are dense float64 arrays.  Converting one into the other is always an
explicit call (``BooleanFunction.to_real``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError, ParseError, PreconditionError

MAX_DIM = 24

# bit positions j with bit b of j clear, for in-word swaps of the b-th coordinate
_SWAP_MASKS = tuple(
    np.uint64(sum(1 << j for j in range(64) if not (j >> b) & 1)) for b in range(6)
)


def check_dim(n: int) -> int:
    if not 1 <= n <= MAX_DIM:
        if n > MAX_DIM:
            raise CapacityError(f"dimension n={n} exceeds the dense cap {MAX_DIM}")
        raise ParameterError(f"dimension must be >= 1, got {n}")
    return n


def _check_coord(i: int, n: int) -> int:
    if not 1 <= i <= n:
        raise IndexError(f"coordinate {i} outside 1..{n}")
    return i


def _dim_of_length(length: int) -> int:
    n = length.bit_length() - 1
    if length < 2 or 1 << n != length:
        raise PreconditionError(f"table length {length} is not a power of two >= 2")
    return check_dim(n)


def flip(x: int, i: int, n: int | None = None) -> int:
    """Index of the point obtained from ``x`` by flipping coordinate ``i``."""
    if i < 1 or (n is not None and i > n):
        raise IndexError(f"coordinate {i} out of range")
    return x ^ (1 << (i - 1))


def point_coords(x: int, n: int) -> tuple[int, ...]:
    return tuple(1 if (x >> k) & 1 else -1 for k in range(n))


def coordinate_signs(n: int) -> np.ndarray:
    """(2^n, n) int8 array whose row x holds the +-1 coordinates of point x."""
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def fsum_mean(values: np.ndarray) -> float:
    """Mean of a flat array.

    Large tables (2^20 entries and up) are reduced blockwise with numpy's
    pairwise sum and the block sums combined with ``math.fsum``.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size >= 1 << 20:
        blocks = values.reshape(1024, -1).sum(axis=1)
        return math.fsum(blocks) / values.size
    return float(values.sum()) / values.size


def _swap_axis(values: np.ndarray, i: int) -> np.ndarray:
    """Return ``values[x ^ bit(i)]`` along the last axis of a table array."""
    s = 1 << (i - 1)
    lead = values.shape[:-1]
    v = values.reshape(*lead, -1, 2, s)
    return v[..., ::-1, :].reshape(values.shape)


class RealCubeFunction:
    """Real-valued function on the cube, stored as a read-only table."""

    __slots__ = ("n", "values")

    def __init__(self, values, n: int | None = None):
        arr = np.array(values, dtype=np.float64).ravel()
        dim = _dim_of_length(arr.size)
        if n is not None and n != dim:
            raise PreconditionError(f"table of length {arr.size} does not match n={n}")
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("table contains non-finite values")
        arr.flags.writeable = False
        self.n = dim
        self.values = arr

    @classmethod
    def from_callable(cls, fn, n: int) -> RealCubeFunction:
        check_dim(n)
        return cls([fn(point_coords(x, n)) for x in range(1 << n)])

    @classmethod
    def constant(cls, c: float, n: int) -> RealCubeFunction:
        return cls(np.full(1 << check_dim(n), float(c)))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RealCubeFunction):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    def __repr__(self) -> str:
        return f"RealCubeFunction(n={self.n})"

    def __add__(self, other: RealCubeFunction) -> RealCubeFunction:
        return RealCubeFunction(self.values + other.values)

    def __sub__(self, other: RealCubeFunction) -> RealCubeFunction:
        return RealCubeFunction(self.values - other.values)

    def __mul__(self, c: float) -> RealCubeFunction:
        return RealCubeFunction(self.values * float(c))

    __rmul__ = __mul__

    def permute(self, perm) -> RealCubeFunction:
        """Relabel coordinates: new coordinate ``perm[k]`` takes old coordinate k+1.

        ``perm`` is a sequence of 1-based targets, one per coordinate.
        """
        src = _permuted_indices(self.n, perm)
        return RealCubeFunction(self.values[src])


def _permuted_indices(n: int, perm) -> np.ndarray:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(1, n + 1)):
        raise PreconditionError(f"{perm} is not a permutation of 1..{n}")
    idx = np.arange(1 << n)
    src = np.zeros_like(idx)
    for k, target in enumerate(perm):
        src |= ((idx >> (target - 1)) & 1) << k
    return src


class BooleanFunction:
    """{0, 1}-valued function on the cube, bit-packed into uint64 words."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray):
        check_dim(n)
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.size != max(1, (1 << n) // 64):
            raise PreconditionError(f"{words.size} words do not hold a table for n={n}")
        if n < 6 and int(words[0]) >> (1 << n):
            raise PreconditionError("bits set beyond the table length")
        words.flags.writeable = False
        self.n = n
        self.words = words

    @classmethod
    def from_bits(cls, bits) -> BooleanFunction:
        arr = np.asarray(bits).ravel()
        n = _dim_of_length(arr.size)
        if not np.all((arr == 0) | (arr == 1)):
            raise PreconditionError("Boolean table values must lie in {0, 1}")
        packed = np.packbits(arr.astype(np.uint8), bitorder="little")
        if packed.size < 8:
            packed = np.concatenate([packed, np.zeros(8 - packed.size, np.uint8)])
        return cls(n, packed.view("<u8").astype(np.uint64))

    @classmethod
    def from_string(cls, table: str) -> BooleanFunction:
        table = table.strip()
        if set(table) - {"0", "1"}:
            raise PreconditionError("table string must contain only 0 and 1")
        return cls.from_bits(np.frombuffer(table.encode(), np.uint8) - ord("0"))

    @classmethod
    def from_callable(cls, fn, n: int) -> BooleanFunction:
        check_dim(n)
        return cls.from_bits([int(bool(fn(point_coords(x, n)))) for x in range(1 << n)])

    def bits(self) -> np.ndarray:
        """Unpacked table as a uint8 array of length 2^n."""
        raw = np.unpackbits(self.words.astype("<u8").view(np.uint8), bitorder="little")
        return raw[: 1 << self.n]

    def to_real(self) -> RealCubeFunction:
        return RealCubeFunction(self.bits().astype(np.float64))

    def to_string(self) -> str:
        return (self.bits() + ord("0")).tobytes().decode()

    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def mean(self) -> float:
        return self.weight() / (1 << self.n)

    def is_constant(self) -> bool:
        w = self.weight()
        return w == 0 or w == 1 << self.n

    def permute(self, perm) -> BooleanFunction:
        return BooleanFunction.from_bits(self.bits()[_permuted_indices(self.n, perm)])

    def __len__(self) -> int:
        return 1 << self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, BooleanFunction):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __repr__(self) -> str:
        if self.n <= 6:
            return f"BooleanFunction(n={self.n}, table={self.to_string()!r})"
        return f"BooleanFunction(n={self.n}, weight={self.weight()})"


def flipped_words(words: np.ndarray, i: int) -> np.ndarray:
    """Packed table of ``x -> f(tau_i x)`` given the packed table of ``f``."""
    b = i - 1
    if b >= 6:
        return _swap_axis(words, b - 5)
    sh = np.uint64(1 << b)
    m = _SWAP_MASKS[b]
    return ((words & m) << sh) | ((words >> sh) & m)


def _popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


# ---------------------------------------------------------------------------
# derivatives, norms, variance


def discrete_derivative(f: RealCubeFunction, i: int) -> RealCubeFunction:
    """``D_i f(x) = f(tau_i x) - f(x)``."""
    if not isinstance(f, RealCubeFunction):
        raise TypeError("discrete_derivative expects a RealCubeFunction; use .to_real()")
    _check_coord(i, f.n)
    return RealCubeFunction(_swap_axis(f.values, i) - f.values)


def second_derivative(f: RealCubeFunction, i: int, j: int) -> RealCubeFunction:
    """``D_ij f = D_i(D_j f)``; equals ``-2 D_i f`` on the diagonal."""
    return discrete_derivative(discrete_derivative(f, j), i)


def derivative_stack(values: np.ndarray, n: int) -> np.ndarray:
    """All first derivatives of a table at once: shape (n, 2^n)."""
    return np.stack([_swap_axis(values, i) - values for i in range(1, n + 1)])


def lp_norm(g, p: float) -> float:
    if not p >= 1:
        raise ParameterError(f"L^p norm needs p >= 1, got {p}")
    v = g.values if isinstance(g, RealCubeFunction) else np.asarray(g, dtype=np.float64)
    a = np.abs(v)
    if p == 1:
        return fsum_mean(a)
    if p == 2:
        return math.sqrt(fsum_mean(a * a))
    # factor out the maximum so a**p does not underflow for large p
    top = float(a.max()) if a.size else 0.0
    if top == 0.0:
        return 0.0
    return top * fsum_mean((a / top) ** p) ** (1.0 / p)


def mean(f) -> float:
    if isinstance(f, BooleanFunction):
        return f.mean()
    return fsum_mean(f.values)


def variance(f) -> float:
    if isinstance(f, BooleanFunction):
        m = f.mean()
        return m * (1.0 - m)
    c = f.values - fsum_mean(f.values)
    return fsum_mean(c * c)


# ---------------------------------------------------------------------------
# influences of Boolean functions


def influence_count(f: BooleanFunction, i: int) -> int:
    """Number of points x with f(x) != f(tau_i x)."""
    _check_coord(i, f.n)
    return _popcount(f.words ^ flipped_words(f.words, i))


def influence(f: BooleanFunction, i: int) -> float:
    return influence_count(f, i) / (1 << f.n)


def _pair_counts(f: BooleanFunction, i: int, j: int) -> tuple[int, int]:
    """Counts of points where |D_ij f| equals 1 and 2 (i != j)."""
    a = f.words
    b = flipped_words(a, i)
    c = flipped_words(a, j)
    d = flipped_words(b, j)
    ones = a ^ b ^ c ^ d
    twos = ~(a ^ d) & ~(b ^ c) & (a ^ b)
    return _popcount(ones), _popcount(twos)


def second_derivative_l1_count(f: BooleanFunction, i: int, j: int) -> int:
    """``2^n * ||D_ij f||_1`` as an exact integer."""
    _check_coord(i, f.n)
    _check_coord(j, f.n)
    if i == j:
        return 2 * influence_count(f, i)
    ones, twos = _pair_counts(f, i, j)
    return ones + 2 * twos


def pair_influence(f: BooleanFunction, i: int, j: int) -> float:
    """``I_(i,j)(f) = ||D_ij f||_1 / 2``; equals ``I_i(f)`` when i == j."""
    return second_derivative_l1_count(f, i, j) / (2 << f.n)


@dataclass(frozen=True)
class InfluenceProfile:
    n: int
    first: np.ndarray
    pair: np.ndarray

    def max_first(self) -> float:
        return float(self.first.max())

    def max_offdiagonal(self) -> float:
        if self.n < 2:
            return 0.0
        off = self.pair[~np.eye(self.n, dtype=bool)]
        return float(off.max())

    def as_dict(self) -> dict:
        return {"n": self.n, "first": self.first.tolist(), "pair": self.pair.tolist()}


def influence_profile(f: BooleanFunction) -> InfluenceProfile:
    n = f.n
    first = np.array([influence(f, i) for i in range(1, n + 1)])
    pair = np.diag(first)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            pair[i - 1, j - 1] = pair[j - 1, i - 1] = pair_influence(f, i, j)
    first.flags.writeable = False
    pair.flags.writeable = False
    return InfluenceProfile(n, first, pair)


# ---------------------------------------------------------------------------
# text formats


def _parse_header(line: str, lineno: int) -> int:
    s = line.strip()
    if not s.startswith("n="):
        raise ParseError("expected header 'n=<k>'", lineno, 1)
    try:
        n = int(s[2:])
    except ValueError:
        raise ParseError(f"bad dimension {s[2:]!r}", lineno, 3) from None
    return check_dim(n)


def _content_lines(text: str) -> list[tuple[int, str]]:
    return [(k + 1, ln) for k, ln in enumerate(text.splitlines()) if ln.strip()]


def parse_truth_table(text: str) -> BooleanFunction:
    lines = _content_lines(text)
    if not lines:
        raise ParseError("empty input", 1, 1)
    n = _parse_header(lines[0][1], lines[0][0])
    if len(lines) < 2:
        raise ParseError("missing table line", lines[0][0] + 1, 1)
    lineno, raw = lines[1]
    body = raw.strip()
    offset = raw.index(body[0]) if body else 0
    for col, ch in enumerate(body):
        if ch not in "01":
            raise ParseError(f"unexpected character {ch!r}", lineno, offset + col + 1)
    if len(body) != 1 << n:
        raise ParseError(f"expected {1 << n} table entries, found {len(body)}", lineno, 1)
    if len(lines) > 2:
        raise ParseError("trailing content after table", lines[2][0], 1)
    return BooleanFunction.from_string(body)


def format_truth_table(f: BooleanFunction) -> str:
    return f"n={f.n}\n{f.to_string()}\n"


def parse_real_table(text: str) -> RealCubeFunction:
    lines = _content_lines(text)
    if not lines:
        raise ParseError("empty input", 1, 1)
    n = _parse_header(lines[0][1], lines[0][0])
    vals: list[float] = []
    for lineno, raw in lines[1:]:
        col = 0
        for tok in raw.split():
            col = raw.index(tok, col)
            try:
                vals.append(float(tok))
            except ValueError:
                raise ParseError(f"bad number {tok!r}", lineno, col + 1) from None
            if not math.isfinite(vals[-1]):
                raise ParseError(f"non-finite value {tok!r}", lineno, col + 1)
            col += len(tok)
    if len(vals) != 1 << n:
        last = lines[-1][0]
        raise ParseError(f"expected {1 << n} values, found {len(vals)}", last, 1)
    return RealCubeFunction(vals)


def format_real_table(f: RealCubeFunction) -> str:
    return f"n={f.n}\n" + "\n".join(repr(float(v)) for v in f.values) + "\n"
