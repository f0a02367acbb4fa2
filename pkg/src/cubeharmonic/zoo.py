"""Named Boolean function families and their closed-form quantities."""

from __future__ import annotations

import math
import re
from fractions import Fraction

import numpy as np

from .cube import MAX_DIM, BooleanFunction, check_dim
from .errors import CapacityError, ParameterError, ParseError, PreconditionError

# exact rational arithmetic below this block count, floats above
_EXACT_LIMIT = 64


def _indices(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.uint32)


def dictator(n: int, i: int = 1) -> BooleanFunction:
    check_dim(n)
    if not 1 <= i <= n:
        raise IndexError(f"coordinate {i} outside 1..{n}")
    return BooleanFunction.from_bits((_indices(n) >> (i - 1)) & 1)


def parity(n: int, mask: int | None = None) -> BooleanFunction:
    """1 exactly where ``prod_{i in S} x_i = -1``; S defaults to all coordinates."""
    check_dim(n)
    if mask is None:
        mask = (1 << n) - 1
    if mask <= 0:
        raise PreconditionError("parity needs a nonempty subset")
    if mask >= 1 << n:
        raise PreconditionError(f"subset mask {mask:#x} outside dimension {n}")
    # number of -1 coordinates in S is |S| - popcount(x & S)
    minus = bin(mask).count("1") - np.bitwise_count(_indices(n) & mask)
    return BooleanFunction.from_bits(minus % 2)


def majority(n: int) -> BooleanFunction:
    check_dim(n)
    if n % 2 == 0:
        raise PreconditionError(f"majority needs odd n, got {n}")
    return BooleanFunction.from_bits(np.bitwise_count(_indices(n)) > n // 2)


def tribes(k: int, m: int, n: int | None = None) -> BooleanFunction:
    """OR over m disjoint blocks of k consecutive coordinates of the AND of the block.

    Coordinates beyond ``k * m`` (when ``n`` is larger) are dummies.
    """
    if k < 1 or m < 1:
        raise ParameterError(f"tribes needs k, m >= 1, got k={k}, m={m}")
    if n is None:
        n = k * m
    if k * m > MAX_DIM or n > MAX_DIM:
        raise CapacityError(f"tribes with {max(n, k * m)} coordinates exceeds the cap {MAX_DIM}")
    if n < k * m:
        raise PreconditionError(f"n={n} smaller than k*m={k * m}")
    check_dim(n)
    idx = _indices(n)
    block = (1 << k) - 1
    out = np.zeros(idx.size, dtype=bool)
    for b in range(m):
        out |= ((idx >> (b * k)) & block) == block
    return BooleanFunction.from_bits(out)


def tribes_mean(k: int, m: int) -> float:
    return 1.0 - (1.0 - 2.0**-k) ** m


def choose_tribes_params(n: int) -> tuple[int, int]:
    """Block size k and block count m making the Tribes mean closest to 1/2.

    For each k the block count ranges over ``n/(2k) < m <= n // k``: either
    all of ``n // k`` blocks, or fewer blocks with the leftover coordinates
    as dummies, but always more than half of the n coordinates live.  Ties
    go to the smaller k.
    """
    if n < 4:
        raise PreconditionError(f"tribes_auto needs n >= 4, got {n}")
    best = None
    for k in range(1, n + 1):
        hi = n // k
        if hi < 1:
            break
        if best is not None and 0.5 - tribes_mean(k, hi) > best[0]:
            # the largest admissible mean decreases in k; nothing better remains
            break
        lo = n // (2 * k) + 1
        balance = math.log(0.5) / math.log1p(-(2.0**-k))
        for m in sorted({lo, hi, math.floor(balance), math.ceil(balance)}):
            if not lo <= m <= hi:
                continue
            gap = abs(tribes_mean(k, m) - 0.5)
            if best is None or gap < best[0]:
                best = (gap, k, m)
    return best[1], best[2]


def tribes_auto(n: int) -> tuple[BooleanFunction, int, int]:
    k, m = choose_tribes_params(n)
    return tribes(k, m, n), k, m


def tribes_influence_closed_form(k: int, m: int, exact: bool = False):
    """``I_i(Tribes_{k,m}) = 2^{-(k-1)} (1 - 2^{-k})^{m-1}`` for a non-dummy i.

    Coordinate i is pivotal exactly when the rest of its block is all +1 and
    no other block is all +1.
    """
    if k < 1 or m < 1:
        raise ParameterError(f"tribes needs k, m >= 1, got k={k}, m={m}")
    if exact or m <= _EXACT_LIMIT:
        val = Fraction(1, 2 ** (k - 1)) * Fraction(2**k - 1, 2**k) ** (m - 1)
        return val if exact else float(val)
    return 2.0 ** -(k - 1) * (1.0 - 2.0**-k) ** (m - 1)


def tribes_pair_influence_closed_form(k: int, m: int, same_block: bool, exact: bool = False):
    """``I_(i,j)`` for i != j in Tribes_{k,m}.

    Distinct blocks: ``|D_ij f| = 1`` exactly when both partial blocks are
    otherwise all +1 and no third block is, giving ``2^{-(2k-1)} (1-2^{-k})^{m-2}``.
    Same block: ``|D_ij f| = 1`` when the other k-2 entries are +1 and no
    other block is all +1, which coincides with ``I_i``.
    """
    if same_block:
        if k < 2:
            raise PreconditionError("same-block pairs need k >= 2")
        return tribes_influence_closed_form(k, m, exact)
    if m < 2:
        raise PreconditionError("distinct-block pairs need m >= 2")
    if exact or m <= _EXACT_LIMIT:
        val = Fraction(1, 2 ** (2 * k - 1)) * Fraction(2**k - 1, 2**k) ** (m - 2)
        return val if exact else float(val)
    return 2.0 ** -(2 * k - 1) * (1.0 - 2.0**-k) ** (m - 2)


def random_boolean(n: int, p: float = 0.5, seed: int = 0) -> BooleanFunction:
    """i.i.d. Bernoulli(p) table from numpy's Philox4x64 counter-based generator."""
    check_dim(n)
    if not 0 <= p <= 1:
        raise ParameterError(f"density must lie in [0, 1], got {p}")
    rng = np.random.Generator(np.random.Philox(seed))
    return BooleanFunction.from_bits(rng.random(1 << n) < p)


# ---------------------------------------------------------------------------
# family specification strings

_FAMILIES = {
    "dictator": {"i"},
    "parity": {"S"},
    "majority": set(),
    "tribes": {"k", "m"},
    "tribes-auto": set(),
    "random": {"p", "seed"},
}
_NAME = re.compile(r"[a-z][a-z-]*")


def parse_family_spec(spec: str) -> tuple[str, dict]:
    """Split ``"tribes:k=2,m=2"`` into ``("tribes", {"k": 2, "m": 2})``."""
    m = _NAME.match(spec)
    if not m or m.group() not in _FAMILIES:
        raise ParseError(f"unknown family in {spec!r}", 1, 1)
    name = m.group()
    params: dict = {}
    pos = m.end()
    if pos < len(spec):
        if spec[pos] != ":":
            raise ParseError(f"expected ':' after family name", 1, pos + 1)
        pos += 1
        for item in spec[pos:].split(","):
            col = pos + 1
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or not val.strip():
                raise ParseError(f"expected key=value, got {item!r}", 1, col + len(key) + (1 if eq else 0))
            if key not in _FAMILIES[name]:
                raise ParseError(f"unknown parameter {key!r} for {name}", 1, col)
            try:
                if key == "p":
                    params[key] = float(val)
                else:
                    params[key] = int(val, 0)
            except ValueError:
                raise ParseError(f"bad value {val!r} for {key}", 1, col + len(key) + 1) from None
            pos += len(item) + 1
    return name, params


def build_family(spec: str, n: int | None = None) -> BooleanFunction:
    """Instantiate a family string; ``n`` is required unless the family fixes it."""
    name, params = parse_family_spec(spec)
    if name == "tribes":
        if "k" not in params or "m" not in params:
            raise ParseError("tribes needs k and m", 1, len(spec))
        return tribes(params["k"], params["m"], n)
    if n is None:
        raise PreconditionError(f"family {name!r} needs a dimension n")
    if name == "dictator":
        return dictator(n, params.get("i", 1))
    if name == "parity":
        return parity(n, params.get("S"))
    if name == "majority":
        return majority(n)
    if name == "tribes-auto":
        return tribes_auto(n)[0]
    return random_boolean(n, params.get("p", 0.5), params.get("seed", 0))


def function_corpus(n_max: int, seed: int = 0) -> list[tuple[str, BooleanFunction]]:
    """Non-constant zoo members for n = 1..n_max, labelled by family string.

    Per n: two dictators, full and two-coordinate parity, majority (odd n),
    every exact tribes split with k, m >= 2, tribes-auto, and two random
    tables whose seeds derive from ``seed``.
    """
    out: list[tuple[str, BooleanFunction]] = []
    for n in range(1, n_max + 1):
        out.append((f"dictator:i=1 n={n}", dictator(n, 1)))
        if n > 1:
            out.append((f"dictator:i={n} n={n}", dictator(n, n)))
            out.append((f"parity:S=3 n={n}", parity(n, 3)))
        out.append((f"parity n={n}", parity(n)))
        if n % 2:
            out.append((f"majority n={n}", majority(n)))
        for k in range(2, n // 2 + 1):
            if n % k == 0:
                out.append((f"tribes:k={k},m={n // k}", tribes(k, n // k)))
        if n >= 4:
            out.append((f"tribes-auto n={n}", tribes_auto(n)[0]))
        for p, stream in ((0.5, 0), (0.2, 1)):
            s = seed * 1_000_003 + 2 * n + stream
            f = random_boolean(n, p, s)
            if not f.is_constant():
                out.append((f"random:p={p},seed={s} n={n}", f))
    return out
