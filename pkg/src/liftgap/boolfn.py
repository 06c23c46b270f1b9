"""Boolean functions on {-1,1}^n with exact Walsh-Hadamard analysis.

Representation: a dense table of 2^n rationals.  Index bit b of a table
position is 1 exactly when x_{b+1} = -1; position 0 is the all-ones
assignment.  This indexing is part of the JSON file format contract:

    {"n": 3, "values": ["1/2", "0", ...]}   # length exactly 2^n

Variable sets (junta supports, restriction sets) use 1-based indices to
match the instance file formats; subset bitmasks tie variable i to bit
i-1, consistent with the table indexing.

The transform is computed by the integer butterfly on a common
denominator, so it is exact and fast; entropy is the single deliberately
floating-point quantity in the package.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import AbstractSet, Iterable, Sequence

from .caps import caps
from .errors import InputError, ParameterError, SizeCapError
from .rationals import (GammaLike, format_rational, gamma_below_abs,
                        gamma_count_within, parse_rational)

ENTROPY_TOLERANCE = 1e-12  # documented absolute tolerance of entropy_deficit


def mask_of(variables: Iterable[int], n: int) -> int:
    """Subset bitmask for 1-based variable indices."""
    m = 0
    for i in variables:
        if not 1 <= i <= n:
            raise InputError(f"variable {i} outside [1, {n}]")
        m |= 1 << (i - 1)
    return m


def vars_of(mask: int) -> frozenset[int]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


class BoolFn:
    """Function {-1,1}^n -> Q as a dense table; immutable by convention."""

    __slots__ = ("n", "values", "_coeffs", "_mean", "_sup")

    def __init__(self, n: int, values: Sequence[Fraction]):
        if n < 0:
            raise InputError("n must be nonnegative")
        if n > caps().boolfn_n:
            raise SizeCapError(f"n = {n} exceeds table cap {caps().boolfn_n}")
        if len(values) != 1 << n:
            raise InputError(f"table length {len(values)} != 2^{n}")
        self.n = n
        # keep caller-interned Fraction objects to let huge tables share values
        self.values = tuple(v if type(v) is Fraction else Fraction(v)
                            for v in values)
        self._coeffs = None
        self._mean = None
        self._sup = None

    def __eq__(self, other) -> bool:
        return (isinstance(other, BoolFn)
                and self.n == other.n and self.values == other.values)

    def __hash__(self):
        return hash((self.n, self.values))

    def __repr__(self) -> str:
        return f"BoolFn(n={self.n})"

    def mean(self) -> Fraction:
        if self._mean is None:
            # tables are usually interned; summing distinct values weighted
            # by multiplicity avoids millions of gcd calls
            counts = Counter(self.values)
            total = sum(v * c for v, c in counts.items())
            self._mean = Fraction(total, 1 << self.n)
        return self._mean

    def sup_norm(self) -> Fraction:
        if self._sup is None:
            self._sup = max(max(self.values), -min(self.values))
        return self._sup

    @staticmethod
    def constant(n: int, value: Fraction | int) -> "BoolFn":
        return BoolFn(n, [Fraction(value)] * (1 << n))

    @staticmethod
    def character(n: int, variables: Iterable[int]) -> "BoolFn":
        """chi_alpha(x) = prod_{i in alpha} x_i."""
        alpha = mask_of(variables, n)
        one, minus = Fraction(1), Fraction(-1)
        return BoolFn(n, [minus if (i & alpha).bit_count() & 1 else one
                          for i in range(1 << n)])


@dataclass(frozen=True)
class FourierCoeffs:
    """Sparse coefficient map: subset bitmask -> nonzero coefficient."""
    n: int
    coeffs: dict[int, Fraction]

    def get(self, alpha_mask: int) -> Fraction:
        return self.coeffs.get(alpha_mask, Fraction(0))

    def degree(self) -> int:
        return max((m.bit_count() for m in self.coeffs), default=0)


def _butterfly(vals: list[int]) -> list[int]:
    """In-place Walsh-Hadamard butterfly on integers: output position a
    holds sum_i vals[i] * (-1)^{popcount(i & a)}."""
    n = len(vals)
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            for j in range(start, start + h):
                a = vals[j]
                b = vals[j + h]
                vals[j] = a + b
                vals[j + h] = a - b
        h *= 2
    return vals


def fourier_transform(f: BoolFn) -> FourierCoeffs:
    """Exact coefficients; inverse_transform is the exact inverse."""
    if f._coeffs is not None:
        return f._coeffs
    denom = math.lcm(*(v.denominator for v in f.values)) if f.values else 1
    ints = [v.numerator * (denom // v.denominator) for v in f.values]
    spectrum = _butterfly(ints)
    scale = denom << f.n
    coeffs = {a: Fraction(s, scale) for a, s in enumerate(spectrum) if s}
    result = FourierCoeffs(f.n, coeffs)
    f._coeffs = result
    return result


def inverse_transform(c: FourierCoeffs) -> BoolFn:
    if not c.coeffs:
        return BoolFn.constant(c.n, 0)
    denom = math.lcm(*(v.denominator for v in c.coeffs.values()))
    dense = [0] * (1 << c.n)
    for a, v in c.coeffs.items():
        if a >= 1 << c.n:
            raise InputError("coefficient mask out of range")
        dense[a] = v.numerator * (denom // v.denominator)
    table = _butterfly(dense)
    return BoolFn(c.n, [Fraction(t, denom) for t in table])


class Density(object):
    """Nonnegative function with mean exactly 1; wraps its BoolFn."""

    __slots__ = ("fn", "_entropy_deficit")

    def __init__(self, fn: BoolFn):
        if min(fn.values) < 0:
            raise InputError("density must be nonnegative")
        if fn.mean() != 1:
            raise InputError("density must have mean exactly 1")
        self.fn = fn
        self._entropy_deficit = None

    @property
    def n(self) -> int:
        return self.fn.n

    def __repr__(self) -> str:
        return f"Density(n={self.n})"


def entropy_deficit(q: Density) -> float:
    """n minus the Shannon entropy (bits) of the measure with density q.
    Floating point; absolute tolerance ENTROPY_TOLERANCE.  Uniform -> 0,
    a point mass -> n."""
    if q._entropy_deficit is not None:
        return q._entropy_deficit
    n = q.n
    entropy = 0.0
    for v in q.fn.values:
        if v:
            p = v / (1 << n)  # Fraction
            fp = float(p)
            entropy -= fp * math.log2(fp)
    t = n - entropy
    q._entropy_deficit = t
    return t


def conditional_density(q: Density, variables: AbstractSet[int]) -> Density:
    """Average q over the variables outside the set; the result lives on
    the |S| kept variables, re-indexed in increasing order."""
    kept = sorted(variables)
    n = q.n
    mask = mask_of(kept, n)
    k = len(kept)
    sums = [Fraction(0)] * (1 << k)
    bit_of = {v: j for j, v in enumerate(kept)}
    # compressed index of each table position
    for idx, val in enumerate(q.fn.values):
        if not val:
            continue
        c = 0
        for v, j in bit_of.items():
            if idx >> (v - 1) & 1:
                c |= 1 << j
        sums[c] += val
    block = 1 << (n - k)
    return Density(BoolFn(k, [s / block for s in sums]))


@dataclass(frozen=True)
class JuntaCertificate:
    """Outcome of the junta extraction for a high-entropy density.

    On success every low-degree coefficient outside the junta J is at
    most gamma in absolute value and |J| <= 2*t*d/gamma^2.  On failure
    (the independent large-coefficient count exceeds 2*t/gamma^2, i.e.
    the entropy hypothesis fails for the supplied t) the violations list
    carries the independent large coefficients that overflow the budget.
    """
    junta: frozenset[int]
    degree: int
    gamma: GammaLike
    t: Fraction
    success: bool
    violations: tuple[tuple[frozenset[int], Fraction], ...] = ()


def chang_junta(q: Density, t: Fraction | int, d: int,
                gamma: GammaLike) -> JuntaCertificate:
    """Extract the coordinate set hiding all large low-degree coefficients.

    Scans coefficients with |alpha| <= d and |coeff| > gamma in order of
    decreasing magnitude (lexicographic mask tie-break), keeps a maximal
    F2-linearly-independent subset via Gaussian elimination on the
    characteristic vectors, and returns the union J of the kept subsets.
    Succeeds when the independent count is within 2*t/gamma^2.
    """
    if isinstance(gamma, (int, Fraction)) and gamma <= 0:
        raise ParameterError("gamma must be positive")
    if not 1 <= d <= q.n:
        raise ParameterError(f"need 1 <= d <= n, got d={d}, n={q.n}")
    t = Fraction(t)
    coeffs = fourier_transform(q.fn)
    large = [(a, v) for a, v in coeffs.coeffs.items()
             if a.bit_count() <= d and gamma_below_abs(gamma, v)]
    large.sort(key=lambda av: (-abs(av[1]), av[0]))

    pivots: dict[int, int] = {}  # highest set bit -> reduced mask
    independent: list[tuple[int, Fraction]] = []
    for a, v in large:
        reduced = a
        while reduced:
            hb = reduced.bit_length() - 1
            if hb not in pivots:
                pivots[hb] = reduced
                independent.append((a, v))
                break
            reduced ^= pivots[hb]

    junta_mask = 0
    for a, _ in independent:
        junta_mask |= a
    ok = gamma_count_within(gamma, len(independent), 2 * t)
    violations = () if ok else tuple(
        (vars_of(a), v) for a, v in independent)
    return JuntaCertificate(junta=vars_of(junta_mask), degree=d, gamma=gamma,
                            t=t, success=ok, violations=violations)


def is_junta(f: BoolFn, variables: AbstractSet[int]) -> bool:
    """True iff f(x) = f(y) whenever x and y agree on the given set."""
    mask = mask_of(variables, f.n)
    seen: dict[int, Fraction] = {}
    for idx, val in enumerate(f.values):
        key = idx & mask
        prev = seen.setdefault(key, val)
        if prev != val:
            return False
    return True


def junta_support(f: BoolFn) -> frozenset[int]:
    """The unique minimal set f depends on: the union of all subsets
    carrying a nonzero coefficient."""
    support = 0
    for a in fourier_transform(f).coeffs:
        support |= a
    return vars_of(support)


# ---------------------------------------------------------------------------
# JSON file format
# ---------------------------------------------------------------------------


def boolfn_to_json(f: BoolFn) -> str:
    return json.dumps(
        {"n": f.n, "values": [format_rational(v) for v in f.values]},
        sort_keys=True)


def boolfn_from_json(text: str) -> BoolFn:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON: {exc}") from None
    if not isinstance(obj, dict) or "n" not in obj or "values" not in obj:
        raise InputError('expected {"n": ..., "values": [...]}')
    n = obj["n"]
    if not isinstance(n, int):
        raise InputError("n must be an integer")
    values = obj["values"]
    if not isinstance(values, list):
        raise InputError("values must be a list")
    return BoolFn(n, [parse_rational(v) if isinstance(v, str) else Fraction(v)
                      for v in values])
