"""Exact multivariate polynomial algebra over the rationals.

The lab exists to check one structural fact with no floating point in the
loop: restricting a polynomial P of total degree D to the line
x2 + a (x1 - x2) keeps degree D in a exactly when the leading homogeneous
part of P does not vanish at v = x1 - x2.  Degree drops are therefore a
measure-zero event for generic endpoints, and average restricted degrees
preserve the ordering of true degrees.

A polynomial is a dict from exponent tuples to Fraction coefficients; zero
coefficients are never stored.  The zero polynomial has degree -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "NEG_INF",
    "MultiPoly",
    "UniPoly",
    "restrict",
    "leading_part",
    "degree_drops",
    "OrderPreservationRecord",
    "verify_order_preservation",
    "gaussian_pair_sampler",
    "dyadic_uniform_pair_sampler",
    "shared_coordinate_pair_sampler",
    "random_multipoly",
    "PolyParseError",
    "parse_poly",
    "parse_poly_bundle",
    "format_poly",
]

NEG_INF = float("-inf")

Exponent = tuple[int, ...]


def _canonical(terms: dict) -> dict[Exponent, Fraction]:
    out = {}
    for exp, coef in terms.items():
        coef = Fraction(coef)
        if coef != 0:
            out[tuple(int(e) for e in exp)] = coef
    return out


class MultiPoly:
    """Sparse exact polynomial in a fixed number of variables."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict | None = None):
        dim = int(dim)
        if dim < 1:
            raise ValueError("dim must be >= 1")
        terms = _canonical(terms or {})
        for exp in terms:
            if len(exp) != dim or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent tuple {exp} for dim {dim}")
        self.dim = dim
        self.terms = terms

    @classmethod
    def zero(cls, dim: int) -> "MultiPoly":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, value) -> "MultiPoly":
        return cls(dim, {(0,) * dim: Fraction(value)})

    @classmethod
    def variable(cls, dim: int, index: int) -> "MultiPoly":
        if not 0 <= index < dim:
            raise ValueError("variable index out of range")
        exp = [0] * dim
        exp[index] = 1
        return cls(dim, {tuple(exp): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> float:
        """Total degree; -inf for the zero polynomial."""
        if not self.terms:
            return NEG_INF
        return max(sum(exp) for exp in self.terms)

    def evaluate(self, point) -> Fraction:
        pt = [Fraction(v) for v in point]
        if len(pt) != self.dim:
            raise ValueError("point dimension mismatch")
        total = Fraction(0)
        for exp, coef in self.terms.items():
            val = coef
            for x, e in zip(pt, exp):
                if e:
                    val *= x**e
            total += val
        return total

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for exp, coef in other.terms.items():
            terms[exp] = terms.get(exp, Fraction(0)) + coef
        return MultiPoly(self.dim, terms)

    def __neg__(self):
        return MultiPoly(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return MultiPoly(self.dim, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        terms: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, Fraction(0)) + c1 * c2
        return MultiPoly(self.dim, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = MultiPoly.constant(self.dim, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __repr__(self):
        return f"MultiPoly({self.dim}, {format_poly(self)!r})"

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        if isinstance(other, (int, Fraction)):
            return MultiPoly.constant(self.dim, other)
        raise TypeError(f"cannot combine MultiPoly with {type(other).__name__}")


class UniPoly:
    """Dense exact univariate polynomial; trailing zero coefficients are stripped."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        coeffs = [Fraction(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = tuple(coeffs)

    def is_zero(self) -> bool:
        return not self.coefficients

    def degree(self) -> float:
        if not self.coefficients:
            return NEG_INF
        return len(self.coefficients) - 1

    def coefficient(self, k: int) -> Fraction:
        if 0 <= k < len(self.coefficients):
            return self.coefficients[k]
        return Fraction(0)

    def leading_coefficient(self) -> Fraction:
        if not self.coefficients:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coefficients[-1]

    def evaluate(self, alpha) -> Fraction:
        a = Fraction(alpha)
        total = Fraction(0)
        for c in reversed(self.coefficients):
            total = total * a + c
        return total

    def __eq__(self, other):
        if not isinstance(other, UniPoly):
            return NotImplemented
        return self.coefficients == other.coefficients

    def __hash__(self):
        return hash(self.coefficients)

    def __repr__(self):
        return f"UniPoly({list(self.coefficients)})"


def _binomial_power(a: Fraction, b: Fraction, e: int) -> list[Fraction]:
    """Coefficient list of (a + b t)^e in t."""
    return [Fraction(math.comb(e, j)) * a ** (e - j) * b**j for j in range(e + 1)]


def _convolve(u: list[Fraction], v: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui == 0:
            continue
        for j, vj in enumerate(v):
            out[i + j] += ui * vj
    return out


def restrict(poly: MultiPoly, x1, x2) -> UniPoly:
    """Exact restriction of poly to the segment a -> x2 + a (x1 - x2)."""
    x1 = [Fraction(v) for v in x1]
    x2 = [Fraction(v) for v in x2]
    if len(x1) != poly.dim or len(x2) != poly.dim:
        raise ValueError("endpoint dimension mismatch")
    direction = [a - b for a, b in zip(x1, x2)]
    acc = [Fraction(0)]
    for exp, coef in poly.terms.items():
        factor = [coef]
        for base, step, e in zip(x2, direction, exp):
            if e:
                factor = _convolve(factor, _binomial_power(base, step, e))
        if len(factor) > len(acc):
            acc.extend([Fraction(0)] * (len(factor) - len(acc)))
        for k, c in enumerate(factor):
            acc[k] += c
    return UniPoly(acc)


def leading_part(poly: MultiPoly) -> MultiPoly:
    """Homogeneous part of top total degree; undefined for the zero polynomial."""
    if poly.is_zero():
        raise ValueError("zero polynomial has no leading part")
    top = poly.degree()
    return MultiPoly(
        poly.dim, {e: c for e, c in poly.terms.items() if sum(e) == top}
    )


def degree_drops(poly: MultiPoly, x1, x2) -> bool:
    """True when the restriction to the (x1, x2) segment loses total degree.

    Equivalent to the leading homogeneous part vanishing at x1 - x2; both
    sides are computed exactly, and the equivalence is what the tests pin.
    """
    if poly.is_zero():
        raise ValueError("degree drop is undefined for the zero polynomial")
    v = [Fraction(a) - Fraction(b) for a, b in zip(x1, x2)]
    return leading_part(poly).evaluate(v) == 0


@dataclass(frozen=True)
class OrderPreservationRecord:
    """Outcome of one order-preservation experiment on a polynomial pair."""

    true_degrees: tuple[int, int]
    restricted_degrees: tuple[tuple[float, ...], tuple[float, ...]]
    mean_degrees: tuple[float, float]
    drop_counts: tuple[int, int]
    n_pairs: int
    ordered: bool

    def summary(self) -> dict:
        return {
            "true_degrees": list(self.true_degrees),
            "mean_degrees": list(self.mean_degrees),
            "drop_counts": list(self.drop_counts),
            "n_pairs": self.n_pairs,
            "ordered": self.ordered,
        }


def _restricted_degree(poly: MultiPoly, x1, x2) -> float:
    d = restrict(poly, x1, x2).degree()
    # the zero restriction is recorded as degree 0 so averages stay finite
    return 0.0 if d == NEG_INF else float(d)


def verify_order_preservation(
    poly_a: MultiPoly,
    poly_b: MultiPoly,
    n_pairs: int,
    sampler,
    seed: int = 0,
) -> OrderPreservationRecord:
    """Compare average restricted degrees of two polynomials over shared endpoints.

    sampler(rng) must yield an (x1, x2) pair of rational points.  The record
    is 'ordered' when the sample means relate the same way the true total
    degrees do.
    """
    if poly_a.is_zero() or poly_b.is_zero():
        raise ValueError("order preservation needs nonzero polynomials")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    degs_a: list[float] = []
    degs_b: list[float] = []
    drops = [0, 0]
    for _ in range(n_pairs):
        x1, x2 = sampler(rng)
        for slot, poly, sink in ((0, poly_a, degs_a), (1, poly_b, degs_b)):
            d = _restricted_degree(poly, x1, x2)
            sink.append(d)
            if d < poly.degree():
                drops[slot] += 1
    mean_a = float(np.mean(degs_a))
    mean_b = float(np.mean(degs_b))
    da, db = int(poly_a.degree()), int(poly_b.degree())
    if da > db:
        ordered = mean_a > mean_b
    elif da < db:
        ordered = mean_a < mean_b
    else:
        ordered = mean_a == mean_b
    return OrderPreservationRecord(
        true_degrees=(da, db),
        restricted_degrees=(tuple(degs_a), tuple(degs_b)),
        mean_degrees=(mean_a, mean_b),
        drop_counts=(drops[0], drops[1]),
        n_pairs=n_pairs,
        ordered=ordered,
    )


def gaussian_pair_sampler(dim: int):
    """Endpoint pairs from exact dyadic rationals of standard normal draws."""

    def sample(rng: np.random.Generator):
        pts = rng.standard_normal((2, dim))
        x1 = tuple(Fraction(float(v)) for v in pts[0])
        x2 = tuple(Fraction(float(v)) for v in pts[1])
        return x1, x2

    return sample


def dyadic_uniform_pair_sampler(dim: int, bits: int = 63):
    """Endpoint pairs with coordinates k / 2^bits, k uniform over a 64-bit range."""
    den = 1 << bits

    def sample(rng: np.random.Generator):
        nums = rng.integers(-den, den - 1, size=(2, dim), dtype=np.int64, endpoint=True)
        x1 = tuple(Fraction(int(v), den) for v in nums[0])
        x2 = tuple(Fraction(int(v), den) for v in nums[1])
        return x1, x2

    return sample


def shared_coordinate_pair_sampler(dim: int, coordinate: int = 0):
    """Adversarial pairs with one shared coordinate, so that direction entry is 0.

    Any polynomial whose leading part is a power of that coordinate drops
    degree on every such pair.
    """
    if not 0 <= coordinate < dim:
        raise ValueError("coordinate out of range")
    base = gaussian_pair_sampler(dim)

    def sample(rng: np.random.Generator):
        x1, x2 = base(rng)
        x1 = tuple(
            x2[coordinate] if k == coordinate else v for k, v in enumerate(x1)
        )
        return x1, x2

    return sample


def random_multipoly(
    dim: int,
    degree: int,
    rng: np.random.Generator,
    n_terms: int = 8,
    coeff_bound: int = 9,
) -> MultiPoly:
    """Random sparse polynomial of exact total degree with small integer coefficients."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    available = math.comb(degree + dim, dim)
    if n_terms > available:
        raise ValueError(
            f"n_terms {n_terms} exceeds the {available} monomials of degree <= {degree}"
        )
    probs = np.full(dim, 1.0 / dim)

    def draw_coef() -> Fraction:
        c = 0
        while c == 0:
            c = int(rng.integers(-coeff_bound, coeff_bound, endpoint=True))
        return Fraction(c)

    terms: dict[Exponent, Fraction] = {}
    top = tuple(int(e) for e in rng.multinomial(degree, probs))
    terms[top] = draw_coef()
    while len(terms) < n_terms:
        total = int(rng.integers(0, degree, endpoint=True))
        exp = tuple(int(e) for e in rng.multinomial(total, probs))
        if exp in terms:
            continue
        terms[exp] = draw_coef()
    return MultiPoly(dim, terms)


class PolyParseError(ValueError):
    """Input text is not a valid polynomial expression.

    line and column are 1-based and point at the offending character; for
    bundle input, line is the line number within the whole file.
    """

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.reason = message
        self.line = line
        self.column = column


class _Parser:
    # grammar: poly := ['+'|'-'] term (('+'|'-') term)*
    #          term := factor ('*' factor)*
    #          factor := rational | 'x' INT ['^' INT]
    #          rational := INT ['/' INT]

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        line = self.text.count("\n", 0, self.pos) + 1
        column = self.pos - self.text.rfind("\n", 0, self.pos)
        raise PolyParseError(message, line, column)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take_int(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected an integer")
        return int(self.text[start : self.pos])

    def parse(self) -> list[tuple[Fraction, dict[int, int]]]:
        terms = []
        self.skip_ws()
        if not self.peek():
            self.error("empty polynomial")
        sign = 1
        if self.peek() in "+-":
            sign = -1 if self.peek() == "-" else 1
            self.pos += 1
        terms.append(self.parse_term(sign))
        self.skip_ws()
        while self.peek():
            op = self.peek()
            if op not in "+-":
                self.error(f"expected '+' or '-', found {op!r}")
            self.pos += 1
            terms.append(self.parse_term(-1 if op == "-" else 1))
            self.skip_ws()
        return terms

    def parse_term(self, sign: int) -> tuple[Fraction, dict[int, int]]:
        coef = Fraction(sign)
        powers: dict[int, int] = {}
        while True:
            self.skip_ws()
            ch = self.peek()
            if ch == "x":
                self.pos += 1
                index = self.take_int()
                if index < 1:
                    self.error("variable indices start at 1")
                power = 1
                if self.peek() == "^":
                    self.pos += 1
                    power = self.take_int()
                powers[index - 1] = powers.get(index - 1, 0) + power
            elif ch.isdigit():
                num = self.take_int()
                den = 1
                self.skip_ws()
                if self.peek() == "/":
                    self.pos += 1
                    den = self.take_int()
                    if den == 0:
                        self.error("zero denominator")
                coef *= Fraction(num, den)
            else:
                self.error(f"expected a factor, found {ch!r}" if ch else "expected a factor")
            self.skip_ws()
            if self.peek() == "*":
                self.pos += 1
                continue
            return coef, powers


def parse_poly(text: str, dim: int | None = None) -> MultiPoly:
    """Parse text like '3*x1^2*x2 - 1/2*x3 + 4' into an exact polynomial.

    Variables are written x1..xd.  When dim is omitted the largest index
    present sets it (at least 1).
    """
    raw_terms = _Parser(text).parse()
    max_index = 0
    for _, powers in raw_terms:
        if powers:
            max_index = max(max_index, max(powers) + 1)
    if dim is None:
        dim = max(max_index, 1)
    elif max_index > dim:
        raise PolyParseError(
            f"variable x{max_index} exceeds dim {dim}",
            text.count("\n") + 1,
            len(text) - text.rfind("\n"),
        )
    terms: dict[Exponent, Fraction] = {}
    for coef, powers in raw_terms:
        exp = tuple(powers.get(k, 0) for k in range(dim))
        terms[exp] = terms.get(exp, Fraction(0)) + coef
    return MultiPoly(dim, terms)


def parse_poly_bundle(text: str, dim: int | None = None) -> list[MultiPoly]:
    """Parse one polynomial per nonempty, non-comment line, sharing one dim.

    Lines starting with '#' are comments.  The common dimension is the
    largest variable index used anywhere unless dim is given.  Parse errors
    carry the line number within the bundle.
    """
    entries = [
        (lineno, ln)
        for lineno, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not entries:
        raise PolyParseError("no polynomials in input")

    def parse_line(lineno: int, ln: str, use_dim: int | None) -> MultiPoly:
        try:
            return parse_poly(ln, dim=use_dim)
        except PolyParseError as exc:
            raise PolyParseError(exc.reason, lineno, exc.column) from exc

    if dim is None:
        dim = 1
        for lineno, ln in entries:
            dim = max(dim, parse_line(lineno, ln, None).dim)
    return [parse_line(lineno, ln, dim) for lineno, ln in entries]


def format_poly(poly: MultiPoly) -> str:
    """Render a polynomial in the same syntax parse_poly accepts."""
    if poly.is_zero():
        return "0"
    parts = []
    for exp in sorted(poly.terms, key=lambda e: (-sum(e), tuple(-v for v in e))):
        coef = poly.terms[exp]
        factors = []
        if abs(coef) != 1 or not any(exp):
            factors.append(str(abs(coef)))
        for k, e in enumerate(exp):
            if e == 1:
                factors.append(f"x{k + 1}")
            elif e > 1:
                factors.append(f"x{k + 1}^{e}")
        text = "*".join(factors)
        parts.append(("- " if coef < 0 else "+ ") + text)
    joined = " ".join(parts)
    return joined[2:] if joined.startswith("+ ") else "-" + joined[2:]
