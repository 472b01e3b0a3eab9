"""Commutative symbols, Weyl symmetrization and noncommutative evaluation.

Generators are 0-based integers internally and printed as ``e1, e2, ...``.
A constant slot (a promoted scalar constant) is a string letter.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from ._exact import GaussRational, exact
from .matrixcore import DimensionError, as_matrix_tuple

Letter = Union[int, str]
Word = tuple  # tuple[Letter, ...]
MultiIndex = tuple  # tuple[int, ...]
TermKey = tuple  # (state MultiIndex, control MultiIndex, label or None)


class SymbolError(ValueError):
    pass


def check_multi_index(alpha: Sequence[int], m: int) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != m:
        raise SymbolError(f"multi-index {alpha} has length {len(alpha)}, expected {m}")
    if any(a < 0 for a in alpha):
        raise SymbolError(f"multi-index {alpha} has negative entries")
    return alpha


def _letter_str(letter: Letter) -> str:
    return f"e{letter + 1}" if isinstance(letter, int) else f"[{letter}]"


def _coeff_str(c: GaussRational) -> str:
    return str(c)


class NCPolynomial:
    """Finite linear combination of words over generators and constant slots."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, object] | Iterable[tuple[Word, object]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, GaussRational] = {}
        for word, c in items:
            word = tuple(word)
            for letter in word:
                if isinstance(letter, bool) or not isinstance(letter, (int, str)):
                    raise SymbolError(f"bad letter {letter!r}")
                if isinstance(letter, int) and letter < 0:
                    raise SymbolError(f"negative generator index {letter}")
            acc[word] = acc.get(word, GaussRational(0)) + exact(c)
        self._terms = {w: c for w, c in acc.items() if c}

    @classmethod
    def unit(cls) -> "NCPolynomial":
        return cls({(): 1})

    @classmethod
    def word(cls, word: Sequence[Letter], coeff=1) -> "NCPolynomial":
        return cls({tuple(word): coeff})

    @property
    def terms(self) -> Mapping[Word, GaussRational]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self) -> Iterator[Word]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __getitem__(self, word) -> GaussRational:
        return self._terms.get(tuple(word), GaussRational(0))

    @property
    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=-1)

    def generator_span(self) -> int:
        """1 + largest generator index used (0 if none)."""
        return max((l + 1 for w in self._terms for l in w if isinstance(l, int)), default=0)

    def labels(self) -> set[str]:
        return {l for w in self._terms for l in w if isinstance(l, str)}

    def __add__(self, other):
        if not isinstance(other, NCPolynomial):
            other = NCPolynomial.unit() * other
        return NCPolynomial(list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, NCPolynomial):
            out: list[tuple[Word, GaussRational]] = []
            for w1, c1 in self._terms.items():
                for w2, c2 in other._terms.items():
                    out.append((w1 + w2, c1 * c2))
            return NCPolynomial(out)
        c = exact(other)
        return NCPolynomial({w: v * c for w, v in self._terms.items()})

    def __rmul__(self, other):
        if isinstance(other, NCPolynomial):
            return other * self
        return self * other

    def __eq__(self, other):
        if isinstance(other, NCPolynomial):
            return self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"NCPolynomial({self!s})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for w in sorted(self._terms, key=lambda w: (len(w), [str(l) for l in w])):
            body = "".join(_letter_str(l) for l in w) or "1"
            parts.append(f"{_coeff_str(self._terms[w])} {body}")
        return " + ".join(parts)


def _multiset_permutations(counts: list[int], tail: tuple = ()) -> Iterator[tuple]:
    if not any(counts):
        yield tail
        return
    for i, c in enumerate(counts):
        if c:
            counts[i] -= 1
            yield from _multiset_permutations(counts, tail + (i,))
            counts[i] += 1


@lru_cache(maxsize=4096)
def _weyl_words(alpha: MultiIndex) -> tuple[tuple[Word, ...], Fraction]:
    words = tuple(_multiset_permutations(list(alpha)))
    weight = Fraction(math.prod(math.factorial(a) for a in alpha), math.factorial(sum(alpha)))
    return words, weight


def weyl_order(alpha: Sequence[int]) -> NCPolynomial:
    """Average of all distinct orderings of ``e_1^{a_1} ... e_m^{a_m}``."""
    alpha = check_multi_index(alpha, len(alpha))
    words, weight = _weyl_words(alpha)
    return NCPolynomial({w: weight for w in words})


class WeylSymbol:
    """Commutative polynomial in state variables x and control variables u.

    Terms are keyed by ``(state_exponents, control_exponents, label)`` where
    ``label`` names a constant c_alpha multiplying the term; labels are only
    allowed on terms of state degree 0.
    """

    __slots__ = ("m", "p", "_terms")

    def __init__(self, m: int, p: int = 0, terms: Mapping[TermKey, object] | Iterable = ()):
        if m < 1 or p < 0:
            raise SymbolError(f"bad symbol dimensions m={m}, p={p}")
        self.m = int(m)
        self.p = int(p)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[TermKey, GaussRational] = {}
        for key, c in items:
            if len(key) == 2:
                key = (key[0], key[1], None)
            state, control, label = key
            state = check_multi_index(state, self.m)
            control = check_multi_index(control, self.p)
            if label is not None:
                if not isinstance(label, str) or not label:
                    raise SymbolError(f"bad constant label {label!r}")
                if sum(state):
                    raise SymbolError(
                        f"constant label {label!r} attached to a term of state degree {sum(state)}"
                    )
            k = (state, control, label)
            acc[k] = acc.get(k, GaussRational(0)) + exact(c)
        self._terms = {k: c for k, c in acc.items() if c}

    @classmethod
    def monomial(cls, alpha: Sequence[int], coeff=1, control: Sequence[int] = (), p: int | None = None):
        p = len(control) if p is None else p
        control = tuple(control) or (0,) * p
        return cls(len(alpha), p, {(tuple(alpha), control, None): coeff})

    @classmethod
    def constant(cls, m: int, label: str | None = None, coeff=1, p: int = 0, control: Sequence[int] = ()):
        control = tuple(control) or (0,) * p
        return cls(m, p, {((0,) * m, control, label): coeff})

    @classmethod
    def zero(cls, m: int, p: int = 0):
        return cls(m, p)

    @property
    def terms(self) -> Mapping[TermKey, GaussRational]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    @property
    def degree(self) -> int:
        return max((sum(s) for s, _, _ in self._terms), default=-1)

    def labels(self) -> set[str]:
        return {l for _, _, l in self._terms if l is not None}

    def _check_compatible(self, other: "WeylSymbol"):
        if (self.m, self.p) != (other.m, other.p):
            raise SymbolError("symbols with different variable counts")

    def __add__(self, other: "WeylSymbol"):
        self._check_compatible(other)
        return WeylSymbol(self.m, self.p, list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self):
        return WeylSymbol(self.m, self.p, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, WeylSymbol):
            return NotImplemented
        c = exact(scalar)
        return WeylSymbol(self.m, self.p, {k: v * c for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, WeylSymbol):
            return (self.m, self.p, self._terms) == (other.m, other.p, other._terms)
        return NotImplemented

    def __hash__(self):
        return hash((self.m, self.p, frozenset(self._terms.items())))

    def __repr__(self):
        return f"WeylSymbol(m={self.m}, p={self.p}, {self!s})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (s, u, lab), c in sorted(self._terms.items(), key=lambda kv: (sum(kv[0][0]), kv[0][0], kv[0][1], kv[0][2] or "")):
            mono = "".join(f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(s) if a)
            mono += "".join(f"u{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(u) if a)
            if lab:
                mono += f"[{lab}]"
            parts.append(f"{c} {mono or '1'}")
        return " + ".join(parts)

    def control_slices(self) -> dict[tuple[MultiIndex, str | None], "WeylSymbol"]:
        """Group terms by (control exponents, label) into state-only symbols."""
        out: dict = {}
        for (s, u, lab), c in self._terms.items():
            out.setdefault((u, lab), {})[(s, (), None)] = c
        return {k: WeylSymbol(self.m, 0, v) for k, v in out.items()}


def substitute_constants(f: WeylSymbol, values: Mapping[str, object]) -> WeylSymbol:
    """Replace every labeled constant by its scalar value."""
    out = []
    for (s, u, lab), c in f.items():
        if lab is None:
            out.append(((s, u, None), c))
        else:
            if lab not in values:
                raise SymbolError(f"missing value for constant {lab!r}")
            out.append(((s, u, None), c * exact(values[lab])))
    return WeylSymbol(f.m, f.p, out)


def _control_factor(control: MultiIndex, u: Sequence[GaussRational]) -> GaussRational:
    out = GaussRational(1)
    for ui, b in zip(u, control):
        if b:
            out = out * ui ** b
    return out


def quantize_symbol(
    f: WeylSymbol,
    u: Sequence = (),
    const_mode: str = "scalar",
    const_values: Mapping[str, object] | None = None,
) -> NCPolynomial:
    """Weyl-quantize the state part of ``f`` at fixed control values ``u``.

    ``const_mode``: ``"scalar"`` multiplies labeled constants in by their
    values from ``const_values`` (unlabeled degree-0 terms become multiples of
    the unit); ``"matrix"`` turns every degree-0 state term into its
    constant-slot letter and rejects unlabeled ones; ``"auto"`` promotes
    labeled terms and leaves unlabeled ones scalar.
    """
    if len(u) != f.p:
        raise SymbolError(f"expected {f.p} control values, got {len(u)}")
    if const_mode not in ("scalar", "matrix", "auto"):
        raise SymbolError(f"unknown const_mode {const_mode!r}")
    ue = [exact(v) for v in u]
    const_values = const_values or {}
    terms: list[tuple[Word, GaussRational]] = []
    for (s, ctrl, lab), c in f.items():
        coeff = c * _control_factor(ctrl, ue)
        if sum(s) == 0:
            if const_mode == "matrix" and lab is None:
                raise SymbolError("unlabeled constant")
            if lab is not None and const_mode in ("matrix", "auto"):
                terms.append(((lab,), coeff))
                continue
            if lab is not None:
                if lab not in const_values:
                    raise SymbolError(f"missing value for constant {lab!r}")
                coeff = coeff * exact(const_values[lab])
            terms.append(((), coeff))
            continue
        words, weight = _weyl_words(s)
        wc = coeff * weight
        terms.extend((w, wc) for w in words)
    return NCPolynomial(terms)


def commutative_collapse(p: NCPolynomial, m: int) -> WeylSymbol:
    """Sum word coefficients by letter content; constant slots keep their labels."""
    out = []
    for w, c in p.items():
        labels = [l for l in w if isinstance(l, str)]
        if labels and len(w) > 1:
            raise SymbolError(f"word {w} mixes constant slots with other letters")
        if labels:
            out.append((((0,) * m, (), labels[0]), c))
            continue
        alpha = [0] * m
        for l in w:
            if l >= m:
                raise SymbolError(f"letter e{l + 1} out of range for m={m}")
            alpha[l] += 1
        out.append(((tuple(alpha), (), None), c))
    return WeylSymbol(m, 0, out)


def compile_nc(p: NCPolynomial) -> list[tuple[complex, Word]]:
    """Float coefficients paired with words, in a fixed order."""
    return [(complex(c), w) for w, c in sorted(p.items(), key=lambda kv: (len(kv[0]), [str(l) for l in kv[0]]))]


def eval_compiled(
    compiled: Sequence[tuple[complex, Word]],
    X: np.ndarray,
    consts: Mapping[str, np.ndarray] | None = None,
    cache: dict | None = None,
) -> np.ndarray:
    m, n, _ = X.shape
    consts = consts or {}
    if cache is None:
        cache = {}
    cache.setdefault((), np.eye(n, dtype=complex))
    out = np.zeros((n, n), dtype=complex)
    for c, w in compiled:
        prod = cache.get(w)
        if prod is None:
            k = len(w)
            while w[:k] not in cache:
                k -= 1
            prod = cache[w[:k]]
            for j in range(k, len(w)):
                letter = w[j]
                if isinstance(letter, str):
                    M = consts.get(letter)
                    if M is None:
                        raise SymbolError(f"missing constant matrix for label {letter!r}")
                    M = np.asarray(M, dtype=complex)
                    if M.shape != (n, n):
                        raise DimensionError(f"constant {letter!r} has shape {M.shape}, expected {(n, n)}")
                else:
                    if letter >= m:
                        raise DimensionError(f"letter e{letter + 1} exceeds tuple length {m}")
                    M = X[letter]
                prod = prod @ M
                cache[w[: j + 1]] = prod
        out += c * prod
    return out


def eval_nc(p: NCPolynomial, X, consts: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
    """Evaluate ``p`` on the matrix tuple ``X``; words become ordered products."""
    X = as_matrix_tuple(X)
    return eval_compiled(compile_nc(p), X, consts)


def scalar_restrict(f: WeylSymbol, x: Sequence, u: Sequence = (), consts: Mapping[str, object] | None = None) -> complex:
    """Plain commutative evaluation of ``f`` at state ``x`` and controls ``u``."""
    if len(x) != f.m or len(u) != f.p:
        raise SymbolError(f"expected x of length {f.m} and u of length {f.p}, got {len(x)} and {len(u)}")
    x = [complex(v) for v in x]
    u = [complex(v) for v in u]
    consts = consts or {}
    total = 0j
    for (s, ctrl, lab), c in f.items():
        term = complex(c)
        for xi, a in zip(x, s):
            if a:
                term *= xi ** a
        for ui, b in zip(u, ctrl):
            if b:
                term *= ui ** b
        if lab is not None:
            if lab not in consts:
                raise SymbolError(f"missing value for constant {lab!r}")
            term *= complex(consts[lab])
        total += term
    return total


def random_symbol(rng: np.random.Generator, m: int, p: int = 0, degree: int = 4, density: float = 0.5, max_control_degree: int = 2) -> WeylSymbol:
    """Random symbol with small Gaussian-integer-over-8 coefficients."""
    terms = []
    for s in monomials(m, degree):
        if rng.random() < density:
            ctrl = tuple(int(v) for v in rng.integers(0, max_control_degree + 1, size=p)) if p else ()
            re, im = rng.integers(-8, 9, size=2)
            terms.append(((s, ctrl, None), GaussRational(Fraction(int(re), 8), Fraction(int(im), 8))))
    return WeylSymbol(m, p, terms)


def monomials(m: int, degree: int) -> list[MultiIndex]:
    """All multi-indices of length ``m`` with total degree at most ``degree``."""
    out: list[MultiIndex] = []
    # graded, then lexicographically descending in e1
    for d in range(degree + 1):
        out.extend(_compositions(m, d))
    return out


def _compositions(m: int, d: int) -> list[MultiIndex]:
    if m == 1:
        return [(d,)]
    out = []
    for a in range(d, -1, -1):
        for rest in _compositions(m - 1, d - a):
            out.append((a,) + rest)
    return out
