"""Symbolic sign matrices and the canonical k-positivity templates.

A sign matrix has entries drawn from ``{*, +, -, 0}``. ``*`` is a
"don't care" entry. The canonical templates are tridiagonal with corner
entries at ``(0, n-1)`` and ``(n-1, 0)``; the corner sign separates the odd
case (``+``) from the even case (``-``).

Indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

__all__ = [
    "SignSymbol",
    "SignMatrix",
    "CanonicalParity",
    "SignPatternError",
    "DEFAULT_SIGN_TOL",
    "parse_sign_matrix",
    "serialize_sign_matrix",
    "sign_pattern_of",
    "canonical_matrix",
    "matches_canonical",
    "canonical_parity",
    "is_metzler",
]

DEFAULT_SIGN_TOL = 1e-9


class SignPatternError(ValueError):
    """Raised for malformed sign matrices or out-of-range requests."""


class SignSymbol(str, enum.Enum):
    STAR = "star"
    PLUS = "plus"
    MINUS = "minus"
    ZERO = "zero"

    @property
    def token(self) -> str:
        return _TO_TOKEN[self]

    @classmethod
    def from_token(cls, token: str) -> "SignSymbol":
        try:
            return _FROM_TOKEN[token]
        except KeyError:
            raise SignPatternError(f"unknown sign token {token!r}") from None

    def negated(self) -> "SignSymbol":
        if self is SignSymbol.PLUS:
            return SignSymbol.MINUS
        if self is SignSymbol.MINUS:
            return SignSymbol.PLUS
        return self


_TO_TOKEN = {
    SignSymbol.STAR: "*",
    SignSymbol.PLUS: "+",
    SignSymbol.MINUS: "-",
    SignSymbol.ZERO: "0",
}
_FROM_TOKEN = {v: k for k, v in _TO_TOKEN.items()}
# A couple of common unicode spellings.
_FROM_TOKEN["−"] = SignSymbol.MINUS


class CanonicalParity(str, enum.Enum):
    ODD = "odd"
    EVEN = "even"
    BOTH = "both"


@dataclass(frozen=True)
class SignMatrix:
    """Immutable ``n x n`` grid of :class:`SignSymbol`."""

    entries: tuple[tuple[SignSymbol, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(SignSymbol(e) for e in row) for row in self.entries)
        n = len(rows)
        if n == 0:
            raise SignPatternError("sign matrix must have at least one row")
        for row in rows:
            if len(row) != n:
                raise SignPatternError(
                    f"sign matrix is not square: {n} rows but a row of length {len(row)}"
                )
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "SignMatrix":
        """Build from rows of symbols, symbol names or text tokens."""
        out = []
        for row in rows:
            cells = []
            for e in row:
                if isinstance(e, SignSymbol):
                    cells.append(e)
                elif e in _FROM_TOKEN:
                    cells.append(_FROM_TOKEN[e])
                else:
                    try:
                        cells.append(SignSymbol(e))
                    except ValueError:
                        raise SignPatternError(f"unknown sign entry {e!r}") from None
            out.append(tuple(cells))
        return cls(tuple(out))

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: tuple[int, int]) -> SignSymbol:
        i, j = ij
        return self.entries[i][j]

    def replace(self, changes: dict[tuple[int, int], SignSymbol]) -> "SignMatrix":
        rows = [list(r) for r in self.entries]
        for (i, j), sym in changes.items():
            rows[i][j] = SignSymbol(sym)
        return SignMatrix(tuple(tuple(r) for r in rows))

    def to_text(self) -> str:
        return serialize_sign_matrix(self)

    def to_json(self) -> dict:
        return {"n": self.n, "entries": [[e.value for e in row] for row in self.entries]}

    @classmethod
    def from_json(cls, doc: dict) -> "SignMatrix":
        try:
            entries = doc["entries"]
        except (KeyError, TypeError):
            raise SignPatternError("sign matrix JSON needs an 'entries' field") from None
        m = cls.from_rows(entries)
        if "n" in doc and doc["n"] != m.n:
            raise SignPatternError(f"declared n={doc['n']} but entries are {m.n}x{m.n}")
        return m

    def __str__(self) -> str:
        return self.to_text()


def parse_sign_matrix(text: str) -> SignMatrix:
    """Parse whitespace-separated ``* + - 0`` tokens, one row per line."""
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    if not rows:
        raise SignPatternError("empty sign matrix text")
    return SignMatrix(tuple(tuple(SignSymbol.from_token(t) for t in row) for row in rows))


def serialize_sign_matrix(m: SignMatrix) -> str:
    return "\n".join(" ".join(e.token for e in row) for row in m.entries)


def sign_pattern_of(a: Sequence[Sequence[float]], tol: float = DEFAULT_SIGN_TOL) -> SignMatrix:
    """Sign pattern of a numeric square matrix; the diagonal is always ``*``."""
    if tol < 0:
        raise SignPatternError("tol must be non-negative")
    rows = [list(r) for r in a]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise SignPatternError("numeric matrix must be square and non-empty")
    out = []
    for i, row in enumerate(rows):
        cells = []
        for j, v in enumerate(row):
            v = float(v)
            if not math.isfinite(v):
                raise SignPatternError(f"non-finite entry at ({i}, {j})")
            if i == j:
                cells.append(SignSymbol.STAR)
            elif abs(v) <= tol:
                cells.append(SignSymbol.ZERO)
            elif v > 0:
                cells.append(SignSymbol.PLUS)
            else:
                cells.append(SignSymbol.MINUS)
        out.append(tuple(cells))
    return SignMatrix(tuple(out))


def _corner(i: int, j: int, n: int) -> bool:
    return {i, j} == {0, n - 1}


def _check_dim(n: int) -> None:
    if n < 4:
        raise SignPatternError(f"canonical patterns need n >= 4, got n={n}")


def _parity_of(parity) -> CanonicalParity:
    if isinstance(parity, int) and not isinstance(parity, bool):
        return CanonicalParity.ODD if parity % 2 else CanonicalParity.EVEN
    return CanonicalParity(parity)


def canonical_matrix(n: int, parity) -> SignMatrix:
    """The template for ``parity`` (``'odd'``/``'even'`` or an integer ``k``).

    ``'both'`` gives the tridiagonal template with zero corners.
    """
    _check_dim(n)
    parity = _parity_of(parity)
    corner = {
        CanonicalParity.ODD: SignSymbol.PLUS,
        CanonicalParity.EVEN: SignSymbol.MINUS,
        CanonicalParity.BOTH: SignSymbol.ZERO,
    }[parity]
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if i == j:
                row.append(SignSymbol.STAR)
            elif _corner(i, j, n):
                row.append(corner)
            elif abs(i - j) == 1:
                row.append(SignSymbol.PLUS)
            else:
                row.append(SignSymbol.ZERO)
        rows.append(tuple(row))
    return SignMatrix(tuple(rows))


def _allowed(sym: SignSymbol, i: int, j: int, n: int, corner_ok: frozenset) -> bool:
    if i == j:
        return True
    if _corner(i, j, n):
        return sym in corner_ok
    if abs(i - j) == 1:
        return sym in (SignSymbol.PLUS, SignSymbol.ZERO)
    return sym is SignSymbol.ZERO


_CORNER_OK = {
    CanonicalParity.ODD: frozenset({SignSymbol.PLUS, SignSymbol.ZERO}),
    CanonicalParity.EVEN: frozenset({SignSymbol.MINUS, SignSymbol.ZERO}),
    CanonicalParity.BOTH: frozenset({SignSymbol.ZERO}),
}


def matches_canonical(m: SignMatrix, parity) -> bool:
    """True iff every entry of ``m`` is consistent with the canonical template.

    Template signs are read as inequalities, so a ``0`` satisfies any sign
    position. An off-diagonal ``*`` never matches.
    """
    n = m.n
    _check_dim(n)
    corner_ok = _CORNER_OK[_parity_of(parity)]
    return all(
        _allowed(m.entries[i][j], i, j, n, corner_ok) for i in range(n) for j in range(n)
    )


def canonical_parity(m: SignMatrix) -> Optional[CanonicalParity]:
    odd = matches_canonical(m, CanonicalParity.ODD)
    even = matches_canonical(m, CanonicalParity.EVEN)
    if odd and even:
        return CanonicalParity.BOTH
    if odd:
        return CanonicalParity.ODD
    if even:
        return CanonicalParity.EVEN
    return None


def is_metzler(m: SignMatrix) -> bool:
    """No off-diagonal entry may be ``-`` or ``*``."""
    n = m.n
    return all(
        m.entries[i][j] in (SignSymbol.PLUS, SignSymbol.ZERO)
        for i in range(n)
        for j in range(n)
        if i != j
    )
