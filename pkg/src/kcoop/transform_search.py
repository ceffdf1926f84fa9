"""Permutation/signature search for canonical k-positivity patterns.

A transform ``(P, S)`` acts on a sign matrix as ``P S A S P'``: first each
variable ``i`` with ``S[i] = -1`` is negated, then variable ``i`` is moved
to position ``P[i]``.

Two routes decide whether such a transform exists:

* :func:`classify` builds witnesses constructively from the influence
  graph (negation propagation, then walking the path or cycle), and
* :func:`enumerate_all_witnesses` tries all ``n! 2^n`` transforms.

The second is the oracle for the first and shares no code with it beyond
the template definition.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .influence_graph import (
    EdgeSign,
    InfluenceGraph,
    Topology,
    _skeleton_topology,
    build_graph,
    check_degree_constraint,
    check_sign_symmetric,
    connected_components,
    count_negative_edges,
    pair_signs,
    walk_order,
    zeta,
)
from .sign_pattern import (
    CanonicalParity,
    SignMatrix,
    SignPatternError,
    SignSymbol,
    matches_canonical,
)

__all__ = [
    "Permutation",
    "Signature",
    "Transform",
    "Verdict",
    "Classification",
    "SearchError",
    "InternalCheckError",
    "apply_transform",
    "classify",
    "find_signature",
    "find_permutations",
    "enumerate_all_witnesses",
    "witness_exists",
    "count_witness_permutations",
    "MAX_ORACLE_N",
]

MAX_ORACLE_N = 9


class SearchError(ValueError):
    """A precondition of the constructive search does not hold."""


class InternalCheckError(RuntimeError):
    """A constructed witness failed re-verification."""


@dataclass(frozen=True, order=True)
class Permutation:
    """``mapping[i]`` is the new (0-based) index of old variable ``i``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(v) for v in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise SearchError(f"{mapping} is not a permutation of 0..{len(mapping) - 1}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_relabeling(cls, order: Sequence[int]) -> "Permutation":
        """From ``order[p]`` = old variable placed at new position ``p``."""
        mapping = [0] * len(order)
        for pos, old in enumerate(order):
            mapping[old] = pos
        return cls(tuple(mapping))

    @property
    def n(self) -> int:
        return len(self.mapping)

    def relabeling(self) -> tuple[int, ...]:
        order = [0] * self.n
        for old, new in enumerate(self.mapping):
            order[new] = old
        return tuple(order)

    def inverse(self) -> "Permutation":
        return Permutation(self.relabeling())

    def then(self, other: "Permutation") -> "Permutation":
        """Apply ``self`` first, then ``other``."""
        return Permutation(tuple(other.mapping[v] for v in self.mapping))

    def matrix(self) -> np.ndarray:
        p = np.zeros((self.n, self.n), dtype=int)
        for old, new in enumerate(self.mapping):
            p[new, old] = 1
        return p


@dataclass(frozen=True, order=True)
class Signature:
    signs: tuple[int, ...]

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (1, -1) for s in signs):
            raise SearchError(f"signature entries must be +1 or -1, got {signs}")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def identity(cls, n: int) -> "Signature":
        return cls((1,) * n)

    @property
    def n(self) -> int:
        return len(self.signs)

    def is_identity(self) -> bool:
        return all(s == 1 for s in self.signs)

    def matrix(self) -> np.ndarray:
        return np.diag(self.signs)


@dataclass(frozen=True, order=True)
class Transform:
    """The coordinate change ``y = P S x``."""

    permutation: Permutation
    signature: Signature

    def __post_init__(self):
        if self.permutation.n != self.signature.n:
            raise SearchError("permutation and signature sizes differ")

    @classmethod
    def identity(cls, n: int) -> "Transform":
        return cls(Permutation.identity(n), Signature.identity(n))

    @classmethod
    def of(cls, mapping: Sequence[int], signs: Optional[Sequence[int]] = None) -> "Transform":
        signs = (1,) * len(mapping) if signs is None else signs
        return cls(Permutation(tuple(mapping)), Signature(tuple(signs)))

    @property
    def n(self) -> int:
        return self.permutation.n

    def then(self, other: "Transform") -> "Transform":
        """Apply ``self`` first, then ``other``.

        ``P2 S2 P1 S1 = (P2 P1) (S1 * S2 relabeled through P1)``.
        """
        m1 = self.permutation.mapping
        signs = tuple(s1 * other.signature.signs[m1[i]] for i, s1 in enumerate(self.signature.signs))
        return Transform(self.permutation.then(other.permutation), Signature(signs))

    def matrix(self) -> np.ndarray:
        return self.permutation.matrix() @ self.signature.matrix()

    def apply_to_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.empty_like(x)
        y[list(self.permutation.mapping)] = x * np.asarray(self.signature.signs).reshape(
            (-1,) + (1,) * (x.ndim - 1)
        )
        return y

    def to_json(self) -> dict:
        return {
            "permutation": [v + 1 for v in self.permutation.mapping],
            "signature": list(self.signature.signs),
        }


class Verdict(str, enum.Enum):
    ODD_EVEN = "structurally-odd-even-positive"
    ODD = "structurally-odd-positive"
    EVEN = "structurally-even-positive"
    NONE = "not-structurally-k-positive"

    @property
    def positive(self) -> bool:
        return self is not Verdict.NONE

    @property
    def admits_odd(self) -> bool:
        return self in (Verdict.ODD_EVEN, Verdict.ODD)

    @property
    def admits_even(self) -> bool:
        return self in (Verdict.ODD_EVEN, Verdict.EVEN)


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    odd_witnesses: tuple[Transform, ...] = ()
    even_witnesses: tuple[Transform, ...] = ()
    diagnostics: tuple[str, ...] = ()
    zeta: int = 0
    negative_edges: int = 0
    topology: str = "other"

    @property
    def witnesses(self) -> tuple[Transform, ...]:
        return self.odd_witnesses + self.even_witnesses

    def witnesses_for(self, parity) -> tuple[Transform, ...]:
        parity = CanonicalParity(parity)
        if parity is CanonicalParity.ODD:
            return self.odd_witnesses
        if parity is CanonicalParity.EVEN:
            return self.even_witnesses
        return tuple(t for t in self.odd_witnesses if t in set(self.even_witnesses))

    def to_json(self) -> dict:
        ws = [dict(t.to_json(), parity="odd") for t in self.odd_witnesses]
        ws += [dict(t.to_json(), parity="even") for t in self.even_witnesses]
        return {
            "verdict": self.verdict.value,
            "witnesses": ws,
            "diagnostics": list(self.diagnostics),
            "zeta": self.zeta,
            "negative_edges": self.negative_edges,
            "topology": self.topology,
        }


def apply_transform(m: SignMatrix, t: Transform) -> SignMatrix:
    n = m.n
    if t.n != n:
        raise SearchError(f"transform has size {t.n} but the matrix is {n}x{n}")
    mp = t.permutation.mapping
    s = t.signature.signs
    rows: list[list[SignSymbol]] = [[SignSymbol.ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sym = m.entries[i][j]
            if s[i] * s[j] < 0:
                sym = sym.negated()
            rows[mp[i]][mp[j]] = sym
    return SignMatrix(tuple(tuple(r) for r in rows))


def _require_searchable(g: InfluenceGraph) -> None:
    if g.has_indeterminate():
        raise SearchError("graph has indeterminate-sign edges")
    if not check_degree_constraint(g):
        raise SearchError("graph violates the degree constraint")
    if not check_sign_symmetric(g):
        raise SearchError("graph is not sign-symmetric")


def find_signature(g: InfluenceGraph) -> Signature:
    """Negations that clear every removable ``-`` neighbor pair.

    Each component ends with zeta 0, except cycle components with an odd
    number of ``-`` pairs, which keep exactly one. A vertex whose pairs are
    all ``-`` is negated outright; otherwise negation is pushed along the
    chain of neighbors until it meets another ``-`` pair or a path end.
    """
    _require_searchable(g)
    adj = g.skeleton()
    minus = {p for p, s in pair_signs(g).items() if s is EdgeSign.MINUS}
    signs = [1] * g.n

    def flip(v: int) -> None:
        signs[v] = -signs[v]
        for w in adj[v]:
            minus.symmetric_difference_update({frozenset((v, w))})

    def comp_minus(comp) -> int:
        return sum(1 for p in minus if next(iter(p)) in comp)

    for comp in connected_components(g):
        if len(comp) == 1:
            continue
        is_cycle = _skeleton_topology(adj, comp) is Topology.CYCLE
        target = comp_minus(comp) % 2 if is_cycle else 0
        while comp_minus(comp) > target:
            full = [
                v for v in sorted(comp)
                if all(frozenset((v, w)) in minus for w in adj[v])
            ]
            if full:
                flip(full[0])
                continue
            start_count = comp_minus(comp)
            v = min(u for p in minus for u in p if u in comp)
            chain = {v}
            flip(v)
            prev, cur = None, v
            while comp_minus(comp) >= start_count:
                ahead = [w for w in adj[cur] if w != prev and frozenset((cur, w)) in minus]
                if len(ahead) != 1 or ahead[0] in chain:
                    raise InternalCheckError("negation propagation did not terminate")
                prev, cur = cur, ahead[0]
                chain.add(cur)
                flip(cur)
    return Signature(tuple(signs))


def _with_signature(g: InfluenceGraph, s: Signature) -> dict[frozenset, EdgeSign]:
    out = {}
    for pair, sign in pair_signs(g).items():
        u, w = tuple(pair)
        out[pair] = sign.flipped() if s.signs[u] * s.signs[w] < 0 else sign
    return out


def _placements(g: InfluenceGraph, parity: CanonicalParity) -> list[Permutation]:
    """All permutations placing a connected path/cycle on the template."""
    n = g.n
    order = walk_order(g)
    signs = pair_signs(g)
    found = set()
    for offset in range(n):
        for step in (1, -1):
            pos = {v: (offset + step * i) % n for i, v in enumerate(order)}
            ok = True
            for pair, sign in signs.items():
                u, w = tuple(pair)
                pu, pw = pos[u], pos[w]
                if {pu, pw} == {0, n - 1}:
                    if parity is CanonicalParity.BOTH:
                        ok = False
                    elif parity is CanonicalParity.ODD:
                        ok = sign is EdgeSign.PLUS
                    else:
                        ok = sign is EdgeSign.MINUS
                else:
                    ok = abs(pu - pw) == 1 and sign is EdgeSign.PLUS
                if not ok:
                    break
            if ok:
                found.add(tuple(pos[v] for v in range(n)))
    return [Permutation(m) for m in sorted(found)]


def _require_connected(g: InfluenceGraph) -> None:
    if len(connected_components(g)) != 1:
        raise SearchError("graph is not connected")


def find_permutations(g: InfluenceGraph, parity) -> list[Permutation]:
    """Every relabeling putting ``g`` on the template of ``parity``.

    Only permutations are searched; apply :func:`find_signature` first when
    the graph has more ``-`` pairs than the parity allows. The result is
    sorted by mapping.
    """
    parity = CanonicalParity(parity)
    _require_searchable(g)
    _require_connected(g)
    if g.n < 4:
        raise SearchError("canonical patterns need n >= 4")
    perms = _placements(g, parity)
    if not perms:
        raise SearchError(
            f"no {parity.value}-parity relabeling: zeta={zeta(g)}, "
            f"topology={_skeleton_topology(g.skeleton(), range(g.n)).value}"
        )
    return perms


def _forest_placement(g: InfluenceGraph) -> Permutation:
    """Lay path components end to end on positions 0..n-1."""
    order = []
    for comp in connected_components(g):
        order.extend(walk_order(g, comp))
    return Permutation.from_relabeling(order)


def _verified(m: SignMatrix, witnesses, parity: CanonicalParity) -> tuple[Transform, ...]:
    for t in witnesses:
        if not matches_canonical(apply_transform(m, t), parity):
            raise InternalCheckError(
                f"constructed {parity.value} witness {t.to_json()} does not match the template"
            )
    return tuple(witnesses)


def classify(m: SignMatrix) -> Classification:
    """Decide structural odd/even positivity and build witnesses."""
    n = m.n
    if n < 4:
        raise SignPatternError(f"classification needs n >= 4, got n={n}")
    g = build_graph(m)
    z = zeta(g)
    neg = count_negative_edges(g)
    comps = connected_components(g)
    adj = g.skeleton()
    connected = len(comps) == 1
    topo = _skeleton_topology(adj, range(n)).value if connected else "disconnected"
    common = dict(zeta=z, negative_edges=neg, topology=topo)

    problems = []
    if g.has_indeterminate():
        problems.append("indeterminate-edge: an off-diagonal * entry cannot certify a sign")
    if not check_degree_constraint(g):
        heavy = [v + 1 for v in range(n) if len(adj[v]) > 2]
        problems.append(f"degree-constraint: vertices {heavy} have more than two neighbors")
    if not g.has_indeterminate() and not check_sign_symmetric(g):
        problems.append("sign-symmetry: some pair has a + edge one way and a - edge the other")
    if check_degree_constraint(g) and not connected:
        short = [
            sorted(v + 1 for v in c) for c in comps
            if len(c) > 2 and _skeleton_topology(adj, c) is Topology.CYCLE
        ]
        if short:
            problems.append(f"connectivity: cycle component(s) {short} do not span all {n} vertices")
    if problems:
        if not connected:
            problems.append(_component_summary(g, comps))
        return Classification(Verdict.NONE, diagnostics=tuple(problems), **common)

    notes = []
    sig = find_signature(g)
    g_signed = build_graph(apply_transform(m, Transform(Permutation.identity(n), sig)))
    if not connected:
        t = Transform(_forest_placement(g_signed), sig)
        if not g.edges:
            notes.append("vacuous: no off-diagonal entries, every transform matches")
        notes.append(_component_summary(g, comps))
        return Classification(
            Verdict.ODD_EVEN,
            odd_witnesses=_verified(m, [t], CanonicalParity.ODD),
            even_witnesses=_verified(m, [t], CanonicalParity.EVEN),
            diagnostics=tuple(notes),
            **common,
        )

    def witnesses(parity):
        perms = _placements(g_signed, parity)
        return _verified(m, [Transform(p, sig) for p in perms], parity)

    if topo == Topology.PATH.value:
        if z % 2:
            notes.append(
                "path topology with odd zeta: negating an end vertex changes zeta parity, "
                "so both parities are reachable"
            )
        notes.append(
            f"path topology: odd-parity placements number 2n={2 * n} (the path may wrap "
            "through the corner), even-parity placements number 2"
        )
        return Classification(
            Verdict.ODD_EVEN,
            odd_witnesses=witnesses(CanonicalParity.ODD),
            even_witnesses=witnesses(CanonicalParity.EVEN),
            diagnostics=tuple(notes),
            **common,
        )
    # connected, degree <= 2 and not a path: a Hamiltonian cycle
    if zeta(g_signed) == 0:
        return Classification(
            Verdict.ODD, odd_witnesses=witnesses(CanonicalParity.ODD),
            diagnostics=tuple(notes), **common,
        )
    return Classification(
        Verdict.EVEN, even_witnesses=witnesses(CanonicalParity.EVEN),
        diagnostics=tuple(notes), **common,
    )


def _component_summary(g: InfluenceGraph, comps) -> str:
    adj = g.skeleton()
    parts = []
    for c in comps:
        shape = "isolated" if len(c) == 1 else _skeleton_topology(adj, c).value
        parts.append(f"{sorted(v + 1 for v in c)}:{shape}")
    return "components: " + ", ".join(parts)


# --- exhaustive oracle ---------------------------------------------------

_CODE = {SignSymbol.ZERO: 0, SignSymbol.PLUS: 1, SignSymbol.MINUS: -1, SignSymbol.STAR: 2}
_CHUNK = 40320


@functools.lru_cache(maxsize=None)
def _all_perms(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


@functools.lru_cache(maxsize=None)
def _all_signs(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int8)


def _template(n: int, parity: CanonicalParity) -> np.ndarray:
    # 0 forced zero, +1 needs >= 0, -1 needs <= 0; diagonal free (never consulted)
    t = np.zeros((n, n), dtype=np.int8)
    for i in range(n - 1):
        t[i, i + 1] = t[i + 1, i] = 1
    t[0, n - 1] = t[n - 1, 0] = {
        CanonicalParity.ODD: 1, CanonicalParity.EVEN: -1, CanonicalParity.BOTH: 0
    }[parity]
    return t


def _oracle_blocks(m: SignMatrix, parity):
    """Yield ``(perm_rows, sign_mask)`` blocks of matching transforms."""
    n = m.n
    if n < 4 or n > MAX_ORACLE_N:
        raise SearchError(f"exhaustive search needs 4 <= n <= {MAX_ORACLE_N}, got n={n}")
    parity = CanonicalParity(parity)
    codes = np.array([[_CODE[e] for e in row] for row in m.entries], dtype=np.int8)
    np.fill_diagonal(codes, 0)
    if np.any(codes == 2):
        return
    nz = codes != 0
    tmpl = _template(n, parity)
    perms = _all_perms(n)
    signs = _all_signs(n)
    outer = signs[:, :, None] * signs[:, None, :]
    ii, jj = np.nonzero(nz)
    a = codes[ii, jj]
    for start in range(0, len(perms), _CHUNK):
        block = perms[start:start + _CHUNK]
        # required sign at the image of each nonzero entry
        req = tmpl[block[:, ii], block[:, jj]]
        alive = np.all(req != 0, axis=1)
        if not alive.any():
            continue
        rows = np.nonzero(alive)[0]
        need = req[rows] * a  # (p, e): sign the product s_i s_j must take
        got = outer[:, ii, jj]  # (s, e)
        ok = np.all(got[None, :, :] == need[:, None, :], axis=2)
        yield block[rows], ok


def enumerate_all_witnesses(m: SignMatrix, parity) -> list[Transform]:
    """Brute force over all ``n! 2^n`` transforms (``4 <= n <= 9``)."""
    out = []
    signs = _all_signs(m.n)
    for perm_rows, ok in _oracle_blocks(m, parity):
        for p_idx, s_idx in zip(*np.nonzero(ok)):
            out.append(Transform.of(perm_rows[p_idx], signs[s_idx]))
    out.sort()
    return out


def witness_exists(m: SignMatrix, parity) -> bool:
    return any(ok.any() for _, ok in _oracle_blocks(m, parity))


def oracle_counts(m: SignMatrix, parity) -> tuple[int, int]:
    """``(identity-signature permutations, all transforms)`` that match."""
    ident = total = 0
    for _, ok in _oracle_blocks(m, parity):
        total += int(ok.sum())
        ident += int(ok[:, 0].sum())  # row 0 of _all_signs is all +1
    return ident, total


def count_witness_permutations(m: SignMatrix, parity) -> Optional[int]:
    """Constructive count of permutations (no signature) giving ``parity``.

    ``None`` when the graph is disconnected, where the walk construction
    does not enumerate placements.
    """
    parity = CanonicalParity(parity)
    if m.n < 4:
        raise SignPatternError("canonical patterns need n >= 4")
    g = build_graph(m)
    if g.has_indeterminate() or not check_degree_constraint(g) or not check_sign_symmetric(g):
        return 0
    comps = connected_components(g)
    if len(comps) != 1:
        adj = g.skeleton()
        if any(len(c) > 2 and _skeleton_topology(adj, c) is Topology.CYCLE for c in comps):
            return 0
        return None
    return len(_placements(g, parity))
