"""Lotka-Volterra systems ``x_i' = x_i (r_i + sum_j a_ij x_j)``."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .influence_graph import build_graph, check_degree_constraint, check_sign_symmetric
from .sign_pattern import DEFAULT_SIGN_TOL, SignPatternError, sign_pattern_of
from .transform_search import Classification, Transform, classify
from .verification import (
    DEFAULT_DT,
    DEFAULT_ZERO_TOL,
    InvarianceReport,
    Trajectory,
    _check_k,
    in_Pk_minus,
    integrate_field,
    scan_invariance,
)

__all__ = [
    "LVSystem",
    "LVError",
    "lv_vector_field",
    "lv_jacobian",
    "lv_structural_check",
    "literal_conditions",
    "check_k_cooperative_empirical",
    "sample_pairs",
    "load_lv",
    "simulate",
    "SAMPLE_BOX",
    "BLOWUP",
]

SAMPLE_BOX = (0.1, 2.0)
BLOWUP = 1e6


class LVError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LVSystem:
    r: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        a = np.asarray(self.A, dtype=float)
        if r.ndim != 1:
            raise LVError("r must be a vector")
        if a.shape != (r.size, r.size):
            raise LVError(f"A has shape {a.shape} but r has length {r.size}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(a))):
            raise LVError("r and A must be finite")
        r.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "A", a)

    @property
    def n(self) -> int:
        return self.r.size

    def field(self, t, x):
        """Vector field; ``x`` may hold states as columns."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return x * (self.r + self.A @ x)
        return x * (self.r[:, None] + self.A @ x)

    def to_json(self) -> dict:
        return {"r": self.r.tolist(), "A": self.A.tolist()}


def _state(sys: LVSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise LVError(f"state has shape {x.shape}, expected ({sys.n},)")
    return x


def lv_vector_field(sys: LVSystem, x) -> np.ndarray:
    return sys.field(0.0, _state(sys, x))


def lv_jacobian(sys: LVSystem, x) -> np.ndarray:
    """``J_ij = a_ij x_i`` off the diagonal, ``J_ii = r_i + (A x)_i + a_ii x_i``."""
    x = _state(sys, x)
    jac = sys.A * x[:, None]
    jac[np.diag_indices(sys.n)] = sys.r + sys.A @ x + np.diag(sys.A) * x
    return jac


def literal_conditions(sys: LVSystem, tol: float = DEFAULT_SIGN_TOL) -> dict:
    """The row-count and sign-product conditions exactly as stated for LV."""
    a = np.where(np.abs(sys.A) > tol, sys.A, 0.0)
    off = a - np.diag(np.diag(a))
    row_counts = np.count_nonzero(off, axis=1)
    products = off * off.T
    return {
        "row_condition": bool(np.all(row_counts <= 2)),
        "sign_product_condition": bool(np.all(products >= 0)),
        "rows_over_two": [int(i) + 1 for i in np.nonzero(row_counts > 2)[0]],
    }


def lv_structural_check(sys: LVSystem, tol: float = DEFAULT_SIGN_TOL) -> Classification:
    """Classify the off-diagonal sign pattern of ``A``.

    On the open positive orthant the Jacobian has the same off-diagonal
    signs as ``A``, so the pattern of ``A`` decides. Literal row/product
    conditions are appended to the diagnostics, with a note when they
    disagree with the graph-level checks.
    """
    if sys.n < 4:
        raise SignPatternError(f"structural check needs n >= 4, got n={sys.n}")
    pattern = sign_pattern_of(sys.A, tol)
    result = classify(pattern)
    lit = literal_conditions(sys, tol)
    g = build_graph(pattern)
    graph_ok = check_degree_constraint(g) and check_sign_symmetric(g)
    literal_ok = lit["row_condition"] and lit["sign_product_condition"]
    notes = [
        f"row-condition: {'holds' if lit['row_condition'] else 'fails'}",
        f"sign-product-condition: {'holds' if lit['sign_product_condition'] else 'fails'}",
    ]
    if literal_ok != graph_ok:
        notes.append(
            "literal-vs-graph: the row condition "
            + ("holds but the neighbor-set degree constraint fails" if literal_ok
               else "fails but the graph conditions hold")
        )
    return Classification(
        result.verdict,
        odd_witnesses=result.odd_witnesses,
        even_witnesses=result.even_witnesses,
        diagnostics=result.diagnostics + tuple(notes),
        zeta=result.zeta,
        negative_edges=result.negative_edges,
        topology=result.topology,
    )


def sample_pairs(n: int, t: Transform, k: int, n_pairs: int, seed: int,
                 box=SAMPLE_BOX, max_tries: int = 100_000) -> np.ndarray:
    """Initial pairs ``(a, b)`` in ``box^n`` with ``P S (a - b)`` in ``P^k_-``.

    Returned as an ``(n, 2 * n_pairs)`` array with ``a`` and ``b`` in
    alternating columns. Uses rejection sampling with one derived seed per
    pair.
    """
    lo, hi = box
    out = np.empty((n, 2 * n_pairs))
    for p, ss in enumerate(np.random.SeedSequence(seed).spawn(n_pairs)):
        rng = np.random.default_rng(ss)
        for _ in range(max_tries):
            a = rng.uniform(lo, hi, n)
            b = rng.uniform(lo, hi, n)
            if in_Pk_minus(t.apply_to_vector(a - b), k):
                break
        else:
            raise LVError(f"could not sample a pair in P^{k}_- after {max_tries} tries")
        out[:, 2 * p] = a
        out[:, 2 * p + 1] = b
    return out


def check_k_cooperative_empirical(
    sys: LVSystem,
    t: Transform,
    k: int,
    n_pairs: int = 100,
    horizon: float = 5.0,
    dt: float = DEFAULT_DT,
    seed: int = 42,
    zero_tol: float = DEFAULT_ZERO_TOL,
    pairs: np.ndarray = None,
) -> InvarianceReport:
    """Monte-Carlo check that ``y = P S x`` differences stay in ``P^k_-``.

    Both solutions of every pair are integrated together; the observed
    vector is ``P S (x(t, a) - x(t, b))``. Pairs whose states exceed
    ``BLOWUP`` are reported as diverged and left out.
    """
    _check_k(k, sys.n)
    if t.n != sys.n:
        raise LVError("transform size does not match the system")
    if pairs is None:
        pairs = sample_pairs(sys.n, t, k, n_pairs, seed)
    mapping = np.asarray(t.permutation.mapping)
    signs = np.asarray(t.signature.signs, dtype=float)[:, None]

    def observe(x):
        z = (x[:, 0::2] - x[:, 1::2]) * signs
        y = np.empty_like(z)
        y[mapping] = z
        return y

    report = scan_invariance(
        sys.field, pairs, observe, k, 0.0, horizon, dt, zero_tol,
        blowup=BLOWUP, columns_per_sample=2,
    )
    report.seed = seed
    return report


def simulate(sys: LVSystem, x0, horizon: float, dt: float = DEFAULT_DT) -> Trajectory:
    return integrate_field(sys.field, _state(sys, x0), 0.0, horizon, dt)


def _finite_number(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise LVError(f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise LVError("numbers must be finite")
    return v


def load_lv(source) -> LVSystem:
    """Load ``{"r": [...], "A": [[...], ...]}`` from a path, JSON text or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if isinstance(source, os.PathLike) or (not text.lstrip().startswith("{") and os.path.exists(text)):
            with open(source) as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LVError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "r" not in doc or "A" not in doc:
        raise LVError("LV system JSON needs 'r' and 'A' fields")
    r, a = doc["r"], doc["A"]
    if not isinstance(r, list) or not isinstance(a, list) or not all(isinstance(row, list) for row in a):
        raise LVError("'r' must be a list and 'A' a list of rows")
    r = [_finite_number(v) for v in r]
    a = [[_finite_number(v) for v in row] for row in a]
    if any(len(row) != len(a) for row in a):
        raise LVError("A must be square")
    return LVSystem(np.array(r), np.array(a).reshape(len(a), len(a)))
