"""Sign variations, fixed-step integration and empirical k-positivity checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "IntegrationError",
    "Trajectory",
    "Violation",
    "InvarianceReport",
    "s_minus",
    "s_plus",
    "batch_s_minus",
    "in_Pk_minus",
    "in_Pk_plus",
    "sample_Pk_minus",
    "rk4_steps",
    "rk4_linear_steps",
    "rk4_propagator",
    "integrate",
    "integrate_field",
    "check_k_positivity_empirical",
    "scan_invariance",
    "averaged_jacobian",
    "DEFAULT_ZERO_TOL",
    "DEFAULT_DT",
]

DEFAULT_ZERO_TOL = 1e-8
DEFAULT_DT = 1e-3
SAMPLE_DECADES = 4
_ABS_FLOOR = 1e-300


class IntegrationError(ArithmeticError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


def _nonzero_signs(x, zero_tol: float) -> list[int]:
    return [1 if v > 0 else -1 for v in x if abs(v) > zero_tol]


def s_minus(x: Sequence[float], zero_tol: float = 0.0) -> int:
    """Sign changes after deleting entries with ``|x_i| <= zero_tol``."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be non-negative")
    signs = _nonzero_signs(x, zero_tol)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def s_plus(x: Sequence[float], zero_tol: float = 0.0) -> int:
    """Most sign changes reachable by writing +1 or -1 over every zero.

    Runs of zeros are independent: ``z`` zeros at either end add ``z``;
    ``z`` zeros between nonzero ``a`` and ``b`` add ``z + 1`` when
    ``sign(b) == sign(a) * (-1)**(z + 1)`` and ``z`` otherwise.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be non-negative")
    n = len(x)
    nz = [(i, 1 if v > 0 else -1) for i, v in enumerate(x) if abs(v) > zero_tol]
    if not nz:
        return max(n - 1, 0)
    total = nz[0][0] + (n - 1 - nz[-1][0])
    for (i, a), (j, b) in zip(nz, nz[1:]):
        z = j - i - 1
        total += z + 1 if b == a * (-1) ** (z + 1) else z
    return total


def batch_s_minus(xs: np.ndarray, rel_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    """Column-wise ``s_minus`` of an ``(n, m)`` array.

    Entries at or below ``rel_tol`` times the column's largest magnitude are
    treated as zero.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    scale = np.max(np.abs(xs), axis=0)
    band = np.maximum(rel_tol * scale, _ABS_FLOOR)
    signs = np.where(np.abs(xs) > band, np.sign(xs), 0.0)
    last = np.zeros(xs.shape[1])
    count = np.zeros(xs.shape[1], dtype=int)
    for row in signs:
        live = row != 0
        count += live & (last != 0) & (row != last)
        last = np.where(live, row, last)
    return count


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")


def in_Pk_minus(x: Sequence[float], k: int, zero_tol: float = 0.0) -> bool:
    _check_k(k, len(x))
    return s_minus(x, zero_tol) <= k - 1


def in_Pk_plus(x: Sequence[float], k: int, zero_tol: float = 0.0) -> bool:
    _check_k(k, len(x))
    return s_plus(x, zero_tol) <= k - 1


def sample_Pk_minus(n: int, k: int, magnitude: float = 1.0, rng=None) -> np.ndarray:
    """Random vector with at most ``k - 1`` sign changes.

    The number of changes is uniform on ``0..k-1``; change positions are a
    uniform subset of the ``n - 1`` gaps. Magnitudes are log-uniform over
    ``SAMPLE_DECADES`` decades below ``magnitude``, so some entries sit close
    to zero, where sign-variation increases tend to show up first.
    """
    _check_k(k, n)
    if magnitude <= 0:
        raise ValueError("magnitude must be positive")
    rng = np.random.default_rng(rng)
    changes = int(rng.integers(0, k))
    cuts = set(rng.choice(n - 1, size=changes, replace=False).tolist()) if changes else set()
    sign = 1.0 if rng.random() < 0.5 else -1.0
    out = np.empty(n)
    for i in range(n):
        if i - 1 in cuts:
            sign = -sign
        out[i] = sign * magnitude * 10.0 ** (-SAMPLE_DECADES * rng.random())
    return out


# --- integration ----------------------------------------------------------

def rk4_steps(
    f: Callable[[float, np.ndarray], np.ndarray],
    x0,
    t0: float,
    t1: float,
    dt: float,
) -> Iterator[tuple[float, np.ndarray]]:
    """Classic RK4 with step ``dt``; the last step is shortened to hit ``t1``.

    Yields ``(t, x)`` starting with ``(t0, x0)``. ``x`` may carry trailing
    batch axes as long as ``f`` handles them.
    """
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.array(x0, dtype=float)
    steps = math.ceil((t1 - t0) / dt - 1e-9)
    yield t0, x
    t = t0
    for i in range(1, steps + 1):
        h = min(dt, t1 - t) if i == steps else dt
        k1 = f(t, x)
        k2 = f(t + h / 2, x + (h / 2) * k1)
        k3 = f(t + h / 2, x + (h / 2) * k2)
        k4 = f(t + h, x + h * k3)
        x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t1 if i == steps else t0 + i * dt
        yield t, x


def rk4_propagator(a: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step of ``x' = A x`` as a matrix: ``sum_{j<=4} (hA)^j / j!``."""
    ha = h * np.asarray(a, dtype=float)
    term = np.eye(ha.shape[0])
    out = term.copy()
    for j in range(1, 5):
        term = term @ ha / j
        out = out + term
    return out


def rk4_linear_steps(a, x0, t0: float, t1: float, dt: float):
    """Same iterates as :func:`rk4_steps` for constant linear ``A``, one matmul per step."""
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.array(x0, dtype=float)
    steps = math.ceil((t1 - t0) / dt - 1e-9)
    full = rk4_propagator(a, dt)
    yield t0, x
    for i in range(1, steps + 1):
        if i == steps:
            h = t1 - (t0 + (steps - 1) * dt)
            x = (full if abs(h - dt) <= 1e-15 * max(1.0, abs(t1)) else rk4_propagator(a, h)) @ x
            yield t1, x
        else:
            x = full @ x
            yield t0 + i * dt, x


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (steps, n)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        n = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x])


def integrate_field(f, x0, t0: float, t1: float, dt: float = DEFAULT_DT) -> Trajectory:
    """Integrate ``x' = f(t, x)`` recording every step."""
    times, states = [], []
    for t, x in rk4_steps(f, x0, t0, t1, dt):
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite state", t)
        times.append(t)
        states.append(x)
    return Trajectory(np.array(times), np.array(states))


def _as_matrix_function(a_of_t):
    if callable(a_of_t):
        return a_of_t
    a = np.asarray(a_of_t, dtype=float)
    return lambda t: a


def integrate(a_of_t, x0, t0: float, t1: float, dt: float = DEFAULT_DT) -> Trajectory:
    """Integrate ``x' = A(t) x``. ``a_of_t`` may be a constant matrix."""
    a_fn = _as_matrix_function(a_of_t)
    return integrate_field(lambda t, x: a_fn(t) @ x, x0, t0, t1, dt)


# --- empirical invariance -------------------------------------------------

@dataclass(frozen=True)
class Violation:
    sample: int
    t: float
    s_minus_initial: int
    s_minus: int

    def to_json(self) -> dict:
        return {
            "sample": self.sample,
            "t": self.t,
            "s_minus": self.s_minus,
            "s_minus_initial": self.s_minus_initial,
        }


@dataclass
class InvarianceReport:
    k: int
    samples_run: int
    violations: list[Violation] = field(default_factory=list)
    max_s_minus_observed: int = 0
    diverged: list[int] = field(default_factory=list)
    uncertified: int = 0
    seed: Optional[int] = None
    dt: Optional[float] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "samples": self.samples_run,
            "violations": [v.to_json() for v in self.violations],
            "seed": self.seed,
            "dt": self.dt,
            "max_s_minus_observed": self.max_s_minus_observed,
            "diverged": list(self.diverged),
            "uncertified_candidates": self.uncertified,
        }


def scan_invariance(
    f,
    x0: np.ndarray,
    observe: Callable[[np.ndarray], np.ndarray],
    k: int,
    t0: float,
    t1: float,
    dt: float,
    zero_tol: float = DEFAULT_ZERO_TOL,
    normalize: bool = False,
    blowup: float = math.inf,
    columns_per_sample: int = 1,
    linear: Optional[np.ndarray] = None,
) -> InvarianceReport:
    """Integrate a batch and look for ``s_minus(observe(x)) > k - 1``.

    ``x0`` holds ``c = columns_per_sample`` consecutive columns per sample.
    ``f`` must act on columns independently and ``observe`` must map any
    ``(n, m * c)`` state to an ``(n', m)`` array. With ``normalize`` each
    sample is periodically rescaled to unit size, which is only valid
    for linear ``f``. Samples whose state exceeds ``blowup`` (or turns
    non-finite) are frozen at zero and listed as diverged.

    The first excursion of each sample is re-integrated with ``dt / 10`` to
    the same time and reported only if the guard-banded and the exact
    (tolerance 0) counts both still exceed ``k - 1``.
    """
    x0 = np.array(x0, dtype=float)
    c = columns_per_sample
    m = x0.shape[1] // c
    initial = batch_s_minus(observe(x0), zero_tol)
    first_t = np.full(m, np.nan)
    diverged = np.zeros(m, dtype=bool)
    max_seen = int(initial.max(initial=0))

    for t, x in _stepper(f, x0, t0, t1, dt, c, normalize, linear):
        if t == t0:
            continue
        bad = ~np.all(np.isfinite(x), axis=0) | np.any(np.abs(x) > blowup, axis=0)
        if bad.any():
            diverged |= bad.reshape(m, c).any(axis=1)
            x[:, np.repeat(diverged, c)] = 0.0
        counts = batch_s_minus(observe(x), zero_tol)
        counts[diverged] = 0
        max_seen = max(max_seen, int(counts.max(initial=0)))
        first_t[(counts > k - 1) & np.isnan(first_t)] = t

    report = InvarianceReport(k=k, samples_run=m, max_s_minus_observed=max_seen, dt=dt)
    report.diverged = [int(i) for i in np.nonzero(diverged)[0]]
    cand = [i for i in range(m) if not np.isnan(first_t[i]) and not diverged[i]]
    if cand:
        cols = np.concatenate([np.arange(i * c, (i + 1) * c) for i in cand])
        states = _states_at(
            f, x0[:, cols], t0, [first_t[i] for i in cand], dt / 10, c, normalize, linear
        )
        ys = observe(states)
        banded = batch_s_minus(ys, zero_tol)
        for col, i in enumerate(cand):
            exact = s_minus(ys[:, col], 0.0)
            if banded[col] > k - 1 and exact > k - 1:
                report.violations.append(
                    Violation(i, float(first_t[i]), int(initial[i]), int(banded[col]))
                )
            else:
                report.uncertified += 1
    return report


def _stepper(f, x0, t0, t1, dt, c, normalize, linear=None, every=32):
    """``rk4_steps`` with per-sample rescaling every ``every`` steps."""
    steps = rk4_steps(f, x0, t0, t1, dt) if linear is None else rk4_linear_steps(linear, x0, t0, t1, dt)
    for i, (t, x) in enumerate(steps):
        if normalize and i and i % every == 0:
            m = x.shape[1] // c
            view = x.reshape(x.shape[0], m, c)
            scale = np.abs(view).max(axis=(0, 2))
            scale = np.where((scale > 0) & np.isfinite(scale), scale, 1.0)
            view /= scale[None, :, None]
        yield t, x


def _states_at(f, x0, t0, times, dt, c, normalize, linear=None) -> np.ndarray:
    """State of sample ``j`` at ``times[j]`` for a batch (``c`` columns each)."""
    order = np.argsort(times, kind="stable")
    out = np.empty_like(x0)
    x = np.array(x0, dtype=float)
    t = t0
    for target in sorted(set(times)):
        if target > t:
            for t, x in _stepper(f, x, t, target, dt, c, normalize, linear):
                pass
            x = np.array(x)
            t = target
        for j in order:
            if times[j] == target:
                out[:, j * c:(j + 1) * c] = x[:, j * c:(j + 1) * c]
    return out


def check_k_positivity_empirical(
    a_of_t,
    k: int,
    n_samples: int = 200,
    t0: float = 0.0,
    t1: float = 10.0,
    dt: float = DEFAULT_DT,
    zero_tol: float = DEFAULT_ZERO_TOL,
    seed: int = 42,
) -> InvarianceReport:
    """Monte-Carlo check that ``x' = A(t) x`` keeps ``P^k_-`` invariant.

    Initial states come from :func:`sample_Pk_minus`, one derived seed per
    sample. ``zero_tol`` is relative to each state's largest entry.
    """
    a_fn = _as_matrix_function(a_of_t)
    n = np.asarray(a_fn(t0)).shape[0]
    _check_k(k, n)
    constant = None if callable(a_of_t) else np.asarray(a_of_t, dtype=float)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    seeds = np.random.SeedSequence(seed).spawn(n_samples)
    x0 = np.column_stack([sample_Pk_minus(n, k, 1.0, np.random.default_rng(s)) for s in seeds])
    report = scan_invariance(
        lambda t, x: a_fn(t) @ x, x0, lambda x: x, k, t0, t1, dt, zero_tol,
        normalize=True, linear=constant,
    )
    report.seed = seed
    return report


def averaged_jacobian(jac, a_state, b_state, quad_points: int = 16) -> np.ndarray:
    """Midpoint-rule average of ``jac`` along the segment from ``b`` to ``a``."""
    if quad_points < 2:
        raise ValueError("quad_points must be at least 2")
    a = np.asarray(a_state, dtype=float)
    b = np.asarray(b_state, dtype=float)
    total = None
    for q in range(quad_points):
        r = (q + 0.5) / quad_points
        j = np.asarray(jac(r * a + (1 - r) * b), dtype=float)
        if not np.all(np.isfinite(j)):
            raise ValueError("non-finite Jacobian value")
        total = j if total is None else total + j
    return total / quad_points
