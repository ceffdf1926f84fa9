"""Command-line front end.

JSON goes to stdout (or ``--output``), human-readable notes to stderr with
``--verbose``. Exit codes: 0 success or positive verdict, 1 negative
verdict or certified violation, 2 bad input, 3 failed internal self-check.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import lotka_volterra as lv
from .influence_graph import build_graph
from .sign_pattern import (
    DEFAULT_SIGN_TOL,
    SignMatrix,
    SignPatternError,
    canonical_parity,
    matches_canonical,
    parse_sign_matrix,
    sign_pattern_of,
)
from .transform_search import (
    MAX_ORACLE_N,
    InternalCheckError,
    apply_transform,
    classify,
    count_witness_permutations,
    oracle_counts,
)
from .verification import DEFAULT_ZERO_TOL, check_k_positivity_empirical, s_minus, s_plus

SCHEMA_VERSION = 1
SYMBOLS = {"*", "+", "-", "0", "−"}

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        return Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None


def _numeric_rows(text: str) -> list[list[float]]:
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    try:
        return [[float(tok) for tok in row] for row in rows]
    except ValueError as exc:
        raise InputError(f"bad numeric entry: {exc}") from None


def load_matrix(text: str, mode: str, tol: float):
    """Return ``(sign_matrix, numeric_or_None)`` with symbol autodetection."""
    stripped = text.strip()
    if not stripped:
        raise InputError("empty matrix input")
    if stripped.startswith("{"):
        try:
            return SignMatrix.from_json(json.loads(stripped)), None
        except (json.JSONDecodeError, SignPatternError) as exc:
            raise InputError(f"bad matrix JSON: {exc}") from None
    tokens = set(stripped.split())
    if mode == "symbolic" or (mode == "auto" and tokens <= SYMBOLS):
        try:
            return parse_sign_matrix(stripped), None
        except SignPatternError as exc:
            raise InputError(str(exc)) from None
    rows = _numeric_rows(stripped)
    try:
        return sign_pattern_of(rows, tol), np.array(rows, dtype=float)
    except SignPatternError as exc:
        raise InputError(str(exc)) from None


def _emit(ctx, payload: dict, code: int, summary: str = "") -> None:
    obj = ctx.find_root().obj or {}
    doc = {"schema_version": SCHEMA_VERSION, **payload}
    text = json.dumps(doc, indent=2) + "\n"
    if obj.get("output"):
        Path(obj["output"]).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    if obj.get("verbose") and summary:
        click.echo(summary, err=True)
    ctx.exit(code)


def _fail(ctx, message: str, code: int = EXIT_INPUT) -> None:
    click.echo(f"error: {message}", err=True)
    ctx.exit(code)


def _relabeling_text(mapping) -> str:
    order = sorted(range(len(mapping)), key=lambda i: mapping[i])
    return ", ".join(f"y{p + 1}=x{old + 1}" for p, old in enumerate(order))


matrix_argument = click.argument("matrix", type=str)


def matrix_options(f):
    f = click.option("--tol", type=float, default=DEFAULT_SIGN_TOL, show_default=True,
                     help="Threshold below which numeric off-diagonal entries count as zero.")(f)
    f = click.option("--numeric", "mode", flag_value="numeric",
                     help="Read the matrix as numbers and extract its sign pattern.")(f)
    f = click.option("--symbolic", "mode", flag_value="symbolic",
                     help="Read the matrix as * + - 0 tokens.")(f)
    f = click.option("--auto", "mode", flag_value="auto", default=True, hidden=True)(f)
    return f


def _load(ctx, matrix: str, mode: str, tol: float):
    if tol < 0:
        _fail(ctx, "--tol must be non-negative")
    try:
        return load_matrix(_read(matrix), mode, tol)
    except InputError as exc:
        _fail(ctx, str(exc))


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Print a human summary on stderr.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")
@click.pass_context
def main(ctx, verbose, output):
    """Structural k-positivity of sign patterns up to permutation and signature."""
    ctx.obj = {"verbose": verbose, "output": output}


@main.command("classify")
@matrix_argument
@matrix_options
@click.option("--dot", "dot_path", type=click.Path(dir_okay=False), help="Also write the influence graph as DOT.")
@click.pass_context
def cmd_classify(ctx, matrix, mode, tol, dot_path):
    """Classify MATRIX (a file, or - for stdin)."""
    m, _ = _load(ctx, matrix, mode, tol)
    if m.n < 4:
        _fail(ctx, f"classification needs n >= 4, got n={m.n}")
    try:
        result = classify(m)
    except InternalCheckError as exc:
        _fail(ctx, str(exc), EXIT_INTERNAL)
    g = build_graph(m)
    if dot_path:
        Path(dot_path).write_text(g.to_dot() + "\n", encoding="utf-8")
    payload = result.to_json()
    payload["graph"] = g.to_json()
    code = EXIT_OK if result.verdict.positive else EXIT_NEGATIVE
    summary = f"{result.verdict.value} (zeta={result.zeta}, topology={result.topology})"
    for d in result.diagnostics:
        summary += f"\n  - {d}"
    _emit(ctx, payload, code, summary)


@main.command("transform")
@matrix_argument
@matrix_options
@click.option("--parity", type=click.Choice(["odd", "even"]), required=True)
@click.pass_context
def cmd_transform(ctx, matrix, mode, tol, parity):
    """List every constructed witness for PARITY and show the first result."""
    m, _ = _load(ctx, matrix, mode, tol)
    if m.n < 4:
        _fail(ctx, f"canonical patterns need n >= 4, got n={m.n}")
    try:
        result = classify(m)
    except InternalCheckError as exc:
        _fail(ctx, str(exc), EXIT_INTERNAL)
    witnesses = result.witnesses_for(parity)
    for t in witnesses:
        if not matches_canonical(apply_transform(m, t), parity):
            _fail(ctx, f"witness {t.to_json()} failed re-verification", EXIT_INTERNAL)
    payload = {
        "parity": parity,
        "verdict": result.verdict.value,
        "witnesses": [t.to_json() for t in witnesses],
        "relabelings": [_relabeling_text(t.permutation.mapping) for t in witnesses],
        "diagnostics": list(result.diagnostics),
    }
    if witnesses:
        out = apply_transform(m, witnesses[0])
        payload["transformed"] = out.to_json()
        payload["transformed_text"] = out.to_text().splitlines()
        summary = f"{len(witnesses)} {parity} witness(es); first gives\n{out.to_text()}"
        _emit(ctx, payload, EXIT_OK, summary)
    _emit(ctx, payload, EXIT_NEGATIVE, f"no {parity}-parity witness: {result.verdict.value}")


@main.command("enumerate")
@matrix_argument
@matrix_options
@click.option("--parity", type=click.Choice(["odd", "even"]), required=True)
@click.option("--oracle", is_flag=True, help=f"Cross-check by exhaustive search (n <= {MAX_ORACLE_N}).")
@click.pass_context
def cmd_enumerate(ctx, matrix, mode, tol, parity, oracle):
    """Count the permutations (no signature) that give PARITY."""
    m, _ = _load(ctx, matrix, mode, tol)
    if m.n < 4:
        _fail(ctx, f"canonical patterns need n >= 4, got n={m.n}")
    if oracle and m.n > MAX_ORACLE_N:
        _fail(ctx, f"--oracle supports n <= {MAX_ORACLE_N}, got n={m.n}")
    constructive = count_witness_permutations(m, parity)
    result = classify(m)
    notes = []
    if constructive is None:
        notes.append("disconnected influence graph: no constructive count, see the oracle")
    if result.topology == "path":
        notes.append(
            f"path topology: a path admits 2n={2 * m.n} odd-parity placements and 2 even-parity "
            "placements; the 2n count for odd parity presumes a cycle"
        )
    payload = {"parity": parity, "n": m.n, "constructive_count": constructive,
               "topology": result.topology, "annotations": notes}
    code = EXIT_OK
    if oracle:
        ident, total = oracle_counts(m, parity)
        agree = constructive is None or constructive == ident
        payload["oracle"] = {"identity_signature_permutations": ident, "transforms": total}
        payload["agree"] = agree
        if not agree:
            _emit(ctx, payload, EXIT_INTERNAL, f"constructive {constructive} != oracle {ident}")
        found = ident
    else:
        found = constructive or 0
    if not found and not (constructive is None and not oracle):
        code = EXIT_NEGATIVE
    _emit(ctx, payload, code, f"{parity}: constructive={constructive}"
          + (f", oracle={payload['oracle']}" if oracle else ""))


@main.command("verify")
@matrix_argument
@click.option("--k", "k", type=int, required=True)
@click.option("--samples", type=int, default=200, show_default=True)
@click.option("--horizon", type=float, default=10.0, show_default=True)
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--zero-tol", type=float, default=DEFAULT_ZERO_TOL, show_default=True,
              help="Guard band, relative to the largest entry of each state.")
@click.pass_context
def cmd_verify(ctx, matrix, k, samples, horizon, dt, seed, zero_tol):
    """Monte-Carlo check that x' = A x keeps P^k_- invariant for numeric MATRIX."""
    try:
        text = _read(matrix)
        rows = _numeric_rows(text)
        a = np.array(rows, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.size == 0:
            raise InputError("matrix must be square and non-empty")
        if not np.all(np.isfinite(a)):
            raise InputError("matrix entries must be finite")
    except (InputError, ValueError) as exc:
        _fail(ctx, str(exc))
    n = a.shape[0]
    if not 1 <= k <= n - 1:
        _fail(ctx, f"--k must lie in [1, {n - 1}]")
    if samples < 1 or horizon <= 0 or dt <= 0 or zero_tol < 0:
        _fail(ctx, "--samples, --horizon and --dt must be positive")
    report = check_k_positivity_empirical(a, k, samples, 0.0, horizon, dt, zero_tol, seed)
    payload = report.to_json()
    payload["horizon"] = horizon
    if n >= 4:
        parity = canonical_parity(sign_pattern_of(a))
        payload["pattern_parity"] = parity.value if parity else None
    code = EXIT_OK if report.ok else EXIT_NEGATIVE
    _emit(ctx, payload, code, f"{len(report.violations)} certified violation(s) in {samples} samples")


@main.command("lv")
@click.argument("system", type=str)
@click.option("--k", "k", type=int, default=None, help="Defaults to 2 for an even witness, else 1.")
@click.option("--pairs", type=int, default=100, show_default=True)
@click.option("--horizon", type=float, default=5.0, show_default=True)
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--tol", type=float, default=DEFAULT_SIGN_TOL, show_default=True)
@click.option("--export-traj", type=click.Path(dir_okay=False),
              help="Write x(t, a) of the first pair as CSV.")
@click.pass_context
def cmd_lv(ctx, system, k, pairs, horizon, dt, seed, tol, export_traj):
    """Structural check and k-cooperativity test of a Lotka-Volterra SYSTEM (JSON)."""
    try:
        sysm = lv.load_lv(_read(system))
    except (InputError, lv.LVError) as exc:
        _fail(ctx, str(exc))
    if sysm.n < 4:
        _fail(ctx, f"need n >= 4, got n={sysm.n}")
    if pairs < 1 or horizon <= 0 or dt <= 0:
        _fail(ctx, "--pairs, --horizon and --dt must be positive")
    structural = lv.lv_structural_check(sysm, tol)
    payload = {"structural": structural.to_json()}
    if not structural.verdict.positive:
        _emit(ctx, payload, EXIT_NEGATIVE, structural.verdict.value)
    if k is None:
        k = 2 if structural.even_witnesses else 1
    if not 1 <= k <= sysm.n - 1:
        _fail(ctx, f"--k must lie in [1, {sysm.n - 1}]")
    witnesses = structural.even_witnesses if k % 2 == 0 else structural.odd_witnesses
    if not witnesses:
        payload["error"] = f"no witness with the parity of k={k}"
        _emit(ctx, payload, EXIT_NEGATIVE, payload["error"])
    witness = witnesses[0]
    report = lv.check_k_cooperative_empirical(sysm, witness, k, pairs, horizon, dt, seed)
    payload.update({"k": k, "witness": witness.to_json(), "empirical": report.to_json()})
    if export_traj:
        x0 = lv.sample_pairs(sysm.n, witness, k, 1, seed)[:, 0]
        lv.simulate(sysm, x0, horizon, dt).to_csv(export_traj)
        payload["trajectory_csv"] = str(export_traj)
    code = EXIT_OK if report.ok else EXIT_NEGATIVE
    _emit(ctx, payload, code,
          f"{structural.verdict.value}; k={k}; {len(report.violations)} certified violation(s)")


@main.command("signvar", context_settings={"ignore_unknown_options": True})
@click.argument("values", nargs=-1, required=True)
@click.option("--tol", type=float, default=0.0, show_default=True)
@click.pass_context
def cmd_signvar(ctx, values, tol):
    """Print s_minus and s_plus of a vector given as numbers (or one quoted string)."""
    try:
        x = [float(tok) for v in values for tok in v.split()]
    except ValueError as exc:
        _fail(ctx, f"bad number: {exc}")
    if not x or not all(np.isfinite(x)):
        _fail(ctx, "vector must be non-empty and finite")
    if tol < 0:
        _fail(ctx, "--tol must be non-negative")
    _emit(ctx, {"n": len(x), "s_minus": s_minus(x, tol), "s_plus": s_plus(x, tol)}, EXIT_OK)


if __name__ == "__main__":
    main()
