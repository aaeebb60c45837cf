"""Command-line interface: ``qkd3 {verify,metrics,simulate,sweep}``.

Exit codes: 0 success, 1 failed check or I/O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import infotheory as it
from . import statespace as ss
from .protocol import ALIASES, EVE_KINDS, EveStrategy, ProtocolSpec, resolve_protocol, round_rows, iter_batches, run_session, ROUND_CSV_HEADER


class CheckFailed(Exception):
    pass


def _f6(v: float) -> str:
    return f"{v:.6f}"


def _f5(v: float) -> str:
    return f"{v:.5f}"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# verify


def structural_checks(fixture: ss.StateSet | None = None) -> list[tuple[str, bool, str]]:
    """(name, passed, detail) for every structural claim, or coloring checks on ``fixture``."""
    results: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append((name, bool(ok), detail))

    if fixture is not None:
        rep = ss.verify_coloring(fixture)
        for name, ok in rep.checks.items():
            check(f"coloring:{name}", ok, "; ".join(v for v in rep.violations) if not ok else "")
        return results

    mub = ss.build_mub4()
    cross = [
        ss.overlap_prob(u, v)
        for a, b in ((a, b) for a in range(4) for b in range(a + 1, 4))
        for u in mub.bases[a].vectors
        for v in mub.bases[b].vectors
    ]
    check("mub4-unbiased", len(cross) == 54 and all(p == Fraction(1, 3) for p in cross), f"{len(cross)} cross-basis pairs")
    same = [ss.overlap_prob(u, v) for b in mub.bases for u in b.vectors for v in b.vectors if u is not v]
    check("mub4-orthonormal", all(p == 0 for p in same))
    check("mub4-census", len(mub.vectors) == 12 and len(mub.bases) == 4 and set(mub.multiplicities) == {1})

    primary = ss.table1_primary_vectors()
    triples = ss.enumerate_bases(primary)
    pairs = ss.orthogonal_pairs(primary)
    check("table1-primary-bases", len(triples) == 4 and len(pairs) == 9, f"{len(triples)} complete, {len(pairs)} pairs")

    t1 = ss.build_table1()
    check("table1-bases", len(t1.bases) == 13, f"{len(t1.bases)} bases")
    completions = [b.indices[p] for b in t1.bases for p in b.appended]
    check("table1-completions", sorted(completions) == list(range(12, 21)), "each center vector completes one pair")
    mult = t1.multiplicities
    expected = {1: 2, 3: 2, 2: 3, 4: 3, 5: 1, 6: 1, 7: 1}
    col_ok = all(mult[k] == expected[ss.table1_column(v.tag)] for k, v in enumerate(t1.vectors))
    check("table1-multiplicities", col_ok and sum(mult) == 39, f"sum {sum(mult)}")
    colors = [sum(v.trit == c for v in t1.vectors) for c in range(3)]
    check("table1-color-census", colors == [7, 7, 7], f"{colors}")
    rep = ss.verify_coloring(t1)
    for name, ok in rep.checks.items():
        check(f"table1-coloring:{name}", ok, "; ".join(rep.violations) if not ok else "")
    third = [v for v in t1.vectors if ss.table1_column(v.tag) == 3]
    check(
        "table1-111-third-column",
        all(ss.orthogonal(ss.UNCOLORABLE_RAY, v) for v in third) and len({v.trit for v in third}) == 3,
    )
    return results


def cmd_verify(args: argparse.Namespace) -> tuple[str, int]:
    if args.dump:
        target = ss.build_table1() if args.fixture is None else _load_fixture(args.fixture)
        return _json(ss.to_json(target)), 0
    fixture = _load_fixture(args.fixture) if args.fixture else None
    results = structural_checks(fixture)
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "") for name, ok, detail in results]
    failed = [name for name, ok, _ in results if not ok]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return "\n".join(lines) + "\n", 1 if failed else 0


def _load_fixture(path: str) -> ss.StateSet:
    try:
        return ss.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except OSError as exc:
        raise CheckFailed(f"cannot read fixture {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# metrics


METRIC_COLUMNS = ["protocol", "unit", "i_eve", "i_bob", "e_bob", "x_breakeven"]


def cmd_metrics(args: argparse.Namespace) -> tuple[str, int]:
    rows = it.metrics_table()
    if args.format == "json":
        return _json([r.as_dict() for r in rows]), 0
    body = [[r.protocol, r.unit, _f6(r.i_eve), _f6(r.i_bob), _f6(r.e_bob), _f5(r.x_breakeven)] for r in rows]
    if args.format == "csv":
        return _csv(METRIC_COLUMNS, body), 0
    return _table(METRIC_COLUMNS, body), 0


# ---------------------------------------------------------------------------
# simulate


def analytic_targets(spec: ProtocolSpec, eve: EveStrategy) -> dict[str, float]:
    """Expected session figures: table convention and exact process averages."""
    row = it.metrics_row(spec.name)
    enum = it.enumerate_ire(spec.state_set, spec.alice_pool)
    x = eve.effective_fraction
    listen = 1.0 if eve.listens else 0.0
    return {
        "error_rate": x * row.e_bob,
        "eve_information": x * row.i_eve + (1 - x) * listen * row.passive_floor,
        "pooled_error_rate": x * float(1 - enum.sifted_correct),
        "eve_information_process": x * enum.eve_info_bayes
        + (1 - x) * listen * it.passive_info_sifted(spec.state_set, spec.alice_pool),
    }


def _z(value: float, target: float, se: float) -> float | None:
    if not se or math.isnan(se):
        return None if value != target else 0.0
    return (value - target) / se


def cmd_simulate(args: argparse.Namespace) -> tuple[str, int]:
    spec = ProtocolSpec.named(args.protocol)
    eve_kind = args.eve
    if eve_kind is None:
        eve_kind = "mixed" if spec.name == "b13-v12" else "intercept-resend"
    eve = EveStrategy(eve_kind, args.intercept_fraction)
    stats = run_session(spec, eve, args.rounds, args.seed, workers=args.threads)
    targets = analytic_targets(spec, eve)
    report = stats.as_dict()
    report["unit"] = spec.unit
    report["targets"] = targets
    report["z_scores"] = {
        "error_rate": _z(stats.error_rate, targets["error_rate"], stats.error_rate_se()),
        "pooled_error_rate": _z(stats.pooled_error_rate, targets["pooled_error_rate"], stats.pooled_error_se()),
        "eve_information": _z(stats.eve_information, targets["eve_information"], stats.eve_information_se()),
        "eve_information_process": _z(
            stats.eve_information, targets["eve_information_process"], stats.eve_information_se()
        ),
    }
    if args.dump_rounds:
        _write_rounds(args.dump_rounds, spec, eve, args.rounds, args.seed)

    if args.format == "json":
        return _json(report), 0
    keys = [
        ("error_rate", "error_rate_se"),
        ("pooled_error_rate", "pooled_error_se"),
        ("eve_information", "eve_information_se"),
        ("eve_information_process", "eve_information_se"),
    ]
    rows = []
    for key, se_key in keys:
        measured = report["eve_information"] if key == "eve_information_process" else report[key]
        z = report["z_scores"][key]
        rows.append([key, _f6(measured), _f6(report[se_key]), _f6(targets[key]), "" if z is None else f"{z:.2f}"])
    header = ["quantity", "empirical", "std_err", "analytic", "z"]
    if args.format == "csv":
        return _csv(header, rows), 0
    preamble = (
        f"protocol {spec.name} ({spec.unit}s), eve {eve.kind}, x={eve.intercept_fraction}, seed {args.seed}\n"
        f"rounds {stats.rounds_sent}, sifted {stats.rounds_sifted} (rate {stats.sifting_rate:.6f}), "
        f"errors {stats.bob_symbol_errors}, intercepts {stats.eve_intercepts}, "
        f"eve exact {stats.eve_exact_knowledge}\n\n"
    )
    return preamble + _table(header, rows), 0


def _write_rounds(path: str, spec: ProtocolSpec, eve: EveStrategy, rounds: int, seed: int) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ROUND_CSV_HEADER)
            w.writerows(round_rows(spec, iter_batches(spec, eve, rounds, seed)))
    except OSError as exc:
        raise CheckFailed(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# sweep


SWEEP_COLUMNS = ["protocol", "unit", "x", "i_eve", "i_bob", "x_breakeven"]


def cmd_sweep(args: argparse.Namespace) -> tuple[str, int]:
    names = it.PROTOCOLS if args.protocol == "all" else (resolve_protocol(args.protocol),)
    series = [it.sweep(name, args.points) for name in names]
    if args.format == "json":
        return _json(
            [
                {
                    "protocol": s.protocol,
                    "unit": s.unit,
                    "x_breakeven": s.x_breakeven,
                    "points": [{"x": x, "i_eve": e, "i_bob": b} for x, e, b in s.points],
                }
                for s in series
            ]
        ), 0
    rows = [
        [s.protocol, s.unit, _f6(x), _f6(e), _f6(b), _f5(s.x_breakeven)]
        for s in series
        for x, e, b in s.points
    ]
    if args.format == "csv":
        return _csv(SWEEP_COLUMNS, rows), 0
    summary = [[s.protocol, s.unit, str(len(s.points)), _f6(s.points[0][1]), _f6(s.points[-1][1]), _f5(s.x_breakeven)] for s in series]
    return _table(["protocol", "unit", "points", "i_eve(0)", "i_eve(1)", "x_breakeven"], summary), 0


# ---------------------------------------------------------------------------


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("intercept fraction must lie in [0, 1]")
    return v


def _at_least(lo: int) -> Callable[[str], int]:
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be at least {lo}")
        return v

    return parse


def _protocol(text: str) -> str:
    try:
        return resolve_protocol(text)
    except KeyError as exc:
        raise argparse.ArgumentTypeError(str(exc.args[0]))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkd3", description="Qutrit key distribution analysis and simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, default_format: str = "table") -> None:
        p.add_argument("--format", choices=("table", "csv", "json"), default=default_format)
        p.add_argument("--out", help="write output to PATH instead of stdout")

    p = sub.add_parser("verify", help="check the structural claims about the state sets")
    p.add_argument("--dump", action="store_true", help="print the 21-vector set as JSON")
    p.add_argument("--fixture", help="verify the coloring of a JSON state set instead")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("metrics", help="print the intercept-resend metrics table")
    common(p)
    p.set_defaults(func=cmd_metrics)

    names = ", ".join(list(it.PROTOCOLS) + list(ALIASES))
    p = sub.add_parser("simulate", help="Monte Carlo session")
    p.add_argument("--protocol", type=_protocol, required=True, help=names)
    p.add_argument("--rounds", type=_at_least(1), default=100_000)
    p.add_argument("--intercept-fraction", type=_fraction, default=1.0)
    p.add_argument("--eve", choices=EVE_KINDS, default=None, help="default: mixed for b13-v12, else intercept-resend")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_at_least(1), default=None, help="worker hint (default QKD3_THREADS)")
    p.add_argument("--dump-rounds", metavar="CSV", help="also write per-round records")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="informations versus intercepted fraction")
    p.add_argument("--protocol", default="all", type=lambda t: t if t == "all" else _protocol(t))
    p.add_argument("--points", type=_at_least(2), default=101)
    common(p, default_format="csv")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = args.func(args)
        if args.out:
            try:
                Path(args.out).write_text(text, encoding="utf-8")
            except OSError as exc:
                raise CheckFailed(f"cannot write {args.out}: {exc}") from exc
        else:
            sys.stdout.write(text)
    except CheckFailed as exc:
        print(f"qkd3: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
