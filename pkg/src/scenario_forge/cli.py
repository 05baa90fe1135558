"""Command-line front end.

Exit status: 0 on success, 1 for bad input (flags, files, configs), 2 when
the pipeline trips one of its own invariants.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .alert_model import GroundTruth, ScenarioGraph, StageTaxonomy, normalize_ip, validate_taxonomy
from .correlation import EdgeMode, SignMode, build_scenario_graph, graph_to_dot, matrix_from_csv, matrix_to_csv
from .errors import InputError, InvariantViolation, ParseError
from .evaluation import evaluate, format_table, load_truth
from .ingestion import IngestPolicy, UnknownTypeAction, classify_alerts, parse_alert_log
from .mapping import ReferenceTime
from .pipeline import PipelineConfig, PipelineResult, run
from .synth import generate, load_spec, write_dataset

log = logging.getLogger("scenario_forge")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2; bad flags are input errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- helpers ------------------------------------------------------------------

def _sha256(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _safe(ip: str) -> str:
    return ip.replace(":", "_")


def load_taxonomy(path: str | os.PathLike) -> StageTaxonomy:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
    return validate_taxonomy(raw)


def taxonomy_hash(taxonomy: StageTaxonomy) -> str:
    canon = json.dumps(taxonomy.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        bin_width=getattr(args, "bin", 60.0),
        theta=getattr(args, "theta", 0.5),
        edge_mode=getattr(args, "edge_mode", EdgeMode.ADJACENT.value),
        sign=getattr(args, "sign", SignMode.ABS.value),
        reference=getattr(args, "reference", ReferenceTime.MAX.value),
        policy=IngestPolicy(args.unknown, args.dedup) if hasattr(args, "unknown") else IngestPolicy(),
    )


def _manifest(args: argparse.Namespace, taxonomy: StageTaxonomy | None, inputs: dict[str, str]) -> dict:
    out: dict[str, Any] = {"tool": "scenario-forge", "version": __version__, "command": args.command}
    if hasattr(args, "theta"):
        out["params"] = _config(args).to_dict()
    if taxonomy is not None:
        out["taxonomy_sha256"] = taxonomy_hash(taxonomy)
        out["required_stages"] = [taxonomy.stage_name(s) for s in sorted(taxonomy.required_stages)]
    out["inputs"] = {k: {"path": v, "sha256": _sha256(v)} for k, v in inputs.items()}
    return out


def _load_inputs(args: argparse.Namespace):
    for label in ("alerts", "taxonomy"):
        if not Path(getattr(args, label)).is_file():
            raise InputError(f"--{label}: no such file {getattr(args, label)!r}")
    taxonomy = load_taxonomy(args.taxonomy)
    if args.required_stages:
        refs = [int(r) if r.strip().isdigit() else r.strip() for r in args.required_stages.split(",")]
        taxonomy = taxonomy.with_required(refs)
    fmt = args.format or ("jsonl" if str(args.alerts).endswith((".jsonl", ".ndjson")) else "csv")
    parse_errors: list[ParseError] = []
    alerts = parse_alert_log(args.alerts, fmt, strict=args.strict, dedup_exact=args.dedup, errors=parse_errors)
    return taxonomy, alerts, parse_errors


def _emit(args: argparse.Namespace, name: str, payload: dict, manifest: dict) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(_dumps(payload), encoding="utf-8")
        (out / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    else:
        sys.stdout.write(_dumps({"manifest": manifest, **payload}))


def _mapping_payload(result: PipelineResult) -> dict:
    return {
        "candidates": [c.to_dict() for c in result.mapping.candidates],
        "rejected": [g.to_dict() for g in result.mapping.rejected],
        "demoted": [{**d.candidate.to_dict(), "missing_stages": sorted(d.missing)}
                    for d in result.mapping.demoted],
    }


def _write_scenarios(out: Path, result: PipelineResult, taxonomy: StageTaxonomy,
                     matrices: bool, graphs: bool, figures: bool) -> None:
    if figures:
        from .report import plot_matrix, plot_scenario
    for ip in result.matrices:
        if matrices:
            (out / f"matrix_{_safe(ip)}.csv").write_text(matrix_to_csv(result.matrices[ip]), encoding="utf-8")
        if graphs:
            g = result.graphs[ip]
            (out / f"scenario_{_safe(ip)}.dot").write_text(graph_to_dot(g), encoding="utf-8")
            (out / f"scenario_{_safe(ip)}.json").write_text(_dumps(g.to_dict()), encoding="utf-8")
        if figures:
            plot_matrix(result.matrices[ip], out / f"matrix_{_safe(ip)}.png", title=ip)
            plot_scenario(result.graphs[ip], out / f"scenario_{_safe(ip)}.png", taxonomy)


# -- subcommands ---------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    taxonomy, alerts, parse_errors = _load_inputs(args)
    cls = classify_alerts(alerts, taxonomy, IngestPolicy(args.unknown, args.dedup))
    payload = {
        "alerts": [{**m.alert.to_dict(), "stage": m.stage, "stage_name": taxonomy.stage_name(m.stage)}
                   for m in cls.classified],
        "dropped": [a.id for a in cls.dropped],
        "quarantined": [a.to_dict() for a in cls.quarantined],
        "parse_errors": [str(e) for e in parse_errors],
    }
    _emit(args, "alerts", payload, _manifest(args, taxonomy, {"alerts": args.alerts, "taxonomy": args.taxonomy}))
    return EXIT_OK


def _run(args: argparse.Namespace) -> tuple[StageTaxonomy, PipelineResult, dict]:
    taxonomy, alerts, _ = _load_inputs(args)
    result = run(alerts, taxonomy, _config(args))
    manifest = _manifest(args, taxonomy, {"alerts": args.alerts, "taxonomy": args.taxonomy})
    return taxonomy, result, manifest


def cmd_group(args: argparse.Namespace) -> int:
    _, result, manifest = _run(args)
    _emit(args, "groups", {"groups": [g.to_dict() for g in result.groups]}, manifest)
    return EXIT_OK


def cmd_map(args: argparse.Namespace) -> int:
    _, result, manifest = _run(args)
    _emit(args, "candidates", _mapping_payload(result), manifest)
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    taxonomy, result, manifest = _run(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_scenarios(out, result, taxonomy, matrices=True, graphs=False, figures=args.figures)
    (out / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return EXIT_OK


def cmd_graph(args: argparse.Namespace) -> int:
    taxonomy, result, manifest = _run(args)
    if args.matrix:
        if not args.target:
            raise InputError("--matrix needs --target to pick the candidate it describes")
        target = normalize_ip(args.target)
        if target not in result.graphs:
            raise InputError(f"{target} is not a candidate group")
        candidate = next(c for c in result.candidates if c.target_ip == target)
        with open(args.matrix, encoding="utf-8") as fh:
            matrix = matrix_from_csv(fh)
        cfg = _config(args)
        result.matrices = {target: matrix}
        result.graphs = {target: build_scenario_graph(candidate, matrix, cfg.theta,
                                                      edge_mode=cfg.edge_mode, sign=cfg.sign)}
        manifest["inputs"]["matrix"] = {"path": args.matrix, "sha256": _sha256(args.matrix)}
    elif args.target:
        target = normalize_ip(args.target)
        result.matrices = {k: v for k, v in result.matrices.items() if k == target}
        result.graphs = {k: v for k, v in result.graphs.items() if k == target}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_scenarios(out, result, taxonomy, matrices=False, graphs=True, figures=args.figures)
    (out / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return EXIT_OK


def _pick_truth(truths: list[GroundTruth], target: str) -> GroundTruth | None:
    return next((t for t in truths if t.target_ip == target), None)


def cmd_eval(args: argparse.Namespace) -> int:
    for label in ("graph", "truth"):
        if not Path(getattr(args, label)).is_file():
            raise InputError(f"--{label}: no such file {getattr(args, label)!r}")
    with open(args.graph, encoding="utf-8") as fh:
        try:
            graph = ScenarioGraph.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{args.graph}: malformed scenario graph ({exc})") from None
    truths = load_truth(args.truth)
    truth = _pick_truth(truths, graph.target_ip) if len(truths) > 1 else truths[0]
    if truth is None:
        raise InputError(f"no ground truth entry for {graph.target_ip}")
    report = evaluate(graph, None, truth)
    if args.table:
        sys.stdout.write(format_table([report]))
    else:
        sys.stdout.write(_dumps(report.to_dict()))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    for label in ("spec", "taxonomy"):
        if not Path(getattr(args, label)).is_file():
            raise InputError(f"--{label}: no such file {getattr(args, label)!r}")
    taxonomy = load_taxonomy(args.taxonomy)
    alerts, truth = generate(load_spec(args.spec), taxonomy)
    out = Path(args.out)
    write_dataset(out, alerts, truth)
    manifest = _manifest(args, taxonomy, {"spec": args.spec, "taxonomy": args.taxonomy})
    (out / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    log.info("wrote %d alerts, %d scenarios to %s", len(alerts), len(truth), out)
    return EXIT_OK


def cmd_all(args: argparse.Namespace) -> int:
    taxonomy, result, manifest = _run(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "groups.json").write_text(_dumps({"groups": [g.to_dict() for g in result.groups]}), encoding="utf-8")
    (out / "candidates.json").write_text(_dumps(_mapping_payload(result)), encoding="utf-8")
    _write_scenarios(out, result, taxonomy, matrices=True, graphs=True, figures=args.figures)
    if args.truth:
        if not Path(args.truth).is_file():
            raise InputError(f"--truth: no such file {args.truth!r}")
        manifest["inputs"]["truth"] = {"path": args.truth, "sha256": _sha256(args.truth)}
        reports = []
        for truth in load_truth(args.truth):
            graph = result.graphs.get(truth.target_ip)
            if graph is None:
                log.warning("scenario %s (%s) was not reconstructed", truth.scenario_id, truth.target_ip)
                continue
            candidate = next(c for c in result.candidates if c.target_ip == truth.target_ip)
            reports.append(evaluate(graph, candidate, truth))
        (out / "evaluation.json").write_text(_dumps([r.to_dict() for r in reports]), encoding="utf-8")
        sys.stdout.write(format_table(reports))
    (out / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alerts", required=True, help="alert log (CSV or JSON lines)")
    p.add_argument("--taxonomy", required=True, help="stage taxonomy JSON")
    p.add_argument("--format", choices=("csv", "jsonl"), help="alert log format (default: by extension)")
    p.add_argument("--strict", action="store_true", help="abort on the first malformed record")
    p.add_argument("--unknown", choices=[a.value for a in UnknownTypeAction], default="drop",
                   help="what to do with alert types missing from the taxonomy")
    p.add_argument("--dedup", action="store_true", help="drop byte-identical duplicate records")
    p.add_argument("--required-stages", help="comma-separated stage names/indices overriding the taxonomy")


def _add_tunables(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bin", type=float, default=60.0, help="count-series bin width in seconds")
    p.add_argument("--theta", type=float, default=0.5, help="edge threshold on |r|, in (0, 1]")
    p.add_argument("--edge-mode", choices=[m.value for m in EdgeMode], default="adjacent")
    p.add_argument("--sign", choices=[m.value for m in SignMode], default="abs",
                   help="abs: |r| >= theta; positive: r >= theta")
    p.add_argument("--reference", choices=[m.value for m in ReferenceTime], default="max",
                   help="which last-stage timestamp bounds earlier stages")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scenario-forge", description="Reconstruct multi-stage attack scenarios from NIDS alerts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse and classify alerts")
    _add_inputs(p)
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_ingest)

    for name, func, helptext in (("group", cmd_group, "hyper alert groups"),
                                 ("map", cmd_map, "candidate groups, rejects and late-alert audit")):
        p = sub.add_parser(name, help=helptext)
        _add_inputs(p)
        _add_tunables(p)
        p.add_argument("--out", help="output directory (default: stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("correlate", help="correlation matrix CSV per candidate")
    _add_inputs(p)
    _add_tunables(p)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", action="store_true", help="also render PNG heatmaps")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("graph", help="scenario graph DOT + JSON per candidate")
    _add_inputs(p)
    _add_tunables(p)
    p.add_argument("--out", required=True)
    p.add_argument("--target", help="only this candidate's target IP")
    p.add_argument("--matrix", help="use this matrix CSV instead of computing one (needs --target)")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("eval", help="completeness/soundness of a scenario graph")
    p.add_argument("--graph", required=True, help="scenario JSON written by `graph` or `all`")
    p.add_argument("--truth", required=True, help="ground truth JSON")
    p.add_argument("--table", action="store_true", help="human-readable table instead of JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic alert dataset with ground truth")
    p.add_argument("--spec", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("all", help="full pipeline")
    _add_inputs(p)
    _add_tunables(p)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="ground truth JSON; adds evaluation.json")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.set_defaults(func=cmd_all)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("SCENARIO_FORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
