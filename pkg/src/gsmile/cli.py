"""Command-line interface.

    gsmile explain     --config FILE [--out report.json] [overrides]
    gsmile evaluate    --config FILE --truth 0,0,1 [--out metrics.json]
    gsmile stability   --config FILE [--sentinel ***]
    gsmile consistency --config FILE [--runs 10] [--reseed]
    gsmile render      (--config FILE | --report report.json) --format html|ansi|png

Exit codes: 0 success, 2 configuration error, 3 adapter failure, 1 anything
else.  ``explain --out`` writes the JSON report plus a CSV of per-token
scores and PNG figures next to it.  Responses are cached under
$GSMILE_CACHE_DIR (or ~/.cache/gsmile) unless --no-cache is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .adapters import ResponseCache
from .errors import AdapterError, ConfigError, GsmileError
from .pipeline import (
    DEFAULT_SENTINEL,
    RunConfig,
    consistency_probe,
    evaluate,
    explain,
    export_report,
    import_report,
    render_heatmap,
    stability_probe,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADAPTER = 3


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, help="run configuration JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument(
        "--perturbations", type=int, default=None, help="override the perturbation count J"
    )
    parser.add_argument("--sigma", type=float, default=None, help="override the kernel bandwidth")
    parser.add_argument(
        "--alpha", type=float, default=None, help="override the significance level"
    )
    parser.add_argument("--out", default=None, help="output file (stdout when omitted)")
    parser.add_argument("--no-cache", action="store_true", help="skip the response cache")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsmile",
        description="Token attribution for black-box generative models.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="fit and export an attribution report", allow_abbrev=False)
    _add_common(p_explain)

    p_eval = sub.add_parser("evaluate", help="score attributions against ground truth", allow_abbrev=False)
    _add_common(p_eval)
    p_eval.add_argument(
        "--truth", required=True, help="comma-separated 0/1 labels, one per token"
    )

    p_stab = sub.add_parser("stability", help="top-k overlap against a sentinel rerun", allow_abbrev=False)
    _add_common(p_stab)
    p_stab.add_argument("--sentinel", default=DEFAULT_SENTINEL, help="token to append")

    p_cons = sub.add_parser("consistency", help="coefficient spread across repeated runs", allow_abbrev=False)
    _add_common(p_cons)
    p_cons.add_argument("--runs", type=int, default=10, help="number of repeated runs")
    p_cons.add_argument(
        "--reseed", action="store_true", help="vary the seed per run instead of reusing it"
    )

    p_render = sub.add_parser("render", help="render a token heatmap", allow_abbrev=False)
    _add_common(p_render, config_required=False)
    p_render.add_argument("--report", default=None, help="render an existing report file")
    p_render.add_argument(
        "--format", default="html", choices=("html", "ansi", "png"), help="heatmap format"
    )
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.perturbations is not None:
        overrides["J"] = args.perturbations
    if args.sigma is not None:
        overrides["sigma"] = args.sigma
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    return replace(config, **overrides) if overrides else config


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        print(text)
    else:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"), encoding="utf-8")


def _run(args: argparse.Namespace) -> int:
    cache = None if args.no_cache else ResponseCache.default()

    if args.command == "render" and args.report is not None:
        try:
            result = import_report(args.report)
        except FileNotFoundError as exc:
            raise ConfigError(f"report file not found: {args.report}") from exc
    elif args.command == "render" and args.config is None:
        raise ConfigError("render needs --config or --report")
    else:
        config = _load_config(args)

    if args.command == "explain":
        result = explain(config, cache=cache)
        text = export_report(result)
        _emit(text, args.out)
        if args.out is not None and args.out != "-":
            # figures and the delimited per-token table land next to the report
            from .figures import save_report_figures, write_scores_csv

            report_path = Path(args.out)
            write_scores_csv(result, report_path.with_suffix(".csv"))
            for target in save_report_figures(result, report_path):
                print(f"wrote {target}", file=sys.stderr)
        return EXIT_OK

    if args.command == "evaluate":
        try:
            truth = [int(v) for v in args.truth.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"--truth must be comma-separated integers: {exc}") from exc
        scores = evaluate(config, truth, cache=cache)
        _emit(json.dumps(scores, sort_keys=True, indent=2), args.out)
        return EXIT_OK

    if args.command == "stability":
        value = stability_probe(config, sentinel=args.sentinel, cache=cache)
        _emit(json.dumps({"jaccard": value}, indent=2), args.out)
        return EXIT_OK

    if args.command == "consistency":
        variance, std = consistency_probe(
            config, runs=args.runs, reseed=args.reseed, cache=cache
        )
        _emit(json.dumps({"std": std, "variance": variance}, sort_keys=True, indent=2), args.out)
        return EXIT_OK

    if args.command == "render":
        if args.report is None:
            result = explain(config, cache=cache)
        if args.format == "png":
            if args.out is None:
                raise ConfigError("png rendering needs --out")
            from .figures import heatmap_figure, plt

            fig, _ = heatmap_figure(result)
            fig.savefig(args.out)
            plt.close(fig)
            return EXIT_OK
        _emit(render_heatmap(result, fmt=args.format), args.out)
        return EXIT_OK

    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdapterError as exc:
        print(f"adapter failure: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except GsmileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        # unwritable --out targets and the like; keep tracebacks off the console
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
