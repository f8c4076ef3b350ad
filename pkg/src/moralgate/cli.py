"""Command-line entry point: ``moralgate <subcommand>``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import corpus as corpus_mod
from .config import CANONICAL_RULES, ConfigError, load_run_config, load_tagger_config
from .corpus import SchemaError, ShapeError, load_corpus
from .metrics import (AlignmentError, DegenerateText, ablation_sweep, error_analysis, evaluate,
                      masking_comparison, write_evaluation)
from .pipeline import OUTPUTS_FILE, Deps, compose, load_deps, load_records, run_corpus
from .provider import ProviderError
from .rulebase import RuleError, decide, load_rules, parse_facts, validate
from .tagger import EmptyInput, TaggerConfig, tag

log = logging.getLogger("moralgate")

RUNTIME_ERRORS = (RuleError, ConfigError, SchemaError, ShapeError, AlignmentError, DegenerateText,
                  ProviderError, EmptyInput, OSError, ValueError)


def _table(rows, headers) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def _emit(fmt: str, payload: dict, rows, headers) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    elif fmt == "csv":
        print(",".join(headers))
        for row in rows:
            print(",".join(_fmt(c) for c in row))
    else:
        print(_table(rows, headers))


def _tagger_with_flags(cfg: TaggerConfig, args) -> TaggerConfig:
    if getattr(args, "ablate_hedge", False):
        cfg = replace(cfg, ablate_hedge=True)
    if getattr(args, "ablate_negation", False):
        cfg = replace(cfg, ablate_negation=True)
    return cfg


def _run_config(args):
    return load_run_config(
        args.config,
        corpus_path=getattr(args, "corpus", None),
        ruleset_path=getattr(args, "rules", None),
        script_path=getattr(args, "script", None),
        tagger_config_path=getattr(args, "tagger_config", None),
        k=getattr(args, "k", None),
        temperature=getattr(args, "temperature", None),
        output_dir=args.out,
        parallelism=getattr(args, "parallelism", None),
    )


def _deps(cfg, args) -> Deps:
    deps = load_deps(cfg)
    return replace(deps, tagger=_tagger_with_flags(deps.tagger, args))


# -- subcommands -------------------------------------------------------------------

def cmd_respond(args) -> int:
    if args.text is not None:
        text = args.text
    else:
        text = Path(args.prompt_file).read_text(encoding="utf-8")
    rules = load_rules(args.rules)
    cfg = load_tagger_config(args.tagger_config) if args.tagger_config else TaggerConfig()
    result = tag([text], None, _tagger_with_flags(cfg, args))
    decision = decide(rules, result.tag)
    print(compose(decision.action, decision.rationale, text))
    return 0


def _summary_rows(report):
    s = report.summary()
    return [(k, s[k]) for k in ("n_prompts", "coverage", "tagging_accuracy", "fairness_delta",
                                "readability_mean", "completeness_mean")]


def cmd_run(args) -> int:
    cfg = _run_config(args)
    deps = _deps(cfg, args)
    corpus = load_corpus(cfg.corpus_path)
    records = run_corpus(cfg, stable=args.stable, corpus=corpus, deps=deps)
    report = evaluate(records, corpus)
    write_evaluation(report, cfg.output_dir)
    failed = sum(1 for r in records if not r.ok)
    print(f"{len(records) - failed} ok, {failed} failed; wrote {Path(cfg.output_dir) / OUTPUTS_FILE}",
          file=sys.stderr)
    _emit(args.format, report.summary(), _summary_rows(report), ("metric", "value"))
    return 0


def cmd_evaluate(args) -> int:
    records = load_records(args.records)
    corpus = load_corpus(args.corpus)
    report = evaluate(records, corpus)
    write_evaluation(report, args.out)
    _emit(args.format, report.summary(), _summary_rows(report), ("metric", "value"))
    mismatches = error_analysis(records, corpus)
    if mismatches and args.format == "table":
        print()
        print(_table(mismatches, ("prompt_id", "oracle", "system", "excerpt")))
    return 0


def cmd_audit(args) -> int:
    cfg = _run_config(args)
    result = masking_comparison(cfg, deps=_deps(cfg, args))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fairness.json").write_text(json.dumps(result.to_dict(), indent=2) + "\n",
                                       encoding="utf-8", newline="\n")
    _emit(args.format, result.to_dict(), result.table(), ("measure", "original", "masked"))
    return 0


def cmd_ablate(args) -> int:
    cfg = _run_config(args)
    report = ablation_sweep(cfg, deps=load_deps(cfg))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                                       encoding="utf-8", newline="\n")
    _emit(args.format, report.to_dict(), list(report.rows.items()), ("setting", "accuracy"))
    return 0


def cmd_gen_corpus(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    c = corpus_mod.generate_default_corpus(args.seed)
    corpus_mod.save_corpus(c, out / "corpus.jsonl")
    script = corpus_mod.generate_script(args.seed)
    (out / "script.json").write_text(json.dumps(script, indent=2, ensure_ascii=False) + "\n",
                                     encoding="utf-8", newline="\n")
    counts = corpus_mod.tag_counts(c)
    print(f"wrote {len(c)} prompts to {out / 'corpus.jsonl'} "
          f"(low={counts['low']}, medium={counts['medium']}, high={counts['high']})")
    return 0


def cmd_validate_rules(args) -> int:
    text = Path(args.rule_file).read_text(encoding="utf-8")
    facts = parse_facts(text)
    validate(facts)
    print(f"OK: {len(facts)} facts, totality satisfied")
    return 0


# -- parser ------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, out_default: str = "out") -> None:
    p.add_argument("--config", help="TOML config file ([run] and [tagger] tables)")
    p.add_argument("--out", default=out_default, help="output directory (default: %(default)s)")
    p.add_argument("--stable", action="store_true",
                   help="zero latency fields so outputs are byte-stable")
    p.add_argument("--format", choices=("json", "csv", "table"), default="table",
                   help="console output format")


def _run_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="corpus JSONL file")
    p.add_argument("--rules", help="rule file")
    p.add_argument("--script", help="mock provider script (JSON)")
    p.add_argument("--tagger-config", help="tagger TOML config")
    p.add_argument("--k", type=int, help="completions per prompt")
    p.add_argument("--temperature", type=float)
    p.add_argument("--parallelism", type=int, help="concurrent prompts")


def _ablation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ablate-hedge", action="store_true", help="ignore hedge cues")
    p.add_argument("--ablate-negation", action="store_true", help="ignore negation cues")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moralgate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("respond", help="tag a text and print the governed response")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text")
    src.add_argument("--prompt-file")
    p.add_argument("--rules", default=str(CANONICAL_RULES))
    p.add_argument("--tagger-config")
    _ablation_flags(p)
    p.set_defaults(func=cmd_respond)

    p = sub.add_parser("run", help="run the pipeline over a corpus; writes outputs.json")
    _common(p)
    _run_inputs(p)
    _ablation_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="compute metrics from outputs.json; writes evaluation.csv")
    _common(p)
    p.add_argument("--records", required=True, help="outputs.json from a run")
    p.add_argument("--corpus", required=True, help="corpus JSONL the records came from")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("audit", help="fairness gap before and after demographic masking")
    _common(p)
    _run_inputs(p)
    _ablation_flags(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("ablate", help="tagging accuracy with cue classes disabled")
    _common(p)
    _run_inputs(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus and matching script")
    _common(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("validate-rules", help="parse and check a rule file")
    p.add_argument("rule_file")
    p.set_defaults(func=cmd_validate_rules)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
