"""Run the shipped fixtures through every evaluation procedure and print the tables.

    python scripts/reproduce_tables.py [--out DIR]
"""

import argparse

from moralgate.config import RunConfig
from moralgate.corpus import load_corpus
from moralgate.metrics import (ablation_sweep, error_analysis, evaluate, masking_comparison,
                               write_evaluation)
from moralgate.pipeline import load_deps, run_corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out/tables")
    args = ap.parse_args()

    cfg = RunConfig(output_dir=args.out)
    deps = load_deps(cfg)
    corpus = load_corpus(cfg.corpus_path, default_shape=True)
    records = run_corpus(cfg, stable=True, corpus=corpus, deps=deps)
    report = evaluate(records, corpus)
    write_evaluation(report, args.out)

    print("Performance summary")
    for key, value in report.summary().items():
        if key != "confusion":
            print(f"  {key:<20} {value}")
    print("  confusion (rows=oracle, cols=system; low/medium/high)")
    for label, row in zip(("low", "medium", "high"), report.confusion):
        print(f"    {label:<7} {row}")

    print("\nAccuracy under feature ablation")
    for name, acc in ablation_sweep(cfg, deps, corpus).rows.items():
        print(f"  {name:<18} {acc:.2f}")

    print("\nTagging errors")
    for row in error_analysis(records, corpus):
        print(f"  {row.prompt_id:<9} {row.oracle:<7} {row.system:<7} {row.excerpt!r}")

    comparison = masking_comparison(cfg, deps, corpus)
    print("\nAction distribution by gender (original corpus)")
    freqs = comparison.original.per_group_action_freq
    for action in freqs["male"]:
        m, f = freqs["male"][action], freqs["female"][action]
        print(f"  {action:<31} male {100 * m:5.1f}  female {100 * f:5.1f}  gap {abs(m - f):.2f}")

    print("\nBefore / after demographic masking")
    for label, before, after in comparison.table():
        print(f"  {label:<45} {before:.2f}  {after:.2f}")


if __name__ == "__main__":
    main()
