"""Walk the three environmental-policy micro-cases through tagger and both rule sets."""

from moralgate.config import (CANONICAL_RULES, ENVIRONMENTAL_CORPUS, ENVIRONMENTAL_SCRIPT,
                              LISTING1_RULES)
from moralgate.corpus import load_corpus
from moralgate.pipeline import Deps, run_records
from moralgate.provider import mock_from_script
from moralgate.rulebase import load_rules, virtue_of
from moralgate.tagger import TaggerConfig

corpus = load_corpus(ENVIRONMENTAL_CORPUS)
provider = mock_from_script(ENVIRONMENTAL_SCRIPT)
for rules_path in (CANONICAL_RULES, LISTING1_RULES):
    rules = load_rules(rules_path)
    print(f"== rule set: {rules.name}")
    for rec in run_records(corpus, Deps(rules, provider, TaggerConfig())):
        print(f"{rec.prompt_id}  oracle={rec.oracle_tag.value:<6} system={rec.system_tag.value:<6} "
              f"score-features={rec.features.hedge_hits}h/{rec.features.negation_hits}n  "
              f"virtue={virtue_of(rec.system_tag)}")
        print("   " + rec.composed_response.replace("\n", "\n   "))
    print()
