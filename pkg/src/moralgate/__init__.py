"""Rule-based moral governance of uncertain generated text."""

from .rulebase import Decision, RuleBase, UncertaintyTag, decide, parse_rule_file, virtue_of
from .tagger import TaggerConfig, tag

__version__ = "0.1.0"

__all__ = ["Decision", "RuleBase", "TaggerConfig", "UncertaintyTag", "decide", "parse_rule_file",
           "tag", "virtue_of"]
