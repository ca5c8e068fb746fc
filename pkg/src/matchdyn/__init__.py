"""Coalition formation and matching games with dynamic constraints."""

from .game import (
    SELF,
    GameSpec,
    ImprovementTrace,
    Step,
    blocking_coalitions,
    candidate_coalitions,
    check_consistency,
    is_stable,
    make_spec,
    replay,
    resolve,
    simulate,
)
from .matching import MatchingInstance, blocking_pairs, embed, make_instance, resolve_pair
from .sequencer import converge, truncate

__all__ = [
    "SELF",
    "GameSpec",
    "ImprovementTrace",
    "MatchingInstance",
    "Step",
    "blocking_coalitions",
    "blocking_pairs",
    "candidate_coalitions",
    "check_consistency",
    "converge",
    "embed",
    "is_stable",
    "make_instance",
    "make_spec",
    "replay",
    "resolve",
    "resolve_pair",
    "simulate",
    "truncate",
]
