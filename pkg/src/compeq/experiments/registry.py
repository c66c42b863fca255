"""Named family/representation instances.

Families are code, so the CLI picks them by name from this table.
"""

from __future__ import annotations

from typing import Callable

from ..compgame.representation import Representation
from .commitment import COORDINATION, ZERO_SUM, CommitmentRepresentation
from .corr import CorrRepresentation, coordination_instance, empty_threat_instance, three_ne_instance
from .separation import SeparationConfig, build_separation_family


def _corr(instance) -> Callable[[], Representation]:
    def build():
        nf, pi, *rest = instance()
        return CorrRepresentation(nf, pi, rest[0] if rest else None)
    return build


REPRESENTATIONS: dict[str, Callable[[], Representation]] = {
    "commitment-game": lambda: CommitmentRepresentation(ZERO_SUM),
    "variant-prime": lambda: CommitmentRepresentation(COORDINATION),
    "stateless-separation": lambda: build_separation_family(SeparationConfig())[1],
    "corr-game": _corr(coordination_instance),
    "corr-game-3ne": _corr(three_ne_instance),
    "corr-game-empty-threat": _corr(empty_threat_instance),
}

CORR_INSTANCES = {
    "coordination": coordination_instance,
    "three-ne": three_ne_instance,
    "empty-threat": empty_threat_instance,
}


def representation(name: str) -> Representation:
    try:
        return REPRESENTATIONS[name]()
    except KeyError:
        raise KeyError(f"unknown family {name!r}; known: {', '.join(sorted(REPRESENTATIONS))}") from None
