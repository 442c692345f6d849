"""Built-in environments and the external-task bridge, keyed by name."""

from __future__ import annotations

from .base import (
    PHYSICS_DT,
    Environment,
    EnvSpec,
    EpisodeOverError,
    StepResult,
    UnsupportedOperationError,
)
from .bridge import BridgeEnv, BridgeError
from .crawler import Crawler, CrawlerState
from .purcell import PurcellSwimmer, PurcellSwimmerState

EXTERNAL_PREFIX = "external:"

_BUILTINS = {
    "purcell_swimmer": PurcellSwimmer,
    "crawler": Crawler,
}


def make_env(name: str, **kwargs) -> Environment:
    """Construct an environment by registry name.

    Built-ins: ``purcell_swimmer``, ``crawler``.  External tasks use
    ``external:<env-id>`` and require either ``command`` (server argv,
    spawned per instance) or ``endpoint`` (``tcp:host:port``).
    """
    if name.startswith(EXTERNAL_PREFIX):
        return BridgeEnv(name[len(EXTERNAL_PREFIX):], **kwargs)
    try:
        cls = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}") from None
    return cls(**kwargs)


__all__ = [
    "PHYSICS_DT",
    "BridgeEnv",
    "BridgeError",
    "Crawler",
    "CrawlerState",
    "Environment",
    "EnvSpec",
    "EpisodeOverError",
    "EXTERNAL_PREFIX",
    "make_env",
    "PurcellSwimmer",
    "PurcellSwimmerState",
    "StepResult",
    "UnsupportedOperationError",
]
