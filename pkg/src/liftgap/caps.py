"""Desk-scale size caps.

Defaults keep every operation exact and interactive.  The environment
variable LIFTGAP_SIZE_CAPS can raise them, as a comma-separated list of
``name=value`` pairs, e.g. ``LIFTGAP_SIZE_CAPS=lp_nonzeros=500000,boolfn_n=26``.
Unknown names are rejected loudly rather than ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import InputError

_ENV_VAR = "LIFTGAP_SIZE_CAPS"


@dataclass(frozen=True)
class SizeCaps:
    lp_nonzeros: int = 200_000   # refuse larger LinearPrograms
    boolfn_n: int = 24           # dense 2^n tables
    bruteforce_n: int = 24       # assignment enumeration
    slack_table_n: int = 20      # slack-function table construction
    farkas_n: int = 12           # 2^n-row decomposition systems
    detect_n: int = 16           # symmetric-structure search
    edge_n: int = 6              # edge-variable Sherali-Adams LP
    edge_r: int = 2
    protocol_messages: int = 1_000_000


def caps() -> SizeCaps:
    """Active caps: defaults overlaid with any LIFTGAP_SIZE_CAPS entries."""
    raw = os.environ.get(_ENV_VAR, "").strip()
    if not raw:
        return SizeCaps()
    known = {f.name for f in fields(SizeCaps)}
    overrides: dict[str, int] = {}
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep or name not in known:
            raise InputError(f"{_ENV_VAR}: unknown cap {name!r}")
        try:
            overrides[name] = int(value)
        except ValueError:
            raise InputError(f"{_ENV_VAR}: bad value for {name!r}: {value!r}") from None
    return SizeCaps(**overrides)
