"""Per-round data records: one Reading per sensing node, grouped in Snapshots.

A reading is lost or kept as a whole: a link failure wipes every channel of
the affected node for that round (status NULL), never a subset. Gas channels
a run is not equipped with are simply absent from ``gases``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .environment import GAS_CHANNELS, Channel


class ReadingStatus(Enum):
    OK = "OK"
    NULL = "NULL"


@dataclass(frozen=True)
class Reading:
    """One node's values for one round.

    temp_c and light_raw are always equipped (the demonstration hardware
    carried both); each is a number or None (NULL). ``gases`` holds only the
    equipped gas channels, each mapped to a number or None.
    """

    node: str
    round: int
    time_ms: int
    temp_c: float | None
    light_raw: float | None
    gases: Mapping[Channel, float | None] = field(default_factory=dict)
    status: ReadingStatus = ReadingStatus.OK

    def __post_init__(self):
        for gas in self.gases:
            if gas not in GAS_CHANNELS:
                raise ValueError(f"{gas} is not a gas channel")
        values = [self.temp_c, self.light_raw, *self.gases.values()]
        if self.status is ReadingStatus.OK and any(v is None for v in values):
            raise ValueError(f"OK reading for {self.node} has a NULL channel")
        if self.status is ReadingStatus.NULL and any(v is not None for v in values):
            raise ValueError(f"NULL reading for {self.node} has a value")

    def equipped(self, channel: Channel) -> bool:
        if channel in (Channel.TEMP_C, Channel.LIGHT_RAW):
            return True
        return channel in self.gases

    def value(self, channel: Channel) -> float | None:
        """The measured value, or None when the round's data was lost."""
        if channel is Channel.TEMP_C:
            return self.temp_c
        if channel is Channel.LIGHT_RAW:
            return self.light_raw
        if channel not in self.gases:
            raise KeyError(f"{self.node} is not equipped with {channel.value}")
        return self.gases[channel]


@dataclass(frozen=True)
class Snapshot:
    """All readings of one collection round, in deterministic topology order."""

    round: int
    time_ms: int
    readings: tuple[Reading, ...]

    def nodes(self) -> tuple[str, ...]:
        return tuple(r.node for r in self.readings)

    def reading_for(self, node: str) -> Reading | None:
        for r in self.readings:
            if r.node == node:
                return r
        return None
