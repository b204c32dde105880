"""Challenge oracles for security experiments: programmable and forking variants."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .sigcrypt import h2
from .stern import SimulationAbort


class ReplayDivergence(RuntimeError):
    """A replayed adversary asked different questions than in the original run."""


def point_key(point: bytes) -> bytes:
    return hashlib.sha3_256(point).digest()


@dataclass
class OracleEvent:
    key: bytes
    kind: str  # "query" or "program"
    value: np.ndarray


@dataclass
class ProgrammableOracle:
    """Lazily sampled challenge oracle that a simulator may program.

    Unprogrammed points are answered with the production hash (``seed`` is
    None) or a seeded variant of it.  Programming a point that was already
    answered counts as an abort and raises ``SimulationAbort``.
    """

    seed: bytes | None = None
    table: dict = field(default_factory=dict)
    log: list = field(default_factory=list)
    queries: int = 0
    aborts: int = 0

    def _default(self, point: bytes, kappa: int) -> np.ndarray:
        return h2(point if self.seed is None else self.seed + point, kappa)

    def query(self, point: bytes, kappa: int) -> np.ndarray:
        self.queries += 1
        key = point_key(point)
        hit = self.table.get(key)
        if hit is not None:
            return hit
        value = self._default(point, kappa)
        self.table[key] = value
        self.log.append(OracleEvent(key, "query", value))
        return value

    def program(self, point: bytes, kappa: int, value: np.ndarray) -> None:
        key = point_key(point)
        if key in self.table:
            self.aborts += 1
            raise SimulationAbort("point already fixed in the oracle table")
        value = np.asarray(value, dtype=np.int8)
        self.table[key] = value
        self.log.append(OracleEvent(key, "program", value))

    def event_index(self, point: bytes) -> int | None:
        key = point_key(point)
        for i, ev in enumerate(self.log):
            if ev.key == key:
                return i
        return None


@dataclass
class ForkingOracle(ProgrammableOracle):
    """Replays a recorded log up to event ``t_star`` and answers fresh from then on."""

    base_log: list = field(default_factory=list)
    t_star: int = 0
    rng: np.random.Generator | None = None

    def _next_event(self, key: bytes, kind: str) -> OracleEvent | None:
        i = len(self.log)
        if i < self.t_star:
            ev = self.base_log[i]
            if ev.key != key or ev.kind != kind:
                raise ReplayDivergence(f"event {i} differs from the recorded run")
            return ev
        return None

    def query(self, point: bytes, kappa: int) -> np.ndarray:
        self.queries += 1
        key = point_key(point)
        hit = self.table.get(key)
        if hit is not None:
            return hit
        ev = self._next_event(key, "query")
        value = ev.value if ev is not None else self.rng.integers(1, 4, size=kappa).astype(np.int8)
        self.table[key] = value
        self.log.append(OracleEvent(key, "query", value))
        return value

    def program(self, point: bytes, kappa: int, value: np.ndarray) -> None:
        key = point_key(point)
        if key in self.table:
            self.aborts += 1
            raise SimulationAbort("point already fixed in the oracle table")
        self._next_event(key, "program")
        value = np.asarray(value, dtype=np.int8)
        self.table[key] = value
        self.log.append(OracleEvent(key, "program", value))
