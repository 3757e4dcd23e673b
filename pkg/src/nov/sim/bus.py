"""In-process message bus with per-phase accounting.

Every message is serialized with the wire codec (that is what gets counted)
and the receiver gets the decoded copy, so nothing travels by reference.
"""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass

from ..protocol import wire
from ..protocol.messages import Envelope


@dataclass
class PhaseStats:
    messages: int = 0
    bytes: int = 0
    seconds: float = 0.0


class MessageBus:
    def __init__(self):
        self.stats: dict[str, PhaseStats] = defaultdict(PhaseStats)
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self._cache: tuple[Envelope, bytes] | None = None

    def carry(self, env: Envelope, phase: str) -> Envelope:
        """Serialize, count, and hand back the receiver's copy."""
        # broadcasts reuse one envelope object; encode it once
        if self._cache is not None and self._cache[0] is env:
            data = self._cache[1]
        else:
            data = wire.encode(env)
            self._cache = (env, data)
        st = self.stats[phase]
        st.messages += 1
        st.bytes += len(data)
        self.sent += 1
        self.delivered += 1
        return wire.decode(data)

    def drop(self, env: Envelope, phase: str) -> None:
        self.sent += 1
        self.dropped += 1

    @contextmanager
    def timed(self, phase: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stats[phase].seconds += time.perf_counter() - start

    def balanced(self) -> bool:
        return self.sent == self.delivered + self.dropped
