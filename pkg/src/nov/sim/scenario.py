"""Scenario configuration, execution, and reporting."""

from __future__ import annotations

import gc
import json
import random
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ..filter import FilterVerdict, build_submission, select_clients, verify_submission
from ..fixed_point import QuantConfig, quantize, unembed
from ..protocol import Client, ProtocolAbort, RoundConfig, Server, apply_global_update
from ..protocol.server import Outgoing, Phase
from .adversary import Behavior, Dropout, behavior_from_dict
from .bus import MessageBus
from .synth import Model, synth_reference, synth_updates

SCHEMA_VERSION = 1


@dataclass
class AdversarySpec:
    client: int
    behavior: Behavior

    def to_dict(self) -> dict:
        return {"client": self.client, **self.behavior.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "AdversarySpec":
        d = dict(d)
        client = d.pop("client")
        return cls(int(client), behavior_from_dict(d))


@dataclass
class ScenarioConfig:
    """One simulated round.

    Adversaries are addressed by transport address ``1..n``; these equal the
    protocol indices unless a client drops out before the roster forms.
    ``timeout`` is the simulated per-phase deadline late messages must meet.
    """

    n: int
    t: int
    shape: list[int]
    seed: int = 0
    t_m: float = 1.0
    t_s: float = 0.4
    quant: QuantConfig = field(default_factory=QuantConfig)
    adversaries: list[AdversarySpec] = field(default_factory=list)
    timeout: float = 30.0
    reference: Model | None = None
    round_id: int = 0

    def __post_init__(self):
        for adv in self.adversaries:
            if not 1 <= adv.client <= self.n:
                raise ValueError(f"adversary address {adv.client} outside 1..{self.n}")

    def round_config(self) -> RoundConfig:
        return RoundConfig(self.n, self.t, list(self.shape), self.t_m, self.t_s, self.quant)

    def reference_model(self) -> Model:
        if self.reference is not None:
            return self.reference
        return synth_reference(self.seed, self.shape)

    def behaviors(self, address: int) -> list[Behavior]:
        return [a.behavior for a in self.adversaries if a.client == address]

    @property
    def identification_guaranteed(self) -> bool:
        """Identification is only promised against at most ``t - 1`` attackers."""
        return len({a.client for a in self.adversaries}) <= self.t - 1

    def to_dict(self) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "n": self.n,
            "t": self.t,
            "shape": list(self.shape),
            "seed": self.seed,
            "t_m": self.t_m,
            "t_s": self.t_s,
            "quant": asdict(self.quant),
            "adversaries": [a.to_dict() for a in self.adversaries],
            "timeout": self.timeout,
            "round_id": self.round_id,
        }
        if self.reference is not None:
            d["reference"] = self.reference
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        schema = d.get("schema")
        if schema != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema {schema!r}, expected {SCHEMA_VERSION}")
        return cls(
            n=int(d["n"]),
            t=int(d["t"]),
            shape=[int(k) for k in d["shape"]],
            seed=int(d.get("seed", 0)),
            t_m=d.get("t_m", 1.0),
            t_s=d.get("t_s", 0.4),
            quant=QuantConfig(**d.get("quant", {})),
            adversaries=[AdversarySpec.from_dict(a) for a in d.get("adversaries", [])],
            timeout=float(d.get("timeout", 30.0)),
            reference=d.get("reference"),
            round_id=int(d.get("round_id", 0)),
        )

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


@dataclass
class RoundReport:
    status: str
    n: int
    t: int
    p: int
    indices: dict[int, int] = field(default_factory=dict)
    u_b_initial: list[int] = field(default_factory=list)
    u_b: list[int] = field(default_factory=list)
    verdicts: dict[int, dict] = field(default_factory=dict)
    removed: dict[int, str] = field(default_factory=dict)
    accusations: list[dict] = field(default_factory=list)
    checks: dict[str, int] = field(default_factory=dict)
    attempts: int = 0
    messages: dict[str, dict] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    dropped: int = 0
    ignored: int = 0
    abort_phase: str | None = None
    abort_cause: str | None = None
    aggregate: list[int] | None = None
    X: list[int] | None = None
    R: list[int] | None = None
    model: Model | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def total_bytes(self) -> int:
        return sum(m["bytes"] for m in self.messages.values())

    @property
    def total_seconds(self) -> float:
        return sum(self.timings.values())

    @property
    def stepx_seconds(self) -> float:
        return self.timings.get("identification", 0.0) + self.timings.get("reexecution", 0.0)

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        for key in ("indices", "verdicts", "removed"):
            d[key] = {str(k): v for k, v in d[key].items()}
        if not timings:
            d.pop("timings")
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2)


class _Driver:
    def __init__(self, config: ScenarioConfig, server: Server, clients: dict[int, Client], bus: MessageBus):
        self.config = config
        self.server = server
        self.clients = clients
        self.bus = bus
        self.dropouts = {
            addr: [b for b in config.behaviors(addr) if isinstance(b, Dropout)] for addr in clients
        }

    def _withheld(self, addr: int, phase: str) -> Dropout | None:
        for d in self.dropouts.get(addr, ()):
            if d.phase == phase and (d.mode == "silent" or d.delay > self.config.timeout):
                return d
        return None

    def to_server(self, msgs: Sequence[tuple[int, object]], phase: str) -> list:
        """Deliver client messages in address order; returns late ones."""
        late, replies = [], []
        for addr, env in sorted(msgs, key=lambda m: m[0]):
            d = self._withheld(addr, phase)
            if d is not None and d.mode == "silent":
                self.bus.drop(env, phase)
                continue
            if d is not None:
                late.append((addr, env))
                continue
            replies += self.server.receive(addr, self.bus.carry(env, phase))
        # pull requests are answered inside the same phase
        if replies:
            late += self.to_server(self.to_clients(replies, phase), phase)
        return late

    def flush_late(self, late, phase: str) -> None:
        for addr, env in late:
            self.server.receive(addr, self.bus.carry(env, phase))

    def to_clients(self, out: Outgoing, phase: str) -> list[tuple[int, object]]:
        responses = []
        for addr, env in out:
            client = self.clients[addr]
            responses += [(addr, e) for e in client.handle(self.bus.carry(env, phase))]
        return responses

    def run(self) -> None:
        bus, server = self.bus, self.server
        with bus.timed("roster"):
            late = self.to_server([(a, c.register()) for a, c in self.clients.items()], "roster")
            roster = server.step0()
            self.flush_late(late, "roster")
        with bus.timed("distribution"):
            dists = self.to_clients(roster, "distribution")
            late = self.to_server(dists, "distribution")
            routed = server.step1()
            self.flush_late(late, "distribution")
        phase = "reconstruction"
        pending = routed
        for _ in range(len(server.client2) + 1):
            with bus.timed(phase):
                shares = self.to_clients(pending, phase)
                late = self.to_server(shares, phase)
                out = server.step2()
                self.flush_late(late, phase)
            if server.phase == Phase.DONE:
                self.to_clients(out, phase)
                return
            with bus.timed("identification"):
                accusations = self.to_clients(out, "identification")
                late = self.to_server(accusations, "identification")
                pending = server.stepx()
                self.flush_late(late, "identification")
            phase = "reexecution"
        raise ProtocolAbort("identification", "re-execution did not converge")


def _client_class(behaviors: Sequence[Behavior]) -> type[Client]:
    classes = {b.client_class() for b in behaviors} - {Client}
    if len(classes) > 1:
        raise ValueError("a client can carry at most one protocol-level behavior")
    return classes.pop() if classes else Client


def prepare_updates(config: ScenarioConfig, updates: Sequence[Model] | None) -> list[Model]:
    """Benign updates (synthesized if absent) with update-level behaviors applied."""
    reference = config.reference_model()
    if updates is None:
        updates = synth_updates(config.seed, config.shape, config.n, reference, config.t_m)
    if len(updates) != config.n:
        raise ValueError(f"{len(updates)} updates for {config.n} clients")
    out = []
    for addr, update in enumerate(updates, start=1):
        for b in config.behaviors(addr):
            update = b.transform_update(update, reference, config.t_m)
        out.append(update)
    return out


@contextmanager
def gc_paused():
    """Pause the cyclic collector; its pauses grow with heap size and would
    make round timings superlinear in the parameter count."""
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def run_scenario(config: ScenarioConfig, updates: Sequence[Model] | None = None) -> RoundReport:
    rcfg = config.round_config()
    reference = config.reference_model()
    ref_q = quantize(reference, config.quant).layers
    updates = prepare_updates(config, updates)

    clients = {}
    for addr in range(1, config.n + 1):
        cls = _client_class(config.behaviors(addr))
        rng = random.Random(f"{config.seed}:{addr}")
        q = quantize(updates[addr - 1], config.quant)
        clients[addr] = cls(addr, q, ref_q, rcfg, config.round_id, rng)

    server = Server(rcfg, ref_q, config.round_id)
    bus = MessageBus()
    driver = _Driver(config, server, clients, bus)
    report = RoundReport("ok", config.n, config.t, rcfg.p)
    try:
        with gc_paused():
            driver.run()
    except ProtocolAbort as exc:
        report.status = "aborted"
        report.abort_phase, report.abort_cause = exc.phase, exc.cause
    _fill_report(report, server, bus, reference, config)
    return report


def _fill_report(report: RoundReport, server: Server, bus: MessageBus, reference: Model, config: ScenarioConfig):
    report.indices = dict(server.index_of)
    report.u_b_initial = list(server.u_b_initial)
    report.u_b = list(server.u_b)
    report.verdicts = {
        u: {"norm_ok": v.norm_ok, "layer_pass_count": v.layer_pass_count} for u, v in sorted(server.verdicts.items())
    }
    report.removed = dict(sorted(server.removed.items()))
    report.accusations = [asdict(v) for v in server.resolutions]
    report.checks = dict(sorted(server.checks.items()))
    report.attempts = server.attempt + 1
    report.messages = {k: {"count": s.messages, "bytes": s.bytes} for k, s in bus.stats.items()}
    report.timings = {k: s.seconds for k, s in bus.stats.items()}
    report.dropped = bus.dropped
    report.ignored = server.ignored
    if server.result is not None:
        n_b = len(server.u_b)
        bits = config.quant.value_bits + n_b.bit_length()
        report.X = list(server.result.X)
        report.R = list(server.result.R)
        report.aggregate = [unembed(x, bits) for x in server.result.X]
        report.model = apply_global_update(reference, server.result.X, n_b, config.quant)


@dataclass
class FilterReport:
    verdicts: dict[int, FilterVerdict]
    u_b: list[int]
    seconds: float


def run_filter(config: ScenarioConfig, updates: Sequence[Model] | None = None) -> FilterReport:
    """Only the model filter: commit, prove, verify, select. No sharing."""
    start = time.perf_counter()
    rcfg = config.round_config()
    ref_q = quantize(config.reference_model(), config.quant).layers
    verdicts = {}
    for addr, update in enumerate(prepare_updates(config, updates), start=1):
        rng = random.Random(f"{config.seed}:{addr}")
        sub, _ = build_submission(quantize(update, config.quant), ref_q, rcfg.T, config.quant, rng)
        verdicts[addr] = verify_submission(sub, addr, ref_q, rcfg.T, config.quant)
    u_b = select_clients(list(verdicts.values()), config.t_s, config.n)
    return FilterReport(verdicts, u_b, time.perf_counter() - start)
