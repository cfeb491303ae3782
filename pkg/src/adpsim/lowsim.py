"""Radio-level model of a duty-cycled star network.

Sources wake the sink with a train of preamble strobes, the sink answers
with an early ACK, queued payloads leave as one concatenated super packet
and are confirmed with a block ACK. Time is continuous and event driven:
the channel destroys every frame that overlaps another in time, senders run
CSMA with binary exponential backoff, and each node carries a four-state
radio whose per-state residency times form the energy ledger. The sink can
optionally retune its polling distribution from the coefficient of
variation of the packet generation gaps it observed during the last cycle.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import islice

from .core import (
    ArrivalModel,
    FrameSpec,
    ParameterError,
    PollingDistribution,
    PollingKind,
    EventLimitError,
    SimulationIntegrityError,
    select_distribution,
    substream,
)
from .traffic import ArrivalTimeline, CvWindow, cycle_cv, generate_arrivals

# Span audit slack per node, in seconds. Charges are computed as differences
# of event timestamps and accumulated with compensation, so the real error
# stays orders of magnitude below this.
_AUDIT_TOL_S = 1e-9


def airtime(n_bytes: int, bit_rate_bps: float) -> float:
    """Seconds a frame of n_bytes occupies the channel."""
    if n_bytes <= 0:
        raise ParameterError(f"n_bytes must be > 0, got {n_bytes}")
    if not bit_rate_bps > 0:
        raise ParameterError(f"bit_rate_bps must be > 0, got {bit_rate_bps}")
    return n_bytes * 8.0 / bit_rate_bps


class NodeMode(Enum):
    SLEEP = "sleep"
    POLLING = "polling"
    RX_PENDING = "rx_pending"
    STROBE_SENDING = "strobe_sending"
    AWAIT_EARLY_ACK = "await_early_ack"
    DATA_SENDING = "data_sending"
    AWAIT_BLOCK_ACK = "await_block_ack"
    BACKOFF = "backoff"


class RadioState(Enum):
    TX = "tx"
    RX = "rx"
    LISTEN = "listen"
    SLEEP = "sleep"


class FrameKind(Enum):
    STROBE = "strobe"
    EARLY_ACK = "early_ack"
    DATA = "data"
    BLOCK_ACK = "block_ack"


class EventKind(Enum):
    PACKET_GENERATED = "packet_generated"
    POLL_START = "poll_start"
    STROBE_TX_END = "strobe_tx_end"
    EARLY_ACK_TX_END = "early_ack_tx_end"
    DATA_TX_END = "data_tx_end"
    ACK_TX_END = "ack_tx_end"
    BACKOFF_EXPIRED = "backoff_expired"
    STROBE_TIMEOUT = "strobe_timeout"
    CYCLE_BOUNDARY = "cycle_boundary"


@dataclass(frozen=True)
class RadioPowerProfile:
    """Draw per radio state, in milliwatts; mW times seconds gives mJ."""

    tx_mW: float = 65.0
    rx_mW: float = 29.0
    listen_mW: float = 29.0
    sleep_mW: float = 0.003

    def __post_init__(self) -> None:
        for name in ("tx_mW", "rx_mW", "listen_mW", "sleep_mW"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        active_floor = min(self.tx_mW, self.rx_mW, self.listen_mW)
        if self.sleep_mW > 0 and active_floor < 100.0 * self.sleep_mW:
            raise ParameterError("active draw must be >= 100x sleep_mW")


@dataclass(frozen=True)
class MacParams:
    """Channel-access timing. Strobing is paced by early_ack_wait_s: after
    each strobe the sender listens that long for an early ACK before the
    next strobe goes out."""

    early_ack_wait_s: float = 0.002
    cca_slot_s: float = 0.001
    strobe_gap_s: float = 0.005  # reserved knob, pacing uses early_ack_wait_s
    initial_backoff_slots: int = 16
    backoff_cap_slots: int = 128
    max_retries: int = 5
    strobe_timeout_s: float | None = None  # None: twice the mean poll interval

    def __post_init__(self) -> None:
        for name in ("early_ack_wait_s", "cca_slot_s", "strobe_gap_s"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        if self.initial_backoff_slots < 1:
            raise ParameterError("initial_backoff_slots must be >= 1")
        if self.backoff_cap_slots < self.initial_backoff_slots:
            raise ParameterError("backoff_cap_slots below initial window")
        if self.max_retries < 0:
            raise ParameterError("max_retries must be >= 0")
        if self.strobe_timeout_s is not None and not self.strobe_timeout_s > 0:
            raise ParameterError("strobe_timeout_s must be > 0 when set")


@dataclass(frozen=True)
class LowLevelConfig:
    arrival: ArrivalModel
    polling: PollingDistribution
    node_count: int = 10
    packets_per_node: int = 20
    bit_rate_bps: float = 18780.0
    frames: FrameSpec = field(default_factory=FrameSpec)
    radio: RadioPowerProfile = field(default_factory=RadioPowerProfile)
    mac: MacParams = field(default_factory=MacParams)
    cycle_duration_s: float = 10.0
    cv_threshold: float = 0.8
    stagger_arrival_phase: bool = True
    idle_horizon_s: float = 100.0
    max_events: int = 10_000_000

    def __post_init__(self) -> None:
        if self.node_count < 2:
            raise ParameterError("need the sink plus at least one source")
        if self.packets_per_node < 0:
            raise ParameterError("packets_per_node must be >= 0")
        if not self.bit_rate_bps > 0:
            raise ParameterError("bit_rate_bps must be > 0")
        if not self.cycle_duration_s > 0:
            raise ParameterError("cycle_duration_s must be > 0")
        if not self.cv_threshold > 0:
            raise ParameterError("cv_threshold must be > 0")
        if not self.idle_horizon_s > 0:
            raise ParameterError("idle_horizon_s must be > 0")
        if self.max_events < 1:
            raise ParameterError("max_events must be >= 1")

    @property
    def strobe_timeout_resolved_s(self) -> float:
        if self.mac.strobe_timeout_s is not None:
            return self.mac.strobe_timeout_s
        return 2.0 * self.polling.mean_interval_s


@dataclass(frozen=True, slots=True)
class Packet:
    node_id: int
    seq_no: int
    created_s: float


@dataclass(slots=True, eq=False)
class Frame:
    """One transmission occupying [start_s, end_s) on the shared channel."""

    sender: int
    target: int
    kind: FrameKind
    start_s: float
    end_s: float
    packets: tuple[Packet, ...] = ()
    collided: bool = False
    # bumped whenever the frame is moved; the end event carries the value
    # it was scheduled for, so superseded events are recognised and dropped
    gen: int = 0


class Channel:
    """Single shared medium. Any temporal overlap destroys every frame
    involved; a frame may be registered ahead of its start time."""

    def __init__(self) -> None:
        self._active: list[Frame] = []
        self.collision_count = 0
        self.frames_sent = 0

    def register(self, frame: Frame) -> None:
        for other in self._active:
            if other.start_s < frame.end_s and frame.start_s < other.end_s:
                if not other.collided:
                    other.collided = True
                    self.collision_count += 1
                if not frame.collided:
                    frame.collided = True
                    self.collision_count += 1
        self._active.append(frame)
        self.frames_sent += 1

    def resolve(self, frame: Frame) -> bool:
        """Remove a finished frame; True when it survived un-collided."""
        self._active.remove(frame)
        return not frame.collided

    def busy_at(self, t: float) -> bool:
        return any(f.start_s <= t < f.end_s for f in self._active)

    def activity_overlapping(self, start_s: float, end_s: float) -> bool:
        return any(f.start_s < end_s and start_s < f.end_s for f in self._active)


@dataclass(order=True, slots=True)
class Event:
    time_s: float
    seq: int
    node_id: int = field(compare=False, default=0)
    kind: EventKind = field(compare=False, default=EventKind.POLL_START)
    frame: Frame | None = field(compare=False, default=None)
    packet: Packet | None = field(compare=False, default=None)
    gen: int = field(compare=False, default=0)


class _TimeAccumulator:
    """Neumaier-compensated running sum of time spans. Keeps the per-node
    residency audit far below _AUDIT_TOL_S over millions of tiny charges."""

    __slots__ = ("_total", "_comp")

    def __init__(self) -> None:
        self._total = 0.0
        self._comp = 0.0

    def add(self, x: float) -> None:
        s = self._total + x
        if abs(self._total) >= abs(x):
            self._comp += (self._total - s) + x
        else:
            self._comp += (x - s) + self._total
        self._total = s

    @property
    def value(self) -> float:
        return self._total + self._comp


@dataclass(slots=True, eq=False)
class _Node:
    node_id: int
    mode: NodeMode = NodeMode.SLEEP
    radio: RadioState = RadioState.SLEEP
    radio_since: float = 0.0
    residency: dict = field(default_factory=dict)
    queue: deque = field(default_factory=deque)
    retry_count: int = 0
    head_sent: bool = False
    timed_out: bool = False
    timer_gen: int = 0
    poll_gen: int = 0
    lock: Frame | None = None
    strobe_tx_s: float = 0.0
    strobe_count: int = 0
    timeout_at_s: float = 0.0
    backoff_until_s: float = 0.0

    def __post_init__(self) -> None:
        self.residency = {state: _TimeAccumulator() for state in RadioState}


@dataclass(frozen=True)
class LowLevelResult:
    total_energy_mJ: float
    mean_delay_s: float
    generated: int
    delivered: int
    dropped: int
    collisions: int
    retransmissions: int
    duration_s: float
    poll_count: int
    strobe_count: int
    strobe_energy_mJ: float
    superpacket_size_histogram: dict[int, int]
    per_node_time_s: dict[int, float]
    per_node_energy_mJ: dict[int, float]
    polling_switches: tuple[tuple[float, PollingKind, PollingKind], ...]
    informative_cycles: int
    deterministic_selections: int
    exponential_selections: int
    final_polling_kind: PollingKind
    event_count: int
    seed: int


class _Simulation:
    def __init__(self, config: LowLevelConfig, seed: int,
                 timelines: list[ArrivalTimeline], trace=None) -> None:
        self.cfg = config
        self.seed = seed
        self.trace = trace
        self.channel = Channel()
        self.nodes = [_Node(node_id=i) for i in range(config.node_count)]
        self.sink = self.nodes[0]
        self.heap: list[Event] = []
        self.seq = 0
        self.now = 0.0
        self.event_count = 0

        self.poll_rng = substream(seed, 0, "polling")
        self.backoff_rng = {n.node_id: substream(seed, n.node_id, "backoff")
                            for n in self.nodes[1:]}

        fr = config.frames
        self.strobe_air = airtime(fr.preamble_strobe_bytes, config.bit_rate_bps)
        self.early_ack_air = airtime(fr.early_ack_bytes, config.bit_rate_bps)
        self.block_ack_air = airtime(fr.ack_bytes, config.bit_rate_bps)
        self.slot = config.mac.cca_slot_s
        self.ea_wait = config.mac.early_ack_wait_s
        self.strobe_cycle = self.ea_wait + self.strobe_air
        self.strobe_timeout = config.strobe_timeout_resolved_s

        self.current_polling = (PollingKind.DETERMINISTIC
                                if config.polling.kind is PollingKind.DYNAMIC
                                else config.polling.kind)
        self.cv_window = CvWindow(cycle_duration_s=config.cycle_duration_s)
        self.received: set[tuple[int, int]] = set()
        self.delays: list[float] = []
        self.superpacket_sizes: dict[int, int] = {}
        self.switches: list[tuple[float, PollingKind, PollingKind]] = []
        self.informative_cycles = 0
        self.det_selections = 0
        self.exp_selections = 0
        self.poll_count = 0
        self.delivered = 0
        self.dropped = 0
        self.retransmissions = 0
        self.generated = 0
        self.pending = 0
        self.expected = sum(len(tl) for tl in timelines)
        self.arrival_times = sorted(t for tl in timelines for t in tl.timestamps_s)
        self.next_poll_s = math.inf
        self.next_cycle_s = (config.cycle_duration_s
                             if config.polling.kind is PollingKind.DYNAMIC
                             else math.inf)

        for tl in timelines:
            for i, t in enumerate(tl.timestamps_s):
                self._push(t, tl.node_id, EventKind.PACKET_GENERATED,
                           packet=Packet(tl.node_id, i, t))
        self._schedule_poll(0.0)
        if config.polling.kind is PollingKind.DYNAMIC:
            self._push(config.cycle_duration_s, 0, EventKind.CYCLE_BOUNDARY)

    # -- plumbing ---------------------------------------------------------

    def _push(self, time_s: float, node_id: int, kind: EventKind,
              frame: Frame | None = None, packet: Packet | None = None,
              gen: int = 0) -> None:
        self.seq += 1
        heapq.heappush(self.heap, Event(time_s, self.seq, node_id, kind,
                                        frame, packet, gen))

    def _charge(self, node: _Node, state: RadioState, until_s: float) -> None:
        span = until_s - node.radio_since
        if span < -_AUDIT_TOL_S:
            raise SimulationIntegrityError(
                f"node {node.node_id}: charge of {span} s ends before it starts")
        node.residency[state].add(span)
        node.radio_since = until_s

    def _settle(self, node: _Node, now: float) -> None:
        self._charge(node, node.radio, now)

    # -- sender side ------------------------------------------------------

    def _begin_access(self, now: float, node: _Node) -> None:
        """Clear-channel assessment over one slot, then either the strobe
        train or a backoff. CCA is ideal: anything on the air during the
        assessment window is detected."""
        self._materialize_trains(now)
        self._settle(node, now)
        cca_end = now + self.slot
        self._charge(node, RadioState.LISTEN, cca_end)
        if self.channel.activity_overlapping(now, cca_end):
            self._start_backoff(now, node)
            return
        node.mode = NodeMode.STROBE_SENDING
        node.radio = RadioState.LISTEN
        node.timed_out = False
        strobe = Frame(node.node_id, 0, FrameKind.STROBE,
                       cca_end, cca_end + self.strobe_air)
        self.channel.register(strobe)
        self._push(strobe.end_s, node.node_id, EventKind.STROBE_TX_END, frame=strobe)
        node.timer_gen += 1
        node.timeout_at_s = cca_end + self.strobe_timeout
        self._push(node.timeout_at_s, node.node_id,
                   EventKind.STROBE_TIMEOUT, gen=node.timer_gen)

    def _draw_backoff_slots(self, node: _Node) -> int:
        window = min(self.cfg.mac.initial_backoff_slots << node.retry_count,
                     self.cfg.mac.backoff_cap_slots)
        return 1 + int(self.backoff_rng[node.node_id].integers(0, window))

    def _start_backoff(self, now: float, node: _Node) -> None:
        node.mode = NodeMode.BACKOFF
        node.radio = RadioState.SLEEP
        node.backoff_until_s = now + self._draw_backoff_slots(node) * self.slot
        self._push(node.backoff_until_s, node.node_id, EventKind.BACKOFF_EXPIRED)

    def _enter_retry(self, now: float, node: _Node) -> None:
        node.timer_gen += 1
        node.timed_out = False
        node.lock = None
        self._settle(node, now)
        node.retry_count += 1
        if node.retry_count > self.cfg.mac.max_retries:
            head = node.queue.popleft()
            if (head.node_id, head.seq_no) not in self.received:
                self.dropped += 1
                self.pending -= 1
            node.retry_count = 0
            node.head_sent = False
            if node.queue:
                self._begin_access(now, node)
            else:
                node.mode = NodeMode.SLEEP
                node.radio = RadioState.SLEEP
        else:
            self._start_backoff(now, node)

    # -- sink side --------------------------------------------------------

    def _schedule_poll(self, now: float, floor_s: float = 0.0) -> None:
        """Arm the next poll. A draw shorter than an already-paid wake
        window is floored to the window end: wake windows never overlap."""
        if self.current_polling is PollingKind.DETERMINISTIC:
            interval = self.cfg.polling.mean_interval_s
        else:
            interval = float(self.poll_rng.exponential(self.cfg.polling.mean_interval_s))
        self.sink.poll_gen += 1
        self.next_poll_s = max(now + interval, floor_s)
        self._push(self.next_poll_s, 0, EventKind.POLL_START, gen=self.sink.poll_gen)

    # -- event handlers ---------------------------------------------------

    def _on_packet_generated(self, ev: Event) -> str:
        node = self.nodes[ev.node_id]
        node.queue.append(ev.packet)
        self.generated += 1
        self.pending += 1
        if node.mode is NodeMode.SLEEP:
            self._begin_access(ev.time_s, node)
        return f"queue={len(node.queue)}"

    def _on_poll_start(self, ev: Event) -> str:
        sink = self.sink
        if ev.gen != sink.poll_gen:
            return "stale"
        now = ev.time_s
        busy = self.channel.activity_overlapping(now, now + self.slot)
        if sink.mode is NodeMode.SLEEP:
            self._settle(sink, now)
            self.poll_count += 1
            if busy:
                sink.mode = NodeMode.POLLING
                sink.radio = RadioState.LISTEN
                self._schedule_poll(now)
            else:
                # stays asleep; the wake window is still paid for
                self._charge(sink, RadioState.LISTEN, now + self.slot)
                self._schedule_poll(now, floor_s=now + self.slot)
            return "wake busy" if busy else "wake idle"
        # safety re-poll while already awake: hold on if the air is live,
        # otherwise give up on whoever went quiet and sleep again
        if busy:
            self._schedule_poll(now)
            return "hold"
        self._settle(sink, now)
        sink.mode = NodeMode.SLEEP
        sink.radio = RadioState.SLEEP
        self._schedule_poll(now)
        return "give up"

    def _on_strobe_tx_end(self, ev: Event) -> str:
        node = self.nodes[ev.node_id]
        strobe = ev.frame
        if ev.gen != strobe.gen:
            # a bulk jump moved this strobe; a fresh event tracks it now
            return "rescheduled"
        now = ev.time_s
        delivered = self.channel.resolve(strobe)
        self._charge(node, RadioState.LISTEN, strobe.start_s)
        self._charge(node, RadioState.TX, now)
        node.strobe_tx_s += now - strobe.start_s
        node.strobe_count += 1
        if node.mode is not NodeMode.STROBE_SENDING:
            raise SimulationIntegrityError(
                f"strobe end for node {node.node_id} in mode {node.mode}")

        ea: Frame | None = None
        sink = self.sink
        if (delivered
                and sink.mode in (NodeMode.POLLING, NodeMode.RX_PENDING)
                and sink.radio is not RadioState.TX):
            self._settle(sink, now)
            sink.mode = NodeMode.RX_PENDING
            sink.radio = RadioState.TX
            ea = Frame(0, node.node_id, FrameKind.EARLY_ACK,
                       now, now + self.early_ack_air)
            self.channel.register(ea)
            self._push(ea.end_s, 0, EventKind.EARLY_ACK_TX_END, frame=ea)

        if ea is not None:
            node.mode = NodeMode.AWAIT_EARLY_ACK
            node.lock = ea
            return "answered"
        if node.timed_out:
            self._enter_retry(now, node)
            return "timed out"
        self._continue_strobing(now, node)
        return "delivered" if delivered else "collided"

    def _continue_strobing(self, now: float, node: _Node) -> None:
        """Register the next strobe; while nothing on the schedule can react,
        charge whole strobe cycles in bulk instead of simulating each.

        The sender is listening between strobes, so when an already-known
        transmission would overlap its next strobe it defers into a backoff
        instead of jamming it. Without this, two trains that once collide
        would share a period and collide on every strobe until both time
        out; with it, registration order picks a single winner. The check
        also keeps the bulk jump sound: any frame long enough to reach into
        the jumped window triggers a deferral here first."""
        next_start = now + self.ea_wait
        if self.channel.activity_overlapping(next_start, next_start + self.strobe_air):
            node.timer_gen += 1
            node.timed_out = False
            self._start_backoff(now, node)
            return
        base = now + self._train_jump(now, node) * self.strobe_cycle
        strobe = Frame(node.node_id, 0, FrameKind.STROBE,
                       base + self.ea_wait, base + self.ea_wait + self.strobe_air)
        self.channel.register(strobe)
        self._push(strobe.end_s, node.node_id, EventKind.STROBE_TX_END, frame=strobe)

    def _next_fixed_event_s(self) -> float:
        """Earliest moment the steady strobing regime can change from the
        outside: a poll, a packet arrival, a strobe timeout, or a
        polling-adaptation boundary. Backoff expiries are deliberately not
        in this set; while the regime holds they are replayed analytically."""
        t = self.next_poll_s
        if self.generated < len(self.arrival_times):
            next_arrival = self.arrival_times[self.generated]
            if next_arrival < t:
                t = next_arrival
        if self.next_cycle_s < t:
            t = self.next_cycle_s
        for other in self.nodes[1:]:
            if other.mode is NodeMode.STROBE_SENDING and other.timeout_at_s < t:
                t = other.timeout_at_s
        return t

    def _steady_trains(self) -> list[Frame] | None:
        """The active frames when the network is in its quiet strobing
        regime: sink asleep and nothing on the air but clean strobe trains
        from senders that have not timed out. None outside that regime."""
        if self.sink.mode is not NodeMode.SLEEP:
            return None
        frames = self.channel._active
        for frame in frames:
            if frame.collided or frame.kind is not FrameKind.STROBE:
                return None
            owner = self.nodes[frame.sender]
            if owner.mode is not NodeMode.STROBE_SENDING or owner.timed_out:
                return None
        return frames

    def _strobe_pattern_busy(self, start_s: float, end_s: float) -> bool:
        """Whether some strobe train occupies part of [start_s, end_s).
        Works from each train's phase, not the registry, so it stays valid
        at any time inside the steady window: past the registered horizon
        and while frames sit jumped ahead of their physical position."""
        width = end_s - start_s
        for frame in self.channel._active:
            offset = math.fmod(start_s - frame.start_s, self.strobe_cycle)
            if offset < 0.0:
                offset += self.strobe_cycle
            if offset < self.strobe_air or offset > self.strobe_cycle - width:
                return True
        return False

    def _materialize_trains(self, now: float) -> None:
        """Shift every jumped strobe frame back to the cycle covering `now`
        and return its owner's pre-charge for the cycles that have not
        elapsed yet. After this the registry again reflects what is
        physically on the air, so registering a new frame against it and
        assessing the channel from it are sound."""
        for frame in self.channel._active:
            if frame.kind is not FrameKind.STROBE:
                continue
            back = int((frame.end_s - now) / self.strobe_cycle)
            if frame.end_s - back * self.strobe_cycle <= now:
                back -= 1
            if back <= 0:
                continue
            frame.start_s -= back * self.strobe_cycle
            frame.end_s -= back * self.strobe_cycle
            frame.gen += 1
            owner = self.nodes[frame.sender]
            owner.residency[RadioState.LISTEN].add(-(back * self.ea_wait))
            owner.residency[RadioState.TX].add(-(back * self.strobe_air))
            owner.strobe_tx_s -= back * self.strobe_air
            owner.strobe_count -= back
            owner.radio_since -= back * self.strobe_cycle
            self._push(frame.end_s, frame.sender, EventKind.STROBE_TX_END,
                       frame=frame, gen=frame.gen)

    def _train_jump(self, now: float, node: _Node) -> int:
        """Advance every active strobe train by the same number of whole
        cycles when the window up to the next fixed event holds nothing but
        train continuations. All trains share one period, so their relative
        phases are frozen: clean trains stay clean and the deferral rule
        fires identically before and after the jump. Peers' pending strobes
        are shifted in place with their owners charged ahead, superseded
        end events no-op, and _materialize_trains unwinds whatever part of
        a shift has not elapsed if the registry is needed mid-window."""
        peers = self._steady_trains()
        if peers is None:
            return 0
        cycles = int((self._next_fixed_event_s() - now) / self.strobe_cycle) - 1
        if cycles < 1:
            return 0
        shift = cycles * self.strobe_cycle
        mid = node.radio_since + cycles * self.ea_wait
        self._charge(node, RadioState.LISTEN, mid)
        self._charge(node, RadioState.TX, mid + cycles * self.strobe_air)
        node.strobe_tx_s += cycles * self.strobe_air
        node.strobe_count += cycles
        for frame in peers:
            owner = self.nodes[frame.sender]
            mid = owner.radio_since + cycles * self.ea_wait
            self._charge(owner, RadioState.LISTEN, mid)
            self._charge(owner, RadioState.TX, mid + cycles * self.strobe_air)
            owner.strobe_tx_s += cycles * self.strobe_air
            owner.strobe_count += cycles
            frame.start_s += shift
            frame.end_s += shift
            frame.gen += 1
            self._push(frame.end_s, frame.sender, EventKind.STROBE_TX_END,
                       frame=frame, gen=frame.gen)
        return cycles

    def _on_early_ack_tx_end(self, ev: Event) -> str:
        sink = self.sink
        ea = ev.frame
        now = ev.time_s
        delivered = self.channel.resolve(ea)
        self._settle(sink, now)
        sink.radio = RadioState.LISTEN
        target = self.nodes[ea.target]
        if target.lock is not ea:
            # the strober gave up before the answer finished
            return "unclaimed"
        target.lock = None
        if not delivered:
            self._settle(target, now)
            if target.timed_out:
                self._enter_retry(now, target)
                return "garbled, retry"
            if self.channel.activity_overlapping(now, now + self.strobe_air):
                # whatever garbled the answer is still on the air
                target.timer_gen += 1
                self._start_backoff(now, target)
                return "garbled, deferring"
            target.mode = NodeMode.STROBE_SENDING
            strobe = Frame(target.node_id, 0, FrameKind.STROBE,
                           now, now + self.strobe_air)
            self.channel.register(strobe)
            self._push(strobe.end_s, target.node_id,
                       EventKind.STROBE_TX_END, frame=strobe)
            return "garbled, strobing on"
        # answer heard: the whole early ACK was reception, then data goes out
        target.timed_out = False
        self._charge(target, RadioState.LISTEN, ea.start_s)
        self._charge(target, RadioState.RX, now)
        n_packets = min(len(target.queue), self.cfg.frames.max_concat)
        payload = tuple(islice(target.queue, n_packets))
        size = self.cfg.frames.superpacket_bytes(n_packets)
        data = Frame(target.node_id, 0, FrameKind.DATA,
                     now, now + airtime(size, self.cfg.bit_rate_bps), payload)
        self.channel.register(data)
        self._push(data.end_s, target.node_id, EventKind.DATA_TX_END, frame=data)
        target.mode = NodeMode.DATA_SENDING
        target.radio = RadioState.TX
        if target.head_sent:
            self.retransmissions += 1
        target.head_sent = True
        target.timer_gen += 1
        target.timeout_at_s = data.end_s + self.block_ack_air + 2.0 * self.slot
        self._push(target.timeout_at_s, target.node_id, EventKind.STROBE_TIMEOUT,
                   gen=target.timer_gen)
        return f"data x{n_packets}"

    def _on_data_tx_end(self, ev: Event) -> str:
        node = self.nodes[ev.node_id]
        data = ev.frame
        now = ev.time_s
        delivered = self.channel.resolve(data)
        self._settle(node, now)
        node.mode = NodeMode.AWAIT_BLOCK_ACK
        node.radio = RadioState.LISTEN
        if not delivered:
            return "collided"
        sink = self.sink
        if sink.mode is not NodeMode.RX_PENDING:
            raise SimulationIntegrityError(
                f"clean data frame with the sink in mode {sink.mode}")
        self._charge(sink, RadioState.LISTEN, data.start_s)
        self._charge(sink, RadioState.RX, now)
        fresh = 0
        for packet in data.packets:
            key = (packet.node_id, packet.seq_no)
            if key in self.received:
                continue
            self.received.add(key)
            self.delays.append(now - packet.created_s)
            self.cv_window.add(packet.created_s)
            self.delivered += 1
            self.pending -= 1
            fresh += 1
        k = len(data.packets)
        self.superpacket_sizes[k] = self.superpacket_sizes.get(k, 0) + 1
        ack = Frame(0, node.node_id, FrameKind.BLOCK_ACK,
                    now, now + self.block_ack_air, data.packets)
        self.channel.register(ack)
        self._push(ack.end_s, 0, EventKind.ACK_TX_END, frame=ack)
        sink.radio = RadioState.TX
        return f"received x{k} ({fresh} new)"

    def _on_ack_tx_end(self, ev: Event) -> str:
        sink = self.sink
        ack = ev.frame
        now = ev.time_s
        delivered = self.channel.resolve(ack)
        self._settle(sink, now)
        sink.mode = NodeMode.SLEEP
        sink.radio = RadioState.SLEEP
        self._schedule_poll(now)
        target = self.nodes[ack.target]
        if not delivered or target.mode is not NodeMode.AWAIT_BLOCK_ACK:
            return "lost"
        self._charge(target, RadioState.LISTEN, ack.start_s)
        self._charge(target, RadioState.RX, now)
        for _ in ack.packets:
            target.queue.popleft()
        target.retry_count = 0
        target.head_sent = False
        target.timed_out = False
        target.timer_gen += 1
        if target.queue:
            self._begin_access(now, target)
        else:
            target.mode = NodeMode.SLEEP
            target.radio = RadioState.SLEEP
        return f"confirmed x{len(ack.packets)}"

    def _on_backoff_expired(self, ev: Event) -> str:
        node = self.nodes[ev.node_id]
        if node.mode is not NodeMode.BACKOFF:
            raise SimulationIntegrityError(
                f"backoff expiry for node {node.node_id} in mode {node.mode}")
        now = ev.time_s
        busy_runs = 0
        if self._steady_trains() is not None:
            # assessments that cannot succeed are replayed here instead of
            # paying scheduler costs for each; only a winnable attempt, a
            # horizon crossing, or a regime change goes back on the heap
            horizon = self._next_fixed_event_s()
            while (now + self.slot <= horizon
                   and self._strobe_pattern_busy(now, now + self.slot)):
                self._settle(node, now)
                self._charge(node, RadioState.LISTEN, now + self.slot)
                now += self._draw_backoff_slots(node) * self.slot
                node.backoff_until_s = now
                busy_runs += 1
            if now != ev.time_s:
                self._push(now, node.node_id, EventKind.BACKOFF_EXPIRED)
                return f"busy x{busy_runs}"
        self._settle(node, now)
        self._begin_access(now, node)
        return "retrying" if node.retry_count else "accessing"

    def _on_strobe_timeout(self, ev: Event) -> str:
        node = self.nodes[ev.node_id]
        if ev.gen != node.timer_gen:
            return "stale"
        if node.mode in (NodeMode.STROBE_SENDING, NodeMode.AWAIT_EARLY_ACK):
            # a frame is on the air or expected; fold the retry into the
            # next transmission-end event instead of tearing it down here
            node.timed_out = True
            return "flagged"
        if node.mode is NodeMode.AWAIT_BLOCK_ACK:
            self._enter_retry(ev.time_s, node)
            return "no block ack"
        raise SimulationIntegrityError(
            f"live timer for node {node.node_id} in mode {node.mode}")

    def _on_cycle_boundary(self, ev: Event) -> str:
        estimate = cycle_cv(self.cv_window)
        detail = "uninformative"
        if estimate is not None:
            self.informative_cycles += 1
            choice = select_distribution(estimate.cv, self.cfg.cv_threshold)
            if choice is PollingKind.EXPONENTIAL:
                self.exp_selections += 1
            else:
                self.det_selections += 1
            if choice is not self.current_polling:
                self.switches.append((ev.time_s, self.current_polling, choice))
                self.current_polling = choice
            detail = f"cv={estimate.cv:.3f} -> {choice.value}"
        self.cv_window.clear()
        self.next_cycle_s = ev.time_s + self.cfg.cycle_duration_s
        self._push(self.next_cycle_s, 0, EventKind.CYCLE_BOUNDARY)
        return detail

    # -- main loop --------------------------------------------------------

    _HANDLERS = {
        EventKind.PACKET_GENERATED: _on_packet_generated,
        EventKind.POLL_START: _on_poll_start,
        EventKind.STROBE_TX_END: _on_strobe_tx_end,
        EventKind.EARLY_ACK_TX_END: _on_early_ack_tx_end,
        EventKind.DATA_TX_END: _on_data_tx_end,
        EventKind.ACK_TX_END: _on_ack_tx_end,
        EventKind.BACKOFF_EXPIRED: _on_backoff_expired,
        EventKind.STROBE_TIMEOUT: _on_strobe_timeout,
        EventKind.CYCLE_BOUNDARY: _on_cycle_boundary,
    }

    def _finished(self) -> bool:
        return (self.generated == self.expected
                and self.pending == 0
                and self.sink.mode is NodeMode.SLEEP
                and all(n.mode is NodeMode.SLEEP and not n.queue
                        for n in self.nodes[1:]))

    def run(self) -> LowLevelResult:
        idle_run = self.expected == 0
        while self.heap:
            if not idle_run and self._finished():
                break
            if idle_run and self.heap[0].time_s > self.cfg.idle_horizon_s:
                break
            ev = heapq.heappop(self.heap)
            if ev.time_s < self.now - _AUDIT_TOL_S:
                raise SimulationIntegrityError(
                    f"event at {ev.time_s} before current time {self.now}")
            self.now = max(self.now, ev.time_s)
            self.event_count += 1
            if self.event_count > self.cfg.max_events:
                raise EventLimitError(
                    f"exceeded {self.cfg.max_events} events at t={self.now}")
            detail = self._HANDLERS[ev.kind](self, ev)
            if self.trace is not None:
                self.trace.writerow([repr(ev.time_s), ev.seq, ev.node_id,
                                     ev.kind.value, detail])
        return self._build_result()

    def _build_result(self) -> LowLevelResult:
        end_time = max([self.now, self.cfg.idle_horizon_s if self.expected == 0 else 0.0]
                       + [n.radio_since for n in self.nodes])
        for node in self.nodes:
            self._settle(node, end_time)

        power = {RadioState.TX: self.cfg.radio.tx_mW,
                 RadioState.RX: self.cfg.radio.rx_mW,
                 RadioState.LISTEN: self.cfg.radio.listen_mW,
                 RadioState.SLEEP: self.cfg.radio.sleep_mW}
        per_node_time: dict[int, float] = {}
        per_node_energy: dict[int, float] = {}
        for node in self.nodes:
            spans = {state: acc.value for state, acc in node.residency.items()}
            total = math.fsum(spans.values())
            if abs(total - end_time) > _AUDIT_TOL_S:
                raise SimulationIntegrityError(
                    f"node {node.node_id} accounts for {total} s of {end_time} s")
            per_node_time[node.node_id] = total
            per_node_energy[node.node_id] = math.fsum(
                spans[state] * power[state] for state in RadioState)

        if not (self.delivered + self.dropped == self.generated == self.expected
                or self.expected == 0):
            raise SimulationIntegrityError(
                f"{self.delivered} delivered + {self.dropped} dropped "
                f"!= {self.generated} generated")

        return LowLevelResult(
            total_energy_mJ=math.fsum(per_node_energy.values()),
            mean_delay_s=(sum(self.delays) / len(self.delays)) if self.delays else 0.0,
            generated=self.generated,
            delivered=self.delivered,
            dropped=self.dropped,
            collisions=self.channel.collision_count,
            retransmissions=self.retransmissions,
            duration_s=end_time,
            poll_count=self.poll_count,
            strobe_count=sum(n.strobe_count for n in self.nodes),
            strobe_energy_mJ=sum(n.strobe_tx_s for n in self.nodes) * self.cfg.radio.tx_mW,
            superpacket_size_histogram=dict(sorted(self.superpacket_sizes.items())),
            per_node_time_s=per_node_time,
            per_node_energy_mJ=per_node_energy,
            polling_switches=tuple(self.switches),
            informative_cycles=self.informative_cycles,
            deterministic_selections=self.det_selections,
            exponential_selections=self.exp_selections,
            final_polling_kind=self.current_polling,
            event_count=self.event_count,
            seed=self.seed,
        )


def _default_timelines(config: LowLevelConfig, seed: int) -> list[ArrivalTimeline]:
    timelines = []
    for node_id in range(1, config.node_count):
        rng = substream(seed, node_id, "arrivals")
        tl = generate_arrivals(config.arrival, count_limit=config.packets_per_node,
                               rng=rng, node_id=node_id)
        if config.stagger_arrival_phase and tl.timestamps_s:
            phase_rng = substream(seed, node_id, "phase")
            offset = float(phase_rng.uniform(0.0, config.arrival.mean_interval_s))
            tl = ArrivalTimeline(node_id=node_id, model=tl.model,
                                 timestamps_s=tuple(offset + t for t in tl.timestamps_s))
        timelines.append(tl)
    return timelines


def run_low_level(config: LowLevelConfig, seed: int,
                  timelines: list[ArrivalTimeline] | None = None,
                  trace=None) -> LowLevelResult:
    """One radio-level run.

    timelines overrides the generated per-source arrivals (node ids must lie
    in 1..node_count-1); trace, when given, is a csv.writer-compatible
    object that receives one row per processed event.
    """
    if timelines is None:
        timelines = _default_timelines(config, seed)
    else:
        ids = [tl.node_id for tl in timelines]
        if len(set(ids)) != len(ids):
            raise ParameterError("duplicate node_id in timelines")
        if any(not 1 <= i < config.node_count for i in ids):
            raise ParameterError("timeline node_id outside 1..node_count-1")
    if trace is not None:
        trace.writerow(["time_s", "seq", "node_id", "kind", "detail"])
    return _Simulation(config, seed, timelines, trace).run()
