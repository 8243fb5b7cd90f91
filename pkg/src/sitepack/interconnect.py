"""Discrete-time model of the single-master open-chain site interconnect.

Stations 0..N-1 sit on one logical line; the last station is tied off, so
host-to-block messages addressed past the end fall off and are dropped with a
fault. Every queue is a single-entry normal queue: a slot freed this cycle
accepts new data only next cycle, which caps the accepted injection rate at
one message every two cycles.

Cycle semantics: all transfer decisions in a step() are made against a
snapshot of queue occupancy taken at the start of the cycle, then committed
simultaneously. A station consumes the message addressed to it (user-bank
accesses pay a fixed 2-cycle clock-crossing dwell first); reads enqueue their
response into the station's block-to-host queue, which drains toward the
controller. Local responses win over upstream forwards when both want the
same empty slot.

User-bank storage is live only while the site is enabled and powered
(en = 1, en_pwr_bar = 0); reads outside that state return 0 and writes are
retired with a fault event. Periphery registers stay accessible regardless
of power state.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import MmioTimeout, SitepackError

READ, WRITE = 0, 1
PERIPHERY_BANK, USER_BANK = 0, 1

RSTN_SOFT_WORD = 0
EN_WORD = 1
EN_PWR_BAR_WORD = 2

CROSSING_LATENCY = 2  # cycles a user-bank access dwells for the clock crossing

TraceHook = Callable[[int, str, str, str], None]


@dataclass(frozen=True)
class AddressMap:
    """Bitfield split of the fixed-width address; independent of site count."""

    site_bits: int = 7
    bank_bits: int = 1
    word_bits: int = 32
    data_bits: int = 32

    @property
    def address_bits(self) -> int:
        return self.site_bits + self.bank_bits + self.word_bits

    @property
    def max_sites(self) -> int:
        return 1 << self.site_bits

    def pack_address(self, site: int, bank: int, word: int) -> int:
        if not (0 <= site < self.max_sites):
            raise ValueError(f"site {site} outside {self.site_bits}-bit space")
        if bank >> self.bank_bits or word >> self.word_bits:
            raise ValueError("bank or word field overflow")
        return (site << (self.bank_bits + self.word_bits)) | (bank << self.word_bits) | word

    def unpack_address(self, addr: int) -> tuple[int, int, int]:
        word = addr & ((1 << self.word_bits) - 1)
        bank = (addr >> self.word_bits) & ((1 << self.bank_bits) - 1)
        site = addr >> (self.word_bits + self.bank_bits)
        return site, bank, word

    def h2b_bits(self) -> int:
        return 1 + self.address_bits + self.data_bits

    def b2h_bits(self) -> int:
        return self.site_bits + self.word_bits + self.data_bits


@dataclass(frozen=True)
class H2BMessage:
    command: int
    site: int
    bank: int
    word: int
    data: int = 0

    def pack(self, amap: AddressMap) -> int:
        addr = amap.pack_address(self.site, self.bank, self.word)
        return (self.command << (amap.address_bits + amap.data_bits)) | (addr << amap.data_bits) | self.data


@dataclass(frozen=True)
class B2HMessage:
    site: int
    word: int
    data: int

    def pack(self, amap: AddressMap) -> int:
        return (self.site << (amap.word_bits + amap.data_bits)) | (self.word << amap.data_bits) | self.data


@dataclass
class NetworkStats:
    injected: int = 0
    consumed_writes: int = 0
    consumed_reads: int = 0
    dropped: int = 0
    delivered: int = 0
    faulted_writes: int = 0  # retired at the target but had no effect


class Station:
    """Read-only view of one station's architectural state."""

    def __init__(self, network: "Network", position: int):
        self._net = network
        self.position = position
        self.id = network.chain[position]

    @property
    def h2b_queue(self) -> H2BMessage | None:
        m = self._net._h2b[self.position]
        return H2BMessage(*m) if m else None

    @property
    def b2h_queue(self) -> B2HMessage | None:
        r = self._net._b2h[self.position]
        return B2HMessage(*r) if r else None

    @property
    def regs(self) -> dict[str, int]:
        i = self.position
        return {
            "rstn_soft": self._net._rstn[i],
            "en": self._net._en[i],
            "en_pwr_bar": self._net._pwr[i],
        }

    @property
    def user_bank(self) -> dict[int, int]:
        return dict(self._net._user[self.position])


class Network:
    """An open chain of stations plus the controller-side response log."""

    def __init__(
        self,
        n_sites: int,
        amap: AddressMap | None = None,
        chain_order: Sequence[int] | None = None,
        trace_hook: TraceHook | None = None,
        debug_stuck_station: int | None = None,
    ):
        amap = amap or AddressMap()
        if n_sites < 1:
            raise SitepackError("network needs at least one site")
        if n_sites > amap.max_sites:
            raise SitepackError(
                f"{n_sites} sites exceed the {amap.site_bits}-bit site address space"
            )
        self.amap = amap
        self.n = n_sites
        self.chain = list(chain_order) if chain_order is not None else list(range(n_sites))
        if sorted(self.chain) != list(range(n_sites)):
            raise SitepackError("chain_order must be a permutation of 0..N-1")
        self.cycle = 0
        self.stats = NetworkStats()
        self.responses: list[B2HMessage] = []
        self.trace_hook = trace_hook
        self.debug_stuck_station = debug_stuck_station
        n = n_sites
        self._h2b: list[tuple | None] = [None] * n
        self._b2h: list[tuple | None] = [None] * n
        self._dwell = [0] * n
        self._rstn = [0] * n
        self._en = [0] * n
        self._pwr = [0] * n
        self._user: list[dict[int, int]] = [{} for _ in range(n)]
        self._pos_of = {site: pos for pos, site in enumerate(self.chain)}

    # -- inspection -------------------------------------------------------

    def station(self, position: int) -> Station:
        return Station(self, position)

    def stations(self) -> list[Station]:
        return [Station(self, i) for i in range(self.n)]

    def enabled_sites(self) -> list[int]:
        return [self.chain[i] for i in range(self.n) if self._en[i]]

    def in_flight(self) -> int:
        return sum(m is not None for m in self._h2b) + sum(r is not None for r in self._b2h)

    def station_state_bits(self) -> int:
        """Architectural bits per station: both queue entries + valids + registers.

        A structural constant of the address map; never a function of N.
        """
        return (self.amap.h2b_bits() + 1) + (self.amap.b2h_bits() + 1) + 3

    def check_conservation(self) -> None:
        s = self.stats
        h2b_in_flight = sum(m is not None for m in self._h2b)
        b2h_in_flight = sum(r is not None for r in self._b2h)
        retired = s.consumed_writes + s.consumed_reads + s.dropped
        if s.injected != retired + h2b_in_flight:
            raise AssertionError(
                f"h2b conservation broken: injected={s.injected} retired={retired} "
                f"in_flight={h2b_in_flight}"
            )
        if s.consumed_reads != s.delivered + b2h_in_flight:
            raise AssertionError(
                f"b2h conservation broken: reads={s.consumed_reads} "
                f"delivered={s.delivered} in_flight={b2h_in_flight}"
            )

    def _emit(self, station: int | str, event: str, payload: int | None) -> None:
        if self.trace_hook is not None:
            self.trace_hook(self.cycle, str(station), event, f"{payload:x}" if payload is not None else "")

    # -- cycle engine ------------------------------------------------------

    def step(self, inject: H2BMessage | None = None) -> bool:
        """Advance one cycle; returns True when `inject` was accepted."""
        n = self.n
        h2b, b2h = self._h2b, self._b2h
        chain = self.chain
        stuck = self.debug_stuck_station
        full_h2b = [m is not None for m in h2b]
        full_b2h = [r is not None for r in b2h]

        consume = [0] * n  # 1 = write, 2 = read
        for i in range(n):
            m = h2b[i]
            if m is None or m[1] != chain[i]:
                continue
            if m[2] == USER_BANK and self._dwell[i] < CROSSING_LATENCY:
                self._dwell[i] += 1
                continue
            if m[0] == WRITE:
                consume[i] = 1
            elif not full_b2h[i]:
                consume[i] = 2

        fwd_h2b = []
        drops = []
        for i in range(n):
            m = h2b[i]
            if m is None or m[1] == chain[i]:
                continue  # empty, consuming, or waiting at its target
            if i == n - 1:
                drops.append(i)
            elif not full_h2b[i + 1] and i + 1 != stuck:
                fwd_h2b.append(i)

        deliver = full_b2h[0]
        fwd_b2h = [
            i
            for i in range(1, n)
            if full_b2h[i] and not full_b2h[i - 1] and consume[i - 1] != 2 and i - 1 != stuck
        ]

        # commit phase
        for i in range(n):
            if consume[i] == 1:
                self._apply_write(i, h2b[i])
                h2b[i] = None
                self._dwell[i] = 0
            elif consume[i] == 2:
                m = h2b[i]
                data = self._read_value(i, m[2], m[3])
                b2h[i] = (chain[i], m[3], data)
                h2b[i] = None
                self._dwell[i] = 0
                self.stats.consumed_reads += 1
                self._emit(chain[i], "consume_read", m[3])
        for i in drops:
            self.stats.dropped += 1
            self._emit(chain[i], "h2b_drop", h2b[i][1])
            h2b[i] = None
        for i in reversed(fwd_h2b):
            h2b[i + 1] = h2b[i]
            h2b[i] = None
            self._emit(chain[i], "h2b_fwd", None)
        if deliver:
            resp = b2h[0]
            self.responses.append(B2HMessage(*resp))
            self.stats.delivered += 1
            self._emit("host", "deliver", B2HMessage(*resp).pack(self.amap))
            b2h[0] = None
        for i in fwd_b2h:
            b2h[i - 1] = b2h[i]
            b2h[i] = None
            self._emit(chain[i], "b2h_fwd", None)

        accepted = False
        if inject is not None and not full_h2b[0] and stuck != 0:
            h2b[0] = (inject.command, inject.site, inject.bank, inject.word, inject.data)
            self.stats.injected += 1
            self._emit("host", "inject", inject.pack(self.amap))
            accepted = True

        self.cycle += 1
        return accepted

    def _apply_write(self, i: int, m: tuple) -> None:
        _, _, bank, word, data = m
        self.stats.consumed_writes += 1
        if bank == PERIPHERY_BANK:
            if word == RSTN_SOFT_WORD:
                self._rstn[i] = data & 1
            elif word == EN_WORD:
                self._en[i] = data & 1
            elif word == EN_PWR_BAR_WORD:
                self._pwr[i] = data & 1
            else:
                self.stats.faulted_writes += 1
                self._emit(self.chain[i], "write_fault", word)
                return
            self._emit(self.chain[i], "consume_write", word)
        else:
            if self._en[i] and not self._pwr[i]:
                self._user[i][word] = data & ((1 << self.amap.data_bits) - 1)
                self._emit(self.chain[i], "consume_write", word)
            else:
                self.stats.faulted_writes += 1
                self._emit(self.chain[i], "write_fault", word)

    def _read_value(self, i: int, bank: int, word: int) -> int:
        if bank == PERIPHERY_BANK:
            if word == RSTN_SOFT_WORD:
                return self._rstn[i]
            if word == EN_WORD:
                return self._en[i]
            if word == EN_PWR_BAR_WORD:
                return self._pwr[i]
            return 0
        if self._en[i] and not self._pwr[i]:
            return self._user[i].get(word, 0)
        return 0


def build_network(n_sites: int, amap: AddressMap | None = None, **kwargs) -> Network:
    """Fresh network: all sites disabled, every queue empty."""
    return Network(n_sites, amap=amap, **kwargs)


def timeout_bound(n_sites: int) -> int:
    """Response deadline: worst chain traversal both ways plus slack."""
    return 4 * n_sites + 16


def _inject_blocking(network: Network, msg: H2BMessage, budget: int) -> int:
    spent = 0
    while spent < budget:
        spent += 1
        if network.step(inject=msg):
            return spent
    raise MmioTimeout(msg.pack(network.amap), budget)


def mmio_write(network: Network, addr: int, data: int) -> None:
    """Post a write. Ordering on the single chain makes it apply before any
    later message reaches the same station; no acknowledgement is modeled."""
    site, bank, word = network.amap.unpack_address(addr)
    _inject_blocking(network, H2BMessage(WRITE, site, bank, word, data), timeout_bound(network.n))


def mmio_read(network: Network, addr: int) -> int:
    """Inject a read and step until its response arrives.

    Raises MmioTimeout after 4N + 16 cycles; reads addressed past the chain
    end fall off the tie-off and always time out.
    """
    site, bank, word = network.amap.unpack_address(addr)
    budget = timeout_bound(network.n)
    taken = len(network.responses)
    spent = _inject_blocking(network, H2BMessage(READ, site, bank, word), budget)
    while spent < budget:
        for idx in range(taken, len(network.responses)):
            resp = network.responses[idx]
            if resp.site == site and resp.word == word:
                del network.responses[idx]
                return resp.data
        network.step()
        spent += 1
    raise MmioTimeout(addr, budget)


def reg_address(network: Network, site: int, word: int) -> int:
    return network.amap.pack_address(site, PERIPHERY_BANK, word)


def user_address(network: Network, site: int, word: int) -> int:
    return network.amap.pack_address(site, USER_BANK, word)


def activate_site(network: Network, site_id: int) -> None:
    """Make `site_id` the single enabled site.

    Every other enabled site is disabled first, a read fence confirms the
    disables landed (responses order behind writes on the chain), and only
    then is the enable posted and fence-checked. The at-most-one-active
    invariant therefore holds on every intermediate cycle.
    """
    others = [s for s in network.enabled_sites() if s != site_id]
    for s in others:
        mmio_write(network, reg_address(network, s, EN_WORD), 0)
    if others:
        fence = max(others)
        mmio_read(network, reg_address(network, fence, EN_WORD))
    mmio_write(network, reg_address(network, site_id, EN_WORD), 1)
    mmio_read(network, reg_address(network, site_id, EN_WORD))
    enabled = network.enabled_sites()
    if enabled != [site_id]:
        raise AssertionError(f"activation window violated: enabled={enabled}")


@dataclass(frozen=True)
class TrackScaling:
    bundles_at_controller: int
    bundle_width_bits: int


def track_scaling(topology: str, n: int, amap: AddressMap | None = None) -> TrackScaling:
    """Routing-track demand at the controller boundary for a topology.

    A star needs one bundle per site; the open chain always needs exactly
    one, and the bundle width is fixed by the address map, not by N.
    """
    amap = amap or AddressMap()
    if n < 1:
        raise ValueError("n must be >= 1")
    width = amap.h2b_bits() + amap.b2h_bits()
    if topology == "star":
        return TrackScaling(bundles_at_controller=n, bundle_width_bits=width)
    if topology == "open_chain":
        return TrackScaling(bundles_at_controller=1, bundle_width_bits=width)
    raise ValueError(f"unknown topology {topology!r}")


@dataclass(frozen=True)
class DeadlockReport:
    deadlock_free: bool
    states_explored: int
    trace_cycles: int
    counterexample: tuple | None = None


def _state_key(network: Network) -> tuple:
    return (
        tuple(network._h2b),
        tuple(network._b2h),
        tuple(network._dwell),
        tuple(network._rstn),
        tuple(network._en),
        tuple(network._pwr),
    )


def _clone_for_search(network: Network, key: tuple) -> Network:
    twin = Network(
        network.n,
        amap=network.amap,
        chain_order=network.chain,
        debug_stuck_station=network.debug_stuck_station,
    )
    twin._h2b = list(key[0])
    twin._b2h = list(key[1])
    twin._dwell = list(key[2])
    twin._rstn = list(key[3])
    twin._en = list(key[4])
    twin._pwr = list(key[5])
    return twin


def _search_alphabet(n: int) -> list[H2BMessage | None]:
    """Bounded message alphabet for the exhaustive search: idle, reads to the
    first and last stations, a read off the tied end, and one periphery write."""
    return [
        None,
        H2BMessage(READ, 0, PERIPHERY_BANK, EN_PWR_BAR_WORD),
        H2BMessage(READ, n - 1, PERIPHERY_BANK, EN_PWR_BAR_WORD),
        H2BMessage(READ, min(n, AddressMap().max_sites - 1), PERIPHERY_BANK, EN_PWR_BAR_WORD),
        H2BMessage(WRITE, n - 1, PERIPHERY_BANK, RSTN_SOFT_WORD, 1),
    ]


def check_deadlock_freedom(
    network: Network,
    trace_length: int = 10_000,
    rng: random.Random | None = None,
    max_states: int = 500_000,
) -> DeadlockReport:
    """Search for a stuck state: messages in flight but no action changes anything.

    For N <= 3 an exhaustive breadth-first search over a bounded message
    alphabet runs first; any N additionally gets `trace_length` cycles of
    randomized injection with a stall watchdog. The counterexample, when one
    exists, is the offending state key.
    """
    states_explored = 0
    if network.n <= 3:
        alphabet = _search_alphabet(network.n)
        start = _state_key(network)
        seen = {start}
        frontier = [start]
        while frontier and states_explored < max_states:
            base = frontier.pop()
            states_explored += 1
            outstanding = any(m is not None for m in base[0]) or any(r is not None for r in base[1])
            successors = []
            for msg in alphabet:
                twin = _clone_for_search(network, base)
                twin.step(inject=msg)
                successors.append(_state_key(twin))
            if outstanding and all(s == base for s in successors):
                return DeadlockReport(False, states_explored, 0, counterexample=base)
            for s in successors:
                if s not in seen:
                    seen.add(s)
                    frontier.append(s)

    rng = rng or random.Random(0)
    alphabet = _search_alphabet(network.n)
    stall = 0
    last = _state_key(network)
    for t in range(trace_length):
        msg = alphabet[rng.randrange(len(alphabet))]
        network.step(inject=msg)
        key = _state_key(network)
        if key == last and network.in_flight() > 0:
            stall += 1
            if stall > timeout_bound(network.n):
                return DeadlockReport(False, states_explored, t + 1, counterexample=key)
        else:
            stall = 0
        last = key
    return DeadlockReport(True, states_explored, trace_length)


def run_ops_script(text: str, n_default: int = 4, trace_hook: TraceHook | None = None) -> Network:
    """Execute a structured-text mmio scenario.

    Directives (one per line, '#' comments): `sites N`, `activate SITE`,
    `write SITE periphery|user WORD VALUE`, `read SITE periphery|user WORD`,
    `step N`. Reads that time out are recorded as trace faults, not errors.
    """
    network: Network | None = None

    def net() -> Network:
        nonlocal network
        if network is None:
            network = build_network(n_default, trace_hook=trace_hook)
        return network

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0]
        try:
            if op == "sites":
                if network is not None:
                    raise SitepackError("sites must come before other directives")
                network = build_network(int(parts[1]), trace_hook=trace_hook)
            elif op == "activate":
                activate_site(net(), int(parts[1]))
            elif op == "write":
                bank = PERIPHERY_BANK if parts[2] == "periphery" else USER_BANK
                addr = net().amap.pack_address(int(parts[1], 0), bank, int(parts[3], 0))
                mmio_write(net(), addr, int(parts[4], 0))
            elif op == "read":
                bank = PERIPHERY_BANK if parts[2] == "periphery" else USER_BANK
                addr = net().amap.pack_address(int(parts[1], 0), bank, int(parts[3], 0))
                try:
                    mmio_read(net(), addr)
                except MmioTimeout:
                    if trace_hook is not None:
                        trace_hook(net().cycle, "host", "timeout", f"{addr:x}")
            elif op == "step":
                for _ in range(int(parts[1])):
                    net().step()
            else:
                raise SitepackError(f"unknown directive {op!r}")
        except (IndexError, ValueError) as exc:
            raise SitepackError(f"line {lineno}: bad directive {raw!r}: {exc}") from exc
    return net()
