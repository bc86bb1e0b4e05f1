"""Slotted queue dynamics: arrivals, gated service, backlog, packet ages.

Backlog evolves per Q(t+1) = (Q(t) - D(t))+ + A(t): service in a slot is
capped by the start-of-slot backlog, and the slot's own arrivals join the
ledger afterwards.  All bit quantities are integers so conservation
(arrived == departed + backlog) holds exactly over any horizon.

The ledger aggregates each slot's arrivals into one FIFO entry
[arrival_slot, n_packets, packet_bits, consumed_bits]; partial-packet
service is tracked and a packet's delay is recorded at last-bit departure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


@dataclass
class QueueState:
    lambda_bps: float = 0.0
    backlog_bits: int = 0
    ledger: deque = field(default_factory=deque)   # [arrival_slot, n, pkt_bits, consumed]
    arrived_bits: int = 0
    departed_bits: int = 0
    arrived_packets: int = 0
    departed_packets: int = 0


@dataclass
class SlotEligibility:
    """Per-slot server state: at most one queue assigned, none during blackout."""
    assigned: int | None = None
    blackout: bool = False

    def eligible(self, i: int) -> bool:
        return self.assigned == i and not self.blackout


def sample_arrival_counts(lambda_bps: float, slot_len_s: float,
                          packet_bits: int, rng, size=None):
    """Poisson packet counts with mean lambda * slot_len / packet_size."""
    if lambda_bps < 0 or slot_len_s <= 0 or packet_bits <= 0:
        raise ValueError("need lambda >= 0, slot_len > 0, packet_bits > 0")
    if lambda_bps == 0:
        return 0 if size is None else __import__("numpy").zeros(size, dtype=int)
    mean = lambda_bps * slot_len_s / packet_bits
    return int(rng.poisson(mean)) if size is None else rng.poisson(mean, size)


def sample_arrivals(lambda_bps: float, slot_len_s: float,
                    packet_bits: int, rng) -> list[int]:
    """One slot's arrivals as a list of packet sizes (bits)."""
    k = sample_arrival_counts(lambda_bps, slot_len_s, packet_bits, rng)
    return [packet_bits] * k


def service_amount(backlog_bits: int, mu_slot_bits: int, eligible: bool) -> int:
    """Departed bits this slot: min(Q, mu) when eligible, else 0."""
    if backlog_bits < 0 or mu_slot_bits < 0:
        raise ValueError("backlog and capacity must be nonnegative")
    if not eligible:
        return 0
    return backlog_bits if backlog_bits < mu_slot_bits else mu_slot_bits


def advance_slot(state: QueueState, departed_bits: int, arrivals,
                 now_slot: int) -> list[tuple[int, int]]:
    """Apply one slot: consume `departed_bits` from the ledger head, then
    append this slot's arrival packets.  Returns [(delay_slots, n_packets)]
    for packets whose last bit departed this slot.  Mutates `state`.
    """
    if departed_bits > state.backlog_bits:
        raise ValueError(
            f"internal inconsistency: departed {departed_bits} exceeds "
            f"backlog {state.backlog_bits}")
    delays: list[tuple[int, int]] = []
    remaining = departed_bits
    ledger = state.ledger
    while remaining > 0:
        entry = ledger[0]
        arr_slot, n_pkts, pkt_bits, consumed = entry
        total = n_pkts * pkt_bits
        take = min(remaining, total - consumed)
        consumed += take
        remaining -= take
        done_before = (consumed - take) // pkt_bits
        done_now = consumed // pkt_bits
        if done_now > done_before:
            delays.append((now_slot - arr_slot, done_now - done_before))
        if consumed >= total:
            ledger.popleft()
        else:
            entry[3] = consumed
    state.backlog_bits -= departed_bits
    state.departed_bits += departed_bits

    if arrivals:
        n = len(arrivals)
        pkt_bits = arrivals[0]
        state.ledger.append([now_slot, n, pkt_bits, 0])
        add = n * pkt_bits
        state.backlog_bits += add
        state.arrived_bits += add
        state.arrived_packets += n
    for _, n in delays:
        state.departed_packets += n
    return delays


def enqueue_count(state: QueueState, now_slot: int, n_packets: int,
                  packet_bits: int) -> None:
    """Fast path used by the engine: append one aggregated arrival entry."""
    if n_packets <= 0:
        return
    state.ledger.append([now_slot, n_packets, packet_bits, 0])
    add = n_packets * packet_bits
    state.backlog_bits += add
    state.arrived_bits += add
    state.arrived_packets += n_packets


def consume(state: QueueState, departed_bits: int, now_slot: int,
            delay_hist: dict, min_arrival_slot: int = 0) -> None:
    """Fast path: consume bits, recording completed-packet delays into a
    histogram {delay_slots: count}.  Same semantics as advance_slot.
    Packets that arrived before `min_arrival_slot` (warm-up) still depart
    and count toward conservation but are left out of the histogram."""
    if departed_bits <= 0:
        return
    if departed_bits > state.backlog_bits:
        raise ValueError("departed exceeds backlog")
    remaining = departed_bits
    ledger = state.ledger
    while remaining > 0:
        entry = ledger[0]
        arr_slot, n_pkts, pkt_bits, consumed = entry
        total = n_pkts * pkt_bits
        take = remaining if remaining < total - consumed else total - consumed
        consumed += take
        remaining -= take
        done_now = consumed // pkt_bits
        done_before = (consumed - take) // pkt_bits
        if done_now > done_before:
            k = done_now - done_before
            state.departed_packets += k
            if arr_slot >= min_arrival_slot:
                d = now_slot - arr_slot
                delay_hist[d] = delay_hist.get(d, 0) + k
        if consumed >= total:
            ledger.popleft()
        else:
            entry[3] = consumed
    state.backlog_bits -= departed_bits
    state.departed_bits += departed_bits


def hol_age(state: QueueState, now_slot: int) -> int:
    """Slots since the head-of-line packet arrived; 0 for an empty queue."""
    if not state.ledger:
        return 0
    return now_slot - state.ledger[0][0]
