"""Limit order book state with price-time priority.

Prices live on an integer tick lattice (1 unit = one tick) and sizes are
integer share counts. The mid price is therefore a half-tick quantity; we
carry it as the integer ``bid + ask`` (twice the mid, in ticks) so that
mid-change detection is an exact integer comparison, never a float one.

The book is a pure resting-order automaton: submissions must not cross the
opposite best. Crossing order flow has to be decomposed upstream (ingest or
simulator) into explicit executions plus a residual submission.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import (
    BothQueuesEmpty,
    CrossedSubmit,
    EmptySide,
    OverReduce,
    UnknownOrderId,
)

BUY = 1
SELL = -1

SUBMIT = "submit"
REDUCE = "reduce"
DELETE = "delete"
EXECUTE = "execute"


@dataclass(slots=True)
class Order:
    """A resting limit order; ``size`` is the current remaining quantity."""

    id: int
    side: int  # BUY or SELL
    price: int  # integer tick count, >= 1
    size: int  # integer shares, >= 1
    entry_seq: int = 0


class BookEvent(NamedTuple):
    """A normalized book mutation.

    ``order`` is set for SUBMIT events; ``order_id``/``delta`` for the rest.
    ``seq`` must be strictly increasing within a stream and breaks time ties
    for price-time priority.
    """

    t_ns: int
    seq: int
    kind: str
    order: Optional[Order]
    order_id: int
    delta: int

    @classmethod
    def submit(cls, t_ns: int, seq: int, order: Order) -> "BookEvent":
        return cls(t_ns, seq, SUBMIT, order, order.id, 0)

    @classmethod
    def reduce(cls, t_ns: int, seq: int, order_id: int, delta: int) -> "BookEvent":
        return cls(t_ns, seq, REDUCE, None, order_id, delta)

    @classmethod
    def delete(cls, t_ns: int, seq: int, order_id: int) -> "BookEvent":
        return cls(t_ns, seq, DELETE, None, order_id, 0)

    @classmethod
    def execute(cls, t_ns: int, seq: int, order_id: int, delta: int) -> "BookEvent":
        return cls(t_ns, seq, EXECUTE, None, order_id, delta)


class QuoteSnapshot(NamedTuple):
    """Best quotes at an instant; only exists when both sides are occupied."""

    t_ns: int
    bid: int
    ask: int
    nb: int
    na: int

    @property
    def spread(self) -> int:
        """Bid-ask spread in ticks; at least 1 by the no-cross invariant."""
        return self.ask - self.bid

    @property
    def mid2(self) -> int:
        """Twice the mid price, in ticks (exact half-tick integer)."""
        return self.bid + self.ask

    @property
    def mid(self) -> float:
        return (self.bid + self.ask) / 2.0


class BestQuoteState(NamedTuple):
    """Best-quote tuple allowing empty sides (bid/ask None, size 0)."""

    t_ns: int
    bid: Optional[int]
    ask: Optional[int]
    nb: int
    na: int

    @property
    def two_sided(self) -> bool:
        return self.bid is not None and self.ask is not None

    @property
    def mid2(self) -> Optional[int]:
        if self.bid is None or self.ask is None:
            return None
        return self.bid + self.ask


def queue_imbalance(nb: int, na: int) -> float:
    """Normalized best-queue imbalance (nb - na) / (nb + na) in [-1, 1]."""
    if nb < 0 or na < 0:
        raise ValueError("queue lengths must be nonnegative")
    total = nb + na
    if total == 0:
        raise BothQueuesEmpty("imbalance undefined: both best queues empty")
    return (nb - na) / total


def snapshot_imbalance(snap: QuoteSnapshot) -> float:
    return queue_imbalance(snap.nb, snap.na)


class OrderBook:
    """Event-sourced two-sided book exposing best quotes and queue sizes.

    Single-writer per instrument-day; snapshots handed out are immutable
    values. ``tick_size`` (currency per tick) and ``lot_size`` (shares) are
    metadata used by ingest and reporting, not by the matching logic.
    """

    def __init__(self, tick_size: float = 0.01, lot_size: int = 1):
        self.tick_size = tick_size
        self.lot_size = lot_size
        # side -> {price: {order_id: Order}}; dict preserves FIFO insertion
        # order within a level, which is exactly price-time priority after
        # entry_seq-ordered submission.
        self._levels: dict[int, dict[int, dict[int, Order]]] = {BUY: {}, SELL: {}}
        self._totals: dict[int, dict[int, int]] = {BUY: {}, SELL: {}}
        self._orders: dict[int, Order] = {}
        self._best: dict[int, Optional[int]] = {BUY: None, SELL: None}
        self.last_t_ns = 0

    # -- inspection ---------------------------------------------------------

    @property
    def best_bid(self) -> Optional[int]:
        return self._best[BUY]

    @property
    def best_ask(self) -> Optional[int]:
        return self._best[SELL]

    def best(self, side: int) -> Optional[int]:
        return self._best[side]

    def order_count(self) -> int:
        return len(self._orders)

    def get_order(self, order_id: int) -> Order:
        try:
            return self._orders[order_id]
        except KeyError:
            raise UnknownOrderId(order_id) from None

    def has_order(self, order_id: int) -> bool:
        return order_id in self._orders

    def first_at_best(self, side: int) -> Order:
        """Highest-priority resting order on a side (FIFO head at the best)."""
        best = self._best[side]
        if best is None:
            raise EmptySide(f"no resting orders on side {side}")
        return next(iter(self._levels[side][best].values()))

    def level_size(self, side: int, price: int) -> int:
        return self._totals[side].get(price, 0)

    def state(self, t_ns: Optional[int] = None) -> BestQuoteState:
        bb, ba = self._best[BUY], self._best[SELL]
        nb = self._totals[BUY][bb] if bb is not None else 0
        na = self._totals[SELL][ba] if ba is not None else 0
        return BestQuoteState(self.last_t_ns if t_ns is None else t_ns, bb, ba, nb, na)

    def quote(self, t_ns: Optional[int] = None) -> QuoteSnapshot:
        """Best quotes; raises EmptySide unless both sides are occupied."""
        bb, ba = self._best[BUY], self._best[SELL]
        if bb is None or ba is None:
            raise EmptySide("quote requires both sides occupied")
        return QuoteSnapshot(
            self.last_t_ns if t_ns is None else t_ns,
            bb,
            ba,
            self._totals[BUY][bb],
            self._totals[SELL][ba],
        )

    def _quote_key(self):
        bb, ba = self._best[BUY], self._best[SELL]
        nb = self._totals[BUY][bb] if bb is not None else 0
        na = self._totals[SELL][ba] if ba is not None else 0
        return (bb, ba, nb, na)

    # -- mutation -----------------------------------------------------------

    def apply(self, ev: BookEvent) -> tuple[Optional[QuoteSnapshot], bool]:
        """Apply one event; returns (snapshot-or-None, best_quotes_changed).

        The snapshot is None while either side is empty. ``changed`` is True
        iff any of (bid, ask, nb, na) changed, including transitions into or
        out of a one-sided state.
        """
        before = self._quote_key()
        kind = ev.kind
        if kind == SUBMIT:
            self._submit(ev.order)
        elif kind == REDUCE:
            self._reduce(ev.order_id, ev.delta)
        elif kind == DELETE:
            self._remove(ev.order_id)
        elif kind == EXECUTE:
            self._execute(ev.order_id, ev.delta)
        else:
            raise ValueError(f"unknown event kind {kind!r}")
        self.last_t_ns = ev.t_ns
        after = self._quote_key()
        changed = after != before
        bb, ba, nb, na = after
        snap = None
        if bb is not None and ba is not None:
            snap = QuoteSnapshot(ev.t_ns, bb, ba, nb, na)
        return snap, changed

    def _submit(self, order: Order) -> None:
        if order is None:
            raise ValueError("submit event carries no order")
        if order.price < 1 or order.size < 1:
            raise ValueError(f"order {order.id}: price and size must be >= 1")
        if order.side not in (BUY, SELL):
            raise ValueError(f"order {order.id}: bad side {order.side}")
        if order.id in self._orders:
            raise ValueError(f"order id {order.id} already active")
        opposite = self._best[-order.side]
        if opposite is not None:
            crosses = order.price >= opposite if order.side == BUY else order.price <= opposite
            if crosses:
                raise CrossedSubmit(order.id, order.price, opposite)
        resting = Order(order.id, order.side, order.price, order.size, order.entry_seq)
        side = resting.side
        levels = self._levels[side]
        lvl = levels.get(resting.price)
        if lvl is None:
            levels[resting.price] = {resting.id: resting}
            self._totals[side][resting.price] = resting.size
        else:
            lvl[resting.id] = resting
            self._totals[side][resting.price] += resting.size
        self._orders[resting.id] = resting
        best = self._best[side]
        if best is None or (resting.price > best if side == BUY else resting.price < best):
            self._best[side] = resting.price

    def _reduce(self, order_id: int, delta: int) -> None:
        if delta < 1:
            raise ValueError("reduce delta must be >= 1")
        order = self.get_order(order_id)
        if delta > order.size:
            raise OverReduce(order_id, delta, order.size)
        if delta == order.size:
            self._remove(order_id)
        else:
            order.size -= delta
            self._totals[order.side][order.price] -= delta

    def _execute(self, order_id: int, delta: int) -> None:
        # identical book mutation to a partial/full cancel; the distinction
        # (trade vs cancel) matters only to callers recording trades
        self._reduce(order_id, delta)

    def _remove(self, order_id: int) -> None:
        order = self.get_order(order_id)
        side, price = order.side, order.price
        lvl = self._levels[side][price]
        del lvl[order_id]
        del self._orders[order_id]
        remaining = self._totals[side][price] - order.size
        if lvl:
            self._totals[side][price] = remaining
        else:
            del self._levels[side][price]
            del self._totals[side][price]
            if self._best[side] == price:
                keys = self._levels[side].keys()
                if keys:
                    self._best[side] = max(keys) if side == BUY else min(keys)
                else:
                    self._best[side] = None

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        """Canonical structural dump: levels sorted by price, FIFO order kept."""

        def side_dump(side: int) -> list:
            out = []
            for price in sorted(self._levels[side]):
                queue = [[o.id, o.size, o.entry_seq] for o in self._levels[side][price].values()]
                out.append([price, queue])
            return out

        return {
            "tick_size": self.tick_size,
            "lot_size": self.lot_size,
            "bids": side_dump(BUY),
            "asks": side_dump(SELL),
            "last_t_ns": self.last_t_ns,
        }

    def serialize(self) -> bytes:
        """Deterministic byte encoding of the full book state."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
