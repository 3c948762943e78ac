"""Worklist iteration orders.

All orders share one small interface: ``push(v)`` (idempotent while ``v`` is
queued), ``pop()`` and truthiness.  Nodes may become stale after
unification; the solver maps popped ids through ``find``.
"""
from __future__ import annotations

import heapq
from collections import deque

from .config import Order


class FifoOrder:
    def __init__(self, n: int):
        self.items: deque[int] = deque()
        self.queued = bytearray(n)

    def push(self, v: int) -> None:
        if not self.queued[v]:
            self.queued[v] = 1
            self.items.append(v)

    def pop(self) -> int:
        v = self.items.popleft()
        self.queued[v] = 0
        return v

    def __bool__(self) -> bool:
        return bool(self.items)


class LifoOrder(FifoOrder):
    def pop(self) -> int:
        v = self.items.pop()
        self.queued[v] = 0
        return v


class LrfOrder:
    """Least recently fired: pop the node processed longest ago.

    Initial timestamps are the node ids, so ties resolve by id.
    """

    def __init__(self, n: int):
        self.stamp = list(range(n))
        self.clock = n
        self.heap: list[tuple[int, int]] = []
        self.queued = bytearray(n)

    def push(self, v: int) -> None:
        if not self.queued[v]:
            self.queued[v] = 1
            heapq.heappush(self.heap, (self.stamp[v], v))

    def pop(self) -> int:
        _, v = heapq.heappop(self.heap)
        self.queued[v] = 0
        self.stamp[v] = self.clock
        self.clock += 1
        return v

    def __bool__(self) -> bool:
        return bool(self.heap)


class TwoPhaseLrfOrder(LrfOrder):
    """Two LRF lists: pops drain ``current`` while pushes fill ``next``."""

    def __init__(self, n: int):
        super().__init__(n)
        self.next: list[tuple[int, int]] = []

    def push(self, v: int) -> None:
        if not self.queued[v]:
            self.queued[v] = 1
            heapq.heappush(self.next, (self.stamp[v], v))

    def pop(self) -> int:
        if not self.heap:
            self.heap, self.next = self.next, []
        return super().pop()

    def __bool__(self) -> bool:
        return bool(self.heap) or bool(self.next)


class TopoOrder:
    """Sweeps over a topological order of the copy-edge graph.

    The order is recomputed at the start of a sweep once the number of
    inserted edges grew by more than ``growth`` since the last sort.
    """

    def __init__(self, graph, growth: float = 0.10):
        self.g = graph
        n = len(graph)
        self.queued = bytearray(n)
        self.pending = 0
        self.growth = growth
        self.order: list[int] = []
        self.pos = 0
        self.sorted_at = -1
        self.sorts = 0

    def push(self, v: int) -> None:
        if not self.queued[v]:
            self.queued[v] = 1
            self.pending += 1

    def _resort(self) -> None:
        g = self.g
        edges = g.edges_added
        if self.sorted_at >= 0 and edges <= self.sorted_at * (1 + self.growth) and self.order:
            return
        self.order = topological_order(g)
        self.sorted_at = max(edges, 1)
        self.sorts += 1

    def pop(self) -> int:
        while True:
            if self.pos >= len(self.order):
                self._resort()
                self.pos = 0
            order, queued = self.order, self.queued
            for i in range(self.pos, len(order)):
                v = order[i]
                if queued[v]:
                    queued[v] = 0
                    self.pending -= 1
                    self.pos = i + 1
                    return v
            self.pos = len(order)

    def __bool__(self) -> bool:
        return self.pending > 0


def topological_order(g) -> list[int]:
    """Reverse post-order of a DFS over copy edges; back edges are ignored."""
    n = len(g)
    find, succ = g.find, g.succ
    seen = bytearray(n)
    post: list[int] = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = 1
        stack = [(root, iter(succ[root] or ()))]
        while stack:
            v, it = stack[-1]
            for t in it:
                t = find(t)
                if not seen[t]:
                    seen[t] = 1
                    stack.append((t, iter(succ[t] or ())))
                    break
            else:
                stack.pop()
                post.append(v)
    post.reverse()
    return post


def make_order(order: Order, graph):
    n = len(graph)
    if order is Order.FIFO:
        return FifoOrder(n)
    if order is Order.LIFO:
        return LifoOrder(n)
    if order is Order.LRF:
        return LrfOrder(n)
    if order is Order.TWO_PHASE_LRF:
        return TwoPhaseLrfOrder(n)
    if order is Order.TOPO:
        return TopoOrder(graph)
    raise ValueError(order)
