from __future__ import annotations

from collections import deque


class PduQueue:
    """FIFO of ``[bytes_left, arrival_slot]`` records with a byte cap.

    Overflow drops the arriving PDU (tail drop). Partial transmissions shrink
    the head record; the delay of a PDU is recorded when its last byte leaves.
    """

    __slots__ = ("q", "bytes", "cap", "arrived", "delivered", "dropped",
                 "dropped_pdus", "delivered_pdus", "head_retx")

    def __init__(self, cap_bytes: int):
        if cap_bytes <= 0:
            raise ValueError("cap_bytes must be > 0")
        self.q: deque[list[int]] = deque()
        self.bytes = 0
        self.cap = cap_bytes
        self.arrived = 0
        self.delivered = 0
        self.dropped = 0
        self.dropped_pdus = 0
        self.delivered_pdus = 0
        self.head_retx = False

    def __len__(self):
        return len(self.q)

    def push(self, pdu_bytes: int, count: int, slot: int) -> int:
        """Enqueue ``count`` PDUs stamped ``slot``; returns how many fit."""
        self.arrived += pdu_bytes * count
        room = (self.cap - self.bytes) // pdu_bytes
        ok = count if count <= room else max(room, 0)
        if ok:
            append = self.q.append
            for _ in range(ok):
                append([pdu_bytes, slot])
            self.bytes += ok * pdu_bytes
        if ok < count:
            self.dropped += (count - ok) * pdu_bytes
            self.dropped_pdus += count - ok
        return ok

    def head_slot(self) -> int | None:
        return self.q[0][1] if self.q else None

    def pop_bytes(self, n: int, slot: int, delays: list) -> int:
        """Remove up to ``n`` bytes from the head; append per-PDU delays in slots."""
        q = self.q
        left = n if n < self.bytes else self.bytes
        taken = left
        while left > 0:
            head = q[0]
            if head[0] <= left:
                left -= head[0]
                delays.append(slot - head[1])
                q.popleft()
                self.delivered_pdus += 1
            else:
                head[0] -= left
                left = 0
        self.bytes -= taken
        self.delivered += taken
        self.head_retx = False
        return taken

    def check(self) -> list[str]:
        out = []
        if self.bytes != sum(r[0] for r in self.q):
            out.append("queue byte counter disagrees with records")
        if self.arrived != self.delivered + self.bytes + self.dropped:
            out.append(f"byte conservation: arrived {self.arrived} != delivered {self.delivered} "
                       f"+ queued {self.bytes} + dropped {self.dropped}")
        return out
