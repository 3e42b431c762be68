"""In-process topic bus with bounded subscriber queues.

Delivery is at-most-once per subscriber: publish copies the message
reference into every queue subscribed to the topic at that moment. Each
subscription has its own bounded queue (default 1024); when full, the
oldest message is dropped and counted.
"""

from __future__ import annotations

import threading
from collections import deque

from .message import Message

DEFAULT_QUEUE_SIZE = 1024


class Subscription:
    def __init__(self, bus: "MessageBus", topic: str, maxsize: int) -> None:
        self._bus = bus
        self.topic = topic
        self.maxsize = maxsize
        self._queue: deque[Message] = deque()
        self._cond = threading.Condition()
        self._closed = False
        self.drops = 0

    def _offer(self, message: Message) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= self.maxsize:
                self._queue.popleft()
                self.drops += 1
            self._queue.append(message)
            self._cond.notify()

    def get(self, timeout: float | None = None) -> Message | None:
        """Next message, or None when the subscription closes (or times out)."""
        with self._cond:
            while not self._queue:
                if self._closed:
                    return None
                if not self._cond.wait(timeout=timeout):
                    return None
            return self._queue.popleft()

    def __iter__(self):
        while True:
            message = self.get()
            if message is None:
                return
            yield message

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()
        self._bus._remove(self)

    def pending(self) -> int:
        with self._cond:
            return len(self._queue)


class MessageBus:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._subs: dict[str, list[Subscription]] = {}

    def subscribe(self, topic: str, queue_size: int = DEFAULT_QUEUE_SIZE) -> Subscription:
        if not topic:
            raise ValueError("topic must be non-empty")
        if queue_size < 1:
            raise ValueError("queue size must be positive")
        sub = Subscription(self, topic, queue_size)
        with self._lock:
            self._subs.setdefault(topic, []).append(sub)
        return sub

    def publish(self, topic: str, message: Message) -> int:
        """Deliver to every current subscriber; returns the delivered count."""
        if not topic:
            raise ValueError("topic must be non-empty")
        with self._lock:
            targets = list(self._subs.get(topic, ()))
        for sub in targets:
            sub._offer(message)
        return len(targets)

    def drops(self, topic: str | None = None) -> int:
        with self._lock:
            if topic is None:
                subs = [s for group in self._subs.values() for s in group]
            else:
                subs = list(self._subs.get(topic, ()))
        return sum(s.drops for s in subs)

    def _remove(self, sub: Subscription) -> None:
        with self._lock:
            group = self._subs.get(sub.topic)
            if group and sub in group:
                group.remove(sub)


__all__ = ["DEFAULT_QUEUE_SIZE", "MessageBus", "Subscription"]
