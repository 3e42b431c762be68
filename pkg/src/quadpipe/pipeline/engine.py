"""The pipeline engine: sources in, steps in order, sinks out.

One worker thread per pipeline keeps per-source ordering (the spec's
ordered=false permits concurrency but does not require it; sequential
execution is the simplest implementation that honors both settings).
A failing step never stops the route: the message goes to the
"dlq.<pipeline-id>" topic with the error text in a header, and the
worker moves on.
"""

from __future__ import annotations

import http.server
import threading
import time

from ..connectors import ERROR_HEADER, Message, MessageBus, RECEIVED_AT, open_source, send
from .metrics import MetricsRegistry
from .spec import PipelineDef, PipelineSpec
from .steps import AggregateStep, Aggregator, FilterStep, MulticastStep, RouteStep

_FLUSH_PERIOD = 0.02


def _now_millis() -> int:
    return int(time.time() * 1000)


class _Worker(threading.Thread):
    def __init__(self, engine: "Engine", pipeline: PipelineDef) -> None:
        super().__init__(name=f"pipeline-{pipeline.id}", daemon=True)
        self.engine = engine
        self.pipeline = pipeline
        self.metrics = engine.metrics.pipeline(pipeline.id)
        self.source = open_source(pipeline.source, bus=engine.bus)
        self.aggregators = {
            i: Aggregator(step)
            for i, step in enumerate(pipeline.steps)
            if isinstance(step, AggregateStep)
        }
        self.lock = threading.Lock()
        self.drain_deadline: float | None = None

    def run(self) -> None:
        for message in self.source.messages():
            self.metrics.inc_in()
            with self.lock:
                self.process(0, [message])
        for message in self.source.drain():
            self.metrics.inc_in()
            if self._past_deadline():
                self.metrics.inc_drops()
                continue
            with self.lock:
                self.process(0, [message])
        for index in sorted(self.aggregators):
            aggregator = self.aggregators[index]
            if self._past_deadline():
                self.metrics.inc_drops(aggregator.buffered())
                aggregator.drain()
            else:
                for combined in aggregator.drain():
                    with self.lock:
                        self.process(index + 1, [combined])

    def _past_deadline(self) -> bool:
        return self.drain_deadline is not None and time.monotonic() > self.drain_deadline

    def process(self, start: int, messages: list[Message]) -> None:
        outputs = messages
        for index in range(start, len(self.pipeline.steps)):
            step = self.pipeline.steps[index]
            carried = []
            for message in outputs:
                try:
                    if isinstance(step, FilterStep):
                        if step.matches(message):
                            carried.append(message)
                        else:
                            self.metrics.inc_drops()
                    elif isinstance(step, RouteStep):
                        send(step.pick(message), message, bus=self.engine.bus)
                        self._complete(message)
                    elif isinstance(step, AggregateStep):
                        carried.extend(self.aggregators[index].add(message))
                    elif isinstance(step, MulticastStep):
                        for sink in step.sinks:
                            send(sink, message, bus=self.engine.bus)
                        carried.append(message)
                    else:
                        carried.extend(step.apply(message))
                except Exception as exc:
                    self._dead_letter(message, step.kind, exc)
            outputs = carried
        for message in outputs:
            try:
                for sink in self.pipeline.sinks:
                    send(sink, message, bus=self.engine.bus)
            except Exception as exc:
                self._dead_letter(message, "sink", exc)
                continue
            self._complete(message)

    def _complete(self, message: Message) -> None:
        received = message.headers.get(RECEIVED_AT)
        latency = 0.0
        if received is not None:
            latency = max(float(_now_millis() - int(received)), 0.0)
        self.metrics.observe_out(latency)

    def _dead_letter(self, message: Message, where: str, exc: Exception) -> None:
        self.metrics.inc_errors()
        tagged = message.with_header(ERROR_HEADER, f"{where}: {exc}")
        self.engine.bus.publish("dlq." + self.pipeline.id, tagged)


class Engine:
    def __init__(self, spec: PipelineSpec, bus: MessageBus | None = None) -> None:
        self.spec = spec
        self.bus = bus if bus is not None else MessageBus()
        self.metrics = MetricsRegistry()
        self._workers: list[_Worker] = []
        self._running = False
        self._stop_flusher = threading.Event()
        self._flusher: threading.Thread | None = None
        self._metrics_server: http.server.ThreadingHTTPServer | None = None

    def start(self) -> "Engine":
        if self._running:
            raise RuntimeError("engine already started")
        workers = []
        try:
            for pipeline in self.spec.pipelines:
                workers.append(_Worker(self, pipeline))
        except Exception:
            for worker in workers:
                worker.source.close()
            raise
        self._workers = workers
        self._running = True
        for worker in workers:
            worker.start()
        if any(worker.aggregators for worker in workers):
            self._flusher = threading.Thread(target=self._flush_loop, daemon=True)
            self._flusher.start()
        return self

    def _flush_loop(self) -> None:
        while not self._stop_flusher.wait(timeout=_FLUSH_PERIOD):
            for worker in self._workers:
                for index, aggregator in worker.aggregators.items():
                    flushed = aggregator.flush_expired()
                    if flushed:
                        with worker.lock:
                            worker.process(index + 1, flushed)

    def shutdown(self, deadline_millis: int = 5000) -> dict:
        """Close sources, drain up to the deadline, return frozen metrics."""
        if self._running:
            deadline = time.monotonic() + deadline_millis / 1000.0
            for worker in self._workers:
                worker.drain_deadline = deadline
            for worker in self._workers:
                worker.source.close()
            for worker in self._workers:
                grace = max(deadline - time.monotonic(), 0.0) + 2.0
                worker.join(timeout=grace)
            self._stop_flusher.set()
            if self._flusher is not None:
                self._flusher.join(timeout=1.0)
            self._running = False
        if self._metrics_server is not None:
            self._metrics_server.shutdown()
            self._metrics_server.server_close()
            self._metrics_server = None
        return self.metrics.snapshot()

    def metrics_text(self) -> str:
        return self.metrics.render()

    def serve_metrics(self, port: int = 0, host: str = "127.0.0.1") -> int:
        """Expose GET /metrics; returns the bound port."""
        engine = self

        class Handler(http.server.BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def do_GET(self) -> None:
                if self.path != "/metrics":
                    self.send_error(404)
                    return
                body = engine.metrics_text().encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/plain; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._metrics_server = http.server.ThreadingHTTPServer((host, port), Handler)
        bound = self._metrics_server.server_address[1]
        threading.Thread(target=self._metrics_server.serve_forever, daemon=True).start()
        return bound


def run(spec: PipelineSpec, bus: MessageBus | None = None) -> Engine:
    """Load-and-go convenience: start an engine for a validated spec."""
    return Engine(spec, bus=bus).start()


__all__ = ["Engine", "run"]
