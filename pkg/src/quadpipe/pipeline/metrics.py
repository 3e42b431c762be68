"""Per-pipeline counters and latency histograms.

All counters are monotone; a snapshot freezes them into plain dicts.
The text rendering is line-oriented name{label}value, one metric per
line, suitable for scraping.
"""

from __future__ import annotations

import threading

BUCKET_BOUNDS = (1, 2, 5, 10, 25, 50, 100, 250, 1000)


class PipelineMetrics:
    """Counters for one pipeline; all updates take the shared lock."""

    def __init__(self, pipeline_id: str, lock: threading.Lock) -> None:
        self.pipeline_id = pipeline_id
        self._lock = lock
        self.messages_in = 0
        self.messages_out = 0
        self.errors = 0
        self.drops = 0
        self.bucket_counts = [0] * (len(BUCKET_BOUNDS) + 1)
        self.latency_sum = 0.0

    def inc_in(self, n: int = 1) -> None:
        with self._lock:
            self.messages_in += n

    def inc_errors(self, n: int = 1) -> None:
        with self._lock:
            self.errors += n

    def inc_drops(self, n: int = 1) -> None:
        with self._lock:
            self.drops += n

    def observe_out(self, latency_millis: float) -> None:
        """Count one completed message and its end-to-end latency."""
        with self._lock:
            self.messages_out += 1
            self.latency_sum += latency_millis
            for i, bound in enumerate(BUCKET_BOUNDS):
                if latency_millis <= bound:
                    self.bucket_counts[i] += 1
                    return
            self.bucket_counts[-1] += 1


class MetricsRegistry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._pipelines: dict[str, PipelineMetrics] = {}

    def pipeline(self, pipeline_id: str) -> PipelineMetrics:
        with self._lock:
            if pipeline_id not in self._pipelines:
                self._pipelines[pipeline_id] = PipelineMetrics(pipeline_id, self._lock)
            return self._pipelines[pipeline_id]

    def snapshot(self) -> dict:
        """Plain-dict copy of every counter, safe to hold after shutdown."""
        with self._lock:
            out = {}
            for pid, m in sorted(self._pipelines.items()):
                buckets = dict(zip([str(b) for b in BUCKET_BOUNDS] + ["+Inf"], m.bucket_counts))
                out[pid] = {
                    "messages-in": m.messages_in,
                    "messages-out": m.messages_out,
                    "errors": m.errors,
                    "drops": m.drops,
                    "latency-buckets": buckets,
                    "latency-sum-millis": round(m.latency_sum, 3),
                }
            return out

    def render(self) -> str:
        """Line-oriented text form of the current counters."""
        lines = []
        for pid, m in sorted(self.snapshot().items()):
            label = f'{{pipeline="{pid}"}}'
            lines.append(f"pipeline_messages_in{label} {m['messages-in']}")
            lines.append(f"pipeline_messages_out{label} {m['messages-out']}")
            lines.append(f"pipeline_errors{label} {m['errors']}")
            lines.append(f"pipeline_drops{label} {m['drops']}")
            running = 0
            for bound, count in m["latency-buckets"].items():
                running += count
                lines.append(
                    f'pipeline_latency_millis_bucket{{pipeline="{pid}",le="{bound}"}} {running}'
                )
            lines.append(f"pipeline_latency_millis_count{label} {m['messages-out']}")
            lines.append(f"pipeline_latency_millis_sum{label} {m['latency-sum-millis']}")
        return "\n".join(lines) + "\n"


__all__ = ["BUCKET_BOUNDS", "MetricsRegistry", "PipelineMetrics"]
