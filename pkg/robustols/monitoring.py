"""Monitoring utilities for structured logging and batch metrics."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from prometheus_client import CollectorRegistry, Counter, disable_created_metrics, write_to_textfile

EVENTS_LOGGER = logging.getLogger("robustols.events")

# *_created samples carry wall-clock timestamps; metric files must be reproducible.
disable_created_metrics()


def log_event(event: str, logger: logging.Logger | None = None, **fields: Any) -> None:
    """Log a one-line JSON payload describing an estimation or simulation event."""

    payload = {"event": event, **fields}
    (logger or EVENTS_LOGGER).info(json.dumps(payload, ensure_ascii=False, default=str))


class RunMetrics:
    """Prometheus counters for one experiment run, kept in a private registry."""

    def __init__(self, experiment: str) -> None:
        self.registry = CollectorRegistry()
        labels = ["experiment"]
        self._replications = Counter(
            "robustols_replications",
            "Monte Carlo replications attempted",
            labels,
            registry=self.registry,
        )
        self._failures = Counter(
            "robustols_replication_failures",
            "Replications excluded after a numerical failure",
            labels,
            registry=self.registry,
        )
        self._failed_points = Counter(
            "robustols_failed_points",
            "Time points flagged as failed in time-varying fits",
            labels,
            registry=self.registry,
        )
        self.experiment = experiment

    def record(self, replications: int, failures: int = 0, failed_points: int = 0) -> None:
        self._replications.labels(self.experiment).inc(replications)
        self._failures.labels(self.experiment).inc(failures)
        self._failed_points.labels(self.experiment).inc(failed_points)

    def write(self, path: Path) -> None:
        """Persist the registry in the text exposition format (node-exporter textfile style)."""

        write_to_textfile(str(path), self.registry)
