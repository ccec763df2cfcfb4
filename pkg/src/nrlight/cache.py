"""In-process store of finished scenario results, keyed by a SHA-256 fingerprint of the resolved scenario."""

import hashlib
import json
import logging
import threading
from collections import OrderedDict
from typing import Any, Optional

from nrlight.config import RuntimeEnv
from nrlight.models import SweepResult

logger = logging.getLogger(__name__)


class ResultCache:
    """Bounded, least-recently-used map from fingerprint to SweepResult.

    Results are frozen models, so entries are handed out without copying.
    """

    def __init__(self, capacity: int = 64) -> None:
        self._capacity = max(1, capacity)
        self._results: "OrderedDict[str, SweepResult]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[SweepResult]:
        with self._lock:
            result = self._results.get(key)
            if result is None:
                self.misses += 1
                return None
            self._results.move_to_end(key)
            self.hits += 1
            return result

    def put(self, key: str, result: SweepResult) -> None:
        with self._lock:
            self._results[key] = result
            self._results.move_to_end(key)
            while len(self._results) > self._capacity:
                evicted, _ = self._results.popitem(last=False)
                logger.debug("evicted cached result %s", evicted[:12])

    def clear(self) -> None:
        with self._lock:
            self._results.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._results)

    def __contains__(self, key: str) -> bool:
        with self._lock:
            return key in self._results


def fingerprint(payload: Any) -> str:
    """SHA-256 of the canonical JSON form of `payload`."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_result_cache(env: RuntimeEnv) -> Optional[ResultCache]:
    if not env.cache_enabled:
        return None
    return ResultCache(capacity=env.cache_capacity)
