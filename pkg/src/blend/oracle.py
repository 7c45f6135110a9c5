"""Black-box function oracles.

The whole library differentiates functions it can only evaluate pointwise.
:class:`FunctionOracle` wraps such a function together with the two pieces of
metadata the algorithms need: whether concurrent evaluation is allowed, and an
exact count of how many evaluations have been consumed.
"""

from __future__ import annotations

import threading
from typing import Callable


class OracleEvaluationError(RuntimeError):
    """An oracle evaluation raised; carries the offending point.

    ``point`` is the argument that failed and ``index`` the stencil slot k
    (when the failure happened inside a grid evaluation).
    """

    def __init__(self, message: str, *, point, index: int | None = None):
        super().__init__(message)
        self.point = point
        self.index = index


class FunctionOracle:
    """A deterministic scalar black box with evaluation counting.

    Args:
        fn: The function to evaluate. Must be deterministic: the same input
            must produce a bit-identical output on every call.
        parallel_safe: Whether concurrent calls to ``fn`` are allowed. When
            False, grid evaluations are performed strictly sequentially.
        name: Optional label used in error messages and CLI output.

    The counter includes failed evaluations (it counts invocations) and is
    guarded by a lock so it stays exact under concurrent evaluation.
    """

    def __init__(self, fn: Callable, *, parallel_safe: bool = False, name: str | None = None):
        self._fn = fn
        self.parallel_safe = bool(parallel_safe)
        self.name = name
        self._count = 0
        self._lock = threading.Lock()

    def evaluate(self, theta):
        """Evaluate the wrapped function, counting the invocation."""
        with self._lock:
            self._count += 1
        return self._fn(theta)

    @property
    def eval_count(self) -> int:
        """Number of ``evaluate`` invocations since construction or reset."""
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        label = self.name or getattr(self._fn, "__name__", "fn")
        return f"FunctionOracle({label}, parallel_safe={self.parallel_safe}, evals={self._count})"
