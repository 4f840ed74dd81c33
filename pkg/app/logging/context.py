"""Scoped fields injected into every log record.

A CLI run pushes command and run_id, an evaluation configuration pushes its
label, a BIC scan pushes the candidate K. Fields live in a contextvar; worker
pools started through map_in_context see the fields of the thread that
submitted the work.
"""

from concurrent.futures import Executor
from contextlib import contextmanager
from contextvars import ContextVar, Token, copy_context
from typing import Any, Callable, Dict, Iterable, Iterator, TypeVar

T = TypeVar("T")
R = TypeVar("R")

LogContextVar: ContextVar[Dict[str, Any]] = ContextVar("log_context", default={})


def get_log_context() -> Dict[str, Any]:
    """Copy of the active fields."""
    return dict(LogContextVar.get())


def push_log_context(**fields: Any) -> Token:
    """Add fields on top of the active ones; pass the token to pop_log_context().

    Example:
        >>> token = push_log_context(command="train", k=3)
        >>> pop_log_context(token)
    """
    return LogContextVar.set({**LogContextVar.get(), **fields})


def pop_log_context(token: Token) -> None:
    LogContextVar.reset(token)


def clear_log_context() -> None:
    """Drop every field (tests)."""
    LogContextVar.set({})


@contextmanager
def log_context(**fields: Any) -> Iterator[None]:
    """Fields active for the duration of a with block, restored on exit or error.

    Example:
        >>> with log_context(command="evaluate", config="hmm_gmr(k_bins)"):
        ...     logger.info("Training configuration")
    """
    token = push_log_context(**fields)
    try:
        yield
    finally:
        pop_log_context(token)


def map_in_context(executor: Executor, fn: Callable[[T], R], items: Iterable[T]) -> Iterator[R]:
    """executor.map running every call in a copy of the caller's context.

    Results come back in input order.
    """
    items = list(items)
    contexts = [copy_context() for _ in items]
    return executor.map(lambda context, item: context.run(fn, item), contexts, items)
