from multiprocessing import Pool
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

def parse_range(text: str) -> list[float]:
    """
    'a:b:s' -> [a, a+s, ..., b] (inclusive), 'a' -> [a].
    Values are rounded to 12 significant digits so 0.1 steps print cleanly.
    """
    parts = text.split(":")
    try:
        numbers = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"Invalid range '{text}'. Expected 'start:stop:step' or a single number.")
    if len(numbers) == 1:
        return numbers
    if len(numbers) != 3:
        raise ValueError(f"Invalid range '{text}'. Expected 'start:stop:step'.")
    start, stop, step = numbers
    if step <= 0 or stop < start:
        raise ValueError(f"Invalid range '{text}'. Need step > 0 and stop >= start.")
    count = int(round((stop - start) / step))
    if start + count * step > stop + 1e-9 * step:
        count -= 1
    return [float(f"{start + k * step:.12g}") for k in range(count + 1)]

def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """fn over items in order; a process pool when workers > 1. fn must be picklable."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with Pool(processes=min(workers, len(items))) as pool:
        return pool.map(fn, items)

def format_float(value: float) -> str:
    return f"{value:.12g}"
