"""Argument checks shared by the public functions."""

from __future__ import annotations

import numbers

import numpy as np

PRECISIONS = ("f64", "ext")


def check_int(value, name: str, minimum: int = 0) -> int:
    """Return ``value`` as a Python int, rejecting bools, floats and values below ``minimum``."""
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_int_array(values, name: str, minimum: int = 0) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind not in "iu":
        raise TypeError(f"{name} must hold integers, got dtype {arr.dtype}")
    if arr.size and arr.min() < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got min {arr.min()}")
    return arr.astype(np.int64)


def check_precision(precision: str) -> str:
    if precision not in PRECISIONS:
        raise ValueError(f"precision must be one of {PRECISIONS}, got {precision!r}")
    return precision


def check_increasing(sizes, name: str = "sizes") -> list[int]:
    sizes = [check_int(s, name, 1) for s in sizes]
    if not sizes:
        raise ValueError(f"{name} must be non-empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"{name} must be strictly increasing, got {sizes}")
    return sizes
