"""Finite unions of real intervals.

Intervals are ``(lo, hi)`` tuples; open/closed endpoints only matter for
membership tests, never for measure, so callers track them separately.
"""
from __future__ import annotations


def merge(intervals, touch: float = 0.0) -> list[tuple[float, float]]:
    """Sorted union; pieces whose gap is ``<= touch`` are joined."""
    out: list[list[float]] = []
    for lo, hi in sorted((float(a), float(b)) for a, b in intervals if b >= a):
        if out and lo <= out[-1][1] + touch:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


def measure(intervals) -> float:
    return sum(b - a for a, b in merge(intervals))


def clip(intervals, lo: float, hi: float) -> list[tuple[float, float]]:
    out = []
    for a, b in intervals:
        a, b = max(a, lo), min(b, hi)
        if b > a:
            out.append((a, b))
    return out


def intersect(xs, ys) -> list[tuple[float, float]]:
    xs, ys = merge(xs), merge(ys)
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        lo = max(xs[i][0], ys[j][0])
        hi = min(xs[i][1], ys[j][1])
        if hi > lo:
            out.append((lo, hi))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def complement(intervals, lo: float, hi: float) -> list[tuple[float, float]]:
    """``[lo, hi]`` minus the union, as closed pieces of positive length."""
    out = []
    cur = lo
    for a, b in merge(clip(intervals, lo, hi)):
        if a > cur:
            out.append((cur, a))
        cur = max(cur, b)
    if hi > cur:
        out.append((cur, hi))
    return out


def contains(intervals, x: float) -> bool:
    return any(a <= x <= b for a, b in intervals)
