"""Event-level reference evaluation of scans in the tuple model.

Walks actual probe and limit events on capped triple grids instead of using
closed forms, so it shares no reasoning with the package's scan evaluator.
Cofinality below a candidate limit stage is checked by probing every grid
point under it for a strictly later hit, with the hit pool drawn from a
larger grid; this is sound whenever the hit pattern is coefficient-stable
below the caps, which the tests arrange.
"""

from __future__ import annotations

import itertools

from tuple_model import Trip, grid, t_add, t_classify, t_left_sub


def _hit_pool(cap: int):
    rng = range(2 * cap + 3)
    return sorted(itertools.product(rng, rng, rng))


def ref_is_limit_of_hits(pred, s: Trip, cap: int) -> bool:
    if t_classify(s) != "limit":
        return False
    pool = [h for h in _hit_pool(cap) if h < s and pred(h)]
    if not pool:
        return False
    for u in grid(cap):
        if u < s and not any(h > u for h in pool):
            return False
    return True


def ref_first_hit(pred, anchor: Trip, cap: int = 8):
    """(first hit strictly above anchor, charged order type), or None when
    no hit shows up inside the pool."""
    for h in _hit_pool(cap):
        if h > anchor and pred(h):
            return h, t_left_sub(anchor, h)
    return None


def ref_last_hit(pred, bound: Trip, cap: int = 8):
    """(greatest hit at most bound, charged order type of the closed sweep),
    or None when nothing at most the bound hits."""
    hits = [h for h in _hit_pool(cap) if h <= bound and pred(h)]
    charged = t_add(bound, (0, 0, 1))
    return (max(hits), charged) if hits else (None, charged)


def ref_flag_scan(pred, start: Trip, initials, cap: int = 8):
    """Walk hit and limit events above start, toggling every flag at hits
    and applying lim-inf zeros at limits of hits; (exit stage, charged order
    type), or None if the scan does not end inside the grid."""
    state = list(initials)
    if all(v == 0 for v in state):
        return start, (0, 0, 0)
    for s in grid(cap):
        if s <= start:
            continue
        if ref_is_limit_of_hits(pred, s, cap):
            state = [0] * len(state)     # both values recur below s
        elif pred(s):
            state = [1 - v for v in state]
        else:
            continue
        if all(v == 0 for v in state):
            return s, t_left_sub(start, s)
    return None
