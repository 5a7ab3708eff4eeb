"""Closed-form coalition size and diameter bounds, and the solver size cap."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .model import ContractError, Instance, ScoringVector

__all__ = [
    "UNBOUNDED",
    "NOT_APPLICABLE",
    "AUTO",
    "degree_size_bound",
    "degree_bound_is_sound",
    "moore_bound",
    "treewidth_size_bound",
    "ns_ir_diameter_bound",
    "SizeCap",
    "effective_size_cap",
    "BoundsReport",
    "bounds_report",
]


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self):
        return self.name


UNBOUNDED = _Marker("UNBOUNDED")
NOT_APPLICABLE = _Marker("NOT_APPLICABLE")
AUTO = _Marker("AUTO")


def _scoring(scoring) -> ScoringVector:
    if isinstance(scoring, Instance):
        return scoring.scoring
    if isinstance(scoring, ScoringVector):
        return scoring
    return ScoringVector(tuple(scoring))


def degree_size_bound(scoring, max_degree: int) -> int:
    """``(s1 + 1) * D * (D - 1) ** (delta - 1)`` for maximum degree ``D``.

    Returns 1 for an edgeless network. See :func:`degree_bound_is_sound` for
    when coalitions above this size are guaranteed to leave every member
    negative.
    """
    s = _scoring(scoring)
    if max_degree < 0:
        raise ContractError("maximum degree must be non-negative")
    if max_degree == 0:
        return 1
    return (s.s1 + 1) * max_degree * (max_degree - 1) ** (s.delta - 1)


def moore_bound(max_degree: int, delta: int) -> int:
    """Most agents a graph of maximum degree ``D`` can hold within diameter ``delta``."""
    if max_degree == 0:
        return 1
    return 1 + max_degree * sum((max_degree - 1) ** k for k in range(delta))


def degree_bound_is_sound(scoring, max_degree: int) -> bool:
    """Whether the degree formula dominates the ball size around an agent.

    The formula only counts ``D * (D - 1) ** (delta - 1)`` agents within
    distance ``delta``; when that is smaller than the true ball (e.g. maximum
    degree 2 with ``delta > s1 + 1``) a larger coalition can still give every
    member non-negative utility, as on a 6-cycle with ``s = (1, 1, 1)``.
    """
    s = _scoring(scoring)
    if max_degree == 0:
        return True
    return degree_size_bound(s, max_degree) >= moore_bound(max_degree, s.delta) - 1


def treewidth_size_bound(scoring, tw: int):
    """``2 * (s1 + 1) * tw + 1`` when ``s2 < 0`` (or ``delta == 1``), else NOT_APPLICABLE.

    With ``delta == 1`` distance 2 already scores minus infinity, which counts
    as negative here.
    """
    s = _scoring(scoring)
    if s.delta == 1 or s[1] < 0:
        return 2 * (s.s1 + 1) * tw + 1
    return NOT_APPLICABLE


def ns_ir_diameter_bound(scoring) -> int:
    """``2 * s1 * delta``: larger-diameter coalitions break IR and NS under open scoring."""
    s = _scoring(scoring)
    if min(s.entries) >= 0:
        raise ContractError(
            "diameter bound needs a negative score; without one the grand coalition is optimal"
        )
    return 2 * s.s1 * s.delta


@dataclass(frozen=True)
class SizeCap:
    value: object  # int or UNBOUNDED
    source: str

    def resolve(self, n: int) -> int:
        return n if self.value is UNBOUNDED else max(1, min(self.value, max(n, 1)))


def effective_size_cap(instance: Instance, requested=AUTO, treewidth: int | None = None) -> SizeCap:
    """Coalition size cap for the tree-decomposition solver.

    An explicit integer passes through. ``AUTO`` (closed scoring only) takes the
    smallest of: ``n``; the degree formula when it is sound for this network;
    the treewidth formula when ``s2 < 0``; the diameter ball bound
    ``1 + D * sum((D-1)**k for k < delta)``. None of these excludes a
    welfare-maximising outcome, and any coalition above them contains a member
    with negative utility, so they are also safe for the IR and NS variants.
    """
    if requested is not AUTO and requested != "auto":
        if isinstance(requested, bool) or not isinstance(requested, int):
            raise ValueError(f"size cap must be an integer or AUTO, got {requested!r}")
        if requested < 1:
            raise ValueError("size cap must be at least 1")
        return SizeCap(requested, "explicit")
    if instance.open_mode:
        warnings.warn("no coalition size bound is known for open scoring; cap is unbounded", stacklevel=2)
        return SizeCap(UNBOUNDED, "open-mode")
    s = instance.scoring
    deg = instance.max_degree
    cands = [(max(instance.n, 1), "n")]
    if degree_bound_is_sound(s, deg):
        cands.append((max(1, degree_size_bound(s, deg)), "degree-bound"))
    tb = NOT_APPLICABLE
    if treewidth is None and treewidth_size_bound(s, 1) is not NOT_APPLICABLE:
        from .treewidth import build_nice_decomposition

        treewidth = max(build_nice_decomposition(instance).width, 0)
    if treewidth is not None:
        tb = treewidth_size_bound(s, treewidth)
    if tb is not NOT_APPLICABLE:
        cands.append((max(1, tb), "treewidth-bound"))
    cands.append((moore_bound(deg, s.delta), "diameter-ball"))
    value, source = min(cands, key=lambda c: c[0])
    return SizeCap(value, source)


@dataclass(frozen=True)
class BoundsReport:
    degree_size_bound: object
    degree_bound_sound: bool
    tw_size_bound: object
    wf_diameter_bound: int | None
    ns_ir_diameter_bound: int | None
    max_degree: int
    treewidth_upper: int
    auto_size_cap: object
    auto_size_cap_source: str

    def to_json(self) -> dict:
        def enc(v):
            if v is UNBOUNDED:
                return "unbounded"
            if v is NOT_APPLICABLE:
                return "not-applicable"
            return v

        return {k: enc(v) for k, v in self.__dict__.items()}


def bounds_report(instance: Instance) -> BoundsReport:
    from .treewidth import build_nice_decomposition

    s = instance.scoring
    tw = max(build_nice_decomposition(instance).width, 0)
    deg = instance.max_degree
    closed = not instance.open_mode
    ns_ir = None
    if instance.open_mode and min(s.entries) < 0:
        ns_ir = ns_ir_diameter_bound(s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cap = effective_size_cap(instance, AUTO, treewidth=tw)
    return BoundsReport(
        degree_size_bound=degree_size_bound(s, deg) if closed else UNBOUNDED,
        degree_bound_sound=closed and degree_bound_is_sound(s, deg),
        tw_size_bound=treewidth_size_bound(s, tw) if closed else NOT_APPLICABLE,
        wf_diameter_bound=s.delta if closed else None,
        ns_ir_diameter_bound=ns_ir,
        max_degree=deg,
        treewidth_upper=tw,
        auto_size_cap=cap.value,
        auto_size_cap_source=cap.source,
    )
