"""JSON set specifications resolved against a lattice window.

Wire format (discriminated on "kind"):

    {"kind": "thorn", "f": {"type": "power", "alpha": 0.5}}
    {"kind": "cylinder", "h": 8, "r": 2}
    {"kind": "axis"}
    {"kind": "ball", "r": 4, "center": [0, 0, 0]}
    {"kind": "halfspace", "axis": 0, "lo": 2}
    {"kind": "complement", "of": {...}}
    {"kind": "union", "of": [{...}, ...]}
    {"kind": "intersection", "of": [{...}, ...]}

Profiles for thorns: {"type": "power", "alpha": a, "coeff": c} meaning
f(n) = c * n^a, or {"type": "constant", "value": v}. Power profiles with
2*alpha and coeff integral compare membership in exact integer arithmetic.
"""

from __future__ import annotations

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from .graph import VertexSet
from .lattice import LatticeWindow, axis_set, cylinder_set, thorn_set

__all__ = [
    "SetSpec",
    "FSpec",
    "PowerProfile",
    "ConstantProfile",
    "parse_set_spec",
    "resolve_set",
    "profile_callables",
]


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PowerProfile(_Base):
    type: Literal["power"]
    alpha: float = Field(ge=0)
    coeff: float = Field(default=1.0, gt=0)


class ConstantProfile(_Base):
    type: Literal["constant"]
    value: float = Field(ge=0)


FSpec = Union[PowerProfile, ConstantProfile]


class ThornSpec(_Base):
    kind: Literal["thorn"]
    f: FSpec = Field(discriminator="type")


class CylinderSpec(_Base):
    kind: Literal["cylinder"]
    h: int = Field(ge=0)
    r: int = Field(ge=0)


class AxisSpec(_Base):
    kind: Literal["axis"]


class BallSpec(_Base):
    kind: Literal["ball"]
    r: int = Field(ge=0)
    center: Optional[List[int]] = None


class HalfspaceSpec(_Base):
    kind: Literal["halfspace"]
    axis: int = Field(default=0, ge=0)
    lo: Optional[int] = None
    hi: Optional[int] = None


class ComplementSpec(_Base):
    kind: Literal["complement"]
    of: "SetSpec"


class UnionSpec(_Base):
    kind: Literal["union"]
    of: List["SetSpec"] = Field(min_length=1)


class IntersectionSpec(_Base):
    kind: Literal["intersection"]
    of: List["SetSpec"] = Field(min_length=1)


SetSpec = Union[
    ThornSpec, CylinderSpec, AxisSpec, BallSpec, HalfspaceSpec,
    ComplementSpec, UnionSpec, IntersectionSpec,
]

ComplementSpec.model_rebuild()
UnionSpec.model_rebuild()
IntersectionSpec.model_rebuild()

_adapter = TypeAdapter(SetSpec)


def parse_set_spec(obj):
    """Validate a raw dict (or JSON-decoded object) into a SetSpec."""
    return _adapter.validate_python(obj)


def profile_callables(spec):
    """Return (f, f_squared_or_None) for a thorn profile spec."""
    if isinstance(spec, ConstantProfile):
        v = spec.value
        return (lambda n: v), (lambda n: v * v)
    alpha, coeff = spec.alpha, spec.coeff
    f = lambda n: coeff * float(n) ** alpha  # noqa: E731
    two_alpha = 2.0 * alpha
    if two_alpha == int(two_alpha) and coeff == int(coeff):
        k = int(two_alpha)
        c2 = float(int(coeff) ** 2)
        return f, (lambda n: c2 * float(int(n) ** k))
    return f, None


def resolve_set(spec, window: LatticeWindow) -> VertexSet:
    """Materialize a SetSpec as a VertexSet of the given window."""
    if isinstance(spec, dict):
        spec = parse_set_spec(spec)
    if isinstance(spec, ThornSpec):
        f, fsq = profile_callables(spec.f)
        return thorn_set(window, f, f_squared=fsq)
    if isinstance(spec, CylinderSpec):
        return cylinder_set(window, min(spec.h, window.R), min(spec.r, window.R))
    if isinstance(spec, AxisSpec):
        return axis_set(window)
    if isinstance(spec, BallSpec):
        return window.l1_ball(spec.r, center=spec.center)
    if isinstance(spec, HalfspaceSpec):
        if spec.axis >= window.d:
            raise ValueError("halfspace axis outside lattice dimension")
        c = window.all_coords()[:, spec.axis]
        mask = c == c  # all True
        if spec.lo is not None:
            mask &= c >= spec.lo
        if spec.hi is not None:
            mask &= c <= spec.hi
        return VertexSet.from_mask(mask)
    if isinstance(spec, ComplementSpec):
        return resolve_set(spec.of, window).complement()
    if isinstance(spec, UnionSpec):
        out = resolve_set(spec.of[0], window)
        for s in spec.of[1:]:
            out = out.union(resolve_set(s, window))
        return out
    if isinstance(spec, IntersectionSpec):
        out = resolve_set(spec.of[0], window)
        for s in spec.of[1:]:
            out = out.intersection(resolve_set(s, window))
        return out
    raise TypeError(f"unknown set spec: {spec!r}")
