"""Named example problems used by the CLI, the lab, and the test suite.

Each preset carries a continuous Lagrangian density (a ``Scalar`` in x, xd)
plus, when the problem is concrete enough to run numerically, a state
dimension and a numeric environment for ``eval_s``/``eval_v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import Scalar
from .grammar import parse_scalar

PRESET_NAMES = ("harmonic", "kepler", "mechanical-with-U", "anisotropic")


@dataclass(frozen=True)
class Preset:
    name: str
    lagrangian: Scalar
    description: str
    dim: int | None = None          # None: symbolic-only preset
    env: dict = field(default_factory=dict)
    potential: object = None        # numeric U(x) for diagnostics


def _harmonic() -> Preset:
    return Preset(
        name="harmonic",
        lagrangian=parse_scalar("1/2*norm2(xd) - 1/2*norm2(x)"),
        description="harmonic oscillator, U(x) = |x|^2/2",
        dim=1,
        potential=lambda x: 0.5 * float(sum(c * c for c in x)),
    )


def _kepler() -> Preset:
    return Preset(
        name="kepler",
        lagrangian=parse_scalar("1/2*norm2(xd) + pow(norm2(x), -1/2)"),
        description="planar Kepler problem, U(x) = -1/|x|",
        dim=2,
        potential=lambda x: -1.0 / float(sum(c * c for c in x)) ** 0.5,
    )


def _mechanical() -> Preset:
    return Preset(
        name="mechanical-with-U",
        lagrangian=parse_scalar("1/2*norm2(xd) - U(0)"),
        description="mechanical Lagrangian with an opaque potential U",
        dim=None,
    )


def _anisotropic() -> Preset:
    # M, Jp, A symmetric; Jm antisymmetric; M invertible (inverse Minv).
    L = parse_scalar(
        "1/2*dot(xd, M(xd)) + 1/2*dot(x, Jp(xd)) + 1/2*dot(x, Jm(xd))"
        " + 1/2*dot(x, A(x))")
    return Preset(
        name="anisotropic",
        lagrangian=L,
        description="anisotropic oscillator with opaque matrices M, Jp, Jm, A",
        dim=None,
    )


_BUILDERS = {
    "harmonic": _harmonic,
    "kepler": _kepler,
    "mechanical-with-U": _mechanical,
    "anisotropic": _anisotropic,
}


def get_preset(name: str) -> Preset:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
