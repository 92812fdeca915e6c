from dataclasses import dataclass

from .errors import CapExceeded


@dataclass(frozen=True)
class Caps:
    """Size guards for exhaustive enumeration and exact LP solves."""

    joint: int = 10**6
    subset: int = 20
    lp: int = 5_000

    def __post_init__(self):
        for name in ("joint", "subset", "lp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"cap {name} must be positive")


DEFAULT_CAPS = Caps()


def guard(what: str, size: int, cap: int) -> None:
    if size > cap:
        raise CapExceeded(what, size, cap)
