"""JSON encodings shared by instances, configs and reports.

Rationals are ``["num", "den"]`` pairs of decimal strings; floats are never
written. A distribution is a list of ``[value, "num", "den"]`` triples where
``value`` is itself a rational pair.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any

from .prob import DiscreteDist, ProductDist


def rat(x) -> list[str]:
    x = Fraction(x)
    return [str(x.numerator), str(x.denominator)]


def unrat(obj) -> Fraction:
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return Fraction(int(obj[0]), int(obj[1]))
    if isinstance(obj, bool) or isinstance(obj, float):
        raise ValueError(f"not an exact rational: {obj!r}")
    if isinstance(obj, (int, str)):
        return Fraction(obj)
    raise ValueError(f"not an exact rational: {obj!r}")


def dist_to_json(d: DiscreteDist) -> list:
    return [[rat(v), str(p.numerator), str(p.denominator)] for v, p in d.items()]


def dist_from_json(obj) -> DiscreteDist:
    return DiscreteDist.from_pairs((unrat(v), Fraction(int(a), int(b))) for v, a, b in obj)


def product_to_json(P: ProductDist) -> list:
    return [[dist_to_json(d) for d in row] for row in P.entries]


def product_from_json(obj) -> ProductDist:
    return ProductDist.of([[dist_from_json(d) for d in row] for row in obj])


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
