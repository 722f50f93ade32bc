"""Any finite point set has an exact interpolating curve; only short
descriptions count as laws.

A hand that jots points in some order is matched by a parametric
polynomial curve that visits them in that order (chordal parameter, a
stand-in for uniform motion). The description cost of that curve grows
linearly with the point count, so interpolation alone never compresses;
bit data, by contrast, is classified lawful exactly when some verified
program is enough shorter than the data itself.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .complexity import complexity_upper
from .explorer import ExplorationStore

LAWFUL = "LAWFUL"
LAWLESS_AT_BUDGET = "LAWLESS_AT_BUDGET"

HEADER_BITS = 16
KNOT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CurveDescription:
    """Newton-form interpolant through (x(t), y(t)) at chordal knots."""

    knots: tuple[float, ...]
    x_coeffs: tuple[float, ...]
    y_coeffs: tuple[float, ...]

    @property
    def coefficient_count(self) -> int:
        return len(self.x_coeffs) + len(self.y_coeffs)


@dataclass(frozen=True)
class LawVerdict:
    raw_size: int
    rule_size_upper: int
    ratio: Fraction
    verdict: str
    witness: str


def chordal_knots(points) -> tuple[float, ...]:
    """Cumulative chord length, normalized to [0, 1]; t1 = 0."""
    if len(points) == 0:
        raise ValueError("need at least one point")
    if len(points) == 1:
        return (0.0,)
    chords = []
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        d = math.hypot(x1 - x0, y1 - y0)
        if d == 0.0:
            raise ValueError(f"duplicate consecutive point: ({x0}, {y0})")
        chords.append(d)
    total = sum(chords)
    knots = [0.0]
    acc = 0.0
    for d in chords:
        acc += d
        knots.append(acc / total)
    knots[-1] = 1.0
    return tuple(knots)


def newton_coefficients(ts, values) -> tuple[float, ...]:
    """Divided-difference coefficients for the Newton form."""
    coeffs = list(values)
    n = len(ts)
    for level in range(1, n):
        for i in range(n - 1, level - 1, -1):
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (ts[i] - ts[i - level])
    return tuple(coeffs)


def newton_eval(ts, coeffs, t: float) -> float:
    result = coeffs[-1]
    for i in range(len(coeffs) - 2, -1, -1):
        result = result * (t - ts[i]) + coeffs[i]
    return result


def interpolate(points) -> CurveDescription:
    """Exact interpolating curve visiting the points in jotting order."""
    pts = [(float(x), float(y)) for x, y in points]
    knots = chordal_knots(pts)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return CurveDescription(
        knots, newton_coefficients(knots, xs), newton_coefficients(knots, ys)
    )


def curve_point(curve: CurveDescription, t: float) -> tuple[float, float]:
    return (
        newton_eval(curve.knots, curve.x_coeffs, t),
        newton_eval(curve.knots, curve.y_coeffs, t),
    )


def knot_residuals(curve: CurveDescription, points) -> list[float]:
    res = []
    for t, (x, y) in zip(curve.knots, points):
        cx, cy = curve_point(curve, t)
        res.append(max(abs(cx - float(x)), abs(cy - float(y))))
    return res


def describe_size(curve: CurveDescription, precision_bits: int) -> int:
    """Bits to write the rule down: coefficients times precision plus a
    fixed header. Linear in the point count, so never a compression."""
    if precision_bits < 1:
        raise ValueError("precision_bits must be >= 1")
    return curve.coefficient_count * precision_bits + HEADER_BITS


def classify(
    data: str,
    search_bound: int,
    *,
    store: ExplorationStore | None = None,
    threshold: Fraction = Fraction(1, 2),
) -> LawVerdict:
    """Grade a bit string lawful or lawless at this search budget.

    The rule size is the best verified upper bound on the data's
    program-size complexity; the literal-machine fallback keeps it at
    most len + 2*floor(log2(len+1)) + 6, so a verdict always exists.
    Lawless is always budget-relative: a deeper search may still find a
    law.
    """
    if len(data) < 1:
        raise ValueError("need at least one data bit")
    bound = complexity_upper(data, store=store, search_bound=search_bound)
    ratio = Fraction(bound.value, len(data))
    verdict = LAWFUL if ratio <= threshold else LAWLESS_AT_BUDGET
    return LawVerdict(len(data), bound.value, ratio, verdict, bound.witness)


def read_points_csv(path) -> list[tuple[float, float]]:
    """Point list from a CSV of x,y rows; file order is jotting order."""
    points = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ValueError(f"need x,y per line, got: {row!r}")
            points.append((float(row[0]), float(row[1])))
    if not points:
        raise ValueError("no points in file")
    return points


def curve_samples(curve: CurveDescription, count: int = 256) -> list[tuple[float, float]]:
    """Evenly sampled curve points, ready for a gnuplot data file."""
    if count < 2:
        raise ValueError("need at least two samples")
    return [curve_point(curve, i / (count - 1)) for i in range(count)]
