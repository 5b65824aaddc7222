"""Empirical calibration of the Brownian lemma constants.

For each lemma the ratio (shape value with constant 1) / (true probability)
is computed over a parameter grid, with the exact line formula or the
slope-then-flat quadrature as the truth.  The largest ratio is what the
calibrated policy divides by (times a safety factor).

Run ``python -m supbounds.calibration`` to print a fresh report.
"""
from __future__ import annotations

import dataclasses
import itertools
import json
import math

import numpy as np

from .bm import (
    lemma1_shape,
    lemma2_shape,
    lemma3_shape,
    log_line_noncrossing,
    log_piecewise_noncrossing_quad,
)
from .constants import CALIBRATION_H

A_GRID = tuple(float(x) for x in np.geomspace(0.05, 20.0, 12))
SLOPES = (0.0, -0.05, -0.1, -0.3, -1.0, -3.0, -10.0, -30.0)
HORIZONS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
BREAK_FRACTIONS = (0.1, 0.5, 0.9)
H_SCAN = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0)


@dataclasses.dataclass
class LemmaCalibration:
    name: str
    worst_ratio: float
    worst_point: tuple
    points: int


@dataclasses.dataclass
class CalibrationReport:
    lemma1: LemmaCalibration
    lemma2: LemmaCalibration
    lemma3: LemmaCalibration
    H: float
    # max lemma-1 ratio among grid points with |b| sqrt(t) >= H, per scanned H
    lemma1_ratio_by_H: dict
    smallest_H_unit_constant: float | None

    def as_dict(self):
        return dataclasses.asdict(self)


def _worst(name, rows):
    worst, point, n = -math.inf, None, 0
    for log_ratio, pt in rows:
        n += 1
        if log_ratio > worst:
            worst, point = log_ratio, pt
    return LemmaCalibration(name, math.exp(worst), point, n)


def lemma1_rows(H=CALIBRATION_H, a_grid=A_GRID, slopes=SLOPES, horizons=HORIZONS):
    for a, b, t in itertools.product(a_grid, slopes, horizons):
        if b < 0 and abs(b) * math.sqrt(t) >= H:
            yield lemma1_shape(a, b, t) - log_line_noncrossing(a, b, t), (a, b, t)


def lemma2_rows(H=CALIBRATION_H, a_grid=A_GRID, slopes=SLOPES, horizons=HORIZONS):
    for a, b, t in itertools.product(a_grid, slopes, horizons):
        if abs(b) * math.sqrt(t) <= H:
            yield lemma2_shape(a, t) - log_line_noncrossing(a, b, t), (a, b, t)


def lemma3_rows(a_grid=A_GRID, slopes=SLOPES, horizons=HORIZONS, fractions=BREAK_FRACTIONS):
    for a, b, t, f in itertools.product(a_grid, slopes, horizons, fractions):
        t0 = f * t
        yield lemma3_shape(a, b, t0, t) - log_piecewise_noncrossing_quad(a, b, t0, t), (a, b, t0, t)


def calibrate(H=CALIBRATION_H) -> CalibrationReport:
    l1 = _worst("lemma1", lemma1_rows(H))
    l2 = _worst("lemma2", lemma2_rows(H))
    l3 = _worst("lemma3", lemma3_rows())
    by_h = {}
    for h in H_SCAN:
        rows = list(lemma1_rows(h))
        by_h[h] = math.exp(max(r for r, _ in rows)) if rows else None
    unit = [h for h, r in by_h.items() if r is not None and r <= 1.0]
    return CalibrationReport(l1, l2, l3, H, by_h, min(unit) if unit else None)


def main():
    print(json.dumps(calibrate().as_dict(), indent=2))


if __name__ == "__main__":
    main()
