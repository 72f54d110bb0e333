"""Least-squares exponent fitting shared by the measurement scans."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2}


def fit_loglog(xs, ys) -> ExponentFit:
    """Fit log2(y) = slope * log2(x) + intercept by least squares."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("fit_loglog needs >= 2 strictly positive points")
    lx, ly = np.log2(xs), np.log2(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ExponentFit(float(slope), float(intercept), r2)


def fit_linear(xs, ys) -> ExponentFit:
    """Plain linear fit y = slope * x + intercept with R^2."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - np.mean(ys)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ExponentFit(float(slope), float(intercept), r2)


def dyadic_range(lo_exp: int, hi_exp: int) -> list[int]:
    return [2 ** j for j in range(lo_exp, hi_exp + 1)]


def l2_in_time(times, values) -> float:
    """Trapezoid L^2-in-time norm of a sampled scalar series."""
    return math.sqrt(float(np.trapezoid(np.asarray(values, float) ** 2, np.asarray(times, float))))


def l1_in_time(times, values) -> float:
    return float(np.trapezoid(np.abs(np.asarray(values, float)), np.asarray(times, float)))
