# core/benchmarks.py
"""Classical 23-function minimization suite (unimodal, multimodal and fixed-dimension)."""

import zlib
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import BenchmarkError


@dataclass(frozen=True)
class Benchmark:
    """One suite function with its default domain and known global minimum."""
    fid: int
    name: str
    fn: Callable[[np.ndarray], float]
    lower: float
    upper: float
    optimum: float
    fixed_dim: Optional[int] = None

    def dim(self, requested: int) -> int:
        return self.fixed_dim if self.fixed_dim is not None else requested

    def bounds(self, d: int) -> Tuple[np.ndarray, np.ndarray]:
        d = self.dim(d)
        return np.full(d, self.lower), np.full(d, self.upper)

    def __call__(self, x: np.ndarray) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))


def _u(x: np.ndarray, a: float, k: float, m: float) -> np.ndarray:
    return np.where(x > a, k * (x - a) ** m, np.where(x < -a, k * (-x - a) ** m, 0.0))


def f1(x):
    return np.sum(x ** 2)


def f2(x):
    ax = np.abs(x)
    return np.sum(ax) + np.prod(ax)


def f3(x):
    return np.sum(np.cumsum(x) ** 2)


def f4(x):
    return np.max(np.abs(x))


def f5(x):
    return np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2)


def f6(x):
    return np.sum(np.floor(x + 0.5) ** 2)


def f7(x):
    # noise seeded from the point keeps repeated evaluations identical
    rng = np.random.default_rng(zlib.crc32(x.tobytes()))
    i = np.arange(1, x.size + 1)
    return np.sum(i * x ** 4) + rng.random()


def f8(x):
    return np.sum(-x * np.sin(np.sqrt(np.abs(x))))


def f9(x):
    return np.sum(x ** 2 - 10.0 * np.cos(2.0 * np.pi * x) + 10.0)


def f10(x):
    d = x.size
    return (-20.0 * np.exp(-0.2 * np.sqrt(np.sum(x ** 2) / d))
            - np.exp(np.sum(np.cos(2.0 * np.pi * x)) / d) + 20.0 + np.e)


def f11(x):
    i = np.arange(1, x.size + 1)
    return np.sum(x ** 2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0


def f12(x):
    d = x.size
    y = 1.0 + (x + 1.0) / 4.0
    body = (10.0 * np.sin(np.pi * y[0]) ** 2
            + np.sum((y[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * y[1:]) ** 2))
            + (y[-1] - 1.0) ** 2)
    return np.pi / d * body + np.sum(_u(x, 10.0, 100.0, 4.0))


def f13(x):
    body = (np.sin(3.0 * np.pi * x[0]) ** 2
            + np.sum((x[:-1] - 1.0) ** 2 * (1.0 + np.sin(3.0 * np.pi * x[1:]) ** 2))
            + (x[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * x[-1]) ** 2))
    return 0.1 * body + np.sum(_u(x, 5.0, 100.0, 4.0))


_FOXHOLES = np.array([
    [-32, -16, 0, 16, 32] * 5,
    [-32] * 5 + [-16] * 5 + [0] * 5 + [16] * 5 + [32] * 5,
], dtype=float)


def f14(x):
    j = np.arange(1, 26)
    inner = j + np.sum((x[:, None] - _FOXHOLES) ** 6, axis=0)
    return 1.0 / (1.0 / 500.0 + np.sum(1.0 / inner))


_KOWALIK_A = np.array([0.1957, 0.1947, 0.1735, 0.1600, 0.0844, 0.0627,
                       0.0456, 0.0342, 0.0323, 0.0235, 0.0246])
_KOWALIK_B = 1.0 / np.array([0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0])


def f15(x):
    b = _KOWALIK_B
    model = x[0] * (b ** 2 + b * x[1]) / (b ** 2 + b * x[2] + x[3])
    return np.sum((_KOWALIK_A - model) ** 2)


def f16(x):
    x1, x2 = x
    return 4 * x1 ** 2 - 2.1 * x1 ** 4 + x1 ** 6 / 3 + x1 * x2 - 4 * x2 ** 2 + 4 * x2 ** 4


def f17(x):
    x1, x2 = x
    return ((x2 - 5.1 / (4 * np.pi ** 2) * x1 ** 2 + 5 / np.pi * x1 - 6) ** 2
            + 10 * (1 - 1 / (8 * np.pi)) * np.cos(x1) + 10)


def f18(x):
    x1, x2 = x
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1 ** 2 - 14 * x2 + 6 * x1 * x2 + 3 * x2 ** 2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1 ** 2 + 48 * x2 - 36 * x1 * x2 + 27 * x2 ** 2)
    return a * b


_HARTMAN_C = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMAN3_A = np.array([[3, 10, 30], [0.1, 10, 35], [3, 10, 30], [0.1, 10, 35]], dtype=float)
_HARTMAN3_P = np.array([[0.3689, 0.1170, 0.2673],
                        [0.4699, 0.4387, 0.7470],
                        [0.1091, 0.8732, 0.5547],
                        [0.03815, 0.5743, 0.8828]])
_HARTMAN6_A = np.array([[10, 3, 17, 3.5, 1.7, 8],
                        [0.05, 10, 17, 0.1, 8, 14],
                        [3, 3.5, 1.7, 10, 17, 8],
                        [17, 8, 0.05, 10, 0.1, 14]], dtype=float)
_HARTMAN6_P = np.array([[0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
                        [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
                        [0.2348, 0.1415, 0.3522, 0.2883, 0.3047, 0.6650],
                        [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381]])


def _hartman(x, a, p):
    return -np.sum(_HARTMAN_C * np.exp(-np.sum(a * (x - p) ** 2, axis=1)))


def f19(x):
    return _hartman(x, _HARTMAN3_A, _HARTMAN3_P)


def f20(x):
    return _hartman(x, _HARTMAN6_A, _HARTMAN6_P)


_SHEKEL_A = np.array([[4, 4, 4, 4], [1, 1, 1, 1], [8, 8, 8, 8], [6, 6, 6, 6], [3, 7, 3, 7],
                      [2, 9, 2, 9], [5, 5, 3, 3], [8, 1, 8, 1], [6, 2, 6, 2], [7, 3.6, 7, 3.6]],
                     dtype=float)
_SHEKEL_C = np.array([0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5])


def _shekel(x, m):
    diff = x - _SHEKEL_A[:m]
    return -np.sum(1.0 / (np.sum(diff ** 2, axis=1) + _SHEKEL_C[:m]))


def f21(x):
    return _shekel(x, 5)


def f22(x):
    return _shekel(x, 7)


def f23(x):
    return _shekel(x, 10)


_SUITE: Dict[int, Tuple] = {
    1: ("sphere", f1, -100, 100, 0.0, None),
    2: ("schwefel_2_22", f2, -10, 10, 0.0, None),
    3: ("schwefel_1_2", f3, -100, 100, 0.0, None),
    4: ("schwefel_2_21", f4, -100, 100, 0.0, None),
    5: ("rosenbrock", f5, -30, 30, 0.0, None),
    6: ("step", f6, -100, 100, 0.0, None),
    7: ("quartic_noise", f7, -1.28, 1.28, 0.0, None),
    8: ("schwefel_2_26", f8, -500, 500, None, None),
    9: ("rastrigin", f9, -5.12, 5.12, 0.0, None),
    10: ("ackley", f10, -32, 32, 0.0, None),
    11: ("griewank", f11, -600, 600, 0.0, None),
    12: ("penalized_1", f12, -50, 50, 0.0, None),
    13: ("penalized_2", f13, -50, 50, 0.0, None),
    14: ("shekel_foxholes", f14, -65.536, 65.536, 0.998004, 2),
    15: ("kowalik", f15, -5, 5, 0.0003075, 4),
    16: ("six_hump_camel", f16, -5, 5, -1.0316285, 2),
    17: ("branin", f17, -5, 15, 0.397887, 2),
    18: ("goldstein_price", f18, -2, 2, 3.0, 2),
    19: ("hartman_3", f19, 0, 1, -3.86278, 3),
    20: ("hartman_6", f20, 0, 1, -3.32237, 6),
    21: ("shekel_5", f21, 0, 10, -10.1532, 4),
    22: ("shekel_7", f22, 0, 10, -10.4028, 4),
    23: ("shekel_10", f23, 0, 10, -10.5363, 4),
}

SUITE_IDS = tuple(sorted(_SUITE))


def benchmark(fid: int, d: int = 30) -> Benchmark:
    """
    Look up suite function ``fid``.

    Args:
        fid: Function id 1..23
        d: Requested dimension (ignored by fixed-dimension functions 14-23)

    Returns:
        Benchmark; ``optimum`` of F8 scales with the dimension

    Raises:
        BenchmarkError: unknown id
    """
    if fid not in _SUITE:
        raise BenchmarkError(f"unsupported benchmark id {fid}; choose 1..23")
    name, fn, lo, hi, optimum, fixed = _SUITE[fid]
    if fid == 8:
        optimum = -418.9829 * d
    return Benchmark(fid=fid, name=name, fn=fn, lower=float(lo), upper=float(hi),
                     optimum=float(optimum), fixed_dim=fixed)
