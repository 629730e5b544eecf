"""
Bessel functions of the first kind J_m(x) for integer orders.

Values come from Miller's backward recurrence normalised with
J_0 + 2 * sum_j J_2j = 1. A direct power series covers tiny arguments and
serves as an independent check at small x.
"""
import math

import numpy as np

RESCALE_THRESHOLD = 1e250
RESCALE_FACTOR = 1e-250
SERIES_CUTOFF = 1e-8
START_ACCURACY = 160


def start_order(max_order, x):
    """Even starting order for the backward recurrence."""
    top = max(max_order, math.ceil(abs(x)), 1)
    start = top + int(math.sqrt(START_ACCURACY * top)) + 20
    return start + (start % 2)


def bessel_j_range(max_order, x):
    """
    J_0(x), ..., J_max_order(x) as a float array.

    Args:
        max_order: largest order wanted (>= 0)
        x: real argument, any sign

    Returns:
        numpy array of length max_order + 1
    """
    max_order = int(max_order)
    x = float(x)
    if x == 0.0:
        values = np.zeros(max_order + 1)
        values[0] = 1.0
        return values
    if abs(x) < SERIES_CUTOFF:
        return np.array([bessel_series(m, x) for m in range(max_order + 1)])

    sign_flip = x < 0.0
    ax = abs(x)
    top = start_order(max_order, ax)

    values = np.zeros(max_order + 1)
    j_next = 0.0
    j_curr = 1e-30
    norm = 0.0
    for m in range(top, 0, -1):
        j_prev = (2.0 * m / ax) * j_curr - j_next
        j_next, j_curr = j_curr, j_prev
        # j_curr now holds the unnormalised J_{m-1}
        if abs(j_curr) > RESCALE_THRESHOLD:
            j_curr *= RESCALE_FACTOR
            j_next *= RESCALE_FACTOR
            norm *= RESCALE_FACTOR
            values *= RESCALE_FACTOR
        order = m - 1
        if order <= max_order:
            values[order] = j_curr
        if order > 0 and order % 2 == 0:
            norm += 2.0 * j_curr
    norm += j_curr
    values /= norm

    if sign_flip:
        values[1::2] *= -1.0
    return values


def bessel_j(orders, x):
    """
    J_m(x) for an array of integer orders, negative orders included.

    Uses J_{-m}(x) = (-1)^m J_m(x).
    """
    orders = np.asarray(orders, dtype=np.int64)
    if orders.size == 0:
        return np.zeros(orders.shape)
    table = bessel_j_range(int(np.max(np.abs(orders))), x)
    values = table[np.abs(orders)]
    odd_negative = (orders < 0) & (orders % 2 != 0)
    return np.where(odd_negative, -values, values)


def bessel_series(m, x, terms=60):
    """
    Power series sum_s (-1)^s (x/2)^(2s+m) / (s! (s+m)!).

    Accurate for |x| small against m; used as a validator.
    """
    m = int(m)
    if m < 0:
        return (-1) ** (-m) * bessel_series(-m, x, terms)
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    half = abs(x) / 2.0
    total = 0.0
    log_half = math.log(half)
    for s in range(terms):
        log_term = (2 * s + m) * log_half - math.lgamma(s + 1) - math.lgamma(s + m + 1)
        term = math.exp(log_term)
        total += term if s % 2 == 0 else -term
        if term < 1e-17 * abs(total):
            break
    if x < 0 and m % 2 == 1:
        total = -total
    return total
