import numpy as np
import pytest


@pytest.fixture(scope="session")
def cylinder_points_22():
    """Level-22 cylinder left endpoints of the Cantor set (float64)."""
    k = 22
    idx = np.arange(2**k, dtype=np.uint64)
    x = np.zeros(2**k)
    for j in range(k):
        bit = (idx >> np.uint64(k - 1 - j)) & np.uint64(1)
        x += bit.astype(float) * 2.0 * 3.0 ** -(j + 1)
    return x


def mpmath_cosine_product(numerator, k_top, two_pi=False, dps=60):
    """Independent high-precision product oracle."""
    import mpmath as mp

    with mp.workdps(dps):
        prod = mp.mpf(1)
        arg = 2 * mp.pi if two_pi else mp.pi
        for k in range(1, k_top + 1):
            prod *= abs(mp.cos(arg * numerator / mp.mpf(3) ** k))
        return float(prod)
