"""Shared test helpers."""
from fractions import Fraction

import numpy as np

from polylam.linalg import CrystalSpectrum, rotation

S_REF = (0.2, 0.3, 0.5)


def random_spectra(count, seed=0, min_gap=0.01):
    """Strict unit-trace spectra with gaps of at least ``min_gap``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        s = np.sort(rng.dirichlet(np.ones(3)))
        if s[0] < min_gap or np.min(np.diff(s)) < min_gap:
            continue
        s[1] = 1.0 - s[0] - s[2]
        out.append(CrystalSpectrum(*map(float, s)))
    return out


def random_rotation(rng):
    axis = rng.normal(size=3)
    return rotation(axis, rng.uniform(0.0, 2.0 * np.pi))


def exact_normal_squares(t, s, lam):
    """Residue formula for the connecting normal, in rational arithmetic."""
    t = [Fraction(x) for x in t]
    s = [Fraction(x) for x in s]
    lam = Fraction(lam)
    out = []
    for k in range(3):
        num = (t[0] - lam * s[k]) * (t[1] - lam * s[k]) * (t[2] - lam * s[k])
        den = lam * lam * (1 - lam)
        for j in range(3):
            if j != k:
                den *= s[k] - s[j]
        out.append(num / den)
    return out
