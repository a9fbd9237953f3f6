"""A fixed 4x4 representation of the five dimensional Dirac matrices.

The capital set (Gamma0, Gamma1, Gamma2, Gamma3, Gamma5) is Hermitian and
satisfies {Gamma^a, Gamma^b} = 2 delta^{ab}. The lowercase set obeys
{gamma^A, gamma^B} = 2 eta^{AB} with eta = diag(-1, 1, 1, 1, 1). The two
sets are linked by Gamma0 = i gamma0 and Gamma^j = -gamma0 gamma^j.

Chosen matrices (sigma_k are the Pauli matrices)::

    Gamma1 = [[0, s2], [s2, 0]]      Gamma2 = diag(I, -I)
    Gamma0 = [[0, s1], [s1, 0]]      Gamma3 = -[[0, s3], [s3, 0]]
    Gamma5 = [[0, iI], [-iI, 0]]     gamma1 = diag(s3, s3)
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
ETA = np.diag([-1.0, 1.0, 1.0, 1.0, 1.0])


def _block(a, b, c, d):
    return np.block([[a, b], [c, d]])


_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)


@dataclass(frozen=True, eq=False)
class GammaRep:
    gamma0: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    gamma5: np.ndarray
    Gamma0: np.ndarray
    Gamma1: np.ndarray
    Gamma2: np.ndarray
    Gamma3: np.ndarray
    Gamma5: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray

    @property
    def lower(self):
        """The lowercase set ordered as (gamma0, gamma1, gamma2, gamma3, gamma5)."""
        return (self.gamma0, self.gamma1, self.gamma2, self.gamma3, self.gamma5)

    @property
    def upper(self):
        """The capital set ordered as (Gamma0, Gamma1, Gamma2, Gamma3, Gamma5)."""
        return (self.Gamma0, self.Gamma1, self.Gamma2, self.Gamma3, self.Gamma5)


def _derive(Gamma0, Gamma1, Gamma2, Gamma3):
    gamma0 = -1j * Gamma0
    gamma1 = gamma0 @ Gamma1
    gamma2 = gamma0 @ Gamma2
    gamma3 = gamma0 @ Gamma3
    gamma5 = -1j * gamma0 @ gamma1 @ gamma2 @ gamma3
    Gamma5 = -gamma0 @ gamma5
    return gamma0, gamma1, gamma2, gamma3, gamma5, Gamma5


@lru_cache(maxsize=1)
def gamma_rep() -> GammaRep:
    """Build the representation.

    Gamma0, Gamma1, Gamma2 and gamma1 are fixed by the block matrices
    m4, m1, m2, m3. Gamma3 starts from [[0, s3], [s3, 0]]; its sign is
    flipped when needed so that the derived Gamma5 equals the candidate
    [[0, iI], [-iI, 0]] exactly.
    """
    m1 = _block(_Z2, SIGMA2, SIGMA2, _Z2)
    m2 = _block(_I2, _Z2, _Z2, -_I2)
    m3 = _block(SIGMA3, _Z2, _Z2, SIGMA3)
    m4 = _block(_Z2, SIGMA1, SIGMA1, _Z2)
    candidate5 = _block(_Z2, 1j * _I2, -1j * _I2, _Z2)

    Gamma3 = _block(_Z2, SIGMA3, SIGMA3, _Z2)
    g0, g1, g2, g3, g5, Gamma5 = _derive(m4, m1, m2, Gamma3)
    if not np.allclose(Gamma5, candidate5, atol=1e-14):
        Gamma3 = -Gamma3
        g0, g1, g2, g3, g5, Gamma5 = _derive(m4, m1, m2, Gamma3)
    eye = np.eye(4, dtype=complex)
    mats = dict(
        gamma0=g0, gamma1=g1, gamma2=g2, gamma3=g3, gamma5=g5,
        Gamma0=m4.copy(), Gamma1=m1.copy(), Gamma2=m2.copy(), Gamma3=Gamma3, Gamma5=Gamma5,
        p_plus=0.5 * (eye + g1), p_minus=0.5 * (eye - g1),
        m1=m1, m2=m2, m3=m3, m4=m4,
    )
    for value in mats.values():
        value.setflags(write=False)
    return GammaRep(**mats)


def anticommutator(x, y):
    return x @ y + y @ x


def clifford_defects(rep: GammaRep) -> dict:
    """Largest entrywise violation of each defining identity.

    The projector relation is checked as Gamma1 P+- = +-i P-+ Gamma0. The
    version with the same sign for both projectors cannot hold in any
    representation: adding the two cases would give Gamma1 = i Gamma0,
    which is impossible because Gamma1 is Hermitian and i Gamma0 is not.
    """
    eye = np.eye(4)
    lower = rep.lower
    upper = rep.upper
    out = {}
    out["lower_anticommutators"] = max(
        np.abs(anticommutator(lower[i], lower[j]) - 2 * ETA[i, j] * eye).max()
        for i in range(5) for j in range(5)
    )
    out["upper_anticommutators"] = max(
        np.abs(anticommutator(upper[i], upper[j]) - 2 * (i == j) * eye).max()
        for i in range(5) for j in range(5)
    )
    out["gamma5_product"] = np.abs(
        rep.gamma5 + 1j * rep.gamma0 @ rep.gamma1 @ rep.gamma2 @ rep.gamma3
    ).max()
    out["block_matrices"] = max(
        np.abs(rep.Gamma1 - rep.m1).max(), np.abs(rep.Gamma2 - rep.m2).max(),
        np.abs(rep.gamma1 - rep.m3).max(), np.abs(rep.Gamma0 - rep.m4).max(),
    )
    pp, pm = rep.p_plus, rep.p_minus
    out["projectors"] = max(
        np.abs(pp @ pp - pp).max(), np.abs(pm @ pm - pm).max(),
        np.abs(pp + pm - eye).max(), np.abs(pp @ pm).max(),
    )
    out["projector_intertwining"] = max(
        np.abs(rep.Gamma1 @ pp - 1j * pm @ rep.Gamma0).max(),
        np.abs(rep.Gamma1 @ pm + 1j * pp @ rep.Gamma0).max(),
        np.abs(rep.gamma1 @ pp - pp).max(),
        np.abs(rep.gamma1 @ pm + pm).max(),
        np.abs(rep.Gamma0 @ pp - pm @ rep.Gamma0).max(),
        np.abs(rep.Gamma0 @ pm - pp @ rep.Gamma0).max(),
    )
    out["bridge"] = max(
        np.abs(rep.Gamma0 - 1j * rep.gamma0).max(),
        max(np.abs(G + rep.gamma0 @ g).max() for G, g in zip(upper[1:], lower[1:])),
    )
    out["hermiticity"] = max(
        max(np.abs(G - G.conj().T).max() for G in upper),
        np.abs(rep.gamma0 + rep.gamma0.conj().T).max(),
        max(np.abs(g - g.conj().T).max() for g in lower[1:]),
    )
    out["trace"] = max(abs(np.trace(G)) for G in upper)
    return out
