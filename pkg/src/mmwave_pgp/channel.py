"""Downlink mmWave channel generation for an annular cell served by a UPA.

Each UE sees a single-path channel: a Kronecker UPA steering vector scaled by
a Nakagami fading coefficient and a breakpoint path-loss factor. The blocked
state selects both the path-loss exponent and the Nakagami shape.

Conventions
-----------
* The elevation ``theta`` is measured from the +z axis, the azimuth ``phi``
  from the +x axis. The array base sits at height ``h`` above the UE plane.
* ``R`` is the 3-D distance between the array base and the UE.
* All SNR values are linear. Conversions to dB live in :func:`db2lin` and
  :func:`lin2db` and are only used at I/O boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CellGeometry",
    "PropagationParams",
    "UEState",
    "CellChannel",
    "db2lin",
    "lin2db",
    "steering_vector",
    "sample_fading",
    "path_snr",
    "sample_cell",
]


def db2lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class CellGeometry:
    """Annular cell and UPA layout.

    Parameters
    ----------
    r_i, r_o : float
        Inner and outer horizontal radii of the annulus, in meters.
    h : float
        Height of the array base above the UE plane, in meters.
    n_ux, n_uz : int
        Number of array elements along x and z.
    spacing : float
        Element spacing in wavelengths (``d / lambda``).
    """

    r_i: float = 1.0
    r_o: float = 5.0
    h: float = 3.0
    n_ux: int = 10
    n_uz: int = 10
    spacing: float = 0.5

    def __post_init__(self):
        if not (0 < self.r_i < self.r_o):
            raise ValueError(f"need 0 < r_i < r_o, got r_i={self.r_i}, r_o={self.r_o}")
        if self.h <= 0:
            raise ValueError(f"array height must be positive, got {self.h}")
        if self.n_ux < 1 or self.n_uz < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.spacing <= 0:
            raise ValueError(f"element spacing must be positive, got {self.spacing}")

    @property
    def n_t(self) -> int:
        return self.n_ux * self.n_uz

    @property
    def area(self) -> float:
        return float(np.pi * (self.r_o**2 - self.r_i**2))


@dataclass(frozen=True)
class PropagationParams:
    """Breakpoint path loss, Nakagami shapes and blockage probability.

    ``snr0`` is the linear SNR at ``r_break``.
    """

    snr0: float = 100.0
    r_break: float = 1.0
    k_los: float = 2.0
    k_nlos: float = 4.0
    m_los: float = 4.0
    m_nlos: float = 2.0
    p_block: float = 0.2

    def __post_init__(self):
        if self.snr0 <= 0:
            raise ValueError("snr0 must be positive")
        if self.r_break <= 0:
            raise ValueError("r_break must be positive")
        if not self.k_nlos > self.k_los:
            raise ValueError("expected k_nlos > k_los")
        if not self.m_nlos < self.m_los:
            raise ValueError("expected m_nlos < m_los")
        if min(self.m_los, self.m_nlos) < 0.5:
            raise ValueError("Nakagami shapes must be >= 0.5")
        if not 0.0 <= self.p_block <= 1.0:
            raise ValueError(f"p_block must lie in [0, 1], got {self.p_block}")


@dataclass(frozen=True)
class UEState:
    index: int
    distance: float
    azimuth: float
    elevation: float
    horizontal_distance: float
    blocked: bool
    fading: complex
    snr: float

    @property
    def amplitude(self) -> float:
        return abs(self.fading)

    @property
    def phase(self) -> float:
        return float(np.angle(self.fading) % (2 * np.pi))


@dataclass(frozen=True)
class CellChannel:
    """Unit-SNR downlink channel of every UE in the cell.

    Row ``n`` of ``H_d`` is ``(g_n (R_break/R_n)^(k/2) a_n)^H``; the common
    ``sqrt(SNR_0)`` factor stays outside so that the receive model reads
    ``y = sqrt(SNR_0) H_d G x + n`` with unit noise variance.
    """

    H_d: np.ndarray
    ue_states: tuple[UEState, ...]
    geometry: CellGeometry = field(repr=False)
    propagation: PropagationParams = field(repr=False)

    @property
    def n_ue(self) -> int:
        return self.H_d.shape[0]

    @property
    def blocked(self) -> np.ndarray:
        return np.array([ue.blocked for ue in self.ue_states], dtype=bool)


def steering_vector(theta: float, phi: float, geom: CellGeometry) -> np.ndarray:
    """UPA response ``a_z(theta) kron a_x(theta, phi)`` of length ``N_T``.

    Element ``p * n_ux + q`` (``p`` along z, ``q`` along x) equals
    ``exp(-j 2 pi D (p cos(theta) + q sin(theta) cos(phi)))``.
    """
    D = geom.spacing
    a_x = np.exp(-2j * np.pi * D * np.arange(geom.n_ux) * np.sin(theta) * np.cos(phi))
    a_z = np.exp(-2j * np.pi * D * np.arange(geom.n_uz) * np.cos(theta))
    return np.kron(a_z, a_x)


def sample_fading(m: float, rng: np.random.Generator, size=None):
    """Draw complex fading with Nakagami(m, 1) amplitude and uniform phase."""
    if m < 0.5:
        raise ValueError(f"Nakagami shape must be >= 0.5, got {m}")
    power = rng.gamma(shape=m, scale=1.0 / m, size=size)
    phase = rng.uniform(0.0, 2 * np.pi, size=size)
    return np.sqrt(power) * np.exp(1j * phase)


def path_snr(R: float, blocked: bool, prop: PropagationParams, g: float = 1.0) -> float:
    """Instantaneous received SNR under the breakpoint model."""
    if R < prop.r_break:
        raise ValueError(
            f"breakpoint model only valid for R >= R_break ({prop.r_break}), got R={R}"
        )
    k = prop.k_nlos if blocked else prop.k_los
    return float(g**2 * prop.snr0 * (prop.r_break / R) ** k)


def sample_cell(
    n_ue: int,
    geom: CellGeometry,
    prop: PropagationParams,
    rng: np.random.Generator,
) -> CellChannel:
    """Drop ``n_ue`` UEs uniformly over the annulus and build their channels."""
    if n_ue < 1:
        raise ValueError("need at least one UE")
    # area-uniform radius: r^2 ~ U(r_i^2, r_o^2)
    rho = np.sqrt(rng.uniform(geom.r_i**2, geom.r_o**2, size=n_ue))
    psi = rng.uniform(0.0, 2 * np.pi, size=n_ue)
    blocked = rng.random(n_ue) < prop.p_block

    H = np.empty((n_ue, geom.n_t), dtype=complex)
    states = []
    for n in range(n_ue):
        R = float(np.hypot(rho[n], geom.h))
        theta = float(np.arccos(-geom.h / R))
        phi = float(psi[n])
        m = prop.m_nlos if blocked[n] else prop.m_los
        g_tilde = complex(sample_fading(m, rng))
        snr = path_snr(R, bool(blocked[n]), prop, abs(g_tilde))
        k = prop.k_nlos if blocked[n] else prop.k_los
        h_n = g_tilde * (prop.r_break / R) ** (k / 2) * steering_vector(theta, phi, geom)
        H[n] = h_n.conj()
        states.append(
            UEState(
                index=n,
                distance=R,
                azimuth=phi,
                elevation=theta,
                horizontal_distance=float(rho[n]),
                blocked=bool(blocked[n]),
                fading=g_tilde,
                snr=snr,
            )
        )
    H.setflags(write=False)
    return CellChannel(H_d=H, ue_states=tuple(states), geometry=geom, propagation=prop)
