"""Outer precoders for a beamspace group: ZF, ZF-PGP and VAAC-PGP.

ZF-PGP inverts the group channel so UE ``m`` sees a scalar gain
``s_eff[m]``, then sends two QAM symbols per UE through a 2x2 unitary block
whose second output is a zero-gain virtual antenna::

    y_m = sqrt(snr0) * sqrt(2) * s_eff[m] * [cos t, sin t e^{j p}] @ [x_1, x_a] + n

VAAC-PGP uses the same block but transmits along the channel's right
singular vectors, so block ``m`` sees the raw singular value ``s[m]``.

The receive model of one block depends on a single number, the effective
SNR ``gamma = 2 s^2 snr0``; :class:`PgpBlockOptimizer` maximizes the block
mutual information for a given ``gamma`` and memoizes the result.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import minimize_scalar

from .beamspace import VirtualChannel
from .mutual_info import Constellation, gh_rule, mi_gh, qam

__all__ = [
    "SingularChannelError",
    "PrecoderFactors",
    "EffectiveChannel",
    "PgpBlock",
    "PgpBlockOptimizer",
    "get_optimizer",
    "block_mi",
    "scalar_mi",
    "check_rank",
    "zfp",
    "zfp_mi",
    "effective_singular_values",
    "optimize_pgp_block",
    "zf_pgp",
    "vaac_pgp",
    "power_split_check",
    "RANK_TOL",
]

log = logging.getLogger(__name__)

RANK_TOL = 1e-8
TABLE_RANGE_DB = (-20.0, 60.0)


class SingularChannelError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class PrecoderFactors:
    """Precoder kept as ``left @ diag(sv) @ right``.

    For ZFP ``right`` is the identity; for the PGP kinds it is the
    block-diagonal ``N_g x 2N_g`` matrix whose block ``m`` is the unit-norm
    row used by UE ``m``.
    """

    left: np.ndarray
    sv: np.ndarray
    right: np.ndarray
    kind: str
    power_budget: float
    gain: float | None = None

    @property
    def matrix(self) -> np.ndarray:
        return (self.left * self.sv) @ self.right

    def trace_power(self) -> float:
        P = self.matrix
        return float(np.real(np.vdot(P, P)))

    def check_power(self, atol: float = 1e-9) -> bool:
        return abs(self.trace_power() - self.power_budget) <= atol * max(1.0, self.power_budget)


@dataclass(frozen=True)
class EffectiveChannel:
    s_eff: np.ndarray
    w: np.ndarray
    source: VirtualChannel = field(repr=False)


@dataclass(frozen=True)
class PgpBlock:
    """Optimized 2x2 block at effective SNR ``gamma`` (global phase dropped)."""

    theta: float
    phi: float
    gamma: float
    mi: float

    @property
    def row(self) -> np.ndarray:
        return np.array(
            [math.cos(self.theta), math.sin(self.theta) * np.exp(1j * self.phi)]
        )

    @property
    def unitary(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        e = np.exp(1j * self.phi)
        return np.array([[c, s * e], [-s * np.conj(e), c]])


def block_mi(gamma: float, theta: float, phi: float, c: Constellation, L: int = 10) -> float:
    """Mutual information of one PGP block with the given unitary row.

    The virtual output carries noise only and is independent of the inputs,
    so it is dropped before the quadrature.
    """
    row = np.array([[math.cos(theta), math.sin(theta) * np.exp(1j * phi)]])
    return mi_gh([[math.sqrt(gamma)]], row, 1.0, c, L).bits


@lru_cache(maxsize=4096)
def _scalar_mi_cached(gamma: float, M: int, L: int) -> float:
    return mi_gh([[math.sqrt(gamma)]], [[1.0]], 1.0, qam(M), L).bits


def scalar_mi(gamma: float, c: Constellation, L: int = 10) -> float:
    """Single-symbol QAM mutual information of a scalar link at SNR ``gamma``."""
    return _scalar_mi_cached(float(gamma), c.M, L)


def _table_key(M: int, L: int) -> str:
    return f"M={M},L={L}"


def _load_shipped_table(M: int, L: int, step_db: float) -> dict[int, tuple[float, float]]:
    try:
        text = resources.files("mmwave_pgp").joinpath("data/pgp_blocks.json").read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return {}
    entry = json.loads(text).get(_table_key(M, L))
    if not entry or entry["step_db"] != step_db:
        return {}
    return {int(k): tuple(v) for k, v in entry["blocks"].items()}


class PgpBlockOptimizer:
    """Maximizes PGP block mutual information over the unitary row.

    The search runs a coarse grid over ``theta`` in [0, pi/4] and ``phi`` in
    [0, pi/2) with a cheap quadrature, then refines the best candidates by
    coordinate descent at the full order ``L``. The reduced domain covers
    every distinct block for QAM: a quarter-turn on the second symbol and the
    swap of the two symbols (with conjugation) are relabelings.

    :meth:`best` answers arbitrary SNRs from a table of blocks optimized on a
    ``step_db`` grid, evaluating the two neighbouring blocks (and the
    single-symbol block) at the requested SNR and keeping the best.
    """

    def __init__(
        self,
        c: Constellation,
        L: int = 10,
        n_theta: int = 32,
        n_phi: int = 8,
        search_L: int = 6,
        tol: float = 1e-4,
        step_db: float = 1.0,
        use_shipped_table: bool = True,
    ):
        self.c = c
        self.L = L
        self.n_theta = n_theta
        self.n_phi = n_phi
        self.search_L = min(search_L, L)
        self.tol = tol
        self.step_db = step_db
        self._exact: dict[float, PgpBlock] = {}
        self._table: dict[int, tuple[float, float]] = (
            _load_shipped_table(c.M, L, step_db) if use_shipped_table else {}
        )

    def mi(self, gamma: float, theta: float, phi: float, L: int | None = None) -> float:
        return block_mi(gamma, theta, phi, self.c, L or self.L)

    def _refine(self, gamma, theta, phi, value):
        d_theta = (math.pi / 4) / max(self.n_theta - 1, 1)
        d_phi = (math.pi / 2) / self.n_phi
        for _ in range(20):
            prev = value
            r = minimize_scalar(
                lambda t: -self.mi(gamma, t, phi),
                bounds=(max(0.0, theta - d_theta), min(math.pi / 2, theta + d_theta)),
                method="bounded",
                options={"xatol": 1e-5},
            )
            if -r.fun > value:
                theta, value = float(r.x), -float(r.fun)
            r = minimize_scalar(
                lambda p: -self.mi(gamma, theta, p),
                bounds=(phi - d_phi, phi + d_phi),
                method="bounded",
                options={"xatol": 1e-5},
            )
            if -r.fun > value:
                phi, value = float(r.x), -float(r.fun)
            if value - prev < self.tol:
                break
        return theta, phi, value

    def optimize(self, gamma: float, n_starts: int = 3) -> PgpBlock:
        """Full search at effective SNR ``gamma`` (linear)."""
        gamma = float(gamma)
        if gamma in self._exact:
            return self._exact[gamma]
        thetas = np.linspace(0.0, math.pi / 4, self.n_theta)
        phis = np.arange(self.n_phi) * (math.pi / 2) / self.n_phi
        coarse = np.array(
            [[self.mi(gamma, t, p, self.search_L) for p in phis] for t in thetas]
        )
        order = np.argsort(-coarse, axis=None, kind="stable")[:n_starts]
        best = PgpBlock(0.0, 0.0, gamma, self.mi(gamma, 0.0, 0.0))
        for flat in order:
            i, j = np.unravel_index(flat, coarse.shape)
            t0, p0 = float(thetas[i]), float(phis[j])
            t, p, v = self._refine(gamma, t0, p0, self.mi(gamma, t0, p0))
            if v > best.mi:
                best = PgpBlock(t, p, gamma, v)
        self._exact[gamma] = best
        return best

    def _grid_block(self, idx: int) -> tuple[float, float]:
        if idx not in self._table:
            b = self.optimize(10 ** (idx * self.step_db / 10))
            self._table[idx] = (b.theta, b.phi)
        return self._table[idx]

    def best(self, gamma: float) -> PgpBlock:
        """Best tabulated block evaluated at ``gamma``."""
        gamma = float(gamma)
        if gamma <= 0:
            return PgpBlock(0.0, 0.0, gamma, 0.0)
        lo_db, hi_db = TABLE_RANGE_DB
        db = min(max(10 * math.log10(gamma), lo_db), hi_db)
        lo = math.floor(db / self.step_db + 1e-12)
        hi = math.ceil(db / self.step_db - 1e-12)
        cands = {(0.0, 0.0)} | {self._grid_block(i) for i in {lo, hi}}
        best = None
        for t, p in sorted(cands):
            v = self.mi(gamma, t, p)
            if best is None or v > best.mi:
                best = PgpBlock(t, p, gamma, v)
        return best

    def table_entries(self) -> dict[int, tuple[float, float]]:
        return dict(self._table)

    def fill_table(self) -> None:
        lo, hi = (int(round(x / self.step_db)) for x in TABLE_RANGE_DB)
        for idx in range(lo, hi + 1):
            self._grid_block(idx)


_OPTIMIZERS: dict[tuple[int, int], PgpBlockOptimizer] = {}


def get_optimizer(c: Constellation, L: int = 10) -> PgpBlockOptimizer:
    """Process-wide shared optimizer for ``(M, L)``."""
    key = (c.M, L)
    if key not in _OPTIMIZERS:
        _OPTIMIZERS[key] = PgpBlockOptimizer(c, L)
    return _OPTIMIZERS[key]


def check_rank(vc: VirtualChannel) -> None:
    n_g, n_d = vc.H_v.shape
    if n_d < n_g:
        raise SingularChannelError(
            f"group of {n_g} UEs has only {n_d} beams; zero-forcing needs n_beams >= n_ue"
        )
    if vc.s.size == 0 or vc.s[-1] <= RANK_TOL * vc.s[0]:
        cond = np.inf if vc.s.size == 0 or vc.s[-1] == 0 else vc.s[0] / vc.s[-1]
        raise SingularChannelError(f"group channel is rank deficient (condition number {cond:.3g})")


def _pinv(vc: VirtualChannel) -> np.ndarray:
    # H^+ = V S^-1 U^H
    return (vc.Vh.conj().T / vc.s) @ vc.U.conj().T


def zfp(vc: VirtualChannel) -> PrecoderFactors:
    """Zero-forcing precoder ``w^2 H^H (H H^H)^-1`` with ``tr(P P^H) = N_g``."""
    check_rank(vc)
    n_g = vc.H_v.shape[0]
    H_pinv = _pinv(vc)
    w2 = math.sqrt(n_g / float(np.sum(1.0 / vc.s**2)))
    return PrecoderFactors(
        left=H_pinv,
        sv=np.full(n_g, w2),
        right=np.eye(n_g),
        kind="ZFP",
        power_budget=float(n_g),
        gain=w2,
    )


def zfp_mi(vc: VirtualChannel, snr0: float, c: Constellation, L: int = 10):
    """Precoder and per-UE mutual information of ZFP; every UE sees ``w^4 snr0``."""
    P = zfp(vc)
    gamma = P.gain**2 * snr0
    return P, [scalar_mi(gamma, c, L)] * vc.H_v.shape[0]


def effective_singular_values(vc: VirtualChannel) -> EffectiveChannel:
    """Per-UE gain after channel inversion with unit-norm ZF columns.

    ``s_eff[m] = (sum_m' |U[m, m']|^2 / s[m']^2)^(-1/2)`` where ``U`` holds
    the UE-indexed singular vectors; equivalently ``1 / ||H^+[:, m]||``.
    """
    check_rank(vc)
    inv_sq = (np.abs(vc.U) ** 2) @ (1.0 / vc.s**2)
    w = np.sqrt(inv_sq)
    return EffectiveChannel(s_eff=1.0 / w, w=w, source=vc)


def optimize_pgp_block(
    s_eff_m: float,
    snr0: float,
    c: Constellation,
    L: int = 10,
    optimizer: PgpBlockOptimizer | None = None,
):
    """Best 2x2 block for a UE with effective singular value ``s_eff_m``.

    Returns the unitary ``V^H`` and the achieved mutual information.
    """
    if s_eff_m <= 0:
        raise ValueError("effective singular value must be positive")
    opt = optimizer or get_optimizer(c, L)
    block = opt.optimize(2 * s_eff_m**2 * snr0)
    return block.unitary, block.mi


def _blocks_to_right(blocks) -> np.ndarray:
    return block_diag(*[b.row[None, :] for b in blocks])


def zf_pgp(
    vc: VirtualChannel,
    snr0: float,
    c: Constellation,
    L: int = 10,
    optimizer: PgpBlockOptimizer | None = None,
    exact: bool = False,
):
    """ZF-PGP precoder ``H^+ diag(s_eff) sqrt(2) V_P^H`` and per-UE MI.

    ``exact=True`` runs the full block search per UE; the default answers
    from the optimizer's SNR table.
    """
    eff = effective_singular_values(vc)
    opt = optimizer or get_optimizer(c, L)
    pick = opt.optimize if exact else opt.best
    blocks = [pick(2 * s**2 * snr0) for s in eff.s_eff]
    n_g = vc.H_v.shape[0]
    P = PrecoderFactors(
        left=_pinv(vc) * eff.s_eff,
        sv=np.full(n_g, math.sqrt(2)),
        right=_blocks_to_right(blocks),
        kind="ZF_PGP",
        power_budget=2.0 * n_g,
    )
    return P, [b.mi for b in blocks]


def vaac_pgp(
    vc: VirtualChannel,
    snr0: float,
    c: Constellation,
    L: int = 10,
    optimizer: PgpBlockOptimizer | None = None,
    rotate: bool = False,
    exact: bool = False,
):
    """VAAC-PGP precoder ``V_H sqrt(2) V_P^H`` and per-UE MI.

    Block ``m`` faces the raw singular value ``s[m]`` once the UE projects the
    group's received vector on the ``m``-th left singular vector. With
    ``rotate=True`` the singular-value assignment cycles over ``N_g`` symbol
    slots, so every UE gets the mean of the per-block values.
    """
    n_g, n_d = vc.H_v.shape
    if n_d < n_g:
        raise SingularChannelError(
            f"VAAC-PGP needs at least as many beams as UEs, got {n_g}x{n_d}"
        )
    opt = optimizer or get_optimizer(c, L)
    pick = opt.optimize if exact else opt.best
    blocks = [pick(2 * s**2 * snr0) for s in vc.s]
    P = PrecoderFactors(
        left=vc.Vh.conj().T,
        sv=np.full(n_g, math.sqrt(2)),
        right=_blocks_to_right(blocks),
        kind="VAAC_PGP",
        power_budget=2.0 * n_g,
    )
    mi = [b.mi for b in blocks]
    if rotate:
        mi = [float(np.mean(mi))] * n_g
    return P, mi


def power_split_check(
    s_eff_m: float,
    snr0: float,
    c: Constellation,
    L: int = 10,
    optimizer: PgpBlockOptimizer | None = None,
    atol: float = 1e-6,
    n_sweep: int = 19,
):
    """Re-optimize a PGP block with a free amplitude split over both outputs.

    The amplitudes are ``sqrt(2) (cos a, sin a)`` so that their squares sum
    to 2; the virtual output has zero channel gain. Returns the optimal
    amplitudes and whether they equal ``(sqrt(2), 0)`` within ``atol``.
    """
    opt = optimizer or get_optimizer(c, L)

    def mi_at(alpha):
        gain = math.sqrt(2) * math.cos(alpha) * s_eff_m
        # the second amplitude multiplies a zero singular value
        return opt.best(gain**2 * snr0).mi

    alphas = np.linspace(0.0, math.pi / 2, n_sweep)
    vals = np.array([mi_at(a) for a in alphas])
    i = int(np.argmax(vals))
    lo = alphas[max(i - 1, 0)]
    hi = alphas[min(i + 1, n_sweep - 1)]
    r = minimize_scalar(lambda a: -mi_at(a), bounds=(lo, hi), method="bounded",
                        options={"xatol": atol / 10})
    alpha = float(r.x) if -r.fun >= vals[i] else float(alphas[i])
    amps = (math.sqrt(2) * math.cos(alpha), math.sqrt(2) * math.sin(alpha))
    ok = abs(amps[0] - math.sqrt(2)) <= atol and amps[1] <= atol
    return amps, ok
