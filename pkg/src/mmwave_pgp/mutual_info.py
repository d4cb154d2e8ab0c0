"""Finite-alphabet MIMO mutual information by Gauss-Hermite quadrature.

For ``y = H G x + n`` with ``n ~ CN(0, sigma^2 I)`` and ``x`` uniform over
``M^Ns`` QAM vectors::

    I(x; y) = Ns log2 M - Nr / ln 2 - mean_k f_k
    f_k     = E_n log2 sum_m exp(-|n - H G (x_k - x_m)|^2 / sigma^2)

Each ``f_k`` is a ``2 Nr``-dimensional Gaussian integral evaluated on a
tensor Gauss-Hermite grid. :func:`mi_mc` evaluates the same expectation by
sampling and serves as an independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "Constellation",
    "qam",
    "GhRule",
    "gh_rule",
    "hermite",
    "MIEstimate",
    "CapacityError",
    "mi_gh",
    "mi_mc",
    "idoe",
    "gaussian_mi",
    "MAX_INPUT_VECTORS",
    "MAX_GRID_NODES",
]

MAX_INPUT_VECTORS = 4096
MAX_GRID_NODES = 10**7
_CHUNK = 2_000_000


class CapacityError(ValueError):
    """Raised when an enumeration would exceed the configured guards."""


@dataclass(frozen=True)
class Constellation:
    points: np.ndarray

    @property
    def M(self) -> int:
        return int(self.points.size)

    @property
    def bits(self) -> float:
        return math.log2(self.M)

    def rotation_order(self) -> int:
        """Largest ``r`` in {4, 2, 1} such that rotating by ``2 pi / r`` maps
        the constellation onto itself."""
        pts = self.points
        for r, rot in ((4, 1j), (2, -1.0)):
            d = np.abs((rot * pts)[:, None] - pts[None, :]).min(axis=1)
            if np.all(d < 1e-9):
                return r
        return 1


@lru_cache(maxsize=None)
def qam(M: int) -> Constellation:
    """Unit-energy BPSK (``M=2``) or square QAM (``M`` in 4, 16, 64)."""
    if M == 2:
        pts = np.array([-1.0 + 0j, 1.0 + 0j])
    elif M in (4, 16, 64):
        side = int(round(math.sqrt(M)))
        levels = np.arange(-(side - 1), side, 2, dtype=float)
        pts = (levels[:, None] + 1j * levels[None, :]).ravel()
        pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    else:
        raise ValueError(f"unsupported constellation size {M}; use 2, 4, 16 or 64")
    pts.setflags(write=False)
    return Constellation(points=pts)


def hermite(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), 2 * x
    if n == 0:
        return h_prev
    for k in range(1, n):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h


@dataclass(frozen=True)
class GhRule:
    L: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gh_rule(L: int) -> GhRule:
    """Gauss-Hermite nodes and weights for ``int exp(-x^2) f(x) dx``.

    Nodes are the roots of ``H_L`` (eigenvalues of the Jacobi matrix, polished
    by Newton steps). Weights use ``2^(L-1) L! sqrt(pi) / (L^2 H_{L-1}(x)^2)``.
    """
    if not 2 <= L <= 30:
        raise ValueError(f"GH order must lie in [2, 30], got {L}")
    off = np.sqrt(np.arange(1, L) / 2.0)
    x = np.linalg.eigvalsh(np.diag(off, 1) + np.diag(off, -1))
    for _ in range(3):
        # H_L'(x) = 2 L H_{L-1}(x)
        x = x - hermite(L, x) / (2 * L * hermite(L - 1, x))
    x = 0.5 * (x - x[::-1])  # exact symmetry about zero
    w = (2.0 ** (L - 1) * math.factorial(L) * math.sqrt(math.pi)) / (
        L**2 * hermite(L - 1, x) ** 2
    )
    x.setflags(write=False)
    w.setflags(write=False)
    return GhRule(L=L, nodes=x, weights=w)


@dataclass(frozen=True)
class MIEstimate:
    bits: float
    method: str
    f_hat: np.ndarray
    sigma: float
    dims: tuple[int, int]
    stderr: float = 0.0


@lru_cache(maxsize=64)
def _input_table(points: bytes, n_s: int):
    pts = np.frombuffer(points, dtype=complex)
    c = Constellation(points=pts)
    K = c.M**n_s
    if K > MAX_INPUT_VECTORS:
        raise CapacityError(
            f"M^Ns = {c.M}^{n_s} = {K} input vectors exceeds the guard {MAX_INPUT_VECTORS}"
        )
    X = np.array(list(itertools.product(pts, repeat=n_s)), dtype=complex).reshape(K, n_s)
    reps, owner = _orbit_representatives(c, X)
    for a in (X, reps, owner):
        a.setflags(write=False)
    return X, reps, owner


def _input_vectors(c: Constellation, n_s: int) -> np.ndarray:
    return _input_table(np.ascontiguousarray(c.points, dtype=complex).tobytes(), n_s)[0]


def _orbit_representatives(c: Constellation, X: np.ndarray):
    """One input per joint-rotation orbit, and each input's representative.

    Rotating every symbol by the constellation's symmetry rotates the
    noiseless output; the circular noise and the rotation-invariant GH grid
    leave ``f_k`` unchanged, so one representative per orbit suffices.
    Returns ``(reps, owner)`` with ``owner[i]`` the position in ``reps`` of
    input ``i``'s representative.
    """
    K = X.shape[0]
    r = c.rotation_order()
    if r > 1:
        rot = {4: 1j, 2: -1.0}[r]
        ang = np.angle(X[:, 0]) % (2 * np.pi)
        reps = np.flatnonzero((ang >= -1e-9) & (ang < 2 * np.pi / r - 1e-9))
        if reps.size * r == K:
            index = {tuple(np.round(x, 9)): i for i, x in enumerate(X)}
            owner = np.full(K, -1)
            for j, i in enumerate(reps):
                x = X[i]
                for _ in range(r):
                    i_rot = index.get(tuple(np.round(x, 9)))
                    if i_rot is not None:
                        owner[i_rot] = j
                    x = x * rot
            if np.all(owner >= 0):
                return reps, owner
    return np.arange(K), np.arange(K)


@lru_cache(maxsize=32)
def _complex_grid(L: int, n_r: int):
    Q = L ** (2 * n_r)
    if Q > MAX_GRID_NODES:
        raise CapacityError(
            f"L^(2Nr) = {L}^{2 * n_r} = {Q} quadrature nodes exceeds the guard {MAX_GRID_NODES}"
        )
    rule = gh_rule(L)
    v, w = rule.nodes, rule.weights
    cv = (v[:, None] + 1j * v[None, :]).ravel()
    cw = (w[:, None] * w[None, :]).ravel()
    nodes = np.array(list(itertools.product(cv, repeat=n_r)), dtype=complex).reshape(-1, n_r)
    weights = np.prod(
        np.array(list(itertools.product(cw, repeat=n_r)), dtype=float).reshape(-1, n_r),
        axis=1,
    )
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _f_hat(S, sigma, nodes, weights, ks):
    """``f_k`` for the rows ``ks`` of the noiseless output table ``S``.

    Writes ``-|v - d|^2 = -|v|^2 + (2 Re(v^H d) - |d|^2)`` and sums the
    exponentials of the bracket. The ``m = k`` term contributes ``exp(0)``
    and every bracket is at most ``|v|^2``, so the sum lies in
    ``[1, K exp(|v|^2)]`` for any SNR: no overflow, no log of zero.
    """
    n_r = S.shape[1]
    K, Q = S.shape[0], nodes.shape[0]
    v_sq = np.sum(np.abs(nodes) ** 2, axis=1)
    nodes_h = nodes.conj().T
    out = np.empty(len(ks))
    step = max(1, _CHUNK // (K * Q))
    S_scaled = S / sigma
    for start in range(0, len(ks), step):
        kk = ks[start : start + step]
        D = S_scaled[kk][:, None, :] - S_scaled[None, :, :]  # (k, m, r)
        d_sq = np.sum(D.real**2 + D.imag**2, axis=-1)
        e = (D.reshape(-1, n_r) @ nodes_h).real.reshape(len(kk), K, Q)
        e *= 2
        e -= d_sq[:, :, None]
        np.exp(e, out=e)
        z = (np.log(e.sum(axis=1)) - v_sq[None, :]) / math.log(2)
        out[start : start + len(kk)] = z @ weights
    return out / math.pi**n_r


def mi_gh(H, G, sigma: float, c: Constellation, L: int = 10) -> MIEstimate:
    """Gauss-Hermite approximation of ``I(x; y)`` for ``y = H G x + n``."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    if H.shape[1] != G.shape[0]:
        raise ValueError(f"H is {H.shape}, G is {G.shape}: inner dimensions differ")
    if sigma <= 0:
        raise ValueError("noise std must be positive")
    n_r, n_s = H.shape[0], G.shape[1]
    X, reps, owner = _input_table(np.ascontiguousarray(c.points, dtype=complex).tobytes(), n_s)
    nodes, weights = _complex_grid(L, n_r)
    S = X @ (H @ G).T
    f = _f_hat(S, sigma, nodes, weights, reps)[owner]
    cap = n_s * c.bits
    bits = cap - n_r / math.log(2) - f.mean()
    return MIEstimate(
        bits=float(np.clip(bits, 0.0, cap)),
        method=f"GH({L})",
        f_hat=f,
        sigma=float(sigma),
        dims=(n_s, n_r),
    )


def idoe(f_hat, sigma: float, dims: tuple[int, int], M: int) -> np.ndarray:
    """Input-dependent output entropy ``H_k(y)`` in bits from ``f_k``."""
    n_t, n_r = dims
    return (
        -np.asarray(f_hat)
        + 2 * n_r * math.log2(sigma)
        + n_r * math.log2(math.pi)
        + n_t * math.log2(M)
    )


def mi_mc(
    H,
    G,
    sigma: float,
    c: Constellation,
    n_samples: int,
    rng: np.random.Generator,
    chunk: int = 50_000,
) -> MIEstimate:
    """Monte-Carlo estimate of the same quantity as :func:`mi_gh`.

    Inputs are stratified (sample ``i`` uses input ``i mod K``) and the noise
    is drawn fresh. ``stderr`` is the sample standard error.
    """
    if n_samples < 10**4:
        raise ValueError("n_samples must be at least 1e4")
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    n_r, n_s = H.shape[0], G.shape[1]
    X = _input_vectors(c, n_s)
    K = X.shape[0]
    S = X @ (H @ G).T
    total = 0.0
    total_sq = 0.0
    f_sum = np.zeros(K)
    f_cnt = np.zeros(K)
    for start in range(0, n_samples, chunk):
        n = min(chunk, n_samples - start)
        k = (start + np.arange(n)) % K
        noise = sigma * np.sqrt(0.5) * (
            rng.standard_normal((n, n_r)) + 1j * rng.standard_normal((n, n_r))
        )
        vals = np.empty(n)
        for s0 in range(0, n, max(1, _CHUNK // (K * n_r))):
            sl = slice(s0, s0 + max(1, _CHUNK // (K * n_r)))
            diff = noise[sl, None, :] - (S[k[sl]][:, None, :] - S[None, :, :])
            e = -np.sum(diff.real**2 + diff.imag**2, axis=-1) / sigma**2
            vals[sl] = logsumexp(e, axis=-1) / math.log(2)
        total += vals.sum()
        total_sq += np.square(vals).sum()
        np.add.at(f_sum, k, vals)
        np.add.at(f_cnt, k, 1)
    mean = total / n_samples
    var = max(total_sq / n_samples - mean**2, 0.0)
    cap = n_s * c.bits
    bits = cap - n_r / math.log(2) - mean
    return MIEstimate(
        bits=float(bits),
        method=f"MC({n_samples})",
        f_hat=f_sum / np.maximum(f_cnt, 1),
        sigma=float(sigma),
        dims=(n_s, n_r),
        stderr=float(math.sqrt(var / n_samples)),
    )


def gaussian_mi(snr) -> np.ndarray:
    """Gaussian-input mutual information ``log2(1 + snr)`` of a scalar link."""
    return np.log2(1.0 + np.asarray(snr, dtype=float))
