"""SVD-based feature reduction and feature ranking.

The decomposition is a one-sided (Hestenes) Jacobi SVD.  Column pairs are
rotated in round-robin order so every round treats ``m // 2`` disjoint pairs
at once with array operations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

STD_FLOOR = 1e-9
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Standardization:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.means):
            raise ValueError(f"expected {len(self.means)} columns, got {X.shape[-1]}")
        return (X - self.means) / self.stds


def fit_standardization(X: np.ndarray, floor: float = STD_FLOOR) -> Standardization:
    X = _check_finite(X)
    return Standardization(X.mean(axis=0), np.maximum(X.std(axis=0), floor))


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank_bound(self) -> int:
        return len(self.S)

    def reconstruct(self, k: int | None = None) -> np.ndarray:
        k = self.rank_bound if k is None else k
        return (self.U[:, :k] * self.S[:k]) @ self.V[:, :k].T


def _check_finite(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    return A


@lru_cache(maxsize=None)
def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint pair schedules covering every column pair once per sweep."""
    players = list(range(m)) + ([-1] if m % 2 else [])
    n = len(players)
    rounds = []
    for _ in range(n - 1):
        ps, qs = [], []
        for i in range(n // 2):
            a, b = players[i], players[n - 1 - i]
            if a >= 0 and b >= 0:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(A: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalize the columns of ``A``; returns (A V, V)."""
    W = A.copy()
    m = W.shape[1]
    V = np.eye(m)
    if m == 1:
        return W, V
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            if len(p) == 0:
                continue
            Wp, Wq = W[:, p], W[:, q]
            alpha = np.einsum("ij,ij->j", Wp, Wp)
            beta = np.einsum("ij,ij->j", Wq, Wq)
            gamma = np.einsum("ij,ij->j", Wp, Wq)
            act = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not act.any():
                continue
            rotated = True
            # an infinite zeta (tiny gamma) yields t = 0, the correct limiting rotation
            with np.errstate(over="ignore"):
                zeta = np.where(act, (beta - alpha) / np.where(act, 2.0 * gamma, 1.0), 0.0)
                t = np.where(act, np.sign(zeta) / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
            t = np.where(act & (zeta == 0), 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            W[:, p], W[:, q] = c * Wp - s * Wq, s * Wp + c * Wq
            Vp, Vq = V[:, p], V[:, q]
            V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
        if not rotated:
            break
    return W, V


def _complete_basis(Q: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace the columns of ``Q`` not flagged ``good`` with an orthonormal completion."""
    Q = Q.copy()
    n = Q.shape[0]
    basis = [Q[:, j] for j in np.flatnonzero(good)]
    for j in np.flatnonzero(~good):
        best, best_norm = None, -1.0
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            for _ in range(2):
                for b in basis:
                    e -= (b @ e) * b
            nrm = np.linalg.norm(e)
            if nrm > best_norm:
                best, best_norm = e, nrm
            if nrm > 0.5:
                break
        vec = best / best_norm
        basis.append(vec)
        Q[:, j] = vec
    return Q


def svd(A, tol: float = 4 * _EPS, max_sweeps: int = 80) -> SvdFactors:
    """Thin SVD ``A = U diag(S) V^T`` with ``r = min(rows, cols)`` components.

    Singular values come out non-increasing.  Each column of ``V`` is signed so
    its largest-magnitude entry is non-negative.
    """
    A = _check_finite(A)
    n, m = A.shape
    if n < m:
        f = svd(A.T, tol, max_sweeps)
        return _sign_fix(f.V, f.S, f.U)
    # Tall input: rotate the m x m triangular factor instead of the full matrix.
    Q = None
    if n > m:
        Q, A = np.linalg.qr(A)
    W, V = _jacobi(A, tol, max_sweeps)
    S = np.linalg.norm(W, axis=0)
    order = np.argsort(-S, kind="stable")
    S, W, V = S[order], W[:, order], V[:, order]
    cutoff = max(n, m) * _EPS * (S[0] if S[0] > 0 else 1.0)
    good = S > cutoff
    U = np.zeros_like(W)
    U[:, good] = W[:, good] / S[good]
    if not good.all():
        U = _complete_basis(U, good)
    if Q is not None:
        U = Q @ U
    return _sign_fix(U, S, V)


def _sign_fix(U: np.ndarray, S: np.ndarray, V: np.ndarray) -> SvdFactors:
    U, V = U.copy(), V.copy()
    idx = np.argmax(np.abs(V), axis=0)
    flip = V[idx, np.arange(V.shape[1])] < 0
    V[:, flip] *= -1
    U[:, flip] *= -1
    return SvdFactors(U, S, V)


def project(A: np.ndarray, factors: SvdFactors, k: int) -> np.ndarray:
    """Coordinates of the rows of ``A`` on the top-``k`` right singular vectors."""
    if not 1 <= k <= factors.rank_bound:
        raise ValueError(f"k must lie in 1..{factors.rank_bound}, got {k}")
    A = np.asarray(A, dtype=float)
    if A.shape[-1] != factors.V.shape[0]:
        raise ValueError(f"expected {factors.V.shape[0]} columns, got {A.shape[-1]}")
    return A @ factors.V[:, :k]


def explained_energy(factors: SvdFactors, k: int) -> float:
    sq = factors.S ** 2
    total = sq.sum()
    return float(sq[:k].sum() / total) if total > 0 else 0.0


@dataclass(frozen=True)
class FeatureRanking:
    scores: np.ndarray
    order: np.ndarray
    names: tuple[str, ...] = ()

    @property
    def abs_scores(self) -> np.ndarray:
        return np.abs(self.scores)

    def rank_of(self, name_or_index) -> int:
        """1-based rank position."""
        idx = self.names.index(name_or_index) if isinstance(name_or_index, str) else int(name_or_index)
        return int(np.flatnonzero(self.order == idx)[0]) + 1

    def top(self, n: int) -> list[str]:
        return [self.names[i] if self.names else str(i) for i in self.order[:n]]


def rank_features(factors: SvdFactors, weights: Sequence[float], k: int,
                  names: Sequence[str] = ()) -> FeatureRanking:
    """Score original features by ``(V_k * V_k) @ W`` and sort descending.

    Ties keep the lower feature index first.
    """
    W = np.asarray(weights, dtype=float).ravel()
    if not 1 <= k <= factors.rank_bound:
        raise ValueError(f"k must lie in 1..{factors.rank_bound}, got {k}")
    if len(W) != k:
        raise ValueError(f"weight vector has length {len(W)}, expected k={k}")
    Vk = factors.V[:, :k]
    scores = (Vk * Vk) @ W
    if names and len(names) != len(scores):
        raise ValueError(f"{len(names)} names for {len(scores)} features")
    order = np.lexsort((np.arange(len(scores)), -scores))
    return FeatureRanking(scores, order, tuple(names))


def rank_correlation(a: FeatureRanking, b: FeatureRanking) -> float:
    """Spearman correlation between two rankings of the same features."""
    from scipy.stats import spearmanr

    ra = np.empty(len(a.order), dtype=int)
    rb = np.empty(len(b.order), dtype=int)
    ra[a.order] = np.arange(len(a.order))
    rb[b.order] = np.arange(len(b.order))
    return float(spearmanr(ra, rb).statistic)


def write_factors(factors: SvdFactors, path: str | Path) -> None:
    """Long-format CSV: ``matrix,row,col,value`` for S and V."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["matrix", "row", "col", "value"])
        for i, s in enumerate(factors.S):
            w.writerow(["S", i, 0, repr(float(s))])
        for i in range(factors.V.shape[0]):
            for j in range(factors.V.shape[1]):
                w.writerow(["V", i, j, repr(float(factors.V[i, j]))])


def write_ranking(ranking: FeatureRanking, path: str | Path, labels: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["rank", "feature", "label", "score", "abs_score"])
        for pos, idx in enumerate(ranking.order, start=1):
            name = ranking.names[idx] if ranking.names else str(idx)
            label = labels[idx] if labels else name
            w.writerow([pos, name, label, repr(float(ranking.scores[idx])), repr(float(abs(ranking.scores[idx])))])
