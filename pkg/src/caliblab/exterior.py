"""Exterior algebra on R^4: wedge products, the top-degree pairing and the comass norm.

A 2-vector is stored as a length-6 array of coefficients in the lexicographic
basis ``e1^e2, e1^e3, e1^e4, e2^e3, e2^e4, e3^e4``.  All functions accept
stacked inputs (leading batch axes) unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

TOL_UNIT = 1e-10
TOL_PLUCKER = 1e-10
STEP_TOL = 1e-12

_S = 1.0 / math.sqrt(2.0)
# orthonormal bases of the self-dual / anti-self-dual subspaces
SELF_DUAL = np.array(
    [
        [_S, 0, 0, 0, 0, _S],
        [0, _S, 0, 0, -_S, 0],
        [0, 0, _S, _S, 0, 0],
    ]
)
ANTI_SELF_DUAL = np.array(
    [
        [_S, 0, 0, 0, 0, -_S],
        [0, _S, 0, 0, _S, 0],
        [0, 0, _S, -_S, 0, 0],
    ]
)


def basis2(i: int, j: int) -> np.ndarray:
    """Return ``e_i ^ e_j`` for 1-based indices ``i < j``."""
    out = np.zeros(6)
    out[PAIRS.index((i - 1, j - 1))] = 1.0
    return out


E12, E13, E14, E23, E24, E34 = (basis2(i + 1, j + 1) for i, j in PAIRS)


def as_vec4(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape[-1] != 4:
        raise ValueError(f"expected 4 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def as_two_vector(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape[-1] != 6:
        raise ValueError(f"expected 6 coefficients, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("2-vector has non-finite coefficients")
    return arr


def wedge(u, v) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.stack([u[..., i] * v[..., j] - u[..., j] * v[..., i] for i, j in PAIRS], axis=-1)


def hodge(a) -> np.ndarray:
    """Hodge star on 2-vectors, so that ``det4(a, b) == <hodge(a), b>``."""
    a = np.asarray(a, dtype=float)
    return np.stack(
        [a[..., 5], -a[..., 4], a[..., 3], a[..., 2], -a[..., 1], a[..., 0]], axis=-1
    )


def det4(a, b) -> np.ndarray | float:
    """Coefficient of ``e1^e2^e3^e4`` in ``a ^ b``."""
    out = np.sum(hodge(a) * np.asarray(b, dtype=float), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def norm2(a) -> float:
    """Euclidean norm in the orthonormal basis ``e_i ^ e_j``."""
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def plucker_residual(a) -> float:
    """``c12*c34 - c13*c24 + c14*c23``; zero exactly on simple 2-vectors."""
    return 0.5 * det4(a, a)


def to_matrix(a) -> np.ndarray:
    a = as_two_vector(a)
    m = np.zeros(a.shape[:-1] + (4, 4))
    for k, (i, j) in enumerate(PAIRS):
        m[..., i, j] = a[..., k]
        m[..., j, i] = -a[..., k]
    return m


def from_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., i, j] for i, j in PAIRS], axis=-1)


def self_dual_parts(a) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    return a @ SELF_DUAL.T, a @ ANTI_SELF_DUAL.T


def comass(a) -> float:
    """Supremum of ``det4(a, b)`` over unit simple 2-vectors ``b``.

    Writing ``b = b+ + b-`` with ``|b+| = |b-| = 1/sqrt(2)`` the pairing is
    ``<a+, b+> - <a-, b->`` and the two halves can be chosen independently.
    """
    plus, minus = self_dual_parts(as_two_vector(a))
    return float((np.linalg.norm(plus) + np.linalg.norm(minus)) / math.sqrt(2.0))


@dataclass(frozen=True)
class Plane:
    """Oriented 2-plane through the origin with an orthonormal frame ``(u, v)``."""

    u: np.ndarray
    v: np.ndarray

    @classmethod
    def spanned_by(cls, p, q) -> "Plane":
        p = as_vec4(p)
        q = as_vec4(q)
        u = p / np.linalg.norm(p)
        v = q - (q @ u) * u
        nv = np.linalg.norm(v)
        if nv < 1e-14 * max(1.0, np.linalg.norm(q)):
            raise ValueError("vectors do not span a plane")
        return cls(u, v / nv)

    @property
    def beta(self) -> np.ndarray:
        return wedge(self.u, self.v)

    def same_plane(self, other: "Plane", tol: float = 1e-10) -> bool:
        b1, b2 = self.beta, other.beta
        return bool(min(np.linalg.norm(b1 - b2), np.linalg.norm(b1 + b2)) < tol)

    def check(self, tol_unit: float = TOL_UNIT, tol_plucker: float = TOL_PLUCKER) -> None:
        b = self.beta
        if abs(norm2(b) - 1.0) > tol_unit:
            raise ValueError("plane 2-vector is not unit")
        if abs(plucker_residual(b)) > tol_plucker:
            raise ValueError("plane 2-vector is not simple")


def random_frames(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` orthonormal pairs, shape ``(count, 4, 2)``, Haar-distributed.

    Gaussian 4x2 frames are orthonormalized by QR with the sign of ``diag(R)``
    fixed; near-degenerate draws are replaced.
    """
    out = np.empty((count, 4, 2))
    filled = 0
    while filled < count:
        g = rng.standard_normal((count - filled, 4, 2))
        q, r = np.linalg.qr(g)
        d = np.diagonal(r, axis1=-2, axis2=-1)
        ok = np.all(np.abs(d) > 1e-12, axis=-1)
        q = q[ok] * np.sign(d[ok])[:, None, :]
        out[filled : filled + len(q)] = q
        filled += len(q)
    return out


def ascend_planes(
    s: np.ndarray,
    frames: np.ndarray,
    max_iter: int = 60,
    step_tol: float = STEP_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Locally maximize ``<s_k, u_k ^ v_k>`` over orthonormal pairs.

    Damped Newton iteration in the chart ``u + a.n, v + b.n`` where ``n`` spans
    the orthogonal complement of the current plane.  ``s`` has shape ``(B, 6)``
    and ``frames`` shape ``(B, 4, 2)``.  Returns the best value seen for each
    row and the corresponding frames.
    """
    s = np.asarray(s, dtype=float)
    u = frames[:, :, 0].copy()
    v = frames[:, :, 1].copy()
    scale = np.linalg.norm(s, axis=-1)
    best = np.einsum("bk,bk->b", s, wedge(u, v))
    best_frames = frames.copy()
    active = scale > 0
    for _ in range(max_iter):
        if not np.any(active):
            break
        q, _r = np.linalg.qr(np.stack([u, v], axis=-1), mode="complete")
        n1, n2 = q[:, :, 2], q[:, :, 3]
        f0 = np.einsum("bk,bk->b", s, wedge(u, v))
        g = np.stack(
            [
                np.einsum("bk,bk->b", s, wedge(n1, v)),
                np.einsum("bk,bk->b", s, wedge(n2, v)),
                np.einsum("bk,bk->b", s, wedge(u, n1)),
                np.einsum("bk,bk->b", s, wedge(u, n2)),
            ],
            axis=-1,
        )
        c = np.einsum("bk,bk->b", s, wedge(n1, n2))
        top = -f0 + np.abs(c)
        mu = np.where(top < -0.05 * scale, 0.0, top + 0.1 * scale)
        d = mu + f0
        # (mu I - H) has the same block pattern as H with -f0 replaced by mu + f0
        m = np.zeros((len(s), 4, 4))
        m[:, 0, 0] = m[:, 1, 1] = m[:, 2, 2] = m[:, 3, 3] = d
        m[:, 0, 3] = m[:, 3, 0] = -c
        m[:, 1, 2] = m[:, 2, 1] = c
        step = np.linalg.solve(m, g[..., None])[..., 0]
        length = np.linalg.norm(step, axis=-1)
        step *= np.minimum(1.0, 1.0 / np.maximum(length, 1e-300))[:, None]
        step[~active] = 0.0
        u = u + step[:, 0:1] * n1 + step[:, 1:2] * n2
        v = v + step[:, 2:3] * n1 + step[:, 3:4] * n2
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        v = v - np.einsum("bi,bi->b", v, u)[:, None] * u
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        val = np.einsum("bk,bk->b", s, wedge(u, v))
        better = val > best
        best = np.where(better, val, best)
        best_frames[better] = np.stack([u[better], v[better]], axis=-1)
        active &= length >= step_tol
    return best, best_frames


def comass_numeric(alpha, starts: int = 32, seed: int = 0) -> float:
    """Multistart local maximization of ``det4(alpha, u^v)`` over orthonormal pairs.

    Independent of the closed form in :func:`comass`; every evaluated pair is
    feasible, so the result never exceeds the true supremum.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    a = as_two_vector(alpha)
    if not np.any(a):
        return 0.0
    rng = np.random.default_rng(seed)
    frames = random_frames(rng, starts)
    s = np.broadcast_to(hodge(a), (starts, 6))
    best, _ = ascend_planes(s, frames)
    return float(best.max())


@dataclass(frozen=True)
class CanonicalForm:
    lambda1: float
    lambda2: float
    frame: np.ndarray  # rows x1..x4, orthonormal

    def reconstruct(self) -> np.ndarray:
        x = self.frame
        return self.lambda1 * wedge(x[0], x[1]) + self.lambda2 * wedge(x[2], x[3])


def canonical_form(alpha) -> CanonicalForm:
    """Write ``alpha = l1 x1^x2 + l2 x3^x4`` with ``|l1| >= |l2| >= 0``.

    Uses the real Schur form of the antisymmetric matrix of ``alpha``.  The
    frame is positively oriented, so ``l2`` carries the sign.
    """
    a = as_two_vector(alpha)
    if not np.any(a):
        return CanonicalForm(0.0, 0.0, np.eye(4))
    t, z = schur(to_matrix(a), output="real")
    scale = np.abs(t).max()
    blocks: list[tuple[float, np.ndarray, np.ndarray]] = []
    singles: list[int] = []
    i = 0
    while i < 4:
        if i < 3 and abs(t[i + 1, i]) > 1e-13 * scale:
            lam = 0.5 * (t[i, i + 1] - t[i + 1, i])
            blocks.append((lam, z[:, i], z[:, i + 1]))
            i += 2
        else:
            singles.append(i)
            i += 1
    if len(singles) == 2:
        p, q = singles
        blocks.append((t[p, q] if p < q else 0.0, z[:, p], z[:, q]))
    elif len(singles) == 4:
        blocks = [(0.0, z[:, 0], z[:, 1]), (0.0, z[:, 2], z[:, 3])]
    pairs = []
    for lam, x, y in blocks:
        if lam < 0:
            lam, x, y = -lam, y, x
        pairs.append((float(lam), x, y))
    pairs.sort(key=lambda p: -p[0])
    (l1, x1, x2), (l2, x3, x4) = pairs
    frame = np.array([x1, x2, x3, x4])
    if np.linalg.det(frame) < 0:
        frame[3] = -frame[3]
        l2 = -l2
    return CanonicalForm(l1, l2, frame)
