"""Low-rank barwise compression: PCA (truncated SVD) and NMF (HALS).

Both factor an n x b matrix of bar columns into W (n x d) and H (d x b);
H holds the per-bar compressed representations used downstream.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LowRankModel:
    kind: str
    W: np.ndarray
    H: np.ndarray
    mu: np.ndarray
    loss_trace: np.ndarray = field(default_factory=lambda: np.array([]))

    def reconstruct(self):
        return self.mu[:, None] + self.W @ self.H


def pca_compress(X, d_c):
    """PCA via SVD of the column-debiased matrix.

    W holds the top-d_c left singular vectors (orthonormal columns, sign
    fixed so each column's largest-magnitude entry is positive), and
    H = W.T @ (X - mu). The reconstruction mu + W @ H is the best rank-d_c
    Frobenius approximation of X.
    """
    X = np.asarray(X, dtype=np.float64)
    n, b = X.shape
    if not (1 <= d_c <= min(n, b)):
        raise ValueError(f"d_c={d_c} out of range for a {n}x{b} matrix")
    mu = X.mean(axis=1)
    centered = X - mu[:, None]
    U, _, _ = np.linalg.svd(centered, full_matrices=False)
    W = U[:, :d_c]
    signs = np.sign(W[np.argmax(np.abs(W), axis=0), np.arange(d_c)])
    signs[signs == 0] = 1.0
    W = W * signs
    H = W.T @ centered
    return LowRankModel(kind="pca", W=W, H=H, mu=mu)


def nmf_compress(X, d_c, max_iters=500, tol=1e-8, seed=42, init_W=None, init_H=None):
    """Nonnegative matrix factorization by HALS block-coordinate updates.

    Minimizes ||X - WH||_F^2 with W, H >= 0. Each column of W (and row of
    H) is updated by an exact nonnegative least-squares step, so the loss
    never increases. The loss is recorded once per outer iteration,
    starting with the initial factors; iteration stops at `max_iters` or
    when the relative loss decrease falls below `tol`.
    """
    X = np.asarray(X, dtype=np.float64)
    n, b = X.shape
    if np.any(X < 0):
        raise ValueError("NMF requires a nonnegative input matrix")
    if not (1 <= d_c <= min(n, b)):
        raise ValueError(f"d_c={d_c} out of range for a {n}x{b} matrix")
    rng = np.random.default_rng(seed)
    W = rng.random((n, d_c)) if init_W is None else np.array(init_W, dtype=np.float64)
    H = rng.random((d_c, b)) if init_H is None else np.array(init_H, dtype=np.float64)
    if np.any(W < 0) or np.any(H < 0):
        raise ValueError("initial factors must be nonnegative")

    norm_x_sq = float(np.sum(X * X))

    R0 = X - W @ H
    trace = [float(np.sum(R0 * R0))]
    for _ in range(max_iters):
        # Update columns of W against fixed H.
        HHt = H @ H.T
        XHt = X @ H.T
        for j in range(d_c):
            denom = HHt[j, j]
            if denom <= 0:
                continue
            W[:, j] = np.maximum(0.0, W[:, j] + (XHt[:, j] - W @ HHt[:, j]) / denom)
        # Update rows of H against fixed W.
        WtW = W.T @ W
        WtX = W.T @ X
        for j in range(d_c):
            denom = WtW[j, j]
            if denom <= 0:
                continue
            H[j, :] = np.maximum(0.0, H[j, :] + (WtX[j, :] - WtW[j, :] @ H) / denom)
        # ||X - WH||_F^2 via the Gram identity; WtX and WtW use the final W,
        # so only the cheap d x d / d x b products involve the updated H.
        cur = norm_x_sq - 2.0 * float(np.vdot(WtX, H)) + float(np.vdot(WtW, H @ H.T))
        trace.append(max(cur, 0.0))
        prev, cur = trace[-2], trace[-1]
        if prev - cur < tol * max(prev, 1e-300):
            break
        if cur <= 1e-16 * max(norm_x_sq, 1e-300):
            break
    return LowRankModel(kind="nmf", W=W, H=H, mu=np.zeros(n), loss_trace=np.array(trace))
