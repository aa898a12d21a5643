"""Hermitian eigendecomposition by cyclic Jacobi rotations.

Matrices here are small (K <= 64), so the O(K^3)-per-sweep cost of the
cyclic Jacobi method is negligible, and it delivers high relative accuracy
for the tiny eigenvalues that show up in the bath weight matrix.
"""

import numpy as np


class EigensolverError(Exception):
    pass


def jacobi_eigh(a, tol=1e-14, max_sweeps=60):
    """Eigenvalues and eigenvectors of a Hermitian matrix.

    Returns (w, v) with w real ascending and v unitary, a @ v = v @ diag(w).
    The eigenvector phase is fixed so that the largest-magnitude entry of
    each column is real and positive.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.abs(a - a.conj().T).max() > 1e-12 * max(1.0, np.abs(a).max()):
        raise ValueError("matrix must be Hermitian")

    h = a.astype(complex).copy()
    v = np.eye(n, dtype=complex)
    scale = max(np.abs(h).max(), 1.0)

    for _ in range(max_sweeps):
        off = _offdiag_norm(h)
        if off <= tol * scale:
            break
        thresh = max(off / (n * n), tol * scale)
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(h[p, q]) <= thresh:
                    continue
                _rotate(h, v, p, q)
    else:
        raise EigensolverError(
            f"Jacobi sweeps did not converge after {max_sweeps} sweeps "
            f"(off-diagonal norm {_offdiag_norm(h):.3e})"
        )

    w = np.real(np.diag(h))
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    return w, fix_phase(v)


def fix_phase(v):
    """Rotate each column so its largest-magnitude entry is real positive."""
    v = np.array(v, dtype=complex)
    for k in range(v.shape[1]):
        i = np.argmax(np.abs(v[:, k]))
        z = v[i, k]
        if abs(z) > 0:
            v[:, k] *= np.conj(z) / abs(z)
    return v


def _offdiag_norm(h):
    off = h - np.diag(np.diag(h))
    return np.abs(off).max() if off.size else 0.0


def _rotate(h, v, p, q):
    # Zero h[p,q] with a complex Givens rotation acting on the (p,q) plane.
    apq = h[p, q]
    app = h[p, p].real
    aqq = h[q, q].real
    theta = 0.5 * np.arctan2(2.0 * abs(apq), aqq - app)
    c = np.cos(theta)
    s = np.sin(theta) * (apq / abs(apq))

    hp = h[p, :].copy()
    hq = h[q, :].copy()
    h[p, :] = c * hp - s * hq
    h[q, :] = np.conj(s) * hp + c * hq
    hp = h[:, p].copy()
    hq = h[:, q].copy()
    h[:, p] = c * hp - np.conj(s) * hq
    h[:, q] = s * hp + c * hq
    h[p, q] = 0.0
    h[q, p] = 0.0

    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - np.conj(s) * vq
    v[:, q] = s * vp + c * vq
