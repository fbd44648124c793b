"""Dense eigenvalue kernels shared by the state-space and solver layers.

General (non-symmetric) eigenvalues are computed by Householder reduction to
upper Hessenberg form followed by the Francis double-shift QR iteration with
2x2 deflation.  Symmetric eigenvalues use Householder tridiagonalization and
the implicit-shift QL iteration.  All routines target the small dense
matrices that occur here (n <= a few dozen) and avoid any external linear
algebra beyond basic numpy array arithmetic.
"""

from __future__ import annotations

import numpy as np

__all__ = ["eigenvalues", "symmetric_eigenvalues", "hessenberg", "balance"]

_MAX_QR_SWEEPS = 40  # per eigenvalue, before giving up


class EigenvalueError(RuntimeError):
    """QR / QL iteration failed to converge."""


def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def balance(a: np.ndarray, radix: float = 2.0) -> np.ndarray:
    """Diagonal similarity scaling that roughly equalizes row/column norms.

    Improves eigenvalue accuracy for badly scaled matrices; eigenvalues are
    invariant under the similarity transform.
    """
    a = _check_square(a).copy()
    n = a.shape[0]
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (same eigenvalues)."""
    h = _check_square(a).copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        # H = I - 2 v v^T applied from both sides
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def eigenvalues(a: np.ndarray) -> np.ndarray:
    """All eigenvalues of a real square matrix, as a complex array.

    Balancing + Hessenberg reduction + Francis double-shift QR.  Accuracy is
    near machine precision for the well-scaled small matrices used here.
    """
    a = _check_square(a)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return a[0, 0].astype(complex).reshape(1)
    h = hessenberg(balance(a))
    return _hqr(h)


def _hqr(h: np.ndarray) -> np.ndarray:
    """Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr)."""
    n = h.shape[0]
    h = h.copy()
    anorm = np.sum(np.abs(h))
    eig = np.zeros(n, dtype=complex)
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            # look for a single small subdiagonal element
            l = nn
            while l >= 1:
                s = abs(h[l - 1, l - 1]) + abs(h[l, l])
                if s == 0.0:
                    s = anorm
                if abs(h[l, l - 1]) <= np.finfo(float).eps * s:
                    h[l, l - 1] = 0.0
                    break
                l -= 1
            x = h[nn, nn]
            if l == nn:                     # one real root found
                eig[nn] = x + t
                nn -= 1
                break
            y = h[nn - 1, nn - 1]
            w = h[nn, nn - 1] * h[nn - 1, nn]
            if l == nn - 1:                 # a 2x2 block: two roots
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:                # real pair
                    z = p + np.copysign(z, p)
                    eig[nn - 1] = x + z
                    eig[nn] = x + z
                    if z != 0.0:
                        eig[nn] = x - w / z
                else:                       # complex pair
                    eig[nn - 1] = complex(x + p, z)
                    eig[nn] = complex(x + p, -z)
                nn -= 2
                break
            if its == _MAX_QR_SWEEPS:
                raise EigenvalueError("QR iteration did not converge")
            if its in (10, 20, 30):        # exceptional shift
                t += x
                for i in range(nn + 1):
                    h[i, i] -= x
                s = abs(h[nn, nn - 1]) + abs(h[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            # form shift and look for two consecutive small subdiagonals
            m = nn - 2
            while m >= l:
                z = h[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / h[m + 1, m] + h[m, m + 1]
                q = h[m + 1, m + 1] - z - r - s
                r = h[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(h[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(h[m - 1, m - 1]) + abs(z) + abs(h[m + 1, m + 1]))
                if u <= np.finfo(float).eps * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                h[i, i - 2] = 0.0
                if i != m + 2:
                    h[i, i - 3] = 0.0
            # double QR step on rows l..nn and columns m..nn
            for k in range(m, nn):
                if k != m:
                    p = h[k, k - 1]
                    q = h[k + 1, k - 1]
                    r = h[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x == 0.0:
                        continue
                    p /= x
                    q /= x
                    r /= x
                s = np.copysign(np.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        h[k, k - 1] = -h[k, k - 1]
                else:
                    h[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                # row modification
                for j in range(k, nn + 1):
                    p = h[k, j] + q * h[k + 1, j]
                    if k != nn - 1:
                        p += r * h[k + 2, j]
                        h[k + 2, j] -= p * z
                    h[k + 1, j] -= p * y
                    h[k, j] -= p * x
                # column modification
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * h[i, k] + y * h[i, k + 1]
                    if k != nn - 1:
                        p += z * h[i, k + 2]
                        h[i, k + 2] -= p * r
                    h[i, k + 1] -= p * q
                    h[i, k] -= p
    return eig


def _tridiagonalize(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder tridiagonalization of a symmetric matrix.

    Returns (d, e): diagonal and subdiagonal of the tridiagonal form.
    """
    a = a.copy()
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        sub = a[k + 1:, k + 1:]
        w = sub @ v
        w -= v * (v @ w)
        sub -= 2.0 * (np.outer(v, w) + np.outer(w, v))
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha
        a[k + 2:, k] = 0.0
        a[k, k + 2:] = 0.0
    d = np.diag(a).copy()
    e = np.zeros(n)
    e[1:] = np.diag(a, -1)
    return d, e


def symmetric_eigenvalues(a: np.ndarray, sym_tol: float = 1e-8) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending (tridiagonal QL).

    Raises ValueError when the input is not symmetric to within sym_tol
    relative.
    """
    a = _check_square(a)
    scale = max(1.0, np.max(np.abs(a)))
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0)
    if n == 1:
        return np.array([a[0, 0]])
    d, e = _tridiagonalize(a)
    # implicit-shift QL (Numerical Recipes tqli, eigenvalues only)
    e = np.roll(e, -1)
    e[-1] = 0.0
    for l in range(n):
        its = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            if its == _MAX_QR_SWEEPS:
                raise EigenvalueError("QL iteration did not converge")
            its += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            else:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    return np.sort(d)
