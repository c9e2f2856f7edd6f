"""Small dense linear algebra: LU with partial pivoting and a Hessenberg/QR
eigenvalue solver.

Matrices here are tiny (4x4 and 5x5 for the ZIP model), so the routines are
written for clarity and determinism rather than BLAS throughput.
"""
import math

import numpy as np

from ..errors import DimensionMismatch, NoConvergence, SingularMatrix

PIVOT_RTOL = 1e-14


def _as_matrix(A):
    A = np.asarray(A)
    if A.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains NaN or Inf")
    return A


def inf_norm(A):
    """Maximum absolute row sum."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(A), axis=1)))


def lu_factor(A, pivot_rtol=PIVOT_RTOL):
    """Factor ``P A = L U`` with row partial pivoting.

    Returns the packed factors (unit lower triangle implicit) and the pivot
    permutation as an index array. Works for real and complex input.

    Raises
    ------
    SingularMatrix
        If a pivot magnitude falls below ``pivot_rtol * ||A||_inf`` (or is
        exactly zero).
    """
    A = _as_matrix(A)
    n, m = A.shape
    if n != m:
        raise DimensionMismatch(f"lu_factor needs a square matrix, got {A.shape}")
    dtype = np.result_type(A.dtype, np.float64)
    LU = np.array(A, dtype=dtype, copy=True)
    perm = np.arange(n)
    tiny = pivot_rtol * inf_norm(A)
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if abs(LU[p, k]) <= tiny or LU[p, k] == 0:
            raise SingularMatrix(
                f"pivot {abs(LU[p, k]):.3e} at column {k} below {tiny:.3e}")
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        LU[k + 1:, k] /= LU[k, k]
        LU[k + 1:, k + 1:] -= np.outer(LU[k + 1:, k], LU[k, k + 1:])
    return LU, perm


def lu_substitute(LU, perm, B):
    """Solve with factors from :func:`lu_factor`; ``B`` may be 1-D or 2-D."""
    B = np.asarray(B)
    n = LU.shape[0]
    if B.shape[0] != n:
        raise DimensionMismatch(f"rhs has {B.shape[0]} rows, matrix has {n}")
    dtype = np.result_type(LU.dtype, B.dtype, np.float64)
    X = np.array(B[perm], dtype=dtype, copy=True)
    for i in range(1, n):
        X[i] -= LU[i, :i] @ X[:i]
    for i in range(n - 1, -1, -1):
        X[i] = (X[i] - LU[i, i + 1:] @ X[i + 1:]) / LU[i, i]
    return X


def lu_solve(A, B):
    """Solve ``A X = B`` by LU decomposition with partial pivoting."""
    B = np.asarray(B)
    if not np.all(np.isfinite(B)):
        raise ValueError("right-hand side contains NaN or Inf")
    LU, perm = lu_factor(A)
    return lu_substitute(LU, perm, B)


def hermitian_inner(x, y):
    """Hermitian scalar product ``sum(x_i * conj(y_i))``.

    The conjugate sits on the *second* argument; the normal-form code relies
    on this convention.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"length mismatch: {x.shape} vs {y.shape}")
    return complex(np.sum(x * np.conj(y)))


# ---------------------------------------------------------------------------
# eigenvalues


def balance(A):
    """Permute and diagonally scale ``A`` (a similarity transform).

    Returns ``(B, lo, hi)``: rows/columns outside ``lo..hi`` hold eigenvalues
    isolated by permutation (they sit on the diagonal of ``B``); the block
    ``B[lo:hi+1, lo:hi+1]`` has been scaled by powers of two so that row and
    column norms are comparable.
    """
    B = np.array(A, dtype=float, copy=True)
    n = B.shape[0]
    lo, hi = 0, n - 1

    def swap(i, j):
        if i != j:
            B[[i, j]] = B[[j, i]]
            B[:, [i, j]] = B[:, [j, i]]

    # rows with no off-diagonal entries in the active block go to the bottom
    found = True
    while found and hi > 0:
        found = False
        for j in range(hi, -1, -1):
            row = B[j, :hi + 1]
            if not np.any(np.delete(row, j)):
                swap(j, hi)
                hi -= 1
                found = True
                break
    # columns likewise go to the left
    found = True
    while found and lo < hi:
        found = False
        for j in range(lo, hi + 1):
            col = B[lo:hi + 1, j]
            if not np.any(np.delete(col, j - lo)):
                swap(j, lo)
                lo += 1
                found = True
                break

    radix = 2.0
    sqrdx = radix * radix
    converged = False
    while not converged:
        converged = True
        for i in range(lo, hi + 1):
            c = float(np.sum(np.abs(B[lo:hi + 1, i]))) - abs(B[i, i])
            r = float(np.sum(np.abs(B[i, lo:hi + 1]))) - abs(B[i, i])
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
                converged = False
                B[i, :] /= f
                B[:, i] *= f
    return B, lo, hi


def hessenberg(A):
    """Reduce a square matrix to upper Hessenberg form by Householder
    reflections (similarity transform, eigenvalues preserved)."""
    H = np.array(A, dtype=float, copy=True)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0.0:
            continue
        # H <- P H P with P = I - 2 v v^T / (v^T v)
        H[k + 1:, k:] -= np.outer(2.0 * v / vnorm2, v @ H[k + 1:, k:])
        H[:, k + 1:] -= np.outer(H[:, k + 1:] @ v, 2.0 * v / vnorm2)
        H[k + 2:, k] = 0.0
    return H


def _hqr(H, max_sweeps):
    """Francis double-shift QR on an upper Hessenberg matrix.

    Classic EISPACK-style ``hqr``: deflation on negligible subdiagonals,
    exceptional shifts after 10 and 20 stalled iterations.
    """
    a = [list(map(float, row)) for row in H]
    n = len(a)
    eps = np.finfo(float).eps
    wr = [0.0] * n
    wi = [0.0] * n
    anorm = sum(abs(a[i][j]) for i in range(n) for j in range(max(i - 1, 0), n))
    floor = eps * eps * anorm
    nn = n - 1
    t = 0.0
    sweeps = 0
    while nn >= 0:
        its = 0
        while True:
            # look for a single small subdiagonal element
            l = nn
            while l > 0:
                s = abs(a[l - 1][l - 1]) + abs(a[l][l])
                if s == 0.0:
                    s = anorm
                # the norm-wise floor deflates blocks of uniformly tiny
                # entries, where the local test never fires
                if abs(a[l][l - 1]) <= eps * s or abs(a[l][l - 1]) <= floor:
                    a[l][l - 1] = 0.0
                    break
                l -= 1
            x = a[nn][nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1][nn - 1]
            w = a[nn][nn - 1] * a[nn - 1][nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if sweeps >= max_sweeps:
                raise NoConvergence(f"QR iteration exceeded {max_sweeps} sweeps")
            if its in (10, 20):
                t += x
                for i in range(nn + 1):
                    a[i][i] -= x
                s = abs(a[nn][nn - 1]) + abs(a[nn - 1][nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            sweeps += 1
            # two consecutive small subdiagonal elements
            m = nn - 2
            while m >= l:
                z = a[m][m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1]
                q = a[m + 1][m + 1] - z - r - s
                r = a[m + 2][m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m][m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1][m - 1]) + abs(z) + abs(a[m + 1][m + 1]))
                if u <= eps * v:
                    break
                m -= 1
            for i in range(m, nn - 1):
                a[i + 2][i] = 0.0
                if i != m:
                    a[i + 2][i - 1] = 0.0
            # double QR step on rows l..nn, columns m..nn
            for k in range(m, nn):
                if k != m:
                    p = a[k][k - 1]
                    q = a[k + 1][k - 1]
                    r = a[k + 2][k - 1] if k + 1 != nn else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k][k - 1] = -a[k][k - 1]
                else:
                    a[k][k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k][j] + q * a[k + 1][j]
                    if k + 1 != nn:
                        p += r * a[k + 2][j]
                        a[k + 2][j] -= p * z
                    a[k + 1][j] -= p * y
                    a[k][j] -= p * x
                mmin = nn if nn < k + 3 else k + 3
                for i in range(l, mmin + 1):
                    p = x * a[i][k] + y * a[i][k + 1]
                    if k + 1 != nn:
                        p += z * a[i][k + 2]
                        a[i][k + 2] -= p * r
                    a[i][k + 1] -= p * q
                    a[i][k] -= p
    return [complex(r, i) for r, i in zip(wr, wi)]


def sort_spectrum(values):
    """Descending real part, then descending imaginary part."""
    return sorted(values, key=lambda z: (-z.real, -z.imag))


def _pair_conjugates(values):
    """Make conjugate pairs exactly conjugate (average the two members)."""
    vals = list(values)
    used = [False] * len(vals)
    out = []
    for i, z in enumerate(vals):
        if used[i]:
            continue
        used[i] = True
        if z.imag == 0.0:
            out.append(complex(z.real, 0.0))
            continue
        best, bestd = None, math.inf
        for j in range(i + 1, len(vals)):
            if used[j]:
                continue
            d = abs(vals[j] - z.conjugate())
            if d < bestd:
                best, bestd = j, d
        if best is None:
            out.append(z)
            continue
        used[best] = True
        w = vals[best]
        re = 0.5 * (z.real + w.real)
        im = 0.5 * (abs(z.imag) + abs(w.imag))
        out.extend([complex(re, im), complex(re, -im)])
    return out


def eigenvalues(A):
    """All eigenvalues of a real square matrix.

    Balancing (with permutation isolation), Householder reduction to
    Hessenberg form, then double-shift QR. Conjugate pairs are returned
    exactly conjugate; order is descending real part, then descending
    imaginary part.

    Raises
    ------
    NoConvergence
        If the QR iteration needs more than ``100 * n`` sweeps.
    """
    A = _as_matrix(A)
    if np.iscomplexobj(A):
        raise TypeError("eigenvalues() expects a real matrix")
    n, m = A.shape
    if n != m:
        raise DimensionMismatch(f"eigenvalues needs a square matrix, got {A.shape}")
    if n == 0:
        return []
    # power-of-two scaling is exact and keeps the QR sweeps away from
    # underflow and overflow
    amax = float(np.max(np.abs(A)))
    if amax == 0.0:
        return [0j] * n
    e = int(np.frexp(amax)[1])
    A = np.ldexp(A, -e)
    B, lo, hi = balance(A)
    vals = [complex(B[i, i], 0.0) for i in range(n) if i < lo or i > hi]
    if hi >= lo:
        H = hessenberg(B[lo:hi + 1, lo:hi + 1])
        vals.extend(_hqr(H, max_sweeps=100 * n))
    vals = [complex(np.ldexp(z.real, e), np.ldexp(z.imag, e)) for z in vals]
    return sort_spectrum(_pair_conjugates(vals))


def det(A):
    """Determinant via the LU factors; 0.0 only for an exactly zero pivot.

    A tiny pivot spoils a solve but not the determinant, so no relative
    threshold is applied here.
    """
    A = _as_matrix(A)
    try:
        LU, perm = lu_factor(A, pivot_rtol=0.0)
    except SingularMatrix:
        return 0.0
    # parity of the permutation
    sign = 1.0
    seen = np.zeros(len(perm), dtype=bool)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign * np.prod(np.diag(LU))
