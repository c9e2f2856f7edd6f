# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ZIP flow: the Rosenbrock integrator of ``numerics.integrate``
specialised to the 4-D model, with the same step control, dense output and
fixed-mesh mode."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, isfinite

cnp.import_array()

DEF N = 4

cdef double GAM = 0.5
cdef double A21 = 2.0
cdef double A31 = 48.0 / 25.0
cdef double A32 = 6.0 / 25.0
cdef double C21 = -8.0
cdef double C31 = 372.0 / 25.0
cdef double C32 = 12.0 / 5.0
cdef double C41 = -112.0 / 125.0
cdef double C42 = -54.0 / 125.0
cdef double C43 = -2.0 / 5.0
cdef double B1 = 19.0 / 9.0
cdef double B2 = 0.5
cdef double B3 = 25.0 / 108.0
cdef double B4 = 125.0 / 108.0
cdef double E1 = 17.0 / 54.0
cdef double E2 = 7.0 / 36.0
cdef double E3 = 0.0
cdef double E4 = 125.0 / 108.0

cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0

# status codes returned to the Python wrapper
STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAXSTEPS = 2
STATUS_SINGULAR = 3


cdef struct Params:
    double k
    double f
    double g1
    double g2
    double g3


cdef inline void zip_rhs(const double* u, const Params* p, double* out) nogil:
    out[0] = p.k * u[2] * u[2] * (1.0 - u[0]) - u[0]
    out[1] = u[0] * p.f - u[1]
    out[2] = 1.0 - p.g1 * u[2] * u[3] - u[2]
    out[3] = p.g2 * u[1] * (1.0 - u[3]) - (p.g3 * u[2] + 1.0) * u[3]


cdef inline void zip_jac(const double* u, const Params* p, double* J) nogil:
    # row-major 4x4
    J[0] = -p.k * u[2] * u[2] - 1.0
    J[1] = 0.0
    J[2] = 2.0 * p.k * u[2] * (1.0 - u[0])
    J[3] = 0.0
    J[4] = p.f
    J[5] = -1.0
    J[6] = 0.0
    J[7] = 0.0
    J[8] = 0.0
    J[9] = 0.0
    J[10] = -p.g1 * u[3] - 1.0
    J[11] = -p.g1 * u[2]
    J[12] = 0.0
    J[13] = p.g2 * (1.0 - u[3])
    J[14] = -p.g3 * u[3]
    J[15] = -p.g3 * u[2] - 1.0 - p.g2 * u[1]


cdef int lu4(double* A, int* perm) nogil:
    """In-place LU with partial pivoting; 1 if a pivot is below 1e-14*||A||."""
    cdef int i, j, k, piv, tmp
    cdef double anorm = 0.0, s, big, t
    for i in range(N):
        s = 0.0
        for j in range(N):
            s += fabs(A[i * N + j])
        if s > anorm:
            anorm = s
        perm[i] = i
    for k in range(N):
        piv = k
        big = fabs(A[k * N + k])
        for i in range(k + 1, N):
            if fabs(A[i * N + k]) > big:
                big = fabs(A[i * N + k])
                piv = i
        if big <= 1e-14 * anorm or big == 0.0:
            return 1
        if piv != k:
            for j in range(N):
                t = A[k * N + j]
                A[k * N + j] = A[piv * N + j]
                A[piv * N + j] = t
            tmp = perm[k]
            perm[k] = perm[piv]
            perm[piv] = tmp
        for i in range(k + 1, N):
            A[i * N + k] /= A[k * N + k]
            t = A[i * N + k]
            for j in range(k + 1, N):
                A[i * N + j] -= t * A[k * N + j]
    return 0


cdef void lusolve4(const double* LU, const int* perm, const double* b, double* x) nogil:
    cdef int i, j
    cdef double s
    cdef double y[N]
    for i in range(N):
        s = b[perm[i]]
        for j in range(i):
            s -= LU[i * N + j] * y[j]
        y[i] = s
    for i in range(N - 1, -1, -1):
        s = y[i]
        for j in range(i + 1, N):
            s -= LU[i * N + j] * x[j]
        x[i] = s / LU[i * N + i]


cdef int ros_step(const double* y, const double* f0, double h, const Params* p,
                  double* y1, double* err) nogil:
    cdef double J[N * N]
    cdef double W[N * N]
    cdef int perm[N]
    cdef double g1[N]
    cdef double g2[N]
    cdef double g3[N]
    cdef double g4[N]
    cdef double tmp[N]
    cdef double fx[N]
    cdef double rhsv[N]
    cdef int i
    zip_jac(y, p, J)
    for i in range(N * N):
        W[i] = -J[i]
    for i in range(N):
        W[i * N + i] += 1.0 / (GAM * h)
    if lu4(W, perm):
        return 1
    lusolve4(W, perm, f0, g1)
    for i in range(N):
        tmp[i] = y[i] + A21 * g1[i]
    zip_rhs(tmp, p, fx)
    for i in range(N):
        rhsv[i] = fx[i] + C21 * g1[i] / h
    lusolve4(W, perm, rhsv, g2)
    for i in range(N):
        tmp[i] = y[i] + A31 * g1[i] + A32 * g2[i]
    zip_rhs(tmp, p, fx)
    for i in range(N):
        rhsv[i] = fx[i] + (C31 * g1[i] + C32 * g2[i]) / h
    lusolve4(W, perm, rhsv, g3)
    for i in range(N):
        rhsv[i] = fx[i] + (C41 * g1[i] + C42 * g2[i] + C43 * g3[i]) / h
    lusolve4(W, perm, rhsv, g4)
    for i in range(N):
        y1[i] = y[i] + B1 * g1[i] + B2 * g2[i] + B3 * g3[i] + B4 * g4[i]
        err[i] = E1 * g1[i] + E2 * g2[i] + E3 * g3[i] + E4 * g4[i]
    return 0


def zip_flow(double[::1] u0, double t1, double kappa, double influx,
             double gamma1, double gamma2, double gamma3,
             double abs_tol, double rel_tol, double h_init, double h_min,
             double h_max, long max_steps, t_eval=None, mesh=None,
             bint record_mesh=False):
    """Integrate the ZIP model from ``t = 0`` to ``t1``.

    ``influx`` is ``f(mu)``. Returns ``(status, t_end, y_end, y_eval,
    mesh_out, n_accepted, n_rejected)``; ``status`` is one of the
    ``STATUS_*`` codes.
    """
    cdef Params p
    p.k = kappa
    p.f = influx
    p.g1 = gamma1
    p.g2 = gamma2
    p.g3 = gamma3
    cdef double y[N]
    cdef double y1[N]
    cdef double f[N]
    cdef double f1[N]
    cdef double err[N]
    cdef int i
    for i in range(N):
        y[i] = u0[i]
    zip_rhs(y, &p, f)

    cdef double[::1] tev
    cdef double[:, ::1] yev
    cdef Py_ssize_t n_eval = 0, k_out = 0
    cdef bint dense = t_eval is not None
    if dense:
        tev = np.ascontiguousarray(t_eval, dtype=np.float64)
        n_eval = tev.shape[0]
        out_arr = np.empty((n_eval, N))
        yev = out_arr
        while k_out < n_eval and tev[k_out] <= 0.0:
            for i in range(N):
                yev[k_out, i] = y[i]
            k_out += 1

    cdef double[::1] mv
    cdef bint fixed = mesh is not None
    cdef Py_ssize_t i_mesh = 0, n_mesh = 0
    if fixed:
        mv = np.ascontiguousarray(mesh, dtype=np.float64)
        n_mesh = mv.shape[0]
    steps = [0.0] if record_mesh else None

    cdef double t = 0.0, h = min(h_init, h_max), t_new, en, s, sc, fac = FAC_MAX
    cdef double hh, ss, h00, h10, h01, h11
    cdef long attempts = 0, n_acc = 0, n_rej = 0
    cdef int status = STATUS_OK

    while t < t1:
        if fixed:
            h = mv[i_mesh + 1] - t
        else:
            h = min(h, t1 - t)
        if t + h <= t:
            status = STATUS_UNDERFLOW
            break
        attempts += 1
        if attempts > max_steps:
            status = STATUS_MAXSTEPS
            break
        if ros_step(y, f, h, &p, y1, err):
            status = STATUS_SINGULAR
            break
        if not fixed:
            s = 0.0
            for i in range(N):
                sc = abs_tol + rel_tol * max(fabs(y[i]), fabs(y1[i]))
                s += (err[i] / sc) * (err[i] / sc)
            en = sqrt(s / N)
            if not isfinite(en):
                en = 1e10
            if en > 1.0:
                n_rej += 1
                h *= max(FAC_MIN, SAFETY * pow(en, -0.25))
                if h < h_min:
                    status = STATUS_UNDERFLOW
                    break
                continue
            if en == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * pow(en, -0.25)))
        if fixed:
            i_mesh += 1
            t_new = mv[i_mesh]
        else:
            t_new = t1 if t + h >= t1 else t + h
        zip_rhs(y1, &p, f1)
        n_acc += 1
        if dense:
            hh = t_new - t
            while k_out < n_eval and tev[k_out] <= t_new:
                ss = (tev[k_out] - t) / hh
                h00 = (1 + 2 * ss) * (1 - ss) * (1 - ss)
                h10 = ss * (1 - ss) * (1 - ss)
                h01 = ss * ss * (3 - 2 * ss)
                h11 = ss * ss * (ss - 1)
                for i in range(N):
                    yev[k_out, i] = h00 * y[i] + h10 * hh * f[i] + h01 * y1[i] + h11 * hh * f1[i]
                k_out += 1
        if record_mesh:
            steps.append(t_new)
        t = t_new
        for i in range(N):
            y[i] = y1[i]
            f[i] = f1[i]
        if not fixed:
            h = min(h * fac, h_max)
            h = max(h, h_min)

    y_end = np.array([y[0], y[1], y[2], y[3]])
    return (status, t, y_end, out_arr if dense else None,
            np.array(steps) if record_mesh else None, n_acc, n_rej)
