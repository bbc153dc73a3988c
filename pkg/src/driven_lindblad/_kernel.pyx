# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels. Same algorithm and signatures as ``_kernel_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, sqrt, exp, expm1, M_PI

cnp.import_array()

ctypedef struct M2:
    double complex a
    double complex b
    double complex c
    double complex d

cdef int UNITARY = 0
cdef int ADME = 1
cdef int TDME = 2
cdef int TDME_INTERACTION = 3


cdef inline double complex conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef inline M2 mk(double complex a, double complex b, double complex c,
                  double complex d) noexcept nogil:
    cdef M2 m
    m.a = a
    m.b = b
    m.c = c
    m.d = d
    return m


cdef inline M2 mul(M2 x, M2 y) noexcept nogil:
    return mk(x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
              x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d)


cdef inline M2 dag(M2 x) noexcept nogil:
    return mk(conj(x.a), conj(x.c), conj(x.b), conj(x.d))


cdef inline M2 scale(double complex f, M2 x) noexcept nogil:
    return mk(f * x.a, f * x.b, f * x.c, f * x.d)


cdef inline M2 axpy(double complex f, M2 x, M2 y) noexcept nogil:
    return mk(y.a + f * x.a, y.b + f * x.b, y.c + f * x.c, y.d + f * x.d)


cdef inline double spline(double E, double x0, double h,
                          const double* coef, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i = <Py_ssize_t>((E - x0) / h)
    if i < 0:
        i = 0
    elif i > n - 1:
        i = n - 1
    cdef double s = E - (x0 + i * h)
    cdef const double* q = coef + 4 * i
    return ((q[0] * s + q[1]) * s + q[2]) * s + q[3]


cdef inline void closed_rhs(double t, double complex a, double complex b,
                            double omega0, double Omega, double omega,
                            double complex* da, double complex* db) noexcept nogil:
    cdef double h = Omega * sin(omega * t)
    da[0] = -1j * (omega0 * a - h * conj(b))
    db[0] = -1j * (omega0 * b + h * conj(a))


def closed_rk4(double omega0, double Omega, double omega, double dt,
               Py_ssize_t nsteps, Py_ssize_t stride):
    cdef Py_ssize_t nsamp = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    alpha_arr = np.empty(nsamp, dtype=complex)
    beta_arr = np.empty(nsamp, dtype=complex)
    cdef double complex[::1] alpha = alpha_arr
    cdef double complex[::1] beta = beta_arr
    cdef double complex a = 1.0, b = 0.0
    cdef double complex k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b
    cdef double t, hd = 0.5 * dt
    cdef Py_ssize_t k, j = 1
    alpha[0] = a
    beta[0] = b
    with nogil:
        for k in range(nsteps):
            t = k * dt
            closed_rhs(t, a, b, omega0, Omega, omega, &k1a, &k1b)
            closed_rhs(t + hd, a + hd * k1a, b + hd * k1b, omega0, Omega, omega, &k2a, &k2b)
            closed_rhs(t + hd, a + hd * k2a, b + hd * k2b, omega0, Omega, omega, &k3a, &k3b)
            closed_rhs(t + dt, a + dt * k3a, b + dt * k3b, omega0, Omega, omega, &k4a, &k4b)
            a = a + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
            b = b + dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
            if (k + 1) % stride == 0 or k + 1 == nsteps:
                alpha[j] = a
                beta[j] = b
                j += 1
    return alpha_arr, beta_arr


cdef inline void master_rhs(int mode, double t, double complex a, double complex b, M2 r,
                     double omega0, double Omega, double omega, double ak,
                     double wc, double T, bint lamb_on, double x0, double h,
                     const double* coef, Py_ssize_t ncell,
                     double complex* da, double complex* db, M2* dr) noexcept nogil:
    cdef double drive = Omega * sin(omega * t)
    da[0] = -1j * (omega0 * a - drive * conj(b))
    db[0] = -1j * (omega0 * b + drive * conj(a))
    cdef M2 H, Hr, rH, L0, Lp, Lm, Z, P, Heff, K
    if mode == UNITARY:
        H = mk(omega0, drive, drive, -omega0)
        Hr = mul(H, r)
        rH = mul(r, H)
        dr[0] = mk(-1j * (Hr.a - rH.a), -1j * (Hr.b - rH.b),
                   -1j * (Hr.c - rH.c), -1j * (Hr.d - rH.d))
        return

    cdef double E = sqrt(omega0 * omega0 + drive * drive)
    cdef double c = omega0 / E
    cdef double s = drive / E
    cdef double w = 2.0 * E
    cdef double j2 = 2.0 * M_PI * ak * w * exp(-w / wc)
    cdef double nb = 1.0 / expm1(w / T)
    cdef double g0 = 4.0 * M_PI * ak * T
    cdef double gp = j2 * nb
    cdef double gm = j2 * (1.0 + nb)
    cdef double S = spline(E, x0, h, coef, ncell) if lamb_on else 0.0
    cdef double ls = -0.5 * S * c * c
    cdef double z, ch2, sh2
    cdef double complex ab, abc

    if mode == TDME:
        z = (a * conj(a)).real - (b * conj(b)).real
        ab = a * b
        Z = mk(z, -2 * ab, -2 * conj(ab), -z)
        abc = a * conj(b)
        P = mk(abc, a * a, -(conj(b) * conj(b)), -abc)
        L0 = scale(s, Z)
        Lp = scale(c, P)
        Lm = dag(Lp)
        H = axpy(ls, Z, mk(omega0, drive, drive, -omega0))
    elif mode == ADME:
        ch2 = 0.5 * (1.0 + c)
        sh2 = 0.5 * (1.0 - c)
        L0 = mk(s * c, s * s, s * s, -s * c)
        Lp = mk(-0.5 * c * s, c * ch2, -c * sh2, 0.5 * c * s)
        Lm = dag(Lp)
        H = mk(omega0 + ls * c, drive + ls * s, drive + ls * s, -omega0 - ls * c)
    else:
        L0 = mk(s, 0, 0, -s)
        Lp = mk(0, c, 0, 0)
        Lm = mk(0, 0, c, 0)
        H = mk(ls, 0, 0, -ls)

    K = axpy(gm, mul(dag(Lm), Lm),
             axpy(gp, mul(dag(Lp), Lp), scale(g0, mul(dag(L0), L0))))
    Heff = axpy(-0.5j, K, H)
    Hr = mul(Heff, r)
    rH = mul(r, dag(Heff))
    cdef M2 out = mk(-1j * Hr.a + 1j * rH.a, -1j * Hr.b + 1j * rH.b,
                     -1j * Hr.c + 1j * rH.c, -1j * Hr.d + 1j * rH.d)
    out = axpy(g0, mul(mul(L0, r), dag(L0)), out)
    out = axpy(gp, mul(mul(Lp, r), dag(Lp)), out)
    out = axpy(gm, mul(mul(Lm, r), dag(Lm)), out)
    dr[0] = out


def evolve_rk4(int mode, double omega0, double Omega, double omega, double ak,
               double wc, double T, bint lamb_on, double x0, double h, coef,
               rho0, double dt, Py_ssize_t nsteps, Py_ssize_t stride):
    cdef Py_ssize_t nsamp = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    rho_arr = np.empty((nsamp, 4), dtype=complex)
    alpha_arr = np.empty(nsamp, dtype=complex)
    beta_arr = np.empty(nsamp, dtype=complex)
    cdef double complex[:, ::1] rho_out = rho_arr
    cdef double complex[::1] alpha = alpha_arr
    cdef double complex[::1] beta = beta_arr
    cdef const double[:, ::1] cf = np.ascontiguousarray(coef, dtype=float)
    cdef const double* cp = &cf[0, 0]
    cdef Py_ssize_t ncell = cf.shape[0]
    r0 = np.asarray(rho0, dtype=complex).ravel()
    cdef M2 r = mk(r0[0], r0[1], r0[2], r0[3])
    cdef double complex a = 1.0, b = 0.0
    cdef double complex k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b
    cdef M2 k1r, k2r, k3r, k4r
    cdef double t, hd = 0.5 * dt, w6 = dt / 6.0
    cdef Py_ssize_t k, j = 1
    rho_out[0, 0] = r.a
    rho_out[0, 1] = r.b
    rho_out[0, 2] = r.c
    rho_out[0, 3] = r.d
    alpha[0] = a
    beta[0] = b
    with nogil:
        for k in range(nsteps):
            t = k * dt
            master_rhs(mode, t, a, b, r, omega0, Omega, omega, ak, wc, T, lamb_on,
                       x0, h, cp, ncell, &k1a, &k1b, &k1r)
            master_rhs(mode, t + hd, a + hd * k1a, b + hd * k1b, axpy(hd, k1r, r),
                       omega0, Omega, omega, ak, wc, T, lamb_on, x0, h, cp, ncell,
                       &k2a, &k2b, &k2r)
            master_rhs(mode, t + hd, a + hd * k2a, b + hd * k2b, axpy(hd, k2r, r),
                       omega0, Omega, omega, ak, wc, T, lamb_on, x0, h, cp, ncell,
                       &k3a, &k3b, &k3r)
            master_rhs(mode, t + dt, a + dt * k3a, b + dt * k3b, axpy(dt, k3r, r),
                       omega0, Omega, omega, ak, wc, T, lamb_on, x0, h, cp, ncell,
                       &k4a, &k4b, &k4r)
            a = a + w6 * (k1a + 2 * k2a + 2 * k3a + k4a)
            b = b + w6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            r = mk(r.a + w6 * (k1r.a + 2 * k2r.a + 2 * k3r.a + k4r.a),
                   r.b + w6 * (k1r.b + 2 * k2r.b + 2 * k3r.b + k4r.b),
                   r.c + w6 * (k1r.c + 2 * k2r.c + 2 * k3r.c + k4r.c),
                   r.d + w6 * (k1r.d + 2 * k2r.d + 2 * k3r.d + k4r.d))
            if (k + 1) % stride == 0 or k + 1 == nsteps:
                rho_out[j, 0] = r.a
                rho_out[j, 1] = r.b
                rho_out[j, 2] = r.c
                rho_out[j, 3] = r.d
                alpha[j] = a
                beta[j] = b
                j += 1
    return rho_arr, alpha_arr, beta_arr
