"""Pure-Python RK4 kernels; fallback when the compiled ``_kernel`` is absent.

Mirrors ``_kernel.pyx`` line for line. 2x2 matrices are row-major
4-tuples of Python complex numbers.
"""

import math

import numpy as np

UNITARY, ADME, TDME, TDME_INTERACTION = 0, 1, 2, 3


def _mul(x, y):
    return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])


def _dag(x):
    return (x[0].conjugate(), x[2].conjugate(), x[1].conjugate(), x[3].conjugate())


def _spline(E, x0, h, coef):
    n = coef.shape[0]
    i = int((E - x0) / h)
    if i < 0:
        i = 0
    elif i > n - 1:
        i = n - 1
    s = E - (x0 + i * h)
    c = coef[i]
    return ((c[0] * s + c[1]) * s + c[2]) * s + c[3]


def _closed_rhs(t, a, b, omega0, Omega, omega):
    h = Omega * math.sin(omega * t)
    da = -1j * (omega0 * a - h * b.conjugate())
    db = -1j * (omega0 * b + h * a.conjugate())
    return da, db


def closed_rk4(omega0, Omega, omega, dt, nsteps, stride):
    """RK4 for ``(alpha, beta)`` from ``(1, 0)``; samples every ``stride`` steps
    plus the final step."""
    nsamp = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    alpha = np.empty(nsamp, dtype=complex)
    beta = np.empty(nsamp, dtype=complex)
    a, b = 1 + 0j, 0j
    alpha[0], beta[0] = a, b
    j = 1
    for k in range(nsteps):
        t = k * dt
        k1a, k1b = _closed_rhs(t, a, b, omega0, Omega, omega)
        k2a, k2b = _closed_rhs(t + 0.5 * dt, a + 0.5 * dt * k1a, b + 0.5 * dt * k1b,
                               omega0, Omega, omega)
        k3a, k3b = _closed_rhs(t + 0.5 * dt, a + 0.5 * dt * k2a, b + 0.5 * dt * k2b,
                               omega0, Omega, omega)
        k4a, k4b = _closed_rhs(t + dt, a + dt * k3a, b + dt * k3b, omega0, Omega, omega)
        a = a + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            alpha[j], beta[j] = a, b
            j += 1
    return alpha, beta


def _master_rhs(mode, t, a, b, r, omega0, Omega, omega, ak, wc, T, lamb_on,
                x0, h, coef):
    """Returns ``(da, db, drho)`` for the joint propagator/state system."""
    drive = Omega * math.sin(omega * t)
    da = -1j * (omega0 * a - drive * b.conjugate())
    db = -1j * (omega0 * b + drive * a.conjugate())

    if mode == UNITARY:
        H = (omega0 + 0j, drive + 0j, drive + 0j, -omega0 + 0j)
        Hr, rH = _mul(H, r), _mul(r, H)
        return da, db, tuple(-1j * (x - y) for x, y in zip(Hr, rH))

    E = math.sqrt(omega0 * omega0 + drive * drive)
    c = omega0 / E
    s = drive / E
    w = 2.0 * E
    j2 = 2.0 * math.pi * ak * w * math.exp(-w / wc)
    nb = 1.0 / math.expm1(w / T)
    g0 = 4.0 * math.pi * ak * T
    gp = j2 * nb
    gm = j2 * (1.0 + nb)
    S = _spline(E, x0, h, coef) if lamb_on else 0.0
    ls = -0.5 * S * c * c

    if mode == TDME:
        a2 = (a * a.conjugate()).real
        b2 = (b * b.conjugate()).real
        z = a2 - b2
        ab = a * b
        Z = (z + 0j, -2 * ab, -2 * ab.conjugate(), -z + 0j)
        abc = a * b.conjugate()
        P = (abc, a * a, -(b.conjugate() ** 2), -abc)
        L0 = tuple(s * x for x in Z)
        Lp = tuple(c * x for x in P)
        Lm = _dag(Lp)
        H = (omega0 + ls * Z[0], drive + ls * Z[1], drive + ls * Z[2], -omega0 + ls * Z[3])
    elif mode == ADME:
        ch2 = 0.5 * (1.0 + c)  # cos^2(phi/2)
        sh2 = 0.5 * (1.0 - c)  # sin^2(phi/2)
        L0 = (s * c + 0j, s * s + 0j, s * s + 0j, -s * c + 0j)
        Lp = (c * (-0.5 * s) + 0j, c * ch2 + 0j, -c * sh2 + 0j, c * 0.5 * s + 0j)
        Lm = _dag(Lp)
        H = (omega0 + ls * c, drive + ls * s, drive + ls * s, -omega0 - ls * c)
        H = tuple(complex(x) for x in H)
    else:  # TDME_INTERACTION
        L0 = (s + 0j, 0j, 0j, -s + 0j)
        Lp = (0j, c + 0j, 0j, 0j)
        Lm = (0j, 0j, c + 0j, 0j)
        H = (ls + 0j, 0j, 0j, -ls + 0j)

    # effective non-Hermitian H_eff = H - (i/2) sum_k gamma_k L_k^dag L_k
    K0, Kp, Km = _mul(_dag(L0), L0), _mul(_dag(Lp), Lp), _mul(_dag(Lm), Lm)
    Heff = tuple(H[i] - 0.5j * (g0 * K0[i] + gp * Kp[i] + gm * Km[i]) for i in range(4))
    Hr = _mul(Heff, r)
    rH = _mul(r, _dag(Heff))
    j0 = _mul(_mul(L0, r), _dag(L0))
    jp = _mul(_mul(Lp, r), _dag(Lp))
    jm = _mul(_mul(Lm, r), _dag(Lm))
    drho = tuple(-1j * Hr[i] + 1j * rH[i] + g0 * j0[i] + gp * jp[i] + gm * jm[i]
                 for i in range(4))
    return da, db, drho


def evolve_rk4(mode, omega0, Omega, omega, ak, wc, T, lamb_on, x0, h, coef,
               rho0, dt, nsteps, stride):
    """Joint RK4 of ``(alpha, beta, rho)``. Returns sampled
    ``(rho[n, 4], alpha[n], beta[n])``."""
    nsamp = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    rho_out = np.empty((nsamp, 4), dtype=complex)
    alpha = np.empty(nsamp, dtype=complex)
    beta = np.empty(nsamp, dtype=complex)
    coef = np.asarray(coef, dtype=float)
    a, b = 1 + 0j, 0j
    r = tuple(complex(x) for x in np.asarray(rho0).ravel())
    rho_out[0] = r
    alpha[0], beta[0] = a, b
    args = (omega0, Omega, omega, ak, wc, T, lamb_on, x0, h, coef)
    j = 1
    hd = 0.5 * dt
    for k in range(nsteps):
        t = k * dt
        k1 = _master_rhs(mode, t, a, b, r, *args)
        k2 = _master_rhs(mode, t + hd, a + hd * k1[0], b + hd * k1[1],
                         tuple(r[i] + hd * k1[2][i] for i in range(4)), *args)
        k3 = _master_rhs(mode, t + hd, a + hd * k2[0], b + hd * k2[1],
                         tuple(r[i] + hd * k2[2][i] for i in range(4)), *args)
        k4 = _master_rhs(mode, t + dt, a + dt * k3[0], b + dt * k3[1],
                         tuple(r[i] + dt * k3[2][i] for i in range(4)), *args)
        w6 = dt / 6.0
        a = a + w6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        b = b + w6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        r = tuple(r[i] + w6 * (k1[2][i] + 2 * k2[2][i] + 2 * k3[2][i] + k4[2][i])
                  for i in range(4))
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            rho_out[j] = r
            alpha[j], beta[j] = a, b
            j += 1
    return rho_out, alpha, beta
