"""Compiled kernels for the inner loops: mass-matrix basis, Coriolis terms and
the plant right-hand side used by the RK4 integrator.

Everything here works on flat arrays so numba can compile it.  The geometry
vector ``L`` is ``(L0, L1, L2)``.  The public, documented entry points live in
:mod:`aerialmanip.dynamics` and :mod:`aerialmanip.environment`.
"""
import math

import numba as nb
import numpy as np

GRAVITY = 9.81
N_INERTIAL = 9


@nb.njit(cache=True)
def rot(psi, th, ph):
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(th), math.sin(th)
    cph, sph = math.cos(ph), math.sin(ph)
    R = np.empty((3, 3))
    R[0, 0] = cps * cth
    R[0, 1] = sph * sth * cps - sps * cph
    R[0, 2] = sps * sph + cps * sth * cph
    R[1, 0] = sps * cth
    R[1, 1] = cps * cph + sps * sth * sph
    R[1, 2] = sps * sth * cph - cps * sph
    R[2, 0] = -sth
    R[2, 1] = cth * sph
    R[2, 2] = cth * cph
    return R


@nb.njit(cache=True)
def tmat(psi, th):
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(th), math.sin(th)
    T = np.zeros((3, 3))
    T[0, 1] = -sps
    T[0, 2] = cps * cth
    T[1, 1] = cps
    T[1, 2] = sps * cth
    T[2, 0] = 1.0
    T[2, 2] = -sth
    return T


@nb.njit(cache=True)
def tmat_inv(psi, th):
    cps, sps = math.cos(psi), math.sin(psi)
    cth, tth = math.cos(th), math.tan(th)
    Ti = np.zeros((3, 3))
    Ti[0, 0] = cps * tth
    Ti[0, 1] = sps * tth
    Ti[0, 2] = 1.0
    Ti[1, 0] = -sps
    Ti[1, 1] = cps
    Ti[2, 0] = cps / cth
    Ti[2, 1] = sps / cth
    return Ti


@nb.njit(cache=True)
def skew(a):
    S = np.zeros((3, 3))
    S[0, 1] = -a[2]
    S[0, 2] = a[1]
    S[1, 0] = a[2]
    S[1, 2] = -a[0]
    S[2, 0] = -a[1]
    S[2, 1] = a[0]
    return S


@nb.njit(cache=True)
def mm(A, B):
    n, k = A.shape
    m = B.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for l in range(k):
                acc += A[i, l] * B[l, j]
            out[i, j] = acc
    return out


@nb.njit(cache=True)
def mv(A, x):
    n, k = A.shape
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for l in range(k):
            acc += A[i, l] * x[l]
        out[i] = acc
    return out


@nb.njit(cache=True)
def cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@nb.njit(cache=True)
def arm(t1, t2, L):
    """Joint origins, link directions, joint axes and their joint-angle derivatives."""
    c1, s1 = math.cos(t1), math.sin(t1)
    c2, s2 = math.cos(t2), math.sin(t2)
    o1 = np.array([0.0, 0.0, -L[0]])
    a1 = np.array([1.0, 0.0, 0.0])
    a2 = np.array([0.0, c1, s1])
    u1 = np.array([0.0, s1, -c1])
    u2 = np.array([-s2, c2 * s1, -c1 * c2])
    o2 = o1 + L[1] * u1
    du1 = np.zeros((3, 2))
    du1[:, 0] = a2
    du2 = np.zeros((3, 2))
    du2[:, 0] = cross(a1, u2)
    du2[:, 1] = cross(a2, u2)
    do2 = L[1] * du1
    return o1, o2, u1, u2, a1, a2, du1, du2, do2


@nb.njit(cache=True)
def _dir_jac(R, T, u, du):
    J = np.zeros((3, 8))
    J[:, 3:6] = -mm(skew(mv(R, u)), T)
    J[:, 6:] = mm(R, du)
    return J


@nb.njit(cache=True)
def _sym_xt(A, W, B):
    """A^T W B + (A^T W B)^T for 3x8 A, B."""
    X = mm(mm(A.T.copy(), W), B)
    return X + X.T


@nb.njit(cache=True)
def basis(q, L):
    """Mass-matrix basis (9, 8, 8) and gravity basis (9, 8)."""
    R = rot(q[3], q[4], q[5])
    T = tmat(q[3], q[4])
    o1, o2, u1, u2, a1, a2, du1, du2, do2 = arm(q[6], q[7], L)
    Mb = np.zeros((N_INERTIAL, 8, 8))
    Gb = np.zeros((N_INERTIAL, 8))
    ez = np.array([0.0, 0.0, 1.0])

    for i in range(3):
        Mb[0, i, i] = 1.0
    Gb[0, 2] = GRAVITY
    Rz = R[:, 2].copy()
    cr = mm(skew(Rz), T)
    Mb[1, :3, 3:6] = cr
    Mb[1, 3:6, :3] = cr.T
    for j in range(3):
        Gb[1, 3 + j] = GRAVITY * cr[2, j]
    W = mm(R.T.copy(), T)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                Mb[2 + k, 3 + i, 3 + j] = W[k, i] * W[k, j]

    Jw1 = np.zeros((3, 8))
    Jw1[:, 3:6] = T
    Jw1[:, 6] = mv(R, a1)
    Jw2 = Jw1.copy()
    Jw2[:, 7] = mv(R, a2)

    Jo1 = _dir_jac(R, T, o1, np.zeros((3, 2)))
    Jo2 = _dir_jac(R, T, o2, do2)
    for i in range(3):
        Jo1[i, i] = 1.0
        Jo2[i, i] = 1.0

    for idx in range(2):
        if idx == 0:
            k, Jo, Jw, u, du = 5, Jo1, Jw1, u1, du1
        else:
            k, Jo, Jw, u, du = 7, Jo2, Jw2, u2, du2
        U = mv(R, u)
        Mb[k] = _sym_xt(Jo, -skew(U), Jw)
        P = np.eye(3)
        for i in range(3):
            for j in range(3):
                P[i, j] -= U[i] * U[j]
        Mb[k + 1] = mm(mm(Jw.T.copy(), P), Jw)
        Jd = _dir_jac(R, T, u, du)
        for j in range(8):
            Gb[k, j] = GRAVITY * Jd[2, j]
    return Mb, Gb


@nb.njit(cache=True)
def basis_derivative(q, L, h):
    dMb = np.zeros((N_INERTIAL, 8, 8, 8))
    for i in range(3, 8):
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        Mp, _ = basis(qp, L)
        Mm, _ = basis(qm, L)
        dMb[:, i] = (Mp - Mm) / (2.0 * h)
    return dMb


@nb.njit(cache=True)
def christoffel(dM, qd):
    n = qd.shape[0]
    C = np.zeros((n, n))
    for k in range(n):
        for j in range(n):
            acc = 0.0
            for i in range(n):
                acc += (dM[i, k, j] + dM[j, k, i] - dM[k, i, j]) * qd[i]
            C[k, j] = 0.5 * acc
    return C


@nb.njit(cache=True)
def combine(pi, Mb, Gb, dMb):
    M = np.zeros((8, 8))
    G = np.zeros(8)
    dM = np.zeros((8, 8, 8))
    for k in range(N_INERTIAL):
        M += pi[k] * Mb[k]
        G += pi[k] * Gb[k]
        dM += pi[k] * dMb[k]
    return M, G, dM


@nb.njit(cache=True)
def terms(q, qd, pi, L, h):
    Mb, Gb = basis(q, L)
    dMb = basis_derivative(q, L, h)
    M, G, dM = combine(pi, Mb, Gb, dMb)
    return M, christoffel(dM, qd), G


@nb.njit(cache=True)
def inertial_regressor(q, qd, qdd, L, h):
    Mb, Gb = basis(q, L)
    dMb = basis_derivative(q, L, h)
    Y = np.zeros((8, N_INERTIAL))
    for k in range(N_INERTIAL):
        C = christoffel(dMb[k], qd)
        Y[:, k] = mv(Mb[k], qdd) + mv(C, qd) + Gb[k]
    return Y


@nb.njit(cache=True)
def _add_link(M, pi_s, pi_J, R, T, o, do, u, du, a1, a2, n_joints):
    """Add one rod link (first moment ``pi_s``, inertia ``pi_J``) to ``M``."""
    # world direction of the link and Jacobians of the joint origin / link rotation
    U = np.zeros(3)
    O = np.zeros(3)
    for i in range(3):
        for j in range(3):
            U[i] += R[i, j] * u[j]
            O[i] += R[i, j] * o[j]
    Jo = np.zeros((3, 8))
    Jw = np.zeros((3, 8))
    for i in range(3):
        Jo[i, i] = 1.0
        for j in range(3):
            Jw[i, 3 + j] = T[i, j]
    # -skew(R o) T for the attitude columns of the origin Jacobian
    for j in range(3):
        t0, t1, t2 = T[0, j], T[1, j], T[2, j]
        Jo[0, 3 + j] = -(O[1] * t2 - O[2] * t1)
        Jo[1, 3 + j] = -(O[2] * t0 - O[0] * t2)
        Jo[2, 3 + j] = -(O[0] * t1 - O[1] * t0)
    for c in range(2):
        for i in range(3):
            acc = 0.0
            for j in range(3):
                acc += R[i, j] * do[j, c]
            Jo[i, 6 + c] = acc
    ax = (a1, a2)
    for c in range(n_joints):
        a = ax[c]
        for i in range(3):
            Jw[i, 6 + c] = R[i, 0] * a[0] + R[i, 1] * a[1] + R[i, 2] * a[2]
    # A = -skew(U) Jw ; B = (I - U U^T) Jw
    A = np.zeros((3, 8))
    Bm = np.zeros((3, 8))
    for j in range(8):
        w0, w1, w2 = Jw[0, j], Jw[1, j], Jw[2, j]
        A[0, j] = -(U[1] * w2 - U[2] * w1)
        A[1, j] = -(U[2] * w0 - U[0] * w2)
        A[2, j] = -(U[0] * w1 - U[1] * w0)
        d = U[0] * w0 + U[1] * w1 + U[2] * w2
        Bm[0, j] = w0 - U[0] * d
        Bm[1, j] = w1 - U[1] * d
        Bm[2, j] = w2 - U[2] * d
    for r in range(8):
        for c in range(8):
            x = 0.0
            y = 0.0
            for i in range(3):
                x += Jo[i, r] * A[i, c] + Jo[i, c] * A[i, r]
                y += Jw[i, r] * Bm[i, c]
            M[r, c] += pi_s * x + pi_J * y


@nb.njit(cache=True)
def mass_matrix(q, pi, L):
    """``sum_k pi_k M_k(q)`` without forming the basis."""
    R = rot(q[3], q[4], q[5])
    T = tmat(q[3], q[4])
    o1, o2, u1, u2, a1, a2, du1, du2, do2 = arm(q[6], q[7], L)
    M = np.zeros((8, 8))
    for i in range(3):
        M[i, i] = pi[0]
    cr = mm(skew(R[:, 2].copy()), T)
    for i in range(3):
        for j in range(3):
            M[i, 3 + j] += pi[1] * cr[i, j]
            M[3 + j, i] += pi[1] * cr[i, j]
    W = mm(R.T.copy(), T)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += pi[2 + k] * W[k, i] * W[k, j]
            M[3 + i, 3 + j] += acc
    _add_link(M, pi[5], pi[6], R, T, o1, np.zeros((3, 2)), u1, du1, a1, a2, 1)
    _add_link(M, pi[7], pi[8], R, T, o2, do2, u2, du2, a1, a2, 2)
    return M


@nb.njit(cache=True)
def gravity(q, pi, L):
    R = rot(q[3], q[4], q[5])
    T = tmat(q[3], q[4])
    o1, o2, u1, u2, a1, a2, du1, du2, do2 = arm(q[6], q[7], L)
    G = np.zeros(8)
    G[2] = GRAVITY * pi[0]
    cr = mm(skew(R[:, 2].copy()), T)
    for j in range(3):
        G[3 + j] += GRAVITY * pi[1] * cr[2, j]
    for w, u, du in ((pi[5], u1, du1), (pi[7], u2, du2)):
        Jd = _dir_jac(R, T, u, du)
        for j in range(8):
            G[j] += GRAVITY * w * Jd[2, j]
    return G


@nb.njit(cache=True)
def plant_terms(q, qd, pi, L, h):
    """``M``, ``C qd`` and ``G`` for the combined parameters."""
    M = mass_matrix(q, pi, L)
    dM = np.zeros((8, 8, 8))
    for i in range(3, 8):
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        dM[i] = (mass_matrix(qp, pi, L) - mass_matrix(qm, pi, L)) / (2.0 * h)
    Cqd = mv(christoffel(dM, qd), qd)
    return M, Cqd, gravity(q, pi, L)


# ---------------------------------------------------------------------------
# kinematics needed by the plant (contact force)

@nb.njit(cache=True)
def euler_from_rot(R):
    th = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    psi = math.atan2(R[1, 0], R[0, 0])
    ph = math.atan2(R[2, 1], R[2, 2])
    return np.array([psi, th, ph])


@nb.njit(cache=True)
def ee_pose_and_jacobian(q, L):
    """End-effector ``chi_e`` (6,) and the analytic 6x8 task Jacobian."""
    R = rot(q[3], q[4], q[5])
    T = tmat(q[3], q[4])
    o1, o2, u1, u2, a1, a2, du1, du2, do2 = arm(q[6], q[7], L)
    p_eb = o2 + L[2] * u2
    c1, s1 = math.cos(q[6]), math.sin(q[6])
    c2, s2 = math.cos(q[7]), math.sin(q[7])
    Rbe = np.array([[c2, 0.0, s2],
                    [s1 * s2, c1, -s1 * c2],
                    [-c1 * s2, s1, c1 * c2]])
    Re = mm(R, Rbe)
    Phi = euler_from_rot(Re)
    chi = np.zeros(6)
    chi[:3] = q[:3] + mv(R, p_eb)
    chi[3:] = Phi

    Jg = np.zeros((6, 8))
    for i in range(3):
        Jg[i, i] = 1.0
    Jg[:3, 3:6] = -mm(skew(mv(R, p_eb)), T)
    Jg[3:, 3:6] = T
    l1 = cross(a1, p_eb - o1)
    l2 = cross(a2, p_eb - o2)
    Jg[:3, 6] = mv(R, l1)
    Jg[:3, 7] = mv(R, l2)
    Jg[3:, 6] = mv(R, a1)
    Jg[3:, 7] = mv(R, a2)
    Ti = tmat_inv(Phi[0], Phi[1])
    JA = Jg.copy()
    JA[3:, :] = mm(Ti, Jg[3:, :])
    return chi, JA


# ---------------------------------------------------------------------------
# plant

@nb.njit(cache=True)
def input_matrix(q, Nmat):
    R = rot(q[3], q[4], q[5])
    T = tmat(q[3], q[4])
    H = np.zeros((8, 8))
    H[:3, :3] = R
    # moment rows of N are (yaw, pitch, roll): permute to body (x, y, z)
    TR = mm(T.T.copy(), R)
    for i in range(3):
        H[3 + i, 3] = TR[i, 2]
        H[3 + i, 4] = TR[i, 1]
        H[3 + i, 5] = TR[i, 0]
    H[6, 6] = 1.0
    H[7, 7] = 1.0
    return mm(H, Nmat)


@nb.njit(cache=True)
def wind(q, wind_coef):
    """(F_wx, F_wy) from the four projected wind coefficients."""
    z2 = q[2] * q[2]
    fx = wind_coef[0] * z2 * math.sin(q[4]) + wind_coef[1] * z2 * math.cos(q[4])
    fy = wind_coef[2] * z2 * math.sin(q[5]) + wind_coef[3] * z2 * math.cos(q[5])
    return fx, fy


@nb.njit(cache=True)
def plant_rhs(x, u, pi, L, Nmat, inertia_scale, Sc, Dc, chi0, wind_coef, h):
    """State derivative of ``x = (q, qd)`` and the true contact force ``F_e``."""
    q = x[:8]
    qd = x[8:]
    M, Cqd, G = plant_terms(q, qd, pi, L, h)
    B = input_matrix(q, Nmat)
    chi, JA = ee_pose_and_jacobian(q, L)
    dchi = mv(JA, qd)
    Fe = Sc * (chi - chi0) + Dc * dchi
    tau_l = mv(JA.T.copy(), Fe)
    fx, fy = wind(q, wind_coef)
    rhs = mv(B, u) - inertia_scale * Cqd - G - tau_l
    rhs[0] -= fx
    rhs[1] -= fy
    qdd = np.linalg.solve(inertia_scale * M, rhs)
    out = np.empty(16)
    out[:8] = qd
    out[8:] = qdd
    return out, Fe


@nb.njit(cache=True)
def rk4(x, u, dt, n, pi, L, Nmat, inertia_scale, Sc, Dc, chi0, wind_coef, h):
    """``n`` RK4 steps of size ``dt`` with ``u`` held constant."""
    for _ in range(n):
        k1, _f = plant_rhs(x, u, pi, L, Nmat, inertia_scale, Sc, Dc, chi0, wind_coef, h)
        k2, _f = plant_rhs(x + 0.5 * dt * k1, u, pi, L, Nmat, inertia_scale, Sc, Dc, chi0, wind_coef, h)
        k3, _f = plant_rhs(x + 0.5 * dt * k2, u, pi, L, Nmat, inertia_scale, Sc, Dc, chi0, wind_coef, h)
        k4, _f = plant_rhs(x + dt * k3, u, pi, L, Nmat, inertia_scale, Sc, Dc, chi0, wind_coef, h)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x
