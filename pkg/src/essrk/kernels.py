"""numba kernels for the built-in fields.

These mirror :mod:`essrk.maps` and :mod:`essrk.composition` point by point,
working in place on ``(N, 3)`` arrays. Field and interaction kernels are
passed in as first-class jitted functions. Status codes returned by the
steppers: ``OK``, ``SINGULAR`` (kick matrix), ``DOMAIN`` (field returned NaN);
``info[0]`` receives the offending particle.

State updates are applied as increments with compensated summation; ``cq``
and ``cp`` hold the running compensation and are carried across steps by the
run loops.
"""
import numpy as np

from ._backend import njit

OK = 0
SINGULAR = 1
DOMAIN = 2

# first-class function arguments defeat on-disk caching
_OPTS = {"cache": False}


@njit(**_OPTS)
def _add(x, j, k, delta, comp):
    y = delta - comp[j, k]
    total = x[j, k] + y
    comp[j, k] = (total - x[j, k]) - y
    x[j, k] = total


@njit(**_OPTS)
def drift_inplace(q, p, h, masses, cq):
    for j in range(q.shape[0]):
        w = h / masses[j]
        for x in range(3):
            _add(q, j, x, w * p[j, x], cq)


@njit(**_OPTS)
def kick_inplace(q, p, t, h, a, b, c, charges, masses, fk, fpar, ik, ipar, info, cq, cp):
    s = b.shape[0]
    n = q.shape[0]
    k = np.zeros((s, n, 3))
    kp = np.zeros((s, n, 3, 3))
    gl = np.zeros((s, n, 3))
    pos = np.empty((n, 3))
    jac = np.empty((n, 3, 3))
    A = np.empty(3)
    dA = np.empty((3, 3))
    gphi = np.empty(3)
    gV = np.empty((n, 3))
    gf = np.empty(3)
    for i in range(s):
        for j in range(n):
            for x in range(3):
                pos[j, x] = q[j, x]
                for y in range(3):
                    jac[j, x, y] = 1.0 if x == y else 0.0
            for r in range(i):
                w = h * a[i, r]
                if w == 0.0:
                    continue
                for x in range(3):
                    pos[j, x] += w * k[r, j, x]
                    for y in range(3):
                        jac[j, x, y] += w * kp[r, j, x, y]
        ti = t + c[i] * h
        ik(pos, ti, ipar, gV)
        for j in range(n):
            phi = fk(pos[j], ti, fpar[j], A, dA, gphi)
            if np.isnan(phi):
                info[0] = j
                return DOMAIN
            e = charges[j]
            m = masses[j]
            coef = -e / m
            for y in range(3):
                acc = 0.0
                for x in range(3):
                    acc += A[x] * dA[x, y]
                gf[y] = e * e / m * acc + e * gphi[y] + gV[j, y]
            for x in range(3):
                k[i, j, x] = coef * A[x]
                for y in range(3):
                    acc = 0.0
                    for z in range(3):
                        acc += dA[x, z] * jac[j, z, y]
                    kp[i, j, x, y] = coef * acc
            for y in range(3):
                acc = 0.0
                for x in range(3):
                    acc += gf[x] * jac[j, x, y]
                gl[i, j, y] = acc

    # P - p = (-grad c - p (g' - I)) g'^{-1}, formed without cancellation
    G = np.empty((3, 3))
    dq = np.empty(3)
    r = np.empty(3)
    for j in range(n):
        for x in range(3):
            dq[x] = 0.0
            r[x] = 0.0
            for y in range(3):
                G[x, y] = 0.0
        for i in range(s):
            w = h * b[i]
            if w == 0.0:
                continue
            for x in range(3):
                dq[x] += w * k[i, j, x]
                r[x] -= w * gl[i, j, x]
                for y in range(3):
                    G[x, y] += w * kp[i, j, x, y]
        for y in range(3):
            acc = 0.0
            for x in range(3):
                acc += p[j, x] * G[x, y]
            r[y] -= acc
        for x in range(3):
            G[x, x] += 1.0
        c00 = G[1, 1] * G[2, 2] - G[1, 2] * G[2, 1]
        c01 = G[0, 2] * G[2, 1] - G[0, 1] * G[2, 2]
        c02 = G[0, 1] * G[1, 2] - G[0, 2] * G[1, 1]
        c10 = G[1, 2] * G[2, 0] - G[1, 0] * G[2, 2]
        c11 = G[0, 0] * G[2, 2] - G[0, 2] * G[2, 0]
        c12 = G[0, 2] * G[1, 0] - G[0, 0] * G[1, 2]
        c20 = G[1, 0] * G[2, 1] - G[1, 1] * G[2, 0]
        c21 = G[0, 1] * G[2, 0] - G[0, 0] * G[2, 1]
        c22 = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
        det = G[0, 0] * c00 + G[0, 1] * c10 + G[0, 2] * c20
        if not abs(det) > 1e-12:
            info[0] = j
            return SINGULAR
        for x in range(3):
            _add(q, j, x, dq[x], cq)
        _add(p, j, 0, (r[0] * c00 + r[1] * c10 + r[2] * c20) / det, cp)
        _add(p, j, 1, (r[0] * c01 + r[1] * c11 + r[2] * c21) / det, cp)
        _add(p, j, 2, (r[0] * c02 + r[1] * c12 + r[2] * c22) / det, cp)
    return OK


@njit(**_OPTS)
def essrk_step_inplace(q, p, t, h, drifts, kick_start, kick_end, a, b, c, charges, masses, fk, fpar, ik, ipar, info, cq, cp):
    nk = kick_start.shape[0]
    drift_inplace(q, p, drifts[0] * h, masses, cq)
    for i in range(nk):
        t0 = t + kick_start[i] * h
        dt = (kick_end[i] - kick_start[i]) * h
        status = kick_inplace(q, p, t0, dt, a, b, c, charges, masses, fk, fpar, ik, ipar, info, cq, cp)
        if status != OK:
            return status
        drift_inplace(q, p, drifts[i + 1] * h, masses, cq)
    return OK


@njit(**_OPTS)
def hamiltonian_rhs_into(q, p, t, charges, masses, fk, fpar, ik, ipar, qdot, pdot, info):
    n = q.shape[0]
    A = np.empty(3)
    dA = np.empty((3, 3))
    gphi = np.empty(3)
    gV = np.empty((n, 3))
    v = np.empty(3)
    ik(q, t, ipar, gV)
    for j in range(n):
        phi = fk(q[j], t, fpar[j], A, dA, gphi)
        if np.isnan(phi):
            info[0] = j
            return DOMAIN
        e = charges[j]
        m = masses[j]
        for x in range(3):
            v[x] = p[j, x] - e * A[x]
            qdot[j, x] = v[x] / m
        for y in range(3):
            acc = 0.0
            for x in range(3):
                acc += v[x] * dA[x, y]
            pdot[j, y] = e / m * acc - e * gphi[y] - gV[j, y]
    return OK


@njit(**_OPTS)
def rk4_step_inplace(q, p, t, h, charges, masses, fk, fpar, ik, ipar, info, cq, cp):
    n = q.shape[0]
    kq = np.empty((4, n, 3))
    kpp = np.empty((4, n, 3))
    qs = np.empty((n, 3))
    ps = np.empty((n, 3))
    weights = (0.0, 0.5, 0.5, 1.0)
    for st in range(4):
        w = weights[st] * h
        for j in range(n):
            for x in range(3):
                if st == 0:
                    qs[j, x] = q[j, x]
                    ps[j, x] = p[j, x]
                else:
                    qs[j, x] = q[j, x] + w * kq[st - 1, j, x]
                    ps[j, x] = p[j, x] + w * kpp[st - 1, j, x]
        status = hamiltonian_rhs_into(qs, ps, t + w, charges, masses, fk, fpar, ik, ipar, kq[st], kpp[st], info)
        if status != OK:
            return status
    for j in range(n):
        for x in range(3):
            _add(q, j, x, h / 6.0 * (kq[0, j, x] + 2.0 * kq[1, j, x] + 2.0 * kq[2, j, x] + kq[3, j, x]), cq)
            _add(p, j, x, h / 6.0 * (kpp[0, j, x] + 2.0 * kpp[1, j, x] + 2.0 * kpp[2, j, x] + kpp[3, j, x]), cp)
    return OK


def n_records(n_steps, stride):
    return n_steps // stride + 1 + (1 if n_steps % stride else 0)


@njit(**_OPTS)
def _record(ts, qs, ps, slot, t, q, p):
    ts[slot] = t
    qs[slot] = q
    ps[slot] = p


@njit(**_OPTS)
def run_essrk(q0, p0, t0, h, n_steps, stride, drifts, kick_start, kick_end, a, b, c, charges, masses, fk, fpar, ik, ipar, info):
    """Returns ``(status, failed_step, ts, qs, ps)``; records every ``stride`` steps and the last."""
    m = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    ts = np.empty(m)
    qs = np.empty((m,) + q0.shape)
    ps = np.empty((m,) + p0.shape)
    q = q0.copy()
    p = p0.copy()
    cq = np.zeros_like(q)
    cp = np.zeros_like(p)
    _record(ts, qs, ps, 0, t0, q, p)
    slot = 1
    for n in range(n_steps):
        t = t0 + n * h
        status = essrk_step_inplace(q, p, t, h, drifts, kick_start, kick_end, a, b, c, charges, masses, fk, fpar, ik, ipar, info, cq, cp)
        if status != OK:
            return status, n, ts[:slot], qs[:slot], ps[:slot]
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            _record(ts, qs, ps, slot, t0 + (n + 1) * h, q, p)
            slot += 1
    return OK, n_steps, ts, qs, ps


@njit(**_OPTS)
def run_rk4(q0, p0, t0, h, n_steps, stride, charges, masses, fk, fpar, ik, ipar, info):
    m = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    ts = np.empty(m)
    qs = np.empty((m,) + q0.shape)
    ps = np.empty((m,) + p0.shape)
    q = q0.copy()
    p = p0.copy()
    cq = np.zeros_like(q)
    cp = np.zeros_like(p)
    _record(ts, qs, ps, 0, t0, q, p)
    slot = 1
    for n in range(n_steps):
        t = t0 + n * h
        status = rk4_step_inplace(q, p, t, h, charges, masses, fk, fpar, ik, ipar, info, cq, cp)
        if status != OK:
            return status, n, ts[:slot], qs[:slot], ps[:slot]
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            _record(ts, qs, ps, slot, t0 + (n + 1) * h, q, p)
            slot += 1
    return OK, n_steps, ts, qs, ps
