# cython: language_level=3
"""Compiled kernels; line-for-line mirror of ``_pykernels``."""
from libc.math cimport sqrt, sin, cos, asin, atan2, floor, fmod, fabs, M_PI

NAME = "cython"

cdef double TWO_PI = 2.0 * M_PI
cdef double DRIFT_TOL = 1e-9
cdef double U_EDGE_TOL = 1e-12

STATUS_OK = 0
STATUS_STUCK = 1
STATUS_DRIFT = 2
STATUS_INVALID = 3


cdef inline double pmod(double x, double m) nogil:
    # Python float % semantics for positive m
    cdef double r = fmod(x, m)
    if r != 0.0:
        if r < 0.0:
            r += m
    else:
        r = 0.0
    return r


cdef inline double sq_err(double a) nogil:
    # rounding error of a * a (Dekker)
    cdef double p = a * a
    cdef double c = 134217729.0 * a
    cdef double hi = c - (c - a)
    cdef double lo = a - hi
    return ((hi * hi - p) + 2.0 * hi * lo) + lo * lo


cdef inline void c_unit(double *nx, double *ny) nogil:
    cdef double px = nx[0] * nx[0]
    cdef double py = ny[0] * ny[0]
    cdef double s = px + py
    cdef double bb = s - px
    cdef double t = (px - (s - bb)) + (py - bb)
    cdef double half = 0.5 * ((s - 1.0) + (t + sq_err(nx[0]) + sq_err(ny[0])))
    nx[0] = nx[0] - nx[0] * half
    ny[0] = ny[0] - ny[0] * half


cdef inline int c_next_hit(double px, double py, double vx, double vy, double R,
                           double *t_out) nogil:
    cdef double a = vx * vx + vy * vy
    cdef double b, rr, c_in, c_out, disc, s, t
    if a == 0.0:
        t_out[0] = -1.0
        return -1
    b = px * vx + py * vy
    rr = px * px + py * py
    if b < 0.0:
        c_in = rr - R * R
        disc = b * b - a * c_in
        if disc > 0.0:
            t = c_in / (-b + sqrt(disc))
            t_out[0] = t if t > 0.0 else 0.0
            return 0
    c_out = rr - 1.0
    disc = b * b - a * c_out
    if disc < 0.0:
        disc = 0.0
    s = sqrt(disc)
    if b > 0.0:
        t = -c_out / (b + s)
    else:
        t = (-b + s) / a
    t_out[0] = t if t > 0.0 else 0.0
    return 1


def next_hit(double px, double py, double vx, double vy, double R):
    cdef double t
    cdef int w = c_next_hit(px, py, vx, vy, R, &t)
    return t, w


def run_events(double R, double[::1] eta, signed char[::1] has_rotor,
               double[:, ::1] pos, double[:, ::1] vel, double[::1] tref,
               double[::1] omega, double clock, long long n_events, double t_max,
               double[::1] ev_time, long long[::1] ev_particle, signed char[::1] ev_wall,
               double[:, ::1] ev_pos, double[:, ::1] ev_vel_pre, double[:, ::1] ev_vel_post,
               double[:, ::1] ev_omega_pre, double[:, ::1] ev_omega_post):
    cdef Py_ssize_t n_p = pos.shape[0]
    cdef double radius[2]
    cdef double next_t[2]
    # flight times are kept apart from the clock so late events stay exact
    cdef double next_dt[2]
    cdef int next_w[2]
    cdef Py_ssize_t i, j
    cdef long long k = 0
    cdef int status = 0
    cdef int w
    cdef double t, dt, r, qx, qy, norm, nx, ny, vx, vy, vn, vt, e, rw, h, d
    if n_p > 2:
        raise ValueError("at most two particles")
    radius[0] = R
    radius[1] = 1.0
    for i in range(n_p):
        w = c_next_hit(pos[i, 0], pos[i, 1], vel[i, 0], vel[i, 1], R, &dt)
        if w < 0:
            return 0, clock, 1
        next_t[i] = tref[i] + dt
        next_dt[i] = dt
        next_w[i] = w

    with nogil:
        while k < n_events:
            i = 0
            for j in range(1, n_p):
                if next_t[j] < next_t[i]:
                    i = j
            t = next_t[i]
            if t > t_max:
                break
            w = next_w[i]
            r = radius[w]
            dt = next_dt[i]
            qx = pos[i, 0] + dt * vel[i, 0]
            qy = pos[i, 1] + dt * vel[i, 1]
            norm = sqrt(qx * qx + qy * qy)
            if fabs(norm - r) > DRIFT_TOL:
                status = 2
                break
            nx = qx / norm
            ny = qy / norm
            c_unit(&nx, &ny)
            qx = r * nx
            qy = r * ny
            vx = vel[i, 0]
            vy = vel[i, 1]
            vn = vx * nx + vy * ny
            vt = -vx * ny + vy * nx

            ev_time[k] = t
            ev_particle[k] = i
            ev_wall[k] = w
            ev_pos[k, 0] = qx
            ev_pos[k, 1] = qy
            ev_vel_pre[k, 0] = vx
            ev_vel_pre[k, 1] = vy
            ev_omega_pre[k, 0] = omega[0]
            ev_omega_pre[k, 1] = omega[1]

            if has_rotor[w]:
                # rounded coefficients would bias the energy by slip^2 each bounce;
                # taking eta as fl(1 + eta) - 1 (exact) leaves only unbiased rounding
                h = 1.0 + eta[w]
                e = h - 1.0
                rw = r * omega[w]
                d = 2.0 * (vt - rw) / h
                vt = vt - e * d
                omega[w] = (rw + d) / r
            vn = -vn
            vx = vn * nx - vt * ny
            vy = vn * ny + vt * nx
            vel[i, 0] = vx
            vel[i, 1] = vy
            pos[i, 0] = qx
            pos[i, 1] = qy
            tref[i] = t
            clock = t

            ev_vel_post[k, 0] = vx
            ev_vel_post[k, 1] = vy
            ev_omega_post[k, 0] = omega[0]
            ev_omega_post[k, 1] = omega[1]
            k += 1

            w = c_next_hit(qx, qy, vx, vy, R, &dt)
            if w < 0:
                status = 1
                break
            next_t[i] = t + dt
            next_dt[i] = dt
            next_w[i] = w

    if status == 0 and k < n_events and t_max > clock:
        clock = t_max
    for i in range(n_p):
        dt = clock - tref[i]
        pos[i, 0] += dt * vel[i, 0]
        pos[i, 1] += dt * vel[i, 1]
        tref[i] = clock
    return k, clock, status


cdef inline bint c_in_arcs(double s, double[:, ::1] arcs) nogil:
    cdef Py_ssize_t j
    cdef double d, length
    for j in range(arcs.shape[0]):
        length = arcs[j, 1]
        if length >= 1.0:
            return True
        d = pmod(s - arcs[j, 0], 1.0)
        if 0.0 < d < length:
            return True
    return False


cdef inline double c_edge_distance(double s, double[:, ::1] arcs) nogil:
    cdef Py_ssize_t j
    cdef int m
    cdef double best = 1.0
    cdef double e, d
    for j in range(arcs.shape[0]):
        if arcs[j, 1] >= 1.0:
            continue
        for m in range(2):
            e = arcs[j, 0] if m == 0 else arcs[j, 0] + arcs[j, 1]
            d = fabs(pmod(s - e + 0.5, 1.0) - 0.5)
            if d < best:
                best = d
    return best


def in_arcs(double s, double[:, ::1] arcs):
    return c_in_arcs(s, arcs)


def edge_distance(double s, double[:, ::1] arcs):
    return c_edge_distance(s, arcs)


def base_orbit(double s0, int sheet0, double gamma, double[:, ::1] arcs, long long n,
               double[::1] s_out, signed char[::1] sheet_out):
    cdef double s = pmod(s0, 1.0)
    cdef int sheet = sheet0
    cdef long long nudged = 0
    cdef long long k
    cdef bint inside
    s_out[0] = s
    sheet_out[0] = sheet
    with nogil:
        for k in range(1, n + 1):
            if c_edge_distance(s, arcs) < U_EDGE_TOL:
                s = pmod(s + U_EDGE_TOL, 1.0)
                nudged += 1
            inside = c_in_arcs(s, arcs)
            if sheet == 1:
                if inside:
                    with gil:
                        return k, nudged, 3
                s = pmod(-s, 1.0)
                sheet = 2
            elif inside:
                s = pmod(-s, 1.0)
            else:
                s = pmod(-s - gamma, 1.0)
                sheet = 1
            s_out[k] = s
            sheet_out[k] = sheet
    return n + 1, nudged, 0


cdef inline void c_velocity(double s, double[::1] circ, double *x, double *y, double *z) nogil:
    cdef double th = TWO_PI * s
    cdef double c = cos(th)
    cdef double sn = sin(th)
    cdef double r = circ[9]
    x[0] = circ[0] + r * (c * circ[3] + sn * circ[6])
    y[0] = circ[1] + r * (c * circ[4] + sn * circ[7])
    z[0] = circ[2] + r * (c * circ[5] + sn * circ[8])


cdef inline void c_outer_leg(double s, double[::1] circ, double R, double F,
                             double *beta, double *speed) nogil:
    cdef double x, y, z, w2, w
    c_velocity(s, circ, &x, &y, &z)
    w2 = F - x * x / (R * R) - y * y - z * z
    w = sqrt(w2) if w2 > 0.0 else 0.0
    beta[0] = atan2(z, w)
    speed[0] = sqrt(z * z + w * w)


cdef inline void c_inner_half(double beta, double speed, double R,
                              double *h, double *t) nogil:
    cdef double sb = sin(beta)
    cdef double rad = R * R - sb * sb
    cdef double q
    if rad < 0.0:
        rad = 0.0
    q = sb / R
    if q > 1.0:
        q = 1.0
    elif q < -1.0:
        q = -1.0
    h[0] = asin(q) - beta
    t[0] = (cos(beta) - sqrt(rad)) / speed


cdef inline double c_wrap_pi(double a) nogil:
    return M_PI - pmod(M_PI - a, TWO_PI)


cdef inline void c_alpha_tau(double s, double[::1] circ, double R, double F, double gamma,
                             bint inside, double *alpha, double *tau) nogil:
    cdef double beta, speed, h1, t1, beta2, speed2, h2, t2
    c_outer_leg(s, circ, R, F, &beta, &speed)
    if inside:
        alpha[0] = c_wrap_pi(M_PI - 2.0 * beta) / TWO_PI
        tau[0] = 2.0 * cos(beta) / speed
        return
    c_inner_half(beta, speed, R, &h1, &t1)
    c_outer_leg(pmod(-s - gamma, 1.0), circ, R, F, &beta2, &speed2)
    c_inner_half(beta2, speed2, R, &h2, &t2)
    alpha[0] = c_wrap_pi(h1 + h2) / TWO_PI
    tau[0] = t1 + t2


def alpha_tau(double s, double[::1] circ, double R, double F, double gamma, bint inside):
    cdef double a, t
    c_alpha_tau(s, circ, R, F, gamma, inside, &a, &t)
    return a, t


def skew_orbit(double[::1] circ, double R, double F, double gamma, double[:, ::1] arcs,
               double s0, double phi0, double clock0, long long n,
               double[::1] s_out, double[::1] phi_out, long long[::1] wind_out,
               double[::1] clock_out, signed char[::1] branch_out):
    cdef double s = pmod(s0, 1.0)
    cdef double phi = pmod(phi0, 1.0)
    cdef long long wind = <long long> floor(phi0)
    cdef double clock = clock0
    cdef long long nudged = 0
    cdef long long k
    cdef bint inside
    cdef double a, tau, f
    s_out[0] = s
    phi_out[0] = phi
    wind_out[0] = wind
    clock_out[0] = clock
    with nogil:
        for k in range(1, n + 1):
            if c_edge_distance(s, arcs) < U_EDGE_TOL:
                s = pmod(s + U_EDGE_TOL, 1.0)
                nudged += 1
            inside = c_in_arcs(s, arcs)
            c_alpha_tau(s, circ, R, F, gamma, inside, &a, &tau)
            branch_out[k - 1] = 1 if inside else 0
            phi += a
            f = floor(phi)
            phi -= f
            wind += <long long> f
            clock += tau
            if inside:
                s = pmod(-s, 1.0)
            else:
                s = pmod(s + gamma, 1.0)
            s_out[k] = s
            phi_out[k] = phi
            wind_out[k] = wind
            clock_out[k] = clock
    return n + 1, nudged
