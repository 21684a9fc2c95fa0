"""Pure-Python reference kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; the
package uses whichever is importable (see ``_backend``).  Arrays are
numpy, loops are plain Python over ``math`` functions.
"""
import math

NAME = "python"

TWO_PI = 2.0 * math.pi
#: containment tolerance before an event aborts with a drift status
DRIFT_TOL = 1e-9
#: orbit points this close to the boundary of U are nudged forward
U_EDGE_TOL = 1e-12

STATUS_OK = 0
STATUS_STUCK = 1
STATUS_DRIFT = 2
STATUS_INVALID = 3


def _sq_err(a):
    # rounding error of a * a (Dekker)
    p = a * a
    c = 134217729.0 * a
    hi = c - (c - a)
    lo = a - hi
    return ((hi * hi - p) + 2.0 * hi * lo) + lo * lo


def unit(nx, ny):
    """One Newton step towards |n| = 1 with |n|^2 - 1 evaluated error-free.

    Plain ``q / |q|`` comes out long by ~5e-17 on average, which makes
    every reflection inflate the speed and breaks long-run conservation.
    """
    px, py = nx * nx, ny * ny
    s = px + py
    bb = s - px
    t = (px - (s - bb)) + (py - bb)
    half = 0.5 * ((s - 1.0) + (t + _sq_err(nx) + _sq_err(ny)))
    return nx - nx * half, ny - ny * half


def next_hit(px, py, vx, vy, R):
    """Time to the next wall and the wall index (0 inner, 1 outer).

    Returns ``(-1.0, -1)`` for a particle at rest.
    """
    a = vx * vx + vy * vy
    if a == 0.0:
        return -1.0, -1
    b = px * vx + py * vy
    rr = px * px + py * py
    if b < 0.0:
        c_in = rr - R * R
        disc = b * b - a * c_in
        if disc > 0.0:
            # smaller root of the inner quadratic, cancellation-free form
            t = c_in / (-b + math.sqrt(disc))
            return (t if t > 0.0 else 0.0), 0
    c_out = rr - 1.0
    disc = b * b - a * c_out
    if disc < 0.0:
        disc = 0.0
    s = math.sqrt(disc)
    if b > 0.0:
        t = -c_out / (b + s)
    else:
        t = (-b + s) / a
    return (t if t > 0.0 else 0.0), 1


def run_events(R, eta, has_rotor, pos, vel, tref, omega, clock, n_events, t_max,
               ev_time, ev_particle, ev_wall, ev_pos, ev_vel_pre, ev_vel_post,
               ev_omega_pre, ev_omega_post):
    """Advance the event-driven simulation in place.

    ``pos[i]`` is particle ``i``'s position at its reference time
    ``tref[i]``; on return every particle is advanced to the returned clock.
    ``eta``/``has_rotor``/``omega`` are indexed by wall (0 inner, 1 outer).
    Returns ``(n_recorded, clock, status)``.
    """
    n_p = pos.shape[0]
    radius = (R, 1.0)
    next_t = [0.0] * n_p
    next_w = [0] * n_p
    # flight times are kept apart from the clock so late events stay exact
    next_dt = [0.0] * n_p
    for i in range(n_p):
        dt, w = next_hit(pos[i, 0], pos[i, 1], vel[i, 0], vel[i, 1], R)
        if w < 0:
            return 0, clock, STATUS_STUCK
        next_t[i] = tref[i] + dt
        next_dt[i] = dt
        next_w[i] = w

    k = 0
    status = STATUS_OK
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
        norm = math.sqrt(qx * qx + qy * qy)
        if abs(norm - r) > DRIFT_TOL:
            status = STATUS_DRIFT
            break
        nx, ny = unit(qx / norm, qy / norm)
        qx, qy = r * nx, r * ny
        vx, vy = vel[i, 0], vel[i, 1]
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

        dt, w = next_hit(qx, qy, vx, vy, R)
        if w < 0:
            status = STATUS_STUCK
            break
        next_t[i] = t + dt
        next_dt[i] = dt
        next_w[i] = w

    if status == STATUS_OK and k < n_events and t_max > clock:
        clock = t_max
    for i in range(n_p):
        dt = clock - tref[i]
        pos[i, 0] += dt * vel[i, 0]
        pos[i, 1] += dt * vel[i, 1]
        tref[i] = clock
    return k, clock, status


def in_arcs(s, arcs):
    for j in range(arcs.shape[0]):
        length = arcs[j, 1]
        if length >= 1.0:
            return True
        d = (s - arcs[j, 0]) % 1.0
        if 0.0 < d < length:
            return True
    return False


def edge_distance(s, arcs):
    best = 1.0
    for j in range(arcs.shape[0]):
        if arcs[j, 1] >= 1.0:
            continue
        for e in (arcs[j, 0], arcs[j, 0] + arcs[j, 1]):
            d = abs((s - e + 0.5) % 1.0 - 0.5)
            if d < best:
                best = d
    return best


def base_orbit(s0, sheet0, gamma, arcs, n, s_out, sheet_out):
    """Iterate the two-sheet base map; sheet 1 is inner-outgoing, 2 outer-outgoing.

    Writes ``n + 1`` states (including the start).  Returns
    ``(n_written, n_nudged, status)``.
    """
    s = s0 % 1.0
    sheet = sheet0
    nudged = 0
    s_out[0] = s
    sheet_out[0] = sheet
    for k in range(1, n + 1):
        if edge_distance(s, arcs) < U_EDGE_TOL:
            s = (s + U_EDGE_TOL) % 1.0
            nudged += 1
        inside = in_arcs(s, arcs)
        if sheet == 1:
            if inside:
                return k, nudged, STATUS_INVALID
            s = (-s) % 1.0
            sheet = 2
        elif inside:
            s = (-s) % 1.0
        else:
            s = (-s - gamma) % 1.0
            sheet = 1
        s_out[k] = s
        sheet_out[k] = sheet
    return n + 1, nudged, STATUS_OK


def _velocity(s, circ):
    th = TWO_PI * s
    c, sn = math.cos(th), math.sin(th)
    r = circ[9]
    return (circ[0] + r * (c * circ[3] + sn * circ[6]),
            circ[1] + r * (c * circ[4] + sn * circ[7]),
            circ[2] + r * (c * circ[5] + sn * circ[8]))


def _outer_leg(s, circ, R, F):
    x, y, z = _velocity(s, circ)
    w2 = F - x * x / (R * R) - y * y - z * z
    w = math.sqrt(w2) if w2 > 0.0 else 0.0
    return math.atan2(z, w), math.sqrt(z * z + w * w)


def _inner_half(beta, speed, R):
    sb = math.sin(beta)
    rad = R * R - sb * sb
    if rad < 0.0:
        rad = 0.0
    q = sb / R
    q = 1.0 if q > 1.0 else (-1.0 if q < -1.0 else q)
    return math.asin(q) - beta, (math.cos(beta) - math.sqrt(rad)) / speed


def _wrap_pi(a):
    return math.pi - (math.pi - a) % TWO_PI


def alpha_tau(s, circ, R, F, gamma, inside):
    """Fiber advance (turns) and flight time from the outer bounce at ``s``."""
    beta, speed = _outer_leg(s, circ, R, F)
    if inside:
        return _wrap_pi(math.pi - 2.0 * beta) / TWO_PI, 2.0 * math.cos(beta) / speed
    h1, t1 = _inner_half(beta, speed, R)
    beta2, speed2 = _outer_leg((-s - gamma) % 1.0, circ, R, F)
    h2, t2 = _inner_half(beta2, speed2, R)
    return _wrap_pi(h1 + h2) / TWO_PI, t1 + t2


def skew_orbit(circ, R, F, gamma, arcs, s0, phi0, clock0, n,
               s_out, phi_out, wind_out, clock_out, branch_out):
    """Iterate ``(s, phi) -> (T_O s, phi + alpha(s))`` with clock bookkeeping.

    ``circ`` packs center, e1, e2 and radius (10 floats). ``phi`` is kept
    in ``[0, 1)`` with the integer winding stored separately; ``branch_out``
    marks steps taken from inside U.  Returns ``(n_written, n_nudged)``.
    """
    s = s0 % 1.0
    phi = phi0 % 1.0
    wind = int(math.floor(phi0))
    clock = clock0
    nudged = 0
    s_out[0] = s
    phi_out[0] = phi
    wind_out[0] = wind
    clock_out[0] = clock
    for k in range(1, n + 1):
        if edge_distance(s, arcs) < U_EDGE_TOL:
            s = (s + U_EDGE_TOL) % 1.0
            nudged += 1
        inside = in_arcs(s, arcs)
        a, tau = alpha_tau(s, circ, R, F, gamma, inside)
        branch_out[k - 1] = 1 if inside else 0
        phi += a
        f = math.floor(phi)
        phi -= f
        wind += int(f)
        clock += tau
        s = (-s) % 1.0 if inside else (s + gamma) % 1.0
        s_out[k] = s
        phi_out[k] = phi
        wind_out[k] = wind
        clock_out[k] = clock
    return n + 1, nudged
