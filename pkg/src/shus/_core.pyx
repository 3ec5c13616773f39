# cython: language_level=3
"""Compiled chain loop; the twin of ``_pycore.py`` (see there for the state layout).

Operation order mirrors the Python version exactly so both produce the same
bits from the same noise buffers.
"""
from libc.math cimport exp, log, log1p, pow, floor

cdef enum:
    P_BETA = 0
    P_R = 1
    P_SIGMA = 2
    P_A = 3
    P_GAMMA = 4
    P_ALPHA = 5
    P_EXPO = 6
    P_LOGM = 7
    P_M = 8


cdef inline double potential(double x1, double x2) noexcept nogil:
    cdef double x1sq = x1 * x1
    cdef double dy1 = x2 - 1.0 / 3.0
    cdef double dy2 = x2 - 5.0 / 3.0
    cdef double xm = x1 - 1.0
    cdef double xp = x1 + 1.0
    cdef double x2sq = x2 * x2
    cdef double wells = exp(-xm * xm - x2sq) + exp(-xp * xp - x2sq)
    cdef double dy1sq = dy1 * dy1
    return (
        3.0 * exp(-x1sq - dy1sq)
        - 3.0 * exp(-x1sq - dy2 * dy2)
        - 5.0 * wells
        + 0.2 * x1sq * x1sq
        + 0.2 * dy1sq * dy1sq
    )


def potential_energy(double x1, double x2):
    return potential(x1, x2)


cdef inline Py_ssize_t stratum(double x1, double R, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i = <Py_ssize_t>floor((x1 + R) / (2.0 * R) * d)
    if i >= d:
        return d - 1
    return i


def run_steps(double[::1] pos, double[::1] nu, long long[::1] counters, double[::1] sums,
              long long[::1] counts, double[::1] params, int scheme,
              const double[:, ::1] normals, const double[::1] uniforms,
              Py_ssize_t start, Py_ssize_t nsteps, double exit_x1, trace):
    """Run up to ``nsteps`` adaptive MH steps reading noise from row ``start`` on.

    Stops early right after the first step whose position has
    ``x1 > exit_x1``.  Returns ``(steps_done, accepted)``.
    """
    cdef double beta = params[P_BETA]
    cdef double R = params[P_R]
    cdef double sigma = params[P_SIGMA]
    cdef double a = params[P_A]
    cdef double gamma = params[P_GAMMA]
    cdef double alpha = params[P_ALPHA]
    cdef double expo = params[P_EXPO]
    cdef double log_M = params[P_LOGM]
    cdef double M = params[P_M]
    cdef Py_ssize_t d = nu.shape[0]
    cdef double x1 = pos[0]
    cdef double x2 = pos[1]
    cdef long long n = counters[0]
    cdef long long r = counters[1]
    cdef double s = sums[0]
    cdef double ux = sums[1]
    cdef double y1, y2, uy, ratio, g, th, ind, old, new
    cdef Py_ssize_t ix, iy, h, i, k, row
    cdef long long accepted = 0
    cdef Py_ssize_t done = 0
    cdef double[:, ::1] tr
    cdef bint do_trace = trace is not None
    if do_trace:
        tr = trace
        if tr.shape[0] < nsteps or tr.shape[1] != 5:
            raise ValueError("trace buffer must have shape (>= nsteps, 5)")
    if normals.shape[0] < start + nsteps or uniforms.shape[0] < start + nsteps:
        raise ValueError("noise buffers too short")

    ix = stratum(x1, R, d)
    with nogil:
        for k in range(nsteps):
            row = start + k
            y1 = x1 + sigma * normals[row, 0]
            y2 = x2 + sigma * normals[row, 1]
            if y1 <= R and y1 >= -R:
                iy = stratum(y1, R, d)
                uy = potential(y1, y2)
                ratio = -beta * (uy - ux) - a * (nu[iy] - nu[ix])
                if log(uniforms[row]) <= ratio:
                    x1 = y1
                    x2 = y2
                    ux = uy
                    ix = iy
                    accepted += 1

            h = ix
            if scheme == 0:
                g = gamma * exp(-(log(s) + r * log_M))
            elif scheme == 1 or scheme == 2:
                g = gamma / pow(<double>(n + 1), alpha)
            elif scheme == 3:
                g = gamma / pow(log(exp(-r * log_M) + s) + r * log_M, expo)
            else:
                g = gamma * exp(-(log(s) + r * log_M))
                g = g * exp((a - 1.0) * (nu[h] - log(s)))

            if scheme == 2:
                th = exp(nu[h] - log(s))
                for i in range(d):
                    ind = 1.0 if i == h else 0.0
                    nu[i] = nu[i] + log1p(g * (ind - th))
                s = 0.0
                for i in range(d):
                    s += exp(nu[i])
            else:
                old = nu[h]
                new = old + log1p(g)
                nu[h] = new
                s = s + (exp(new) - exp(old))
                if s >= M:
                    s = 0.0
                    for i in range(d):
                        nu[i] -= log_M
                        s += exp(nu[i])
                    r += 1

            n += 1
            counts[h] += 1
            if do_trace:
                tr[k, 0] = x1
                tr[k, 1] = x2
                tr[k, 2] = h + 1
                tr[k, 3] = nu[h] - log(s)
                tr[k, 4] = g
            done = k + 1
            if x1 > exit_x1:
                break

    pos[0] = x1
    pos[1] = x2
    counters[0] = n
    counters[1] = r
    sums[0] = s
    sums[1] = ux
    return done, accepted
