"""Pure-Python chain loop; the twin of ``_core.pyx``.

Both modules expose ``run_steps`` with the same signature and must perform the
same floating-point operations in the same order, so that for identical noise
buffers they produce bit-identical trajectories.  Keep them in lockstep.

State arrays are modified in place:

``pos``       float64[2]   current (x1, x2)
``nu``        float64[d]   renormalized log-occupations
``counters``  int64[2]     (n, r): step index and renormalization count
``sums``      float64[2]   (sum(exp(nu)), U(pos))
``counts``    int64[d]     post-decision visits per stratum
``params``    float64[9]   beta, R, sigma, bias exponent a, gamma-like scale,
                           WL alpha, SHUS^alpha exponent, ln M, M
"""
import math

P_BETA, P_R, P_SIGMA, P_A, P_GAMMA, P_ALPHA, P_EXPO, P_LOGM, P_M = range(9)


def potential(x1, x2):
    x1sq = x1 * x1
    dy1 = x2 - 1.0 / 3.0
    dy2 = x2 - 5.0 / 3.0
    xm = x1 - 1.0
    xp = x1 + 1.0
    x2sq = x2 * x2
    wells = math.exp(-xm * xm - x2sq) + math.exp(-xp * xp - x2sq)
    dy1sq = dy1 * dy1
    return (
        3.0 * math.exp(-x1sq - dy1sq)
        - 3.0 * math.exp(-x1sq - dy2 * dy2)
        - 5.0 * wells
        + 0.2 * x1sq * x1sq
        + 0.2 * dy1sq * dy1sq
    )


def _stratum(x1, R, d):
    i = int(math.floor((x1 + R) / (2.0 * R) * d))
    return d - 1 if i >= d else i


def run_steps(pos, nu, counters, sums, counts, params, scheme, normals, uniforms,
              start, nsteps, exit_x1, trace):
    """Run up to ``nsteps`` adaptive MH steps reading noise from row ``start`` on.

    Stops early right after the first step whose position has
    ``x1 > exit_x1``.  Returns ``(steps_done, accepted)``.
    """
    beta = float(params[P_BETA])
    R = float(params[P_R])
    sigma = float(params[P_SIGMA])
    a = float(params[P_A])
    gamma = float(params[P_GAMMA])
    alpha = float(params[P_ALPHA])
    expo = float(params[P_EXPO])
    log_M = float(params[P_LOGM])
    M = float(params[P_M])
    d = len(nu)
    x1 = float(pos[0])
    x2 = float(pos[1])
    n = int(counters[0])
    r = int(counters[1])
    s = float(sums[0])
    ux = float(sums[1])
    nu_l = [float(v) for v in nu]
    do_trace = trace is not None
    ix = _stratum(x1, R, d)
    accepted = 0
    done = 0

    for k in range(nsteps):
        row = start + k
        y1 = x1 + sigma * float(normals[row, 0])
        y2 = x2 + sigma * float(normals[row, 1])
        if y1 <= R and y1 >= -R:
            iy = _stratum(y1, R, d)
            uy = potential(y1, y2)
            ratio = -beta * (uy - ux) - a * (nu_l[iy] - nu_l[ix])
            if math.log(float(uniforms[row])) <= ratio:
                x1 = y1
                x2 = y2
                ux = uy
                ix = iy
                accepted += 1

        h = ix
        if scheme == 0:
            g = gamma * math.exp(-(math.log(s) + r * log_M))
        elif scheme == 1 or scheme == 2:
            g = gamma / math.pow(n + 1, alpha)
        elif scheme == 3:
            g = gamma / math.pow(math.log(math.exp(-r * log_M) + s) + r * log_M, expo)
        else:
            g = gamma * math.exp(-(math.log(s) + r * log_M))
            g = g * math.exp((a - 1.0) * (nu_l[h] - math.log(s)))

        if scheme == 2:
            th = math.exp(nu_l[h] - math.log(s))
            for i in range(d):
                ind = 1.0 if i == h else 0.0
                nu_l[i] = nu_l[i] + math.log1p(g * (ind - th))
            s = 0.0
            for i in range(d):
                s += math.exp(nu_l[i])
        else:
            old = nu_l[h]
            new = old + math.log1p(g)
            nu_l[h] = new
            s = s + (math.exp(new) - math.exp(old))
            if s >= M:
                s = 0.0
                for i in range(d):
                    nu_l[i] -= log_M
                    s += math.exp(nu_l[i])
                r += 1

        n += 1
        counts[h] += 1
        if do_trace:
            trace[k, 0] = x1
            trace[k, 1] = x2
            trace[k, 2] = h + 1
            trace[k, 3] = nu_l[h] - math.log(s)
            trace[k, 4] = g
        done = k + 1
        if x1 > exit_x1:
            break

    pos[0] = x1
    pos[1] = x2
    counters[0] = n
    counters[1] = r
    sums[0] = s
    sums[1] = ux
    for i in range(d):
        nu[i] = nu_l[i]
    return done, accepted
