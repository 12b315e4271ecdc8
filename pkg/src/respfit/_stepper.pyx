# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 method-of-steps stepper (hot kernel).

Expression-for-expression identical to ``_stepper_py.integrate`` so the two
backends produce bit-identical trajectories; see that module for the contract.
Compiled without fast-math to keep IEEE semantics.
"""

from libc.math cimport exp, isfinite


def integrate(
    double alpha,
    double beta,
    double vent_gain,
    double vent_rate,
    double vent_offset,
    double h,
    Py_ssize_t n_steps,
    Py_ssize_t n_delay,
    double[::1] hist_x,
    double[::1] hist_y,
    double[::1] hist_mid_x,
    double[::1] hist_mid_y,
    double[::1] x,
    double[::1] y,
    double[::1] dx,
    double[::1] dy,
):
    cdef Py_ssize_t k, i1, i4
    cdef double xd1, yd1, xdm, ydm, xd4, yd4
    cdef double u0, u1, d0, d1
    cdef double v1, vm, v4
    cdef double xk, yk, xn, yn
    cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y
    cdef double half_h = 0.5 * h
    cdef double h6 = h / 6.0
    cdef Py_ssize_t status = 0

    for k in range(n_steps):
        i1 = k - n_delay
        if i1 < 0:
            xd1 = hist_x[k]
            yd1 = hist_y[k]
            xdm = hist_mid_x[k]
            ydm = hist_mid_y[k]
        else:
            xd1 = x[i1]
            yd1 = y[i1]
            u0 = x[i1]
            u1 = x[i1 + 1]
            d0 = dx[i1]
            d1 = dx[i1 + 1]
            xdm = 0.5 * (u0 + u1) + 0.125 * h * (d0 - d1)
            u0 = y[i1]
            u1 = y[i1 + 1]
            d0 = dy[i1]
            d1 = dy[i1 + 1]
            ydm = 0.5 * (u0 + u1) + 0.125 * h * (d0 - d1)
        i4 = k + 1 - n_delay
        if i4 < 0:
            xd4 = hist_x[k + 1]
            yd4 = hist_y[k + 1]
        else:
            xd4 = x[i4]
            yd4 = y[i4]

        v1 = vent_gain * exp(-vent_rate * (vent_offset - yd1)) * xd1
        vm = vent_gain * exp(-vent_rate * (vent_offset - ydm)) * xdm
        v4 = vent_gain * exp(-vent_rate * (vent_offset - yd4)) * xd4

        xk = x[k]
        yk = y[k]
        k1x = 1.0 - alpha * v1 * xk
        k1y = 1.0 - beta * v1 * yk
        k2x = 1.0 - alpha * vm * (xk + half_h * k1x)
        k2y = 1.0 - beta * vm * (yk + half_h * k1y)
        k3x = 1.0 - alpha * vm * (xk + half_h * k2x)
        k3y = 1.0 - beta * vm * (yk + half_h * k2y)
        k4x = 1.0 - alpha * v4 * (xk + h * k3x)
        k4y = 1.0 - beta * v4 * (yk + h * k3y)
        dx[k] = k1x
        dy[k] = k1y
        xn = xk + h6 * (k1x + 2.0 * (k2x + k3x) + k4x)
        yn = yk + h6 * (k1y + 2.0 * (k2y + k3y) + k4y)
        if not (isfinite(xn) and isfinite(yn)):
            status = k + 1
            break
        x[k + 1] = xn
        y[k + 1] = yn

    if status == 0:
        i1 = n_steps - n_delay
        if i1 < 0:
            xd1 = hist_x[n_steps]
            yd1 = hist_y[n_steps]
        else:
            xd1 = x[i1]
            yd1 = y[i1]
        v1 = vent_gain * exp(-vent_rate * (vent_offset - yd1)) * xd1
        dx[n_steps] = 1.0 - alpha * v1 * x[n_steps]
        dy[n_steps] = 1.0 - beta * v1 * y[n_steps]

    return status
