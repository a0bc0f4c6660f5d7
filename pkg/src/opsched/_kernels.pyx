# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled cost kernels.

Twin of ``opsched._kernels_py``; keep the arithmetic expression order in
sync so both backends return bit-identical doubles.
"""

BACKEND = "compiled"


cpdef double exec_time(double t_s, double t_w, double c, long width, double eta_eff):
    cdef double base = t_s + t_w / width + c * (width - 1.0)
    if eta_eff == 1.0:
        return base
    return base / eta_eff


cpdef list curve_times(double t_s, double t_w, double c, double eta_eff, long max_width):
    """Execution time at every width 1..max_width, as a list."""
    cdef list out = []
    cdef long p
    cdef double base
    for p in range(1, max_width + 1):
        base = t_s + t_w / p + c * (p - 1.0)
        if eta_eff != 1.0:
            base = base / eta_eff
        out.append(base)
    return out


cpdef long best_width(double t_s, double t_w, double c, long max_width):
    """Exhaustive argmin of exec_time over 1..max_width, ties to smaller p."""
    cdef long best_p = 1
    cdef double best_t = t_s + t_w + 0.0
    cdef long p
    cdef double t
    for p in range(2, max_width + 1):
        t = t_s + t_w / p + c * (p - 1.0)
        if t < best_t:
            best_t = t
            best_p = p
    return best_p
