"""Pure-Python cost kernels.

Fallback twin of the compiled module ``opsched._kernels``.  Both expose the
same three functions with identical floating-point behaviour; keep the
arithmetic expression order in sync when editing either one.
"""

BACKEND = "python"


def exec_time(t_s, t_w, c, width, eta_eff):
    base = t_s + t_w / width + c * (width - 1.0)
    if eta_eff == 1.0:
        return base
    return base / eta_eff


def curve_times(t_s, t_w, c, eta_eff, max_width):
    """Execution time at every width 1..max_width, as a list."""
    out = []
    for p in range(1, max_width + 1):
        base = t_s + t_w / p + c * (p - 1.0)
        if eta_eff != 1.0:
            base = base / eta_eff
        out.append(base)
    return out


def best_width(t_s, t_w, c, max_width):
    """Exhaustive argmin of exec_time over 1..max_width, ties to smaller p."""
    best_p = 1
    best_t = t_s + t_w + 0.0
    for p in range(2, max_width + 1):
        t = t_s + t_w / p + c * (p - 1.0)
        if t < best_t:
            best_t = t
            best_p = p
    return best_p
