"""Independent reference implementations used by the test suite.

Everything here is deliberately brute-force: enumeration instead of active-set
logic, finite differences instead of hand gradients, raw trigonometry instead
of the barrier algebra. Slow and obviously correct is the point.
"""

import itertools

import numpy as np


def enum_qp(H, g, A, b, tol=1e-9):
    """Global minimizer of 1/2 z'Hz + g'z s.t. A z <= b by enumerating
    active sets. H must be positive definite and the problem feasible.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = H.shape[0]
    m = A.shape[0]

    z0 = np.linalg.solve(H, -g)
    if m == 0 or np.all(A @ z0 <= b + tol):
        return z0

    best_z, best_obj = None, np.inf
    for k in range(1, min(n, m) + 1):
        for subset in itertools.combinations(range(m), k):
            S = list(subset)
            K = np.zeros((n + k, n + k))
            K[:n, :n] = H
            K[:n, n:] = A[S].T
            K[n:, :n] = A[S]
            rhs = np.concatenate([-g, b[S]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            z, lam = sol[:n], sol[n:]
            if np.any(lam < -tol):
                continue
            if np.any(A @ z > b + 1e-8):
                continue
            obj = 0.5 * z @ H @ z + g @ z
            if obj < best_obj:
                best_z, best_obj = z, obj
    assert best_z is not None, "oracle found no KKT point; QP not as assumed"
    return best_z


def fd_gradient(f, x, h=1e-6):
    """Central finite-difference gradient of scalar f at x."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        out[i] = (f(x + e) - f(x - e)) / (2.0 * e[i])
    return out


def fd_jacobian(f, x, h=1e-6):
    """Central finite-difference Jacobian of vector f at x."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    J = np.zeros((f0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        J[:, i] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * e[i])
    return J


def cone_membership_trig(p, w, radius):
    """True when the relative velocity w sits inside the collision cone.

    Pure trigonometry: the cone apex is at the ego, its axis points at the
    obstacle centre (along p), and its half-angle is asin(r / |p|). w is
    inside when its angle to the axis is below the half-angle. Requires
    |p| > radius and |w| > 0.
    """
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    p_norm = float(np.linalg.norm(p))
    w_norm = float(np.linalg.norm(w))
    half = np.arcsin(radius / p_norm)
    # the threatening direction is w pointing from the obstacle toward
    # the ego, i.e. along -p
    cos_to_axis = float((-p) @ w) / (p_norm * w_norm)
    angle = np.arccos(np.clip(cos_to_axis, -1.0, 1.0))
    return angle < half


def rel_err(got, want, floor=1e-7):
    """Elementwise relative error with an absolute floor."""
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    return np.abs(got - want) / np.maximum(np.abs(want), floor)
