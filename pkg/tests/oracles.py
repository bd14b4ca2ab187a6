"""Independent reference computations for the test suite.

Everything here works on plain numpy callables at a single point, with
fourth-order central differences.  Nothing is imported from the package, so
agreement with it is a genuine cross-check.
"""

import numpy as np

H_FIRST = 1e-3


def derivative(f, x, h=H_FIRST):
    """``out[..., k] = d f / d x^k`` by the five-point stencil."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h))
    return np.stack(cols, axis=-1)


def christoffel(gfun, x):
    """``G[k, i, j]`` of the Levi-Civita connection of the metric callable ``gfun``."""
    g = gfun(x)
    dg = derivative(gfun, x)  # [i, j, k] = d_k g_ij
    ginv = np.linalg.inv(g)
    low = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg))
    return np.einsum("kl,lij->kij", ginv, low)


def riemann(gfun, x):
    """``R[l, k, i, j] = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik``."""
    gam = christoffel(gfun, x)
    dgam = derivative(lambda y: christoffel(gfun, y), x)  # [l, a, b, c] = d_c G^l_ab
    term = np.einsum("ljki->lkij", dgam)
    quad = np.einsum("lim,mjk->lkij", gam, gam)
    return term - np.swapaxes(term, -1, -2) + quad - np.swapaxes(quad, -1, -2)


def ricci(gfun, x):
    return np.einsum("lbla->ab", riemann(gfun, x))


def scalar(gfun, x):
    return np.einsum("ab,ab->", np.linalg.inv(gfun(x)), ricci(gfun, x))


def schouten(gfun, x):
    n = len(x)
    return (ricci(gfun, x) - scalar(gfun, x) / (2 * (n - 1)) * gfun(x)) / (n - 2)


def hessian_scalar(f, x):
    """Coordinate second derivatives of a scalar callable."""
    return derivative(lambda y: derivative(f, y), x)


def covariant_hessian(gfun, f, x):
    return hessian_scalar(f, x) - np.einsum("kij,k->ij", christoffel(gfun, x), derivative(f, x))


def conformal(gfun, u):
    return lambda x: np.exp(2 * u(x)) * gfun(x)


# -- sample metrics ---------------------------------------------------------------

def sphere(x):
    return np.diag([1.0, np.sin(x[0]) ** 2])


def hyperbolic_disc(x):
    r2 = x[0] ** 2 + x[1] ** 2
    return 4 / (1 - r2) ** 2 * np.eye(2)


def wavy(x):
    """A generic non-diagonal surface metric."""
    return np.array([[1 + x[0] ** 2 * x[1] ** 2, 0.3 * np.sin(x[0])],
                     [0.3 * np.sin(x[0]), 2 + np.cos(x[1])]])


def sphere3(x):
    a, b = np.sin(x[0]) ** 2, np.sin(x[1]) ** 2
    return np.diag([1.0, a, a * b])


# -- ambient space --------------------------------------------------------------------

def ambient_metric(gfun, afun):
    """``d(rho t) dt + dt d(rho t) + t^2 g alpha(rho)`` in coordinates ``(t, rho, x)``."""
    def gt(p):
        t, rho, x = p[0], p[1], p[2:]
        n = len(x)
        out = np.zeros((n + 2, n + 2))
        out[0, 0] = 2 * rho
        out[0, 1] = out[1, 0] = t
        block = gfun(x) @ afun(rho, x)
        out[2:, 2:] = t ** 2 * 0.5 * (block + block.T)
        return out
    return gt


def sphere_alpha(rho, x):
    return (1 + rho / 2) ** 2 * np.eye(2)


def identity_alpha(rho, x):
    return np.eye(len(x))


def immersion(u):
    """``x -> (e^{u(x)}, 0, x)``."""
    return lambda x: np.concatenate([[np.exp(u(x)), 0.0], x])


def normal_part(gt, dpsi, X):
    """Component of ``X`` gt-orthogonal to the columns of ``dpsi``."""
    G = dpsi.T @ gt @ dpsi
    tangent = dpsi @ np.linalg.solve(G, dpsi.T @ gt @ X)
    return X - tangent


def second_fundamental_form(gfun, afun, u, x):
    """``II[:, i, j]`` as ambient vectors, from the ambient connection by differences."""
    gt_fun = ambient_metric(gfun, afun)
    psi = immersion(u)
    p = psi(x)
    dpsi = derivative(psi, x)
    ddpsi = derivative(lambda y: derivative(psi, y), x)
    gam = christoffel(gt_fun, p)
    acc = ddpsi + np.einsum("abc,bi,cj->aij", gam, dpsi, dpsi)
    gt = gt_fun(p)
    n = len(x)
    out = np.zeros_like(acc)
    for i in range(n):
        for j in range(n):
            out[:, i, j] = normal_part(gt, dpsi, acc[:, i, j])
    return out


def mean_curvature_norm_sq(gfun, afun, u, x):
    ii = second_fundamental_form(gfun, afun, u, x)
    hinv = np.linalg.inv(conformal(gfun, u)(x))
    H = np.einsum("ij,aij->a", hinv, ii) / len(x)
    gt = ambient_metric(gfun, afun)(immersion(u)(x))
    return H @ gt @ H
