"""Symbolic checks on the round S^2 used to fix signs and reference values.

1. For a Hessian u = nabla^2 f the exterior covariant derivative is pure
   curvature: (d u)(X, Y, Z) = df(Y) g(X, Z) - df(X) g(Y, Z).
2. The codifferential of lambda * g is -d lambda.
3. The L^2 norm squared of d(nabla^2 f) for f = exp(x) + y z, with the 1/2 of the
   2-form pairing, integrated over S^2.
"""
import sympy as sp
import numpy as np
from scipy import integrate

th, ph = sp.symbols('theta phi', real=True)
q = [th, ph]
x = sp.sin(th) * sp.cos(ph)
y = sp.sin(th) * sp.sin(ph)
z = sp.cos(th)
g = sp.diag(1, sp.sin(th) ** 2)
gi = g.inv()
m = 2

Gam = [[[sp.simplify(sum(gi[k, l] * (sp.diff(g[l, i], q[j]) + sp.diff(g[l, j], q[i]) - sp.diff(g[i, j], q[l])) / 2
                          for l in range(m))) for j in range(m)] for i in range(m)] for k in range(m)]


def hess(f):
    return sp.Matrix(m, m, lambda i, j: sp.diff(f, q[i], q[j]) - sum(Gam[k][i][j] * sp.diff(f, q[k]) for k in range(m)))


def nabla2(u):
    # (nabla_k u)_{ij}
    return [[[sp.diff(u[i, j], q[k]) - sum(Gam[l][k][i] * u[l, j] + Gam[l][k][j] * u[i, l] for l in range(m))
              for j in range(m)] for i in range(m)] for k in range(m)]


def codazzi_identity(f):
    H = hess(f)
    D = nabla2(H)
    df = [sp.diff(f, qi) for qi in q]
    worst = 0
    for a in range(m):
        for b in range(m):
            for c in range(m):
                lhs = D[a][b][c] - D[b][a][c]
                rhs = df[b] * g[a, c] - df[a] * g[b, c]
                worst = max(worst, abs(float(sp.N((lhs - rhs).subs({th: 0.7, ph: 1.3})))))
                worst = max(worst, abs(float(sp.N((lhs - rhs).subs({th: 2.1, ph: -0.4})))))
    return worst


def codiff_scalar_metric(lam):
    u = lam * g
    D = nabla2(u)
    out = []
    for c in range(m):
        v = -sum(gi[a, b] * D[a][b][c] for a in range(m) for b in range(m))
        out.append(max(abs(float(sp.N((v + sp.diff(lam, q[c])).subs(pt)))) for pt in ({th: 0.7, ph: 1.3}, {th: 2.1, ph: -0.4})))
    return out


def dhess_norm2(f):
    H = hess(f)
    D = nabla2(H)
    expr = 0
    for a in range(m):
        for b in range(m):
            for c in range(m):
                val = D[a][b][c] - D[b][a][c]
                expr += gi[a, a] * gi[b, b] * gi[c, c] * val ** 2
    dens = sp.lambdify((th, ph), sp.Rational(1, 2) * expr * sp.sin(th), 'numpy')
    val, err = integrate.dblquad(lambda p, t: dens(t, p), 0, np.pi, 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-13)
    return val, err


if __name__ == '__main__':
    f = sp.exp(x) + y * z
    print('d(hess f) identity defect      =', codazzi_identity(f))
    print('delta(lambda g) + d lambda     =', codiff_scalar_metric(x * z + y ** 3))
    val, err = dhess_norm2(f)
    print('||d hess f||^2 / 2 over S^2    = %.15g (quadrature error %.1e)' % (val, err))
