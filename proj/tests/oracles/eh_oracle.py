"""Eguchi-Hanson reference values by symbolic differentiation of the Cartesian chart.

Independent of the C++ jets: derivatives come from sympy, the curvature is
assembled at 40-digit precision. Prints the values frozen into the tests.
"""
import sympy as sp
import mpmath as mp

mp.mp.dps = 40
x = sp.symbols('x1:5', real=True)
a = sp.Integer(1)
r2 = sum(xi**2 for xi in x)
f2 = 1 - a**4 / r2**2
X = sp.Matrix(x)
JX = sp.Matrix([-x[1], x[0], -x[3], x[2]])
g = sp.eye(4) + (1 / f2 - 1) * X * X.T / r2 + (f2 - 1) * JX * JX.T / r2
n = 4


def jets(pt):
    sub = dict(zip(x, pt))
    G = [[g[i, j] for j in range(n)] for i in range(n)]
    g0 = [[mp.mpf(sp.N(G[i][j].subs(sub), 45)) for j in range(n)] for i in range(n)]
    dg = [[[mp.mpf(sp.N(sp.diff(G[i][j], x[k]).subs(sub), 45)) for k in range(n)]
           for j in range(n)] for i in range(n)]
    ddg = [[[[mp.mpf(sp.N(sp.diff(G[i][j], x[k], x[l]).subs(sub), 45)) for l in range(n)]
             for k in range(n)] for j in range(n)] for i in range(n)]
    return g0, dg, ddg


def curvature(pt):
    g0, dg, ddg = jets(pt)
    gm = mp.matrix(g0)
    gi = gm ** -1
    # Christoffel of the first kind and second kind
    G1 = [[[(dg[i][k][j] + dg[j][k][i] - dg[i][j][k]) / 2 for k in range(n)] for j in range(n)] for i in range(n)]
    G2 = [[[sum(gi[m, k] * G1[i][j][k] for k in range(n)) for m in range(n)] for j in range(n)] for i in range(n)]
    # Rm(i,j,k,l) = g(R(e_i,e_j)e_k, e_l)
    Rm = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    v = (ddg[j][l][i][k] + ddg[i][k][j][l] - ddg[i][l][j][k] - ddg[j][k][i][l]) / 2
                    v = -v
                    for p in range(n):
                        for q in range(n):
                            v += g0[p][q] * (G2[j][l][p] * G2[i][k][q] - G2[i][l][p] * G2[j][k][q]) * -1
                    Rm[i, j, k, l] = v
    return gm, gi, Rm


def invariants(pt):
    gm, gi, Rm = curvature(pt)
    idx = range(n)
    ric = [[sum(gi[k, l] * Rm[k, i, j, l] for k in idx for l in idx) for j in idx] for i in idx]
    up = {}
    kret = mp.mpf(0)
    for i in idx:
        for j in idx:
            for k in idx:
                for l in idx:
                    s = mp.mpf(0)
                    for a_ in idx:
                        for b in idx:
                            for c in idx:
                                for d in idx:
                                    s += gi[i, a_] * gi[j, b] * gi[k, c] * gi[l, d] * Rm[a_, b, c, d]
                    kret += s * Rm[i, j, k, l]
    # curvature operator in an orthonormal frame from Cholesky of g
    L = mp.cholesky(gm)
    E = L.T ** -1  # columns orthonormal
    pairs = [(i, j) for i in idx for j in idx if i < j]
    Rf = {}
    for i in idx:
        for j in idx:
            for k in idx:
                for l in idx:
                    s = mp.mpf(0)
                    for a_ in idx:
                        for b in idx:
                            for c in idx:
                                for d in idx:
                                    s += E[a_, i] * E[b, j] * E[c, k] * E[d, l] * Rm[a_, b, c, d]
                    Rf[i, j, k, l] = s
    Op = mp.matrix(6, 6)
    for P, (i, j) in enumerate(pairs):
        for Q, (k, l) in enumerate(pairs):
            Op[P, Q] = Rf[i, j, l, k]
    ricn = mp.sqrt(sum(ric[i][j] ** 2 for i in idx for j in idx))
    return kret, ricn, mp.det(Op), mp.eig(Op)[0]


if __name__ == '__main__':
    pt = (sp.Integer(2), 0, 0, 0)
    kret, ricn, det, ev = invariants(pt)
    print('r=2 point (2,0,0,0)')
    print('  |Rm|^2      =', mp.nstr(kret, 20))
    print('  |Ric|       =', mp.nstr(ricn, 5))
    print('  det R       =', mp.nstr(det, 5))
    print('  eig R       =', [mp.nstr(mp.re(e), 12) for e in ev])
    pt2 = (sp.Rational(3, 2), sp.Rational(1, 2), sp.Rational(-1, 3), sp.Rational(7, 10))
    kret2, ricn2, det2, _ = invariants(pt2)
    r = mp.sqrt(mp.mpf(9) / 4 + mp.mpf(1) / 4 + mp.mpf(1) / 9 + mp.mpf(49) / 100)
    print('generic point r =', mp.nstr(r, 15), ' |Rm|^2 r^12 =', mp.nstr(kret2 * r**12, 20),
          ' |Ric| =', mp.nstr(ricn2, 5), ' det =', mp.nstr(det2, 5))
    K = kret * 2**12
    print('  |Rm|^2 r^12 at r=2 =', mp.nstr(K, 20))
    # energy on [2,8]: sqrt(det g) = 1, vol(S^3/Z2) = pi^2
    E = mp.quad(lambda rr: K / rr**12 * mp.pi**2 * rr**3, [2, 8])
    print('  energy [2,8]  =', mp.nstr(E, 20))
    # mean curvature of r = 2 level set
    f = lambda rr: mp.sqrt(1 - 1 / rr**4)
    H = 3 * f(2) / 2 + mp.diff(f, 2)
    print('  H(r=2)        =', mp.nstr(H, 20))
    # radial geodesic from r=2, unit speed: dr/ds = f(r)
    sol = mp.odefun(lambda s, rr: f(rr), 0, mp.mpf(2))
    print('  r(s=0.1)      =', mp.nstr(sol(mp.mpf('0.1')), 20))
    # r^4 |g - g_e| (operator norm = max(|1/f^2-1|, |f^2-1|))
    for rr in (4, 8, 16):
        v = max(abs(1 / f(rr)**2 - 1), abs(f(rr)**2 - 1))
        print('  r^4|g-ge| r=%d =' % rr, mp.nstr(rr**4 * v, 20))
    # deviation at the glued radius t^{1/4} (EH evaluated at t^{-1/4})
    t = mp.mpf('1e-4')
    rb = t ** mp.mpf(-0.25)
    v = max(abs(1 / f(rb)**2 - 1), abs(f(rb)**2 - 1))
    print('  glued |g-ge| at r_e=t^(1/4), t=1e-4 =', mp.nstr(v, 20))
