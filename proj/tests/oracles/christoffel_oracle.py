#!/usr/bin/env python3
"""Symbolic Christoffel/curvature oracle for the bundled surface models.

Run before touching the C++ geometry code; the printed values are frozen
into tests/test_geometry.cpp. Uses Gamma^m_{ij} = 1/2 g^{ma} (d_i g_{aj}
+ d_j g_{ai} - d_a g_{ij}) and the Brioschi formula for the Gaussian
curvature of a diagonal metric.
"""
import sympy as sp


def christoffel(g, coords):
    d = len(coords)
    ginv = g.inv()
    gamma = [[[sp.simplify(
        sum(ginv[m, a] * (sp.diff(g[a, j], coords[i])
                          + sp.diff(g[a, i], coords[j])
                          - sp.diff(g[i, j], coords[a])) / 2
            for a in range(d)))
        for j in range(d)] for i in range(d)] for m in range(d)]
    return gamma


def gauss_curvature_diagonal(E, G, u, v):
    # K for ds^2 = E du^2 + G dv^2
    s = sp.sqrt(E * G)
    K = -(sp.diff(sp.diff(G, u) / s, u) + sp.diff(sp.diff(E, v) / s, v)) / (2 * s)
    return sp.simplify(K)


def report(name, g, coords, points):
    print(f"== {name}, metric = {g.tolist()} ==")
    gamma = christoffel(g, coords)
    d = len(coords)
    K = gauss_curvature_diagonal(g[0, 0], g[1, 1], coords[0], coords[1])
    print("K =", K)
    for pt in points:
        subs = dict(zip(coords, pt))
        print(" at", pt)
        for m in range(d):
            for i in range(d):
                for j in range(i, d):
                    val = gamma[m][i][j].subs(subs)
                    print(f"  Gamma^{m}_{{{i}{j}}} = {sp.nsimplify(val)} = {sp.N(val, 20)}")
        print("  K =", sp.N(K.subs(subs), 20))


phi, lam = sp.symbols('phi lam', positive=True)
g_sphere = sp.diag(1, sp.sin(phi) ** 2)
report("sphere colatitude/longitude", g_sphere, (phi, lam),
       [(sp.pi / 2, 0), (sp.pi / 3, sp.Rational(7, 10))])

u, w = sp.symbols('u w')
r = 2 + sp.cos(u)
g_rev = sp.diag(1 + sp.diff(r, u) ** 2, r ** 2)
report("revolution r(u)=2+cos u, h(u)=u", g_rev, (u, w),
       [(0, 0), (sp.Rational(1, 2), sp.Rational(6, 5))])

# polynomial profile used by the config path: r(u) = 2 + u^2/4
rp = 2 + u ** 2 / 4
g_poly = sp.diag(1 + sp.diff(rp, u) ** 2, rp ** 2)
report("revolution poly r(u)=2+u^2/4", g_poly, (u, w),
       [(sp.Rational(1, 2), sp.Rational(6, 5))])
