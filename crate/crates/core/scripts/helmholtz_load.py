"""Derive the load of the vector Helmholtz problem on the unit sphere.

u = n x grad_G(xyz) with the 0-homogeneous extension of xyz, and
f = -P div_G(P grad(P u) P) + u. Prints the closed form of u, the ratio
f/u at random points (constant 12) and reference values of f.
"""
import random

import sympy as sp

x, y, z = sp.symbols("x y z", real=True)
X = sp.Matrix([x, y, z])
r = sp.sqrt(x * x + y * y + z * z)
n = X / r
P = sp.eye(3) - n * n.T


def grad(s):
    return sp.Matrix([sp.diff(s, v) for v in (x, y, z)])


phi = (x * y * z) / r**3
u = n.cross(P * grad(phi))
Pu = P * u
G = P * Pu.jacobian([x, y, z]) * P
div = sp.Matrix(
    [sum(sp.diff(G[i, j], v) * P[k, j] for j in range(3) for k, v in enumerate((x, y, z))) for i in range(3)]
)
f = -P * div + u

print("u =", sp.simplify(u))
random.seed(1)
for _ in range(3):
    p = [random.uniform(-1, 1) for _ in range(3)]
    s = sum(a * a for a in p) ** 0.5
    sub = {x: p[0] / s, y: p[1] / s, z: p[2] / s}
    fv, uv = f.subs(sub).evalf(), u.subs(sub).evalf()
    print("f/u =", [float(fv[i] / uv[i]) for i in range(3)])
for point in [(1, 2, 2), (2, -3, 6)]:
    q = sp.Rational(1, sp.sqrt(sum(c * c for c in point)))
    sub = {x: point[0] * q, y: point[1] * q, z: point[2] * q}
    print(point, [sp.nsimplify(sp.simplify(c)) for c in f.subs(sub)])
