#!/usr/bin/env python3
"""Hand-derivation check for the built-in catalog.

Solves each catalog problem's KKT system symbolically (sympy) and derives
the closed-form dual objectives used by the test suites. The numbers printed
here are the ones frozen into `crates/core/src/catalog.rs` and the tests;
nothing in this script touches the Rust implementation.

Run: python3 scripts/derive_catalog.py
"""

import sympy as sp

x1, x2 = sp.symbols("x1 x2", real=True)
lam, mu, mu1, mu2, mu3 = sp.symbols("lam mu mu1 mu2 mu3", real=True)


def grad(e, xs):
    return sp.Matrix([sp.diff(e, v) for v in xs])


def report(name, **vals):
    body = ", ".join(f"{k}={v}" for k, v in vals.items())
    print(f"{name}: {body}")


# 1. linear-over-disk: min x1+x2 s.t. 2 - x1^2 - x2^2 >= 0
f = x1 + x2
c = 2 - x1**2 - x2**2
sols = sp.solve(list(grad(f - mu * c, [x1, x2])) + [c], [x1, x2, mu], dict=True)
kkt = [s for s in sols if s[mu] >= 0]
assert len(kkt) == 1
s = kkt[0]
report("linear-over-disk", x=(s[x1], s[x2]), mu=s[mu], f=f.subs(s))
# dual: L convex in x for mu > 0, q(mu) = min_x L
L = f - mu * c
xm = sp.solve(grad(L, [x1, x2]), [x1, x2], dict=True)[0]
q1 = sp.simplify(L.subs(xm))
report("linear-over-disk dual", q=q1, q_at_half=q1.subs(mu, sp.Rational(1, 2)))
assert q1.subs(mu, sp.Rational(1, 2)) == -2
# non-KKT point (1,1): projection of g=(1,1) onto cone{(-2,-2)} is 0
g = sp.Matrix([1, 1])
b = grad(c, [x1, x2]).subs({x1: 1, x2: 1})
assert (g.T * b)[0] < 0
d = -g / g.norm()
report("non-kkt-point", direction=tuple(d), g_dot_d=(g.T * d)[0], b_dot_d=(b.T * d)[0])

# 2. quadratic-affine-eq: min x1^2 + x2^2 s.t. x1 + x2 - 1 = 0
f = x1**2 + x2**2
c = x1 + x2 - 1
s = sp.solve(list(grad(f - lam * c, [x1, x2])) + [c], [x1, x2, lam], dict=True)[0]
report("quadratic-affine-eq", x=(s[x1], s[x2]), lam=s[lam], f=f.subs(s))
assert (s[x1], s[x2], s[lam]) == (sp.Rational(1, 2), sp.Rational(1, 2), 1)

# 3. scalar-bound: min x1^2 s.t. x1 - 1 >= 0
f = x1**2
c = x1 - 1
sols = sp.solve([sp.diff(f - mu * c, x1), c], [x1, mu], dict=True)
s = sols[0]
report("scalar-bound", x=s[x1], mu=s[mu], f=f.subs(s))
L = f - mu * c
q3 = sp.simplify(L.subs(x1, sp.solve(sp.diff(L, x1), x1)[0]))
report("scalar-bound dual", q=sp.expand(q3), sweep=[q3.subs(mu, v) for v in (0, 1, 2, 3)])
assert sp.expand(q3 - (mu - mu**2 / 4)) == 0

# 4. lp-ray: min x1 s.t. x1 >= 0
f = x1
c = x1
s = sp.solve([sp.diff(f - mu * c, x1)], [mu], dict=True)[0]
report("lp-ray", x=0, mu=s[mu])
L = sp.expand(f - mu * c)
report("lp-ray dual", lagrangian=L, note="bounded below only when coefficient (1-mu) is zero")

# 5. degenerate-duplicate: two copies of the disk constraint
f = x1 + x2
c = 2 - x1**2 - x2**2
gx = grad(f, [x1, x2]).subs({x1: -1, x2: -1})
gc = grad(c, [x1, x2]).subs({x1: -1, x2: -1})
A = sp.Matrix.hstack(gc, gc)
report("degenerate-duplicate", rank=A.rank(), active=2, split=(sp.Rational(1, 4), sp.Rational(1, 4)))
assert A.rank() == 1
assert gx == sp.Rational(1, 4) * gc + sp.Rational(1, 4) * gc

# unit-circle: min x1 s.t. x1^2 + x2^2 - 1 = 0
f = x1
c = x1**2 + x2**2 - 1
sols = sp.solve(list(grad(f - lam * c, [x1, x2])) + [c], [x1, x2, lam], dict=True)
s = min(sols, key=lambda t: f.subs(t))
report("unit-circle", x=(s[x1], s[x2]), lam=s[lam], f=f.subs(s))

# quadratic-affine-eq dual: q(lam) = min_x x1^2 + x2^2 - lam (x1 + x2 - 1)
f = x1**2 + x2**2
L = f - lam * (x1 + x2 - 1)
q2 = sp.simplify(L.subs(sp.solve(grad(L, [x1, x2]), [x1, x2], dict=True)[0]))
report("quadratic-affine-eq dual", q=sp.expand(q2), q_at_one=q2.subs(lam, 1))
assert q2.subs(lam, 1) == sp.Rational(1, 2)

# quadratic-affine-eq-ball: entry 2 plus 4 - x1^2 - x2^2 >= 0 (inactive)
c_ball = 4 - x1**2 - x2**2
report("quadratic-affine-eq-ball", ball_value=c_ball.subs({x1: sp.Rational(1, 2), x2: sp.Rational(1, 2)}))

# lp-corner-redundant: min x1 + x2 s.t. x1 >= 0, x2 >= 0, x1 + x2 >= 0
g = sp.Matrix([1, 1])
B = sp.Matrix([[1, 0, 1], [0, 1, 1]])
assert B * sp.Matrix([1, 1, 0]) == g
report("lp-corner-redundant", x=(0, 0), mu=(1, 1, 0), active=3, rank=B.rank())
# L = (1 - mu1 - mu3) x1 + (1 - mu2 - mu3) x2 is identically zero at (1, 1, 0)
L = sp.expand(x1 + x2 - mu1 * x1 - mu2 * x2 - mu3 * (x1 + x2))
assert L.subs({mu1: 1, mu2: 1, mu3: 0}) == 0
report("lp-corner-redundant dual", q_at_known=0)

# Dual sweep for scalar-bound used by the CLI example
report("sweep", q=[q3.subs(mu, v) for v in (0, 1, 2, 3)])

# quadratic-affine-eq-ball dual for mu2 > -1:
# L = (1 + mu) |x|^2 - lam (x1 + x2) + lam - 4 mu
L = x1**2 + x2**2 - lam * (x1 + x2 - 1) - mu * (4 - x1**2 - x2**2)
qb = sp.simplify(L.subs(sp.solve(grad(L, [x1, x2]), [x1, x2], dict=True)[0]))
assert sp.simplify(qb - (-lam**2 / (2 * (1 + mu)) + lam - 4 * mu)) == 0
report("quadratic-affine-eq-ball dual", q=qb, q_at_known=qb.subs({lam: 1, mu: 0}))

# degenerate-duplicate dual depends on s = mu1 + mu2 exactly as entry 1 on mu
L = x1 + x2 - mu1 * (2 - x1**2 - x2**2) - mu2 * (2 - x1**2 - x2**2)
qd = sp.simplify(L.subs(sp.solve(grad(L, [x1, x2]), [x1, x2], dict=True)[0]))
assert sp.simplify(qd - q1.subs(mu, mu1 + mu2)) == 0
report("degenerate-duplicate dual", q_at_known=qd.subs({mu1: sp.Rational(1, 4), mu2: sp.Rational(1, 4)}))
