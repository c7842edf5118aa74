"""Kodaira-Thurston nilmanifold with the structure J_{lambda, mu}.

Both lambda and mu depend on x4 only.  The frame theta1, e^lambda theta2 stays
closed whatever lambda is, which pins h- at its upper bound.
"""

from acsforms import symexpr as sx
from acsforms.nilmanifold import build_j_lambda_mu, nijenhuis_e1e3, theta_basis, verify_h_minus_2

lam = sx.parse("sin(2*pi*x4)", sx.CHART_KT)
mu = sx.parse("cos(2*pi*x4)", sx.CHART_KT)
s = build_j_lambda_mu(lam, mu)

t1, t2, t2_scaled = theta_basis(s)
print("d theta1 = 0:", t1.d().is_zero())
print("d theta2 = 0:", t2.d().is_zero(), "(unscaled)")
print("d(e^lambda theta2) = 0:", t2_scaled.d().is_zero())

# non-zero N means J is not integrable; the E2 component carries e^(lambda+mu)
N = nijenhuis_e1e3(s)
print("N(E1, E3) =", [sx.to_string(c) for c in N])

rep = verify_h_minus_2(lam, mu)
for k, v in rep.as_dict().items():
    print(f"{k:>14}: {v}")
