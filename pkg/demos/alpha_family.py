"""Closed anti-invariant forms for J_f with f = x2.

For f = x2 the structure is not integrable, yet it still carries an infinite
family of closed forms a*beta + b*gamma.  This script builds a few of them,
checks closedness symbolically and looks at how independent they are.
"""

import numpy as np

from acsforms import symexpr as sx
from acsforms.acs import is_integrable, nijenhuis
from acsforms.r4family import alpha_n, alpha_n_parameters, build_jf, sampled_gram

jf = build_jf(sx.parse("x2"))
print("integrable:", is_integrable(jf.acs))
print("N(d/dx1, d/dx2) =", [sx.to_string(c) for c in nijenhuis(jf.acs, 0, 1)])

# each alpha_n is a member of the two-parameter family alpha_{s,t}
forms = []
for n in range(1, 6):
    s, t = alpha_n_parameters(n)
    a = alpha_n(n)
    forms.append(a)
    print(f"n={n}  s={s:.4f}  t={t:.4f}  closed={a.d().is_zero()}")

# independence shows up in the sampled Gram matrix; it is positive definite
# but its conditioning degrades quickly with n
G = sampled_gram(forms, sx.SampleDomain(n_samples=200))
ev = np.linalg.eigvalsh(G)
print("Gram eigenvalues:", np.array2string(ev, precision=3))
print("min/max ratio: %.3e" % (ev[0] / ev[-1]))
