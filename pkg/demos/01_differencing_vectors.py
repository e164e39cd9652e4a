"""Differencing vectors for static fixed-effect designs.

A vector w in {-1,0,1}^T with W w = 0 is the difference of two binary
outcome paths that share the sufficient statistic W Y.  Conditioning on
such pairs removes the fixed effects entirely, so finding these vectors
is the whole identification game for static logit models.
"""

import numpy as np

import felogit as fl
from felogit import designs

rng = np.random.default_rng(0)

# -- the catalogue of designs ------------------------------------------------

print("Standard panel, T = 4: any zero-sum sign vector works")
spec = fl.build_design("panel_fe", T=4, d_x=1)
for w in fl.find_wperp(spec.W, max_solutions=6):
    print("   ", w)

print("\nOverlapping effects (the smallest non-trivial generalization):")
spec = fl.build_design("overlapping", d_x=1)
print("    W =", spec.W.tolist(), "-> w_perp =", fl.find_wperp(spec.W)[0])

print("\nTwo-way 2x2: the difference-in-differences pattern")
spec = fl.build_design("two_way", n=2, tau=2, d_x=1)
print("   ", fl.find_wperp(spec.W)[0], "(vec of [[1,-1],[-1,1]])")

print("\nDyadic network on 4 agents: the tetrad configuration")
spec = fl.build_design("dyadic", n=4, d_x=1)
sols = fl.find_wperp(spec.W)
print(f"    {len(sols)} vectors; tetrad = {[s for s in sols if abs(s).sum() == 4][0]}")

print("\nTriadic 2x2x2 hexad: triple differencing")
spec = fl.build_design("triadic", n1=2, n2=2, n3=2, d_x=1)
print("   ", [tuple(s) for s in fl.find_wperp(spec.W, max_solutions=1)][0])

# -- polynomial trends: minimal horizons ------------------------------------

print("\nHeterogeneous polynomial trends A_1 + t A_2 + ... + t^p A_{p+1}.")
print("The linear-model differencing weights (1,-2,1) are not usable for")
print("binary outcomes; the minimal horizons are instead:")
print("    p  T   w_perp")
for p in range(0, 5):
    T, w = fl.minimal_T_polytrend(p)
    print(f"    {p}  {T:2d}  {''.join('+-0'[{1: 0, -1: 1, 0: 2}[v]] for v in w)}")

# -- and a rank condition turns vectors into identification ------------------

print("\nIdentification needs X W_perp to vary across units:")
Xs = [rng.normal(size=(2, 4)) for _ in range(500)]
diag = fl.rank_condition(Xs, np.array([1, -1, -1, 1]))
print(f"    i.i.d. covariates: min eig {diag.min_eigenvalue:.3f} -> pass={diag.passed}")
Xs = [np.ones((2, 4)) * rng.normal() for _ in range(500)]
diag = fl.rank_condition(Xs, np.array([1, -1, -1, 1]))
print(f"    time-constant covariates: min eig {diag.min_eigenvalue:.3f} "
      f"-> pass={diag.passed}")
