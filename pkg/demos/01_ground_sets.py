"""Tour of candidate-atom construction and conditioning measures.

Builds the two built-in orthonormal bases for 8x8 patches, concatenates
them into one ground set, and inspects the quantities that drive the
selectors: coherence and restricted extremal singular values.
"""

import numpy as np

from dictsel import assemble, coherence, dct2_basis, haar2_basis, restricted_spectrum

side = 8
dct = dct2_basis(side)
haar = haar2_basis(side)
print(f"2D DCT-II basis:  {dct.shape[0]} pixels x {dct.shape[1]} atoms")
print(f"2D Haar basis:    {haar.shape[0]} pixels x {haar.shape[1]} atoms")
print(f"DCT Gram defect:  {np.abs(dct.T @ dct - np.eye(side * side)).max():.2e}")

gs = assemble([("dct2", dct), ("haar2", haar)])
print(f"\nassembled ground set: d={gs.d}, n={gs.n}")

# Both bases share the constant (DC) atom, so the coherence is 1: the two
# copies are identical columns.  The selectors tolerate duplicates.
mu = coherence(gs)
print(f"coherence mu = {mu:.6f}")

spec2 = restricted_spectrum(gs, 2)
print(f"pair spectrum: sigma_max^2 = {spec2.sigma_max_sq:.4f} (= 1 + mu), "
      f"sigma_min^2 = {spec2.sigma_min_sq:.4f} (= 1 - mu)")

# A single orthonormal basis is perfectly conditioned at every size.
solo = restricted_spectrum(dct, 2)
print(f"DCT alone:     sigma_max^2 = {solo.sigma_max_sq:.4f}, "
      f"sigma_min^2 = {solo.sigma_min_sq:.4f}")

# Exact enumeration is available for small subset sizes.
rng = np.random.default_rng(0)
small = rng.standard_normal((6, 10))
small /= np.linalg.norm(small, axis=0)
spec3 = restricted_spectrum(small, 3)
print(f"\nrandom 6x10 atoms, triples (enumerated={spec3.exact}): "
      f"sigma_max^2 = {spec3.sigma_max_sq:.4f}, sigma_min^2 = {spec3.sigma_min_sq:.4f}")
