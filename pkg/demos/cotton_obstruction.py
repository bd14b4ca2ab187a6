"""A Moebius structure on the plane that is not conformally flat.

alpha(rho) = Id + rho * P with a non-parallel trace-free P gives a nonzero Cotton-York tensor.
The normal part of the ambient curvature on tangent vectors then no longer vanishes: it equals
C(V, U, W) along xi, which is the Codazzi equation for the immersion.
"""
import numpy as np

from ambientgeom import ambient as amb
from ambientgeom import conformal as conf
from ambientgeom import immersion as imm
from ambientgeom.scenario import load_bundled

spec = load_bundled("moebius_nonflat")
space = amb.build_ambient(spec.metric, spec.alpha)
m = conf.moebius_from_alpha(spec.metric, spec.alpha)

x = np.array([[0.5, -1.0], [1.0, 0.2], [-0.7, 0.9]])
C = conf.cotton_york_array(m, x)
print("C(dx, dy, dx) at the samples:", np.round(C[:, 0, 1, 0], 6), "(expected -x/4)")

rng = np.random.default_rng(1)
U, V, W = rng.normal(size=(3,) + x.shape)
for src, u in spec.scale:
    im = imm.SpacelikeImmersion(space, u)
    defect, value = imm.codazzi_cotton_defect(im, x, U, V, W, m)
    print(f"u = {src:<20} |C(V,U,W)| up to {np.abs(value).max():.3f}, Codazzi defect {defect.max():.1e}")
