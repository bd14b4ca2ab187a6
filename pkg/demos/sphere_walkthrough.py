"""Round sphere inside its ambient space.

Builds the ambient metric from alpha(rho) = (1 + rho/2)^2 Id, checks that it is Ricci flat along
the slice rho = 0, then pushes the sphere in with a few conformal factors e^{2u} and reads the
Moebius tensor back off the Weingarten map of the null normal eta.
"""
import math

import numpy as np

from ambientgeom import ambient as amb
from ambientgeom import conformal as conf
from ambientgeom import immersion as imm
from ambientgeom import riemann as rm
from ambientgeom.scenario import load_bundled

spec = load_bundled("sphere_example")
space = amb.build_ambient(spec.metric, spec.alpha)
rng = np.random.default_rng(0)
x = spec.chart.sample(rng, 200, spec.sampling_box)

q = space.sample(rng, 200, on_slice=True, box=spec.sampling_box)
print(f"largest |Ric~| on the slice: {amb.ricci_Q_vanishing(space, q).max():.1e}")

m = conf.moebius_from_alpha(spec.metric, spec.alpha)
print("Moebius tensor at the first sample (half of diag(1, sin^2 th)):")
print(np.round(m.tensor(x[:1])[0], 12))

for src, u in spec.scale:
    im = imm.SpacelikeImmersion(space, u)
    scal = rm.scalar_curvature(conf.rescale_metric(conf.ConformalRep(spec.metric, u)), x)
    _, H = imm.mean_curvature(im, x)
    print(f"u = {src:<38} recovery {imm.moebius_recovery_defect(im, x, m).max():.1e}  "
          f"max | |H|^2 - scal/2 | {np.abs(H - scal / 2).max():.1e}")

im = imm.SpacelikeImmersion(space, spec.scale[2][1])
total = imm.gauss_bonnet_quadrature(im, box=spec.gauss_bonnet["box"])
print(f"integral of |H|^2 over the sphere: {total:.6f}  (4 pi = {4 * math.pi:.6f})")
