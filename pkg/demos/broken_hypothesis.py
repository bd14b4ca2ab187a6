"""What goes wrong when alpha ignores the curvature of the base.

With alpha = Id on the unit sphere the trace condition tr alpha'(0) = 2K fails by 2. The ambient
axioms still hold, but the ambient metric is not Ricci flat on the slice and the verifier reports
a witness point for each broken check.
"""
from ambientgeom.report import emit_report
from ambientgeom.scenario import load_bundled
from ambientgeom.suites import run_suites

report = run_suites(load_bundled("sphere_violation"), points=50, immersion_points=20)
print(emit_report(report, "text").decode())
