"""Verification suites: each turns a scenario into a list of check records."""

import os
import platform
import time
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import ambient as amb
from . import conformal as conf
from . import immersion as imm
from .errors import GeometryError
from .report import CheckRecord, VerificationReport
from .riemann import LocalGeometry
from .scenario import SUITES

THREADS_ENV = "AMBIENTGEOM_THREADS"
NONVANISHING_FLOOR = 1e-3
UMBILICAL_THRESHOLD = 1e-8
GAUSS_BONNET_SCALES = 2

# check id -> (default tolerance, anchor)
CHECKS = {
    "ambient_axioms.homothety": (1e-9, "homothety L_Z gt = 2 gt"),
    "ambient_axioms.pullback": (1e-10, "slice pullback iota* gt = t^2 g"),
    "ambient_axioms.degeneracy": (1e-10, "iota* gt (Z_Q, .) = 0"),
    "ambient_axioms.lightlike_radical": (1e-9, "slice tensor rank n with kernel along Z"),
    "ambient_axioms.omega": (1e-10, "omega = t^2 drho + 2 t rho dt"),
    "ambient_axioms.d_omega": (1e-10, "d omega = 0"),
    "ambient_axioms.timelike_frame": (1e-10, "gt(T,T) = -2, gt(E,E) = 2, gt(T,E) = 0"),
    "ambient_axioms.lorentzian_signature": (0.0, "exactly one negative eigenvalue on the band"),
    "connection.parallel_coordinates": (1e-8, "nabla_dt dt = nabla_drho drho = 0"),
    "connection.t_rho": (1e-8, "nabla_dt drho = (1/t) drho"),
    "connection.t_V": (1e-8, "nabla_dt V = V / t"),
    "connection.rho_V": (1e-8, "nabla_drho V = alpha^-1 alpha' V / 2"),
    "connection.V_W": (1e-8, "nabla_V W on the slice rho = 0"),
    "ricci_Q.closed_form": (1e-7, "Ric~ on the slice: Ric - tr(alpha')/2 g - (n-2)/2 g alpha'"),
    "ricci_Q.t_components": (1e-8, "Ric~(dt, dt) = Ric~(dt, V) = 0 on the slice"),
    "ricci_Q.vanishing": (1e-7, "Ric~ = 0 on the slice under the alpha hypothesis"),
    "ricci_Q.mixed_curvature": (1e-8, "gt(R~(dt,V)W, drho) + gt(R~(drho,V)W, dt) = 0"),
    "fibers.closed_form": (1e-7, "fiber second fundamental form"),
    "fibers.umbilical_criterion": (0.0, "fibers umbilical iff alpha^-1 alpha' is a multiple of Id"),
    "weingarten.induced_metric": (1e-10, "Psi* gt = e^{2u} g"),
    "weingarten.frame": (1e-10, "lightlike normal frame with gt(xi, eta) = -1"),
    "weingarten.projector": (1e-10, "V^T = V + gt(V,xi) eta + gt(V,eta) xi = T Psi V"),
    "weingarten.a_xi": (1e-9, "A_xi = -Id"),
    "weingarten.a_eta": (1e-8, "closed form of A_eta"),
    "weingarten.self_adjoint": (1e-9, "Weingarten maps self-adjoint for e^{2u} g"),
    "weingarten.second_fundamental_form": (1e-8, "closed form of II vs normal part of nabla~"),
    "weingarten.ii_symmetry": (1e-9, "II symmetric"),
    "weingarten.ii_pairing": (1e-9, "g(A_nu V, W) = gt(II(V, W), nu)"),
    "weingarten.mean_curvature": (1e-8, "H = c xi + eta equals trace of II / n"),
    "weingarten.normal_connection": (1e-9, "xi and eta parallel in the normal bundle"),
    "weingarten.normal_curvature": (1e-8, "normal curvature vanishes"),
    "recovery.hypothesis": (1e-6, "trace alpha'(0) = 2K (n = 2) or g alpha'(0) = 2P (n >= 3)"),
    "recovery.moebius": (1e-6, "P(e^{2u} g) = e^{2u} g(A_eta ., .) via the transformation law"),
    "recovery.schouten": (1e-6, "Schouten(e^{2u} g) = e^{2u} g(A_eta ., .)"),
    "recovery.schouten_law": (1e-7, "Schouten tensor obeys the Moebius transformation law"),
    "recovery.cocycle": (1e-7, "transformation law composes"),
    "recovery.trace_law": (1e-6, "trace P(e^{2u} g) = scal / (2(n-1))"),
    "cotton.codazzi": (1e-6, "(R~(T Psi U, T Psi V) T Psi W)^perp = C(V, U, W) xi"),
    "cotton.codazzi_lhs": (1e-6, "(nabla_U II)(V, W) - (nabla_V II)(U, W) = C(V, U, W) xi"),
    "cotton.tensoriality": (1e-9, "Codazzi expression independent of the field extension"),
    "cotton.antisymmetry": (1e-9, "C(U, V, W) = -C(V, U, W)"),
    "cotton.conformal_invariance": (1e-6, "C(g) = C(e^{2u} g) for surfaces"),
    "cotton.normal_curvature_part": (1e-7, "flat Moebius: R~ preserves tangent triples"),
    "cotton.nonvanishing": (0.0, "non-flat Moebius: C nonzero at some sampled triple"),
    "gauss.sectional": (1e-6, "K~ of tangent planes vanishes"),
    "gauss.identity": (1e-6, "(K - lap u) e^{-2u} = trace P(e^{2u} g)"),
    "gauss.mean_curvature_scal": (1e-6, "|H|^2 = scal(e^{2u} g) / (n(n-1))"),
    "minkowski.pullback": (1e-9, "F* g_L = gt for the sphere"),
    "minkowski.lightcone": (1e-10, "F maps the slice into the light cone"),
    "minkowski.equivariance": (1e-10, "F(s t, rho, x) = s F(t, rho, x)"),
    "gauss_bonnet.integral": (1e-3, "integral of |H|^2 dmu = 2 pi chi (relative error)"),
}


def thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def suite_rng(seed, suite):
    return np.random.default_rng([seed, zlib.crc32(suite.encode())])


class _Run:
    """Shared, read-only state of one verification run."""

    def __init__(self, spec, seed, points, immersion_points, overrides):
        self.spec = spec
        self.seed = seed
        self.points = points
        self.ipoints = immersion_points
        self.overrides = overrides
        self.box = spec.sampling_box
        self._ambient = None
        self._ambient_error = None

    @property
    def ambient(self):
        if self._ambient is None and self._ambient_error is None:
            try:
                self._ambient = amb.build_ambient(self.spec.metric, self.spec.alpha, seed=self.seed)
            except GeometryError as exc:
                self._ambient_error = exc
        if self._ambient_error is not None:
            raise self._ambient_error
        return self._ambient

    def record(self, check, defects, points, notes=None):
        tol, anchor = CHECKS[check]
        overridden = check in self.overrides
        if overridden:
            tol = self.overrides[check]
        return CheckRecord.from_samples(check, anchor, defects, points, tol,
                                        overridden=overridden, notes=notes)

    def base_points(self, rng, count):
        return self.spec.chart.sample(rng, count, self.box)

    def band_points(self, rng, on_slice=False):
        return self.ambient.sample(rng, self.points, on_slice=on_slice, box=self.box)

    def moebius(self):
        return conf.MoebiusStructure(self.spec.metric, conf.alpha_tensor(self.spec.metric, self.spec.alpha),
                                     validate=False)

    def immersions(self):
        for src, u in self.spec.scale:
            yield src, imm.SpacelikeImmersion(self.ambient, u, validate=False)


class _Collector:
    """Concatenates per-scale-function samples into one record per check."""

    def __init__(self):
        self.data = {}

    def add(self, check, defects, points, note):
        d = np.asarray(defects, dtype=float).reshape(-1)
        entry = self.data.setdefault(check, ([], [], []))
        entry[0].append(d)
        entry[1].append(np.asarray(points, dtype=float).reshape(len(d), -1))
        entry[2].extend([note] * len(d))

    def records(self, run):
        return [run.record(check, np.concatenate(d), np.concatenate(p), notes)
                for check, (d, p, notes) in self.data.items()]


def _vectors(rng, shape):
    return rng.normal(size=shape)


# -- suites ------------------------------------------------------------------------------

def suite_ambient_axioms(run, rng):
    a = run.ambient
    p = run.band_points(rng)
    q = run.band_points(rng, on_slice=True)
    t, x = q[:, 0], q[:, 2:]
    out = [run.record("ambient_axioms.homothety", amb.homothety_defect(a, p), p),
           run.record("ambient_axioms.pullback", amb.pullback_defect(a, t, x), q),
           run.record("ambient_axioms.degeneracy", amb.degeneracy_defect(a, t, x), q)]
    rank, mis = amb.radical_check(a, t, x)
    out.append(run.record("ambient_axioms.lightlike_radical", np.abs(rank - a.n) + mis, q))
    om, dom = amb.omega_and_exterior_derivative(a, p)
    expected = np.zeros_like(om)
    expected[:, 0] = 2 * p[:, 0] * p[:, 1]
    expected[:, 1] = p[:, 0] ** 2
    out.append(run.record("ambient_axioms.omega", np.max(np.abs(om - expected), axis=-1), p))
    out.append(run.record("ambient_axioms.d_omega", np.max(np.abs(dom), axis=(-2, -1)), p))
    gt = a.metric.matrix(p)
    T = amb.timelike_field(a).jet(p, 1).value
    E = amb.spacelike_field(a).jet(p, 1).value
    tf = np.max(np.abs(np.stack([amb.pair(gt, T, T) + 2, amb.pair(gt, E, E) - 2,
                                 amb.pair(gt, T, E)], -1)), axis=-1)
    out.append(run.record("ambient_axioms.timelike_frame", tf, p))
    neg = np.sum(np.linalg.eigvalsh(gt) < 0, axis=-1)
    out.append(run.record("ambient_axioms.lorentzian_signature", (neg != 1).astype(float), p))
    return out


def suite_connection(run, rng):
    a = run.ambient
    p = run.band_points(rng)
    q = run.band_points(rng, on_slice=True)
    n = a.n
    V, W = _vectors(rng, (len(p), n)), _vectors(rng, (len(p), n))
    par = np.maximum(amb.connection_defect(a, p, "t_t"), amb.connection_defect(a, p, "rho_rho"))
    return [run.record("connection.parallel_coordinates", par, p),
            run.record("connection.t_rho", amb.connection_defect(a, p, "t_rho"), p),
            run.record("connection.t_V", amb.connection_defect(a, p, "t_V", V), p),
            run.record("connection.rho_V", amb.connection_defect(a, p, "rho_V", V), p),
            run.record("connection.V_W", amb.connection_defect(a, q, "V_W", V, W), q)]


def suite_ricci_Q(run, rng):
    a = run.ambient
    q = run.band_points(rng, on_slice=True)
    V, W = _vectors(rng, (len(q), a.n)), _vectors(rng, (len(q), a.n))
    block, trow = amb.ricci_Q_defects(a, q)
    return [run.record("ricci_Q.closed_form", block, q),
            run.record("ricci_Q.t_components", trow, q),
            run.record("ricci_Q.vanishing", amb.ricci_Q_vanishing(a, q), q),
            run.record("ricci_Q.mixed_curvature", np.abs(amb.mixed_curvature_defect(a, q, V, W)), q)]


def suite_fibers(run, rng):
    a = run.ambient
    p = run.band_points(rng)
    n = a.n
    V, W = _vectors(rng, (len(p), n)), _vectors(rng, (len(p), n))
    closed = amb.fiber_second_fundamental_form(a, p, V, W)
    numeric = amb.fiber_second_fundamental_form_numeric(a, p, V, W)
    umb = amb.fiber_umbilical_defect(a, p)
    rho, x = p[:, 1], p[:, 2:]
    S = np.linalg.solve(a.alpha.value(rho, x), a.alpha.rho_derivative(rho, x))
    tf = S - np.trace(S, axis1=-2, axis2=-1)[:, None, None] / n * np.eye(n)
    predicted = np.max(np.abs(tf), axis=(-2, -1)) < UMBILICAL_THRESHOLD
    observed = umb < UMBILICAL_THRESHOLD
    return [run.record("fibers.closed_form", np.max(np.abs(closed - numeric), axis=-1), p),
            run.record("fibers.umbilical_criterion", (predicted != observed).astype(float), p)]


def suite_weingarten(run, rng):
    col = _Collector()
    for src, im in run.immersions():
        x = run.base_points(rng, run.ipoints)
        note = f"u = {src}"
        V = _vectors(rng, x.shape)
        col.add("weingarten.induced_metric", imm.induced_metric_defect(im, x), x, note)
        col.add("weingarten.frame", imm.frame_defects(im, x), x, note)
        col.add("weingarten.projector", imm.projector_defect(im, x), x, note)
        d_xi, d_eta, sa = imm.weingarten_defects(im, x)
        col.add("weingarten.a_xi", d_xi, x, note)
        col.add("weingarten.a_eta", d_eta, x, note)
        col.add("weingarten.self_adjoint", sa, x, note)
        d_num, d_sym, d_w = imm.second_fundamental_form_defects(im, x)
        col.add("weingarten.second_fundamental_form", d_num, x, note)
        col.add("weingarten.ii_symmetry", d_sym, x, note)
        col.add("weingarten.ii_pairing", d_w, x, note)
        d_tr, _ = imm.mean_curvature_defects(im, x)
        col.add("weingarten.mean_curvature", d_tr, x, note)
        nx, ne = imm.normal_connection_defect(im, x, V)
        col.add("weingarten.normal_connection", np.maximum(nx, ne), x, note)
        col.add("weingarten.normal_curvature", imm.normal_curvature_defect(im, x), x, note)
    return col.records(run)


def suite_recovery(run, rng):
    spec = run.spec
    g = spec.metric
    n = spec.dim
    x0 = run.base_points(rng, run.ipoints)
    out = [run.record("recovery.hypothesis", conf.alpha_hypothesis_defect(g, spec.alpha, x0), x0)]
    m = run.moebius()
    col = _Collector()
    scales = list(run.immersions())
    for k, (src, im) in enumerate(scales):
        x = run.base_points(rng, run.ipoints)
        note = f"u = {src}"
        if n == 2:
            col.add("recovery.moebius", imm.moebius_recovery_defect(im, x, moebius=m), x, note)
        else:
            col.add("recovery.schouten", imm.schouten_recovery_defect(im, x, moebius=m), x, note)
            canon = conf.MoebiusStructure.canonical(g, validate=False)
            law = np.max(np.abs(conf.schouten(im.induced_metric, x) - conf.moebius_transform(canon, im.log_factor, x)),
                         axis=(-2, -1))
            col.add("recovery.schouten_law", law, x, note)
        P = conf.moebius_transform(m, im.log_factor, x)
        geo = LocalGeometry(im.induced_metric.jet(x, 2))
        tr = np.einsum("...ij,...ij->...", geo.ginv.value, P)
        col.add("recovery.trace_law", np.abs(tr - geo.scalar.value / (2 * (n - 1))), x, note)
        u2_src, u2 = spec.scale[(k + 1) % len(spec.scale)]
        col.add("recovery.cocycle", conf.cocycle_check(m, im.log_factor, u2, x), x, f"{note}, then {u2_src}")
    return out + col.records(run)


def suite_cotton(run, rng):
    spec = run.spec
    if spec.dim != 2:
        return None
    m = run.moebius()
    col = _Collector()
    best = (-1.0, None)
    for src, im in run.immersions():
        x = run.base_points(rng, run.ipoints)
        note = f"u = {src}"
        U, V, W = (_vectors(rng, x.shape) for _ in range(3))
        d, C = imm.codazzi_cotton_defect(im, x, U, V, W, moebius=m)
        col.add("cotton.codazzi", d, x, note)
        col.add("cotton.codazzi_lhs", imm.codazzi_lhs_defect(im, x, U, V, W, moebius=m), x, note)
        ext = {k: rng.normal(size=(2, 2)) for k in "UVW"}
        s = im.at(x)
        tens = np.max(np.abs(s.codazzi_lhs(U, V, W, ext) - s.codazzi_lhs(U, V, W)), axis=-1)
        col.add("cotton.tensoriality", tens, x, note)
        Cy = conf.cotton_york_array(m, x)
        col.add("cotton.antisymmetry", np.max(np.abs(Cy + np.swapaxes(Cy, -3, -2)), axis=(-3, -2, -1)), x, note)
        Cu = conf.cotton_york_array(conf.transformed_structure(m, im.log_factor), x)
        col.add("cotton.conformal_invariance", np.max(np.abs(Cu - Cy), axis=(-3, -2, -1)), x, note)
        if spec.cotton_expectation == "flat":
            col.add("cotton.normal_curvature_part", imm.curvature_invariance_defect(im, x, U, V, W), x, note)
        else:
            i = int(np.argmax(np.abs(C)))
            if abs(C[i]) > best[0]:
                best = (float(abs(C[i])), x[i])
    out = col.records(run)
    if spec.cotton_expectation == "nonflat":
        out.append(run.record("cotton.nonvanishing", [max(0.0, NONVANISHING_FLOOR - best[0])], [best[1]]))
    return out


def suite_gauss(run, rng):
    spec = run.spec
    col = _Collector()
    m = run.moebius() if spec.dim == 2 else None
    for src, im in run.immersions():
        x = run.base_points(rng, run.ipoints)
        note = f"u = {src}"
        if spec.dim == 2:
            col.add("gauss.sectional", imm.gauss_sectional_defect(im, x), x, note)
            col.add("gauss.identity", imm.gauss_identity_defect(im, x, moebius=m), x, note)
        _, d_scal = imm.mean_curvature_defects(im, x)
        col.add("gauss.mean_curvature_scal", d_scal, x, note)
    return col.records(run)


def suite_minkowski(run, rng):
    emb = run.spec.embedding
    if emb is None:
        return None
    a = run.ambient
    p = run.band_points(rng)
    q = run.band_points(rng, on_slice=True)
    s = 0.5 + 1.5 * rng.random(len(p))
    scaled = p.copy()
    scaled[:, 0] *= s
    eq = np.max(np.abs(amb.minkowski_map(a, scaled, emb) - s[:, None] * amb.minkowski_map(a, p, emb)), axis=-1)
    return [run.record("minkowski.pullback", amb.minkowski_cross_check(a, p, emb), p),
            run.record("minkowski.lightcone", amb.lightcone_defect(a, q, emb), q),
            run.record("minkowski.equivariance", eq, p)]


def suite_gauss_bonnet(run, rng):
    gb = run.spec.gauss_bonnet
    if gb is None or run.spec.dim != 2:
        return None
    target = 2 * np.pi * gb["euler_characteristic"]
    defects, points, notes = [], [], []
    for k, (src, im) in enumerate(run.immersions()):
        if k >= GAUSS_BONNET_SCALES:
            break
        val = imm.gauss_bonnet_quadrature(im, nodes=gb.get("nodes", imm.GAUSS_BONNET_NODES), box=gb.get("box"))
        defects.append(abs(val / target - 1))
        points.append([float(k)])
        notes.append(f"u = {src}, integral = {val:.9f}")
    return [run.record("gauss_bonnet.integral", defects, points, notes)]


SUITE_FUNCTIONS = {
    "ambient_axioms": suite_ambient_axioms,
    "connection": suite_connection,
    "ricci_Q": suite_ricci_Q,
    "weingarten": suite_weingarten,
    "recovery": suite_recovery,
    "cotton": suite_cotton,
    "gauss": suite_gauss,
    "fibers": suite_fibers,
    "minkowski": suite_minkowski,
    "gauss_bonnet": suite_gauss_bonnet,
}


def _setup_failure(suite, exc):
    defect = getattr(exc, "defect", float("inf"))
    witness = getattr(exc, "witness", None) or ()
    return [CheckRecord(f"{suite}.setup", f"suite could not start: {type(exc).__name__}", 0,
                        float("inf") if not np.isfinite(defect) or defect <= 0 else float(defect),
                        0.0, False, tuple(witness), note=str(exc))]


def _run_one(run, suite):
    try:
        return SUITE_FUNCTIONS[suite](run, suite_rng(run.seed, suite))
    except GeometryError as exc:
        return _setup_failure(suite, exc)


def validate_overrides(overrides):
    unknown = sorted(set(overrides) - set(CHECKS))
    if unknown:
        raise KeyError(f"unknown check ids: {', '.join(unknown)}")


def run_suites(spec, suites=None, *, seed=None, points=None, immersion_points=None,
               tolerances=None, threads=None):
    """Run the selected suites (default: those the scenario lists) and assemble a report."""
    start = time.perf_counter()
    selected = tuple(s for s in SUITES if s in (suites or spec.suites))
    unknown = set(suites or ()) - set(SUITES)
    if unknown:
        raise KeyError(f"unknown suites: {', '.join(sorted(unknown))}")
    overrides = dict(spec.tolerances)
    overrides.update(tolerances or {})
    validate_overrides(overrides)
    run = _Run(spec, spec.seed if seed is None else seed,
               points or spec.points, immersion_points or points or spec.immersion_points, overrides)
    threads = thread_count() if threads is None else threads
    if threads > 1 and len(selected) > 1:
        try:
            run.ambient  # build once before sharing across threads
        except GeometryError:
            pass
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _run_one(run, s), selected))
    else:
        results = [_run_one(run, s) for s in selected]
    records, skipped = [], []
    for suite, recs in zip(selected, results):
        if recs is None:
            skipped.append(suite)
        else:
            records.extend(recs)
    metadata = {
        "scenario": spec.name,
        "seed": run.seed,
        "points": run.points,
        "immersion_points": run.ipoints,
        "suites": list(s for s in selected if s not in skipped),
        "skipped_suites": skipped,
        "versions": {"ambientgeom": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "wall_time_seconds": round(time.perf_counter() - start, 3),
    }
    return VerificationReport(tuple(records), metadata)
