"""FastAPI service wrapping the core package.

Endpoints return a typed summary plus a `files` map (filename -> content)
that thin clients write to disk verbatim; determinism of the file bytes is
controlled by the request's `deterministic` flag (suppresses timestamp
headers). Compute runs under a process-wide lock: requests are serialized,
graphs are immutable, and results are independent of concurrency.

Error mapping: schema violations -> 422; window/budget problems -> 400 with
code "window_too_small"; other domain errors -> 400 with a specific code.
Non-convergence is NOT an error: responses carry converged flags.
"""

from __future__ import annotations

import json
import threading

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import errors as E
from ..capacity import Condenser, capacity
from ..io import potential_csv, sequence_csv
from ..lattice import LatticeFamily, lattice_box
from ..massiveness import massiveness_sequence, parabolicity_sequence
from ..plaplace import PExponent
from ..selftest import run_selftest
from ..setspec import resolve_set
from ..wiener import wiener_report
from . import schemas as S

_COMPUTE_LOCK = threading.Lock()

_ERROR_CODES = {
    E.WindowTooSmall: ("window_too_small", 400),
    E.SizeOverflow: ("window_too_small", 400),
    E.DisconnectedFreeComponent: ("disconnected_free_component", 400),
    E.EmptyBoundary: ("empty_boundary", 400),
    E.NonFiniteBoundary: ("non_finite_boundary", 400),
    E.ZeroDenominator: ("zero_denominator", 400),
    E.SetsIntersect: ("sets_intersect", 400),
    E.X0OutsideOmega: ("x0_outside_omega", 400),
    E.Omega1NotSubset: ("omega1_not_subset", 400),
    E.TooManyFreeVertices: ("too_many_free_vertices", 400),
    E.MonotonicityViolation: ("monotonicity_violation", 400),
}


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _set_threads(threads):
    if threads is not None:
        import numba

        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def _solver_kw(opts: S.SolverOptions):
    return {"mode": opts.mode, "scalar_method": opts.scalar_method,
            "accelerate": opts.accelerate}


def _run_cylinder_sweep(g, win, req: S.CapacityRequest):
    from ..io import _header_lines
    from ..lattice import cylinder_set

    shell = win.shell()
    rows = []
    for dims in req.cylinder_sweep:
        C = cylinder_set(win, min(dims.h, win.R), min(dims.r, win.R))
        cond = Condenser(C, shell, PExponent(req.p))
        res = capacity(g, cond, tol=req.tol, **_solver_kw(req.solver))
        rows.append((dims.h, dims.r, res))
    lines = _header_lines(req.deterministic) + ["h,r,cap"]
    for h, r, res in rows:
        lines.append(f"{h},{r},{res.value!r}")
    last = rows[-1][2]
    files = {
        "sweep.csv": "\n".join(lines) + "\n",
        "capacity.json": _dumps([
            {"h": h, "r": r, **res.to_json_dict()} for h, r, res in rows]),
    }
    summary = S.CapacitySummary(
        value=last.value, uncertainty=last.uncertainty, convention=last.convention,
        p=last.p, sizes=last.sizes, sweeps=last.sweeps,
        converged=all(res.converged for _, _, res in rows),
        max_residual=max(res.potential.max_residual for _, _, res in rows))
    return S.CapacityResponse(summary=summary, files=files)


def create_app() -> FastAPI:
    app = FastAPI(title="pharmonic", version="0.1.0",
                  description="Discrete nonlinear potential theory on weighted graphs")

    @app.exception_handler(E.PharmonicError)
    async def _domain_error(request, exc):
        for cls, (code, status) in _ERROR_CODES.items():
            if isinstance(exc, cls):
                return JSONResponse(status_code=status,
                                    content={"error": {"code": code, "message": str(exc)}})
        return JSONResponse(status_code=400,
                            content={"error": {"code": "compute_error", "message": str(exc)}})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        return JSONResponse(status_code=400,
                            content={"error": {"code": "invalid_request", "message": str(exc)}})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/capacity", response_model=S.CapacityResponse,
              responses={400: {"model": S.ErrorResponse}})
    def run_capacity(req: S.CapacityRequest):
        with _COMPUTE_LOCK:
            _set_threads(req.threads)
            g, win = lattice_box(req.lattice.d, req.lattice.R, w=req.lattice.w,
                                 vertex_budget=req.lattice.vertex_budget)
            if req.cylinder_sweep is not None:
                return _run_cylinder_sweep(g, win, req)
            source = resolve_set(req.source, win)
            sink = resolve_set(req.sink, win) if req.sink is not None else win.shell()
            domain = resolve_set(req.domain, win) if req.domain is not None else None
            if domain is not None:
                # plates are clipped to the domain (paper-style B_i subset Omega)
                source = source.intersection(domain)
                sink = sink.intersection(domain)
            cond = Condenser(source, sink, PExponent(req.p), domain=domain)
            result = capacity(g, cond, tol=req.tol, **_solver_kw(req.solver))
            payload = result.to_json_dict()
            payload["window"] = {"d": req.lattice.d, "R": req.lattice.R, "w": win.w}
            files = {"capacity.json": _dumps(payload)}
            if req.include_potential:
                files["potential.csv"] = potential_csv(result.potential,
                                                       deterministic=req.deterministic)
            summary = S.CapacitySummary(
                value=result.value, uncertainty=result.uncertainty,
                convention=result.convention, p=result.p, sizes=result.sizes,
                sweeps=result.sweeps, converged=result.converged,
                max_residual=result.potential.max_residual)
            return S.CapacityResponse(summary=summary, files=files)

    def _wiener_response(g, win, x0, a_set, req, note_extra=None):
        rep = wiener_report(g, x0, a_set, req.p, req.scales, tol=req.tol,
                            assume_nonparabolic=req.assume_nonparabolic,
                            window_radius=win.R, **_solver_kw(req.solver))
        summary_json = rep.summary_dict()
        if note_extra:
            summary_json.update(note_extra)
        files = {
            "wiener.csv": rep.csv(deterministic=req.deterministic),
            "wiener.json": _dumps(summary_json),
        }
        summary = S.WienerSummary(
            p=rep.p, n_scales=rep.n_scales, fit_ratio=rep.fit_ratio,
            classification=rep.classification,
            partial_main=rep.partial_main[-1] if rep.partial_main else 0.0,
            window_radius=rep.window_radius, bracket_ok=rep.bracket_ok,
            terms_main=[r.term_main for r in rep.records],
            converged_all=all(r.converged for r in rep.records),
            notes=rep.notes)
        return S.WienerResponse(summary=summary, files=files)

    @app.post("/v1/wiener", response_model=S.WienerResponse,
              responses={400: {"model": S.ErrorResponse}})
    def run_wiener(req: S.WienerRequest):
        with _COMPUTE_LOCK:
            _set_threads(req.threads)
            g, win = lattice_box(req.lattice.d, req.lattice.R, w=req.lattice.w,
                                 vertex_budget=req.lattice.vertex_budget)
            x0 = win.id_of(req.x0 if req.x0 is not None else [0] * win.d)
            a_set = resolve_set(req.a_set, win)
            nonpar = req.assume_nonparabolic
            if nonpar is None:
                nonpar = bool(win.d > req.p)  # Z^d is p-parabolic iff d <= p
                req = req.model_copy(update={"assume_nonparabolic": nonpar})
            return _wiener_response(g, win, x0, a_set, req)

    @app.post("/v1/thorn", response_model=S.WienerResponse,
              responses={400: {"model": S.ErrorResponse}})
    def run_thorn(req: S.ThornRequest):
        with _COMPUTE_LOCK:
            _set_threads(req.threads)
            R = req.window_R if req.window_R is not None else 2 ** (req.scales + 1)
            if R < 2 ** (req.scales + 1):
                raise E.WindowTooSmall(
                    f"window radius {R} cannot hold the dyadic ball of radius "
                    f"{2 ** (req.scales + 1)}")
            g, win = lattice_box(req.d, R)
            a_spec = {"kind": "thorn",
                      "f": {"type": "power", "alpha": req.alpha, "coeff": req.coeff}}
            a_set = resolve_set(a_spec, win)
            wreq = S.WienerRequest(
                lattice=S.LatticeSpec(d=req.d, R=R), p=req.p, a_set=a_spec,
                scales=req.scales, tol=req.tol,
                assume_nonparabolic=bool(win.d > req.p), solver=req.solver,
                deterministic=req.deterministic)
            note = {"thorn": {"alpha": req.alpha, "coeff": req.coeff, "d": req.d,
                              "series_exponent_q": (req.d - req.p - 1) / (req.p - 1)}}
            return _wiener_response(g, win, win.origin, a_set, wreq, note_extra=note)

    @app.post("/v1/massive", response_model=S.MassiveResponse,
              responses={400: {"model": S.ErrorResponse}})
    def run_massive(req: S.MassiveRequest):
        with _COMPUTE_LOCK:
            _set_threads(req.threads)
            fam = LatticeFamily(d=req.lattice.d, w=req.lattice.w,
                                vertex_budget=req.lattice.vertex_budget)
            ev = massiveness_sequence(fam, req.omega, req.x0, req.p, req.radii,
                                      tol=req.tol, **_solver_kw(req.solver))
            files = {
                "massive.csv": sequence_csv(ev.rows(), deterministic=req.deterministic),
                "massive.json": _dumps(ev.summary_dict()),
            }
            summary = S.MassiveSummary(verdict=ev.verdict, limit=ev.limit,
                                       err_proxy=ev.err_proxy, margin=ev.margin,
                                       values=ev.values, radii=ev.radii, p=ev.p,
                                       notes=ev.notes)
            return S.MassiveResponse(summary=summary, files=files)

    @app.post("/v1/parabolic", response_model=S.ParabolicResponse,
              responses={400: {"model": S.ErrorResponse}})
    def run_parabolic(req: S.ParabolicRequest):
        with _COMPUTE_LOCK:
            _set_threads(req.threads)
            fam = LatticeFamily(d=req.lattice.d, w=req.lattice.w,
                                vertex_budget=req.lattice.vertex_budget)
            k_spec = req.k_set if req.k_set is not None else {"kind": "ball", "r": 0}
            ev = parabolicity_sequence(fam, k_spec, req.p, req.radii, tol=req.tol,
                                       **_solver_kw(req.solver))
            files = {
                "parabolic.csv": sequence_csv(ev.rows(), deterministic=req.deterministic),
                "parabolic.json": _dumps(ev.summary_dict()),
            }
            summary = S.ParabolicSummary(verdict=ev.verdict, estimate=ev.estimate,
                                         err_proxy=ev.err_proxy,
                                         values=ev.exhaustion.values,
                                         radii=ev.exhaustion.radii, p=ev.p,
                                         notes=ev.notes)
            return S.ParabolicResponse(summary=summary, files=files)

    @app.post("/v1/selftest", response_model=S.SelftestResponse)
    def run_selftest_endpoint(req: S.SelftestRequest):
        with _COMPUTE_LOCK:
            checks = run_selftest(level=req.level, seed=req.seed)
            return S.SelftestResponse(
                passed=all(c.passed for c in checks),
                checks=[S.SelftestCheck(name=c.name, passed=c.passed, detail=c.detail)
                        for c in checks])

    return app
