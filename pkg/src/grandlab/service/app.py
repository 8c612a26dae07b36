"""FastAPI app exposing the decoding laboratory.

Endpoints are stateless compute wrappers over the core package: schedules,
models and channel vectors travel in the request/response bodies, and all
file I/O stays with the caller (the CLI persists schedules, models, CSVs
and manifests from response payloads).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..channel import SnrConvention
from ..codes import code_from_spec
from ..decoder import decode, sgrand_policy, static_policy
from ..errors import CapacityError, InvalidParameterError
from ..patterns import (
    cdf_weight_function,
    enumerate_schedule,
    rank_weight_function,
    three_line_weight_function,
    unit_weight_function,
    accumulated_weight,
)
from ..reshuffle import (
    RMatrixAccumulator,
    estimate_mean_posteriors,
    evaluate_delta_q,
    reshuffle_schedule,
    iter_sample_chunks,
    schedule_posteriors,
)
from ..rngstreams import substream
from ..simulate import DecoderSetup, SimConfig, run_point
from ..verification import run_verification
from . import models as m


def _weight_function(req: m.BuildScheduleRequest):
    if req.weight == "unit":
        return unit_weight_function(req.n)
    if req.weight == "rank":
        return rank_weight_function(req.n)
    if req.sigma is None:
        raise InvalidParameterError(f"{req.weight} weights need sigma")
    rng = substream(req.seed, f"weights-{req.weight}", 0)
    if req.weight == "cdf":
        return cdf_weight_function(req.n, req.sigma, req.mc_samples, rng)
    return three_line_weight_function(
        req.n, sigma=req.sigma, mc_samples=req.mc_samples, rng=rng
    )


def create_app() -> FastAPI:
    app = FastAPI(title="grandlab", version=__version__)

    @app.exception_handler(InvalidParameterError)
    def _invalid(request, exc):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.exception_handler(CapacityError)
    def _capacity(request, exc):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health", response_model=m.HealthResponse)
    def health():
        return m.HealthResponse(status="ok", version=__version__)

    @app.get("/codes/{spec}", response_model=m.CodeInfoResponse)
    def code_info(spec: str):
        code = _build_code(spec)
        return m.CodeInfoResponse(name=code.name, n=code.n, k=code.k, rate=code.k / code.n)

    @app.post("/schedules/build", response_model=m.BuildScheduleResponse)
    def schedules_build(req: m.BuildScheduleRequest):
        wf = _call(_weight_function, req)
        sched = _call(enumerate_schedule, wf, req.n, req.count)
        return m.BuildScheduleResponse(
            schedule=m.SchedulePayload.from_schedule(sched),
            first_weight=accumulated_weight(sched.patterns[0], wf),
            last_weight=accumulated_weight(sched.patterns[-1], wf),
        )

    @app.post("/reshuffle/train", response_model=m.TrainReshuffleResponse)
    def reshuffle_train(req: m.TrainReshuffleRequest):
        base = _call(req.base.to_schedule)
        mean_s = _call(estimate_mean_posteriors, base, req.sigma, req.samples, req.seed)
        model = reshuffle_schedule(
            base, mean_s, {"sigma_design": req.sigma, "mc_samples": req.samples, "seed": req.seed}
        )
        dq_base = dq_resh = None
        if req.holdout_samples > 0:
            holdout_seed = req.seed + req.holdout_seed_offset
            dq_base, _ = evaluate_delta_q(base, req.sigma, req.holdout_samples, holdout_seed)
            dq_resh, _ = evaluate_delta_q(
                model.reshuffled, req.sigma, req.holdout_samples, holdout_seed
            )
        return m.TrainReshuffleResponse(
            pi_tilde=[int(j) + 1 for j in model.pi_tilde],
            sigma=req.sigma,
            samples=req.samples,
            seed=req.seed,
            delta_q_base=dq_base,
            delta_q_reshuffled=dq_resh,
        )

    @app.post("/analysis/rmatrix", response_model=m.RMatrixResponse)
    def analysis_rmatrix(req: m.RMatrixRequest):
        sched = _call(req.schedule.to_schedule)
        if req.k > sched.length:
            raise HTTPException(status_code=400, detail=f"k={req.k} exceeds schedule length")
        acc = RMatrixAccumulator(req.k)
        for chunk in iter_sample_chunks(sched.n, req.sigma, req.samples, req.seed):
            for lam in chunk:
                acc.add(schedule_posteriors(lam, sched, upto=req.k))
        mat = acc.finalize()
        return m.RMatrixResponse(
            k=req.k, raw=mat.raw.tolist(), normalized=mat.normalized.tolist()
        )

    @app.post("/decode", response_model=m.DecodeResponse)
    def decode_endpoint(req: m.DecodeRequest):
        code = _build_code(req.code)
        if len(req.y) != code.n:
            raise HTTPException(status_code=400, detail=f"y must have length n={code.n}")
        if req.policy == "sgrand":
            policy = sgrand_policy(req.T)
        else:
            if req.schedule is None:
                raise HTTPException(status_code=400, detail="schedule policy needs a schedule")
            policy = _call(lambda: static_policy(req.schedule.to_schedule(), req.T))
        res = _call(decode, np.asarray(req.y), code, policy, req.sigma)
        return m.DecodeResponse(
            outcome=res.outcome.value,
            codeword="".join(map(str, res.codeword)) if res.found else None,
            queries_used=res.queries_used,
        )

    @app.post("/simulation/run", response_model=m.SimResponse)
    def simulation_run(req: m.SimRequest):
        code = _build_code(req.code)
        sched = req.decoder.schedule.to_schedule() if req.decoder.schedule else None
        decoder = DecoderSetup(name=req.decoder.name, kind=req.decoder.kind, schedule=sched)
        config = _call(
            SimConfig,
            code_spec=req.code,
            decoder_name=req.decoder.name,
            snr_db_list=tuple(req.snr_db_list),
            convention=SnrConvention(req.convention),
            T=req.T,
            max_trials=req.max_trials,
            min_block_errors=req.min_block_errors,
            seed=req.seed,
            workers=req.workers,
            mode=req.mode,
        )
        records = [_call(run_point, code, decoder, config, snr) for snr in config.snr_db_list]
        return m.SimResponse(records=[m.SimRecordModel(**_record_dict(r)) for r in records])

    @app.post("/oracle/verify", response_model=m.OracleVerifyResponse)
    def oracle_verify(req: m.OracleVerifyRequest):
        results = run_verification(quick=req.quick, seed=req.seed)
        return m.OracleVerifyResponse(
            passed=all(r.passed for r in results),
            properties=[
                m.OraclePropertyModel(name=r.name, passed=r.passed, detail=r.detail)
                for r in results
            ],
        )

    return app


def _build_code(spec: str):
    try:
        return code_from_spec(spec)
    except InvalidParameterError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def _call(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (InvalidParameterError, CapacityError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def _record_dict(rec) -> dict:
    from dataclasses import asdict

    return asdict(rec)
