"""HTTP service exposing optimizer sessions, benchmark problems and the
experiment harness.

Sessions hold optimizer state server-side so that expensive evaluations can
happen wherever the client lives; the experiment endpoints are stateless.
"""

from __future__ import annotations

import threading
import uuid
from typing import Literal

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .benchmarks import get_problem, grid_oracle, problem_names, threshold_for_quantile
from .harness import CHECKPOINTS, run_cell, summarize
from .optimizer import ControlParams, Optimizer, Proposal
from .space import SearchSpace
from .split import ConstraintSpec

ConfigValue = float | int
Mode = Literal["ctpe", "naive", "vanilla_tpe", "random"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainModel(StrictModel):
    kind: Literal["numerical", "categorical"]
    lower: float | None = None
    upper: float | None = None
    cardinality: int | None = None


class SpaceModel(StrictModel):
    dims: list[DomainModel]

    def to_space(self) -> SearchSpace:
        return SearchSpace.from_dict({"dims": [d.model_dump(exclude_none=True) for d in self.dims]})


class ConstraintModel(StrictModel):
    kind: Literal["measurable", "hard"] = "measurable"
    threshold: float | None = None
    cheap: bool = False

    def to_spec(self) -> ConstraintSpec:
        return ConstraintSpec(kind=self.kind, threshold=self.threshold, cheap=self.cheap)


class ControlParamsModel(StrictModel):
    n_init: int = 10
    n_samples: int = 24
    n_partial: int = 200

    def to_params(self) -> ControlParams:
        return ControlParams(**self.model_dump())


class CreateSessionRequest(StrictModel):
    space: SpaceModel
    constraints: list[ConstraintModel] = Field(default_factory=list)
    mode: Mode = "ctpe"
    params: ControlParamsModel = Field(default_factory=ControlParamsModel)
    seed: int = 0


class SessionInfo(StrictModel):
    session_id: str
    mode: Mode
    seed: int
    n_constraints: int
    n_observations: int
    n_partials: int
    params: ControlParamsModel


class AskResponse(StrictModel):
    config: list[ConfigValue]


class TellRequest(StrictModel):
    config: list[ConfigValue]
    objective: float | None = None
    constraints: list[float | None] | None = None
    hard_ok: list[bool | None] | None = None


class TellPartialRequest(StrictModel):
    config: list[ConfigValue]
    constraints: list[float | None]


class BestResponse(StrictModel):
    config: list[ConfigValue] | None = None
    objective: float | None = None


class ComponentModel(StrictModel):
    index: int
    gamma_hat: float
    eligible_count: int
    good_count: int
    bad_count: int


class CandidateModel(StrictModel):
    config: list[ConfigValue]
    log_ratios: list[float]
    log_relative_ratios: list[float]
    total_log_score: float
    source_component: int
    sample_index: int


class ProposeResponse(StrictModel):
    mode: Mode
    components: list[ComponentModel]
    candidates: list[CandidateModel]
    selected_index: int


class ImportSessionRequest(StrictModel):
    state: dict


class ProblemInfo(StrictModel):
    name: str
    space: SpaceModel
    n_constraints: int
    default_thresholds: list[float]
    has_oracle: bool


class OracleResponse(StrictModel):
    problem: str
    thresholds: list[float]
    oracle: float | None
    grid_oracle: float | None = None


class ThresholdRequest(StrictModel):
    gamma_true: list[float]
    n_grid: int = 10**6
    seed: int = 0


class ThresholdResponse(StrictModel):
    problem: str
    gamma_true: list[float]
    thresholds: list[float]


class CellRequest(StrictModel):
    problem: str
    thresholds: list[float]
    method: Mode
    seed: int = 0
    budget: int = 50
    n_init: int = 10
    n_samples: int = 24
    n_partial: int = 0
    cheap: list[int] = Field(default_factory=list)
    gamma_true: list[float] | None = None


class CellResponse(StrictModel):
    header: dict
    records: list[dict]


class LogDocument(StrictModel):
    header: dict
    records: list[dict]


class SummarizeRequest(StrictModel):
    logs: list[LogDocument]
    checkpoints: list[int] | None = None


class SummarizeResponse(StrictModel):
    summary: dict
    tables: dict[str, str]


class _Session:
    def __init__(self, optimizer: Optimizer) -> None:
        self.optimizer = optimizer
        self.lock = threading.Lock()


def _proposal_response(proposal: Proposal) -> ProposeResponse:
    candidates = list(proposal.candidates)
    return ProposeResponse(
        mode=proposal.mode,
        components=[
            ComponentModel(
                index=r.index,
                gamma_hat=r.gamma_hat,
                eligible_count=r.eligible_count,
                good_count=r.good_count,
                bad_count=r.bad_count,
            )
            for r in proposal.components
        ],
        candidates=[
            CandidateModel(
                config=list(c.config),
                log_ratios=list(c.log_ratios),
                log_relative_ratios=list(c.log_relative_ratios),
                total_log_score=c.total_log_score,
                source_component=c.source_component,
                sample_index=c.sample_index,
            )
            for c in candidates
        ],
        selected_index=candidates.index(proposal.selected),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="ctpe", version=__version__)
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(ValueError)
    async def _value_error(request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    def _get(session_id: str) -> _Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return session

    def _register(optimizer: Optimizer) -> str:
        session_id = uuid.uuid4().hex
        with registry_lock:
            sessions[session_id] = _Session(optimizer)
        return session_id

    def _info(session_id: str, optimizer: Optimizer) -> SessionInfo:
        return SessionInfo(
            session_id=session_id,
            mode=optimizer.mode,
            seed=optimizer.seed,
            n_constraints=optimizer.n_constraints,
            n_observations=len(optimizer.observations),
            n_partials=len(optimizer.partials),
            params=ControlParamsModel(**optimizer.params.to_dict()),
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    # -- sessions -------------------------------------------------------------

    @app.post("/sessions", response_model=SessionInfo)
    def create_session(request: CreateSessionRequest) -> SessionInfo:
        optimizer = Optimizer(
            space=request.space.to_space(),
            constraints=tuple(c.to_spec() for c in request.constraints),
            mode=request.mode,
            params=request.params.to_params(),
            seed=request.seed,
        )
        return _info(_register(optimizer), optimizer)

    @app.post("/sessions/import", response_model=SessionInfo)
    def import_session(request: ImportSessionRequest) -> SessionInfo:
        optimizer = Optimizer.from_dict(request.state)
        return _info(_register(optimizer), optimizer)

    @app.get("/sessions/{session_id}", response_model=SessionInfo)
    def session_info(session_id: str) -> SessionInfo:
        return _info(session_id, _get(session_id).optimizer)

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        _get(session_id)
        with registry_lock:
            del sessions[session_id]
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/ask", response_model=AskResponse)
    def ask(session_id: str) -> AskResponse:
        session = _get(session_id)
        with session.lock:
            config = session.optimizer.ask()
            config = session.optimizer.space.coerce(config)
        return AskResponse(config=list(config))

    @app.post("/sessions/{session_id}/propose", response_model=ProposeResponse)
    def propose(session_id: str) -> ProposeResponse:
        session = _get(session_id)
        with session.lock:
            try:
                proposal = session.optimizer.propose()
            except RuntimeError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
        return _proposal_response(proposal)

    @app.post("/sessions/{session_id}/tell", response_model=SessionInfo)
    def tell(session_id: str, request: TellRequest) -> SessionInfo:
        session = _get(session_id)
        with session.lock:
            session.optimizer.tell(
                request.config,
                objective=request.objective,
                constraints=request.constraints,
                hard_ok=request.hard_ok,
            )
            return _info(session_id, session.optimizer)

    @app.post("/sessions/{session_id}/tell-partial", response_model=SessionInfo)
    def tell_partial(session_id: str, request: TellPartialRequest) -> SessionInfo:
        session = _get(session_id)
        with session.lock:
            session.optimizer.tell_partial(request.config, request.constraints)
            return _info(session_id, session.optimizer)

    @app.get("/sessions/{session_id}/best", response_model=BestResponse)
    def best(session_id: str) -> BestResponse:
        session = _get(session_id)
        with session.lock:
            found = session.optimizer.best_feasible()
        if found is None:
            return BestResponse()
        return BestResponse(config=list(found[0]), objective=found[1])

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str) -> dict:
        session = _get(session_id)
        with session.lock:
            return session.optimizer.to_dict()

    # -- problems ----------------------------------------------------------------

    @app.get("/problems")
    def problems() -> dict:
        return {"problems": problem_names()}

    def _problem(name: str):
        try:
            return get_problem(name)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/problems/{name}", response_model=ProblemInfo)
    def problem_info(name: str) -> ProblemInfo:
        problem = _problem(name)
        return ProblemInfo(
            name=problem.name,
            space=SpaceModel(**problem.space.to_dict()),
            n_constraints=len(problem.constraints),
            default_thresholds=list(problem.default_thresholds),
            has_oracle=problem.oracle is not None,
        )

    @app.get("/problems/{name}/oracle", response_model=OracleResponse)
    def oracle(
        name: str,
        threshold: list[float] | None = Query(default=None),
        recompute: bool = False,
        grid_points: int = 10**6,
    ) -> OracleResponse:
        problem = _problem(name)
        thresholds = (
            tuple(threshold) if threshold else problem.default_thresholds
        )
        if len(thresholds) != len(problem.constraints):
            raise HTTPException(
                status_code=422,
                detail=f"{name} takes {len(problem.constraints)} threshold(s)",
            )
        value = problem.oracle(thresholds) if problem.oracle is not None else None
        grid_value = grid_oracle(problem, thresholds, n_points=grid_points) if recompute else None
        return OracleResponse(
            problem=name,
            thresholds=list(thresholds),
            oracle=value,
            grid_oracle=grid_value,
        )

    @app.post("/problems/{name}/threshold", response_model=ThresholdResponse)
    def calibrate_threshold(name: str, request: ThresholdRequest) -> ThresholdResponse:
        problem = _problem(name)
        if len(request.gamma_true) != len(problem.constraints):
            raise HTTPException(
                status_code=422,
                detail=f"{name} takes {len(problem.constraints)} gamma_true value(s)",
            )
        thresholds = [
            threshold_for_quantile(problem, i, g, n_grid=request.n_grid, seed=request.seed)
            for i, g in enumerate(request.gamma_true)
        ]
        return ThresholdResponse(
            problem=name, gamma_true=list(request.gamma_true), thresholds=thresholds
        )

    # -- experiments ---------------------------------------------------------------

    @app.post("/experiments/cell", response_model=CellResponse)
    def experiment_cell(request: CellRequest) -> CellResponse:
        problem = _problem(request.problem)
        header, records = run_cell(
            problem,
            request.thresholds,
            request.method,
            request.seed,
            budget=request.budget,
            n_init=request.n_init,
            n_samples=request.n_samples,
            n_partial=request.n_partial,
            cheap=request.cheap,
            gamma_true=request.gamma_true,
        )
        return CellResponse(header=header, records=records)

    @app.post("/experiments/summarize", response_model=SummarizeResponse)
    def experiment_summarize(request: SummarizeRequest) -> SummarizeResponse:
        documents = [(doc.header, doc.records) for doc in request.logs]
        checkpoints = tuple(request.checkpoints) if request.checkpoints else CHECKPOINTS
        summary, tables = summarize(documents, checkpoints=checkpoints)
        return SummarizeResponse(summary=summary, tables=tables)

    return app


app = create_app()
