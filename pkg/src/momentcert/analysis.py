"""End-to-end pipelines: state or data in, certified verdict out.

The verdict vocabulary is deliberately asymmetric.  A verified infeasibility
certificate proves the observed correlations cannot come from local
measurements on a separable state, hence NONLOCAL.  A feasible completion
proves nothing about locality at a finite hierarchy level, so everything
else is INCONCLUSIVE.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import MomentKey, Scenario, key_name, validate_moment_key
from .errors import (
    DuplicateMoment,
    NoBracket,
    PipelineError,
    RangeError,
    SchemaError,
)
from .hierarchy import (
    AffineMatrixFamily,
    MomentMatrixStructure,
    PinPolicy,
    assemble,
    build_structure,
)
from .quantum import (
    CorrelatorTable,
    add_white_noise,
    correlator_table,
    make_state,
    standard_suite,
)
from .sdp import (
    CERTIFIED_INFEASIBLE,
    DualCertificate,
    SolverConfig,
    SolveOutcome,
    maximize_lambda_min,
    verify_certificate,
)

NONLOCAL = "NONLOCAL"
INCONCLUSIVE = "INCONCLUSIVE"

VALUE_TOL = 1e-9


@dataclass(frozen=True)
class SimulatedSource:
    """Correlators computed from a named state under a standard suite."""

    state: str
    suite: str
    visibility: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")


@dataclass(frozen=True)
class MeasuredSource:
    """Correlators taken from an ingested table."""

    table: CorrelatorTable


@dataclass(frozen=True)
class AnalysisRequest:
    source: SimulatedSource | MeasuredSource
    scenario: Scenario
    level: int = 2
    policy: PinPolicy = field(default_factory=PinPolicy.all)
    config: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class VerdictReport:
    verdict: str
    status: str
    lambda_star: float
    iterations: int
    scenario: Scenario
    level: int
    policy: PinPolicy
    pinned: tuple[tuple[MomentKey, float], ...]
    witness: tuple[tuple[str, float], ...]
    certificate: DualCertificate | None
    certificate_verified: bool
    config: SolverConfig
    source_description: dict
    wall_time_s: float

    def body_document(self) -> dict:
        """The scientific content of the report, free of run metadata."""
        certificate = None
        if self.certificate is not None:
            certificate = {
                "value": self.certificate.value,
                "verified": self.certificate_verified,
                "matrix": np.asarray(self.certificate.matrix, dtype=float).tolist(),
            }
        return {
            "verdict": self.verdict,
            "status": self.status,
            "lambda_star": self.lambda_star,
            "iterations": self.iterations,
            "scenario": _scenario_document(self.scenario),
            "level": self.level,
            "policy": self.policy.describe(),
            "pinned": [
                {
                    "parties": [party for party, _ in key],
                    "settings": [setting for _, setting in key],
                    "name": key_name(key),
                    "value": value,
                }
                for key, value in self.pinned
            ],
            "witness": [{"variable": name, "value": value} for name, value in self.witness],
            "certificate": certificate,
        }

    def document(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "verdict_report",
            "body": self.body_document(),
            "meta": {
                "source": self.source_description,
                "config": _config_document(self.config),
                "wall_time_s": self.wall_time_s,
            },
        }


def _scenario_document(scenario: Scenario) -> dict:
    return {
        "parties": scenario.parties,
        "settings": scenario.settings,
        "outcomes": scenario.outcomes,
    }


def _config_document(config: SolverConfig) -> dict:
    return {
        "max_iters": config.max_iters,
        "step_scale": config.step_scale,
        "tol_cert": config.tol_cert,
        "margin": config.margin,
        "restarts": config.restarts,
        "seed": config.seed,
        "polish_sweeps": config.polish_sweeps,
    }


def _source_description(source) -> dict:
    if isinstance(source, SimulatedSource):
        return {
            "kind": "simulated",
            "state": source.state,
            "suite": source.suite,
            "visibility": source.visibility,
        }
    return {"kind": "measured", "moments": len(source.table)}


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, str(exc)) from exc


def request_table(request: AnalysisRequest, structure: MomentMatrixStructure) -> CorrelatorTable:
    """Obtain the correlator table for a request, simulating if needed."""
    if isinstance(request.source, MeasuredSource):
        table = request.source.table
        if table.scenario != request.scenario:
            raise ValueError(
                f"table scenario {table.scenario!r} does not match request {request.scenario!r}"
            )
        return table
    source = request.source
    state = make_state(source.state, request.scenario.parties)
    state = add_white_noise(state, source.visibility)
    suite = standard_suite(source.suite)
    return correlator_table(state, suite, structure)


def analyze(request: AnalysisRequest) -> VerdictReport:
    """Build, assemble, solve, and map the outcome to a verdict."""
    started = time.perf_counter()
    structure = _stage("structure", build_structure, request.scenario, request.level)
    table = _stage("assembly", request_table, request, structure)
    family = _stage("assembly", assemble, structure, table, request.policy)
    outcome: SolveOutcome = _stage("solve", maximize_lambda_min, family, request.config)

    verified = outcome.certificate is not None and verify_certificate(
        family, outcome.certificate, request.config.tol_cert
    )
    verdict = NONLOCAL if (outcome.status == CERTIFIED_INFEASIBLE and verified) else INCONCLUSIVE
    witness = tuple(
        (name, float(value))
        for name, value in zip(family.variable_names(), outcome.v_star)
    )
    return VerdictReport(
        verdict=verdict,
        status=outcome.status,
        lambda_star=outcome.lambda_star,
        iterations=outcome.iterations,
        scenario=request.scenario,
        level=request.level,
        policy=request.policy,
        pinned=family.pinned,
        witness=witness,
        certificate=outcome.certificate,
        certificate_verified=verified,
        config=request.config,
        source_description=_source_description(request.source),
        wall_time_s=time.perf_counter() - started,
    )


@dataclass
class RobustnessResult:
    p_star: float
    bracket: tuple[float, float]
    tolerance: float
    evaluations: tuple[tuple[float, str], ...]


def robustness(
    state: str,
    suite: str,
    scenario: Scenario,
    level: int = 2,
    policy: PinPolicy | None = None,
    tolerance: float = 1e-2,
    config: SolverConfig | None = None,
) -> RobustnessResult:
    """Critical visibility by bisection on the NONLOCAL predicate.

    Requires NONLOCAL at visibility 1 and INCONCLUSIVE at 0; the NONLOCAL
    region is assumed to be an interval ending at 1.  Verdicts at already
    visited points are cached (the pipeline is deterministic) and the
    bracket endpoints are re-checked each step, so a monotonicity violation
    surfaces as NoBracket instead of a silently wrong threshold.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    policy = policy if policy is not None else PinPolicy.all()
    config = config if config is not None else SolverConfig()
    verdict_cache: dict[float, str] = {}
    evaluations: list[tuple[float, str]] = []

    def verdict_at(p: float) -> str:
        if p not in verdict_cache:
            request = AnalysisRequest(
                source=SimulatedSource(state, suite, p),
                scenario=scenario,
                level=level,
                policy=policy,
                config=config,
            )
            verdict_cache[p] = analyze(request).verdict
            evaluations.append((p, verdict_cache[p]))
        return verdict_cache[p]

    lo, hi = 0.0, 1.0
    if verdict_at(hi) != NONLOCAL:
        raise NoBracket(f"verdict at visibility 1 is {verdict_at(hi)}, not {NONLOCAL}")
    if verdict_at(lo) != INCONCLUSIVE:
        raise NoBracket(f"verdict at visibility 0 is {verdict_at(lo)}, not {INCONCLUSIVE}")
    while hi - lo > tolerance:
        if verdict_at(lo) != INCONCLUSIVE or verdict_at(hi) != NONLOCAL:
            raise NoBracket(f"bracket [{lo}, {hi}] lost its verdict pattern")
        mid = 0.5 * (lo + hi)
        if verdict_at(mid) == NONLOCAL:
            hi = mid
        else:
            lo = mid
    return RobustnessResult(
        p_star=0.5 * (lo + hi),
        bracket=(lo, hi),
        tolerance=tolerance,
        evaluations=tuple(evaluations),
    )


def table_document(table: CorrelatorTable) -> dict:
    """Serialize a correlator table to the frozen JSON schema."""
    moments = []
    for key in sorted(table.keys()):
        entry = {
            "parties": [party for party, _ in key],
            "settings": [setting for _, setting in key],
            "value": table.value(key),
        }
        sigma = table.sigma(key)
        if sigma is not None:
            entry["sigma"] = sigma
        moments.append(entry)
    return {
        "schema_version": 1,
        "scenario": _scenario_document(table.scenario),
        "moments": moments,
    }


def _expect(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise SchemaError(f"{path}: {message}")


def _expect_int(document, path: str) -> int:
    _expect(isinstance(document, int) and not isinstance(document, bool), path, "expected an integer")
    return document


def ingest_table(document) -> CorrelatorTable:
    """Validate a table document and build the CorrelatorTable.

    Raises SchemaError with the offending field path, RangeError for values
    outside [-1, 1], and DuplicateMoment for repeated keys.
    """
    _expect(isinstance(document, dict), "$", "expected a JSON object")
    _expect(document.get("schema_version") == 1, "schema_version", "expected 1")
    scenario_doc = document.get("scenario")
    _expect(isinstance(scenario_doc, dict), "scenario", "expected an object")
    parties = _expect_int(scenario_doc.get("parties"), "scenario.parties")
    settings = _expect_int(scenario_doc.get("settings"), "scenario.settings")
    outcomes = _expect_int(scenario_doc.get("outcomes", 2), "scenario.outcomes")
    try:
        scenario = Scenario(parties, settings, outcomes)
    except ValueError as exc:
        raise SchemaError(f"scenario: {exc}") from exc

    moments = document.get("moments")
    _expect(isinstance(moments, list), "moments", "expected a list")
    entries: dict[MomentKey, tuple[float, float | None]] = {}
    for index, item in enumerate(moments):
        path = f"moments[{index}]"
        _expect(isinstance(item, dict), path, "expected an object")
        parties_list = item.get("parties")
        settings_list = item.get("settings")
        _expect(isinstance(parties_list, list) and parties_list, f"{path}.parties", "expected a nonempty list")
        _expect(isinstance(settings_list, list), f"{path}.settings", "expected a list")
        _expect(
            len(parties_list) == len(settings_list),
            f"{path}.settings",
            "parties and settings must have equal length",
        )
        key = []
        for party, setting in zip(parties_list, settings_list):
            key.append((_expect_int(party, f"{path}.parties"), _expect_int(setting, f"{path}.settings")))
        key = tuple(key)
        try:
            validate_moment_key(scenario, key)
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
        value = item.get("value")
        _expect(isinstance(value, (int, float)) and not isinstance(value, bool), f"{path}.value", "expected a number")
        if abs(value) > 1.0 + VALUE_TOL:
            raise RangeError(f"{path}.value: {value} outside [-1, 1]")
        sigma = item.get("sigma")
        if sigma is not None:
            _expect(
                isinstance(sigma, (int, float)) and not isinstance(sigma, bool) and sigma >= 0.0,
                f"{path}.sigma",
                "expected a nonnegative number",
            )
        if key in entries:
            raise DuplicateMoment(f"{path}: duplicate moment {key_name(key)}")
        entries[key] = (float(value), None if sigma is None else float(sigma))
    return CorrelatorTable(scenario, entries)


def certificate_from_document(document: dict) -> DualCertificate | None:
    """Rebuild the certificate recorded in a verdict-report body."""
    cert_doc = document.get("certificate")
    if cert_doc is None:
        return None
    matrix = np.asarray(cert_doc["matrix"], dtype=float)
    return DualCertificate(matrix=matrix, value=float(cert_doc["value"]))


def family_for_request(request: AnalysisRequest) -> AffineMatrixFamily:
    """The affine family a request leads to; used to re-check certificates."""
    structure = build_structure(request.scenario, request.level)
    table = request_table(request, structure)
    return assemble(structure, table, request.policy)
