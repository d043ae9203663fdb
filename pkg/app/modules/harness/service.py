import csv
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence

from pydantic import BaseModel, ValidationError

from app.core.config import settings
from app.core.errors import ConfigError, UsageError
from app.core.mixins import RecordHeader
from app.modules.approx.models import ApproxParams
from app.modules.approx.service import approx_audit, ubd2_ratio
from app.modules.contour.schema import ContourAuditRecord, ContourAuditTotals
from app.modules.contour.service import build_contour, contour_audit, enumerate_J0, ga_pair_of, in_J0
from app.modules.ensemble.enums import Boundary
from app.modules.ensemble.models import Ensemble
from app.modules.ensemble.schema import ExactResult
from app.modules.ensemble.service import (
    conditional_occupation_identity_check,
    is_unconstrained,
    lower_bound_check,
    make_ensemble,
    occupation_probability,
    partition_function,
    prob_J0,
    site,
    with_frozen,
)
from app.modules.flow.models import FlowPolicy
from app.modules.flow.schema import DefectRow, FlowAuditSummary, MainBoundRow
from app.modules.flow.service import cover_audit, defect_audit, flow_rows, main_bound_check, small_I_bound_check
from app.modules.iso.schema import BallRow, SphereStratumRow
from app.modules.iso.service import (
    average_support,
    ball_counts,
    ball_size,
    bl_lower_bound,
    f_ratio,
    goal1_ratios,
    neighbor_pair_count,
    qratio_holds,
    sphere_size,
    tq_bound_check,
)
from app.modules.lattice.models import Occupancy, Torus, VertexSet
from app.modules.lattice.service import make_torus
from app.modules.sampler.schema import GapRow, SampleRow
from app.modules.sampler.service import estimate_occupation, gap_scan, sample_configurations
from .enums import ArtifactFormat, ExactQuantity, Subcommand
from .models import RunOutcome
from .schema import RunConfig

logger = logging.getLogger(__name__)


# ========================================
# Configuration
# ========================================

def parse_overrides(tokens: Sequence[str]) -> dict[str, str]:
    """key=value tokens to a dict (later tokens win)"""
    overrides = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise UsageError(f"Expected key=value, got {token!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def load_config(subcommand: str, path: Optional[Path] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """JSON file (if any) overridden by key=value tokens"""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object")
    data.update(parse_overrides(overrides))
    data["subcommand"] = subcommand
    return validate_config(data)


def validate_config(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(map(str, e['loc'])) or 'config'}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"Invalid configuration: {problems}") from exc


@contextmanager
def applied_budgets(config: RunConfig) -> Iterator[None]:
    """Run-level budget overrides, restored when the run ends"""
    saved = settings.ENUMERATION_BUDGET
    if config.enumeration_budget is not None:
        settings.ENUMERATION_BUDGET = config.enumeration_budget
    try:
        yield
    finally:
        settings.ENUMERATION_BUDGET = saved


def torus_for(config: RunConfig) -> Torus:
    return make_torus(config.d, config.M)


def site_for(config: RunConfig, torus: Torus, odd: bool = True) -> int:
    """config.v0, or (1, 0, ..., 0) when odd, else the origin"""
    if config.v0 is not None:
        return site(torus, config.v0)
    return site(torus, (1 if odd else 0,) + (0,) * (config.d - 1))


def approx_params(config: RunConfig) -> ApproxParams:
    return ApproxParams(xi=config.xi, psi=config.psi)


def flow_policy(config: RunConfig, torus: Torus) -> FlowPolicy:
    params = approx_params(config)
    if config.force_large:
        return FlowPolicy.forced_large(params)
    if config.small_only:
        return FlowPolicy.small_only(torus, params)
    return FlowPolicy(tau=config.tau, approx=params)


def audited_members(config: RunConfig, e: Ensemble, v0: int) -> Iterator[Occupancy]:
    """J0 exhaustively, or config.samples configurations drawn with v0 occupied"""
    if config.samples is None:
        return enumerate_J0(e, v0)
    conditioned = with_frozen(e, VertexSet.of([v0]))
    drawn = sample_configurations(
        conditioned,
        config.float_activities()[0],
        count=config.samples,
        thin=config.thin,
        seed=config.seed,
        burn_in=config.burn_in,
    )
    masks = sorted({I.mask for I in drawn})
    logger.info("Sampled %d distinct configurations from %d draws", len(masks), config.samples)
    return (VertexSet(mask) for mask in masks if in_J0(e.torus, VertexSet(mask), v0, e.delta))


# ========================================
# Subcommands
# ========================================

def exact_outcome(config: RunConfig) -> RunOutcome:
    torus = torus_for(config)
    e = make_ensemble(torus, config.boundary)
    v0 = site_for(config, torus)
    outcome = RunOutcome(format=ArtifactFormat.JSON)
    for activity in config.activities():
        if config.quantity is ExactQuantity.PARTITION_FUNCTION:
            value = partition_function(e, activity)
        elif config.quantity is ExactQuantity.PROB_J0:
            value = prob_J0(e, activity, v0)
        else:
            value = occupation_probability(e, activity, v0)
            if activity > 0 and is_unconstrained(e, v0):
                identity = conditional_occupation_identity_check(e, activity, v0)
                lower = lower_bound_check(e, activity, v0)
                failed = [name for name, holds in (("conditional_identity", identity.holds),
                                                   ("lower_bound", lower.holds)) if not holds]
                if failed:
                    outcome.failures.append({"lambda": str(activity), "v0": v0, "failed": failed})
        outcome.records.append(ExactResult.build(
            config.quantity.value, config.d, config.M, config.boundary.value, activity, torus.coords[v0], value,
        ))
    return outcome


def sample_outcome(config: RunConfig) -> RunOutcome:
    torus = torus_for(config)
    e = make_ensemble(torus, config.boundary)
    v0 = site_for(config, torus)
    outcome = RunOutcome(format=ArtifactFormat.CSV)
    for replica, activity in enumerate(config.float_activities()):
        report = estimate_occupation(e, activity, v0, config.sweeps, config.burn_in, config.seed, replica=replica)
        outcome.records.append(SampleRow.from_report(
            config.d, config.M, activity, config.boundary.value, torus.coords[v0], report,
        ))
    return outcome


def gap_scan_outcome(config: RunConfig) -> RunOutcome:
    torus = torus_for(config)
    v0 = site_for(config, torus, odd=False)
    points = gap_scan(
        config.d, config.M, config.float_activities(), v0, config.sweeps, config.burn_in, config.seed, config.workers,
    )
    return RunOutcome(format=ArtifactFormat.CSV, records=[GapRow.from_point(point) for point in points])


def contour_outcome(config: RunConfig) -> RunOutcome:
    torus = torus_for(config)
    e = make_ensemble(torus, Boundary.EVEN)
    v0 = site_for(config, torus)
    summary, rows = contour_audit(torus, audited_members(config, e, v0), v0, e.delta)
    records: list = [ContourAuditRecord.from_trace(trace, properties) for trace, properties in rows]
    histogram: dict[int, int] = {}
    for count in summary.multiplicity.values():
        histogram[count] = histogram.get(count, 0) + 1
    records.append({"summary": ContourAuditTotals(
        audited=summary.audited,
        failed=len(summary.failures),
        distinct_pairs=summary.distinct_pairs,
        max_multiplicity=summary.max_multiplicity,
        multiplicity_histogram=histogram,
    ).model_dump()})
    return RunOutcome(format=ArtifactFormat.JSONL, records=records, failures=summary.failures)


def flow_outcome(config: RunConfig) -> RunOutcome:
    torus = torus_for(config)
    e = make_ensemble(torus, Boundary.EVEN)
    v0 = site_for(config, torus)
    policy = flow_policy(config, torus)
    outcome = RunOutcome(format=ArtifactFormat.JSON)
    for activity in config.activities():
        rows = flow_rows(e, activity, v0, policy, config.workers)
        report = defect_audit(e, activity, v0, policy, rows=rows)
        groups = main_bound_check(rows, activity)
        small_ok = small_I_bound_check(rows, activity)
        outcome.failures.extend({"lambda": str(activity), **failure} for failure in report.failures)
        checks = {
            "identity": report.identity_holds,
            "telescoping": report.telescoping_holds,
            "prob_J0_agrees": report.prob_J0_agrees,
            "prob_J0_below_max_defect": report.prob_J0_direct <= report.max_defect,
            "small_I_bound": small_ok,
        }
        failed = [name for name, holds in checks.items() if not holds]
        if failed:
            outcome.failures.append({"lambda": str(activity), "failed": failed})
        record = {
            "summary": FlowAuditSummary.from_report(report).model_dump(),
            "main_bound": [MainBoundRow.from_group(group).model_dump() for group in groups],
            "defects": [row.model_dump() for row in DefectRow.rows(report)],
        }
        if config.covers:
            checked, cover_failures = cover_audit(rows)
            record["covers_checked"] = checked
            outcome.failures.extend({"lambda": str(activity), **failure} for failure in cover_failures)
        outcome.records.append(record)
    return outcome


def approx_outcome(config: RunConfig) -> RunOutcome:
    torus = torus_for(config)
    e = make_ensemble(torus, Boundary.EVEN)
    v0 = site_for(config, torus)
    traces = (build_contour(torus, I, v0, e.delta) for I in audited_members(config, e, v0))
    summary, records = approx_audit((ga_pair_of(trace) for trace in traces), approx_params(config))
    records.append({"summary": {
        "audited": summary.audited,
        "failed": len(summary.failures),
        "degeneracies": summary.degeneracies,
        "distinct_pi_outputs": summary.distinct_outputs,
        "ubd2_ratio": ubd2_ratio(summary, config.d),
    }})
    return RunOutcome(format=ArtifactFormat.JSONL, records=records, failures=summary.failures)


def iso_outcome(config: RunConfig) -> RunOutcome:
    d, r_max = config.d, config.r_max
    counts = ball_counts(d, r_max)
    outcome = RunOutcome(format=ArtifactFormat.CSV, records=SphereStratumRow.rows(counts))
    outcome.extra_tables["balls"] = [BallRow.from_point(d, point) for point in goal1_ratios(d, r_max)]
    for q in range(1, r_max + 1):
        for t in range(1, min(q, d)):
            f_ratio(q, t, d)
        if not qratio_holds(d, q):
            outcome.failures.append({"d": d, "q": q, "failed": ["qratio"]})
        if d <= 5 and q <= 6:
            pairs = neighbor_pair_count(d, q)
            if pairs != sphere_size(d, q) * (2 * d - average_support(d, q)):
                outcome.failures.append({"d": d, "q": q, "failed": ["neighbor_pairs"]})
    bounds = [bl_lower_bound(size, d) for size in range(1, ball_size(d, min(r_max, 3)) + 1)]
    if any(later < earlier for earlier, later in zip(bounds, bounds[1:])):
        outcome.failures.append({"d": d, "failed": ["bl_monotone"]})
    if config.q is not None:
        report = tq_bound_check(d, config.q)
        if not report.ok:
            outcome.failures.append({"d": d, "q": config.q, "failed": ["tq_bound"]})
    return outcome


# ========================================
# Artifacts
# ========================================

EXTENSIONS = {ArtifactFormat.JSON: ".json", ArtifactFormat.JSONL: ".jsonl", ArtifactFormat.CSV: ".csv"}

FORMATS = {
    Subcommand.EXACT: ArtifactFormat.JSON,
    Subcommand.SAMPLE: ArtifactFormat.CSV,
    Subcommand.GAP_SCAN: ArtifactFormat.CSV,
    Subcommand.CONTOUR_AUDIT: ArtifactFormat.JSONL,
    Subcommand.FLOW_AUDIT: ArtifactFormat.JSON,
    Subcommand.APPROX_AUDIT: ArtifactFormat.JSONL,
    Subcommand.ISO: ArtifactFormat.CSV,
    Subcommand.REPLAY: ArtifactFormat.JSON,
}


def _plain(record: BaseModel | dict[str, Any]) -> dict[str, Any]:
    if isinstance(record, BaseModel):
        return record.model_dump(mode="json", by_alias=True)
    return record


def artifact_path(config: RunConfig) -> Path:
    if config.output is not None:
        return config.output
    return Path(f"{config.subcommand.value}{EXTENSIONS[FORMATS[config.subcommand]]}")


def failure_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}.failures.json")


def write_json(path: Path, header: RecordHeader, records: Iterable[BaseModel | dict[str, Any]]) -> None:
    payload = {"header": header.model_dump(mode="json"), "records": [_plain(r) for r in records]}
    path.write_text(json.dumps(payload, indent=2, default=str))


def write_jsonl(path: Path, header: RecordHeader, records: Iterable[BaseModel | dict[str, Any]]) -> None:
    with path.open("w") as handle:
        handle.write(json.dumps({"header": header.model_dump(mode="json")}, default=str) + "\n")
        for record in records:
            handle.write(json.dumps(_plain(record), default=str) + "\n")


def write_csv(path: Path, header: RecordHeader, rows: Sequence[BaseModel]) -> None:
    with path.open("w", newline="") as handle:
        for line in header.comment_lines():
            handle.write(line + "\n")
        if not rows:
            return
        plain = [_plain(row) for row in rows]
        writer = csv.DictWriter(handle, fieldnames=list(plain[0]))
        writer.writeheader()
        writer.writerows(plain)


def write_failures(path: Path, header: RecordHeader, failures: list[dict[str, Any]]) -> None:
    payload = {"header": header.model_dump(mode="json"), "failures": failures}
    path.write_text(json.dumps(payload, indent=2, default=str))


def write_outcome(config: RunConfig, outcome: RunOutcome) -> Path:
    """Write the artifact (and the failure artifact when needed); returns the artifact path"""
    header = RecordHeader.for_config(config.subcommand.value, config.echo(), seed=config.seed)
    path = artifact_path(config)
    path.parent.mkdir(parents=True, exist_ok=True)
    if outcome.format is ArtifactFormat.JSON:
        write_json(path, header, outcome.records)
    elif outcome.format is ArtifactFormat.JSONL:
        write_jsonl(path, header, outcome.records)
    else:
        write_csv(path, header, outcome.records)
    for suffix, rows in outcome.extra_tables.items():
        write_csv(path.with_name(f"{path.stem}_{suffix}.csv"), header, rows)
    if outcome.failures:
        write_failures(failure_path(path), header, outcome.failures)
        logger.error("%d invariant failures; instances written to %s", len(outcome.failures), failure_path(path))
    logger.info("Wrote %s", path)
    return path


def read_failure_artifact(path: Path) -> tuple[RunConfig, list[dict[str, Any]]]:
    """Configuration and failures recorded in a failure artifact"""
    try:
        payload = json.loads(Path(path).read_text())
        config, failures = payload["header"]["config"], payload["failures"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"Cannot read failure artifact {path}: {exc}") from exc
    return validate_config(config), failures


def same_failures(recorded: list[dict[str, Any]], replayed: list[dict[str, Any]]) -> bool:
    def canonical(items: list[dict[str, Any]]) -> str:
        return json.dumps(json.loads(json.dumps(items, default=str)), sort_keys=True)

    return canonical(recorded) == canonical(replayed)

