"""Command-line interface.

Exit codes: 0 success, 1 validation findings (error severity), 2 errors
(unreadable input, parse failures, violated preconditions).  ``--json``
emits machine-readable output on stdout; report directories receive
delimited tables plus rendered figures.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import geometry
from .catalog import (
    CatalogError,
    PatientProfile,
    default_catalog,
    load_catalog,
    validate_profile,
)
from .pressure import OffloadTarget, PressureError, compare, parse_recording
from .recommender import (
    ForestParams,
    Policy,
    RecommenderError,
    TreeParams,
    evaluate_models,
    load_dataset,
    model_from_json,
    model_to_json,
    recommend,
    train_models,
)
from .ruledsl import RuleError, explain, parse_rules
from .trial import (
    Trial,
    TrialError,
    VisitRecord,
    adherence,
    maintenance_due,
)
from .validation import ValidationReport

_DOMAIN_ERRORS = (CatalogError, RuleError, geometry.GeometryError, PressureError,
                  RecommenderError, TrialError, OSError, KeyError, ValueError)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _echo_report(report: ValidationReport, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(report.to_json_dict(), indent=2))
    else:
        for line in report.messages():
            click.echo(line)
    if not report.ok:
        sys.exit(1)


def _read(path: str) -> str:
    return Path(path).read_text("utf-8")


def _load_cat(catalog_path: str | None):
    if catalog_path:
        return load_catalog(_read(catalog_path))
    return default_catalog()


def _shipped_rules() -> str:
    from importlib import resources
    return resources.files("pedocds.data").joinpath("rules/paper.rules").read_text("utf-8")


@click.group()
def main():
    """Footwear and insole prescription engine."""


# ---------------------------------------------------------------------------
# catalog / rules
# ---------------------------------------------------------------------------

@main.group()
def catalog():
    """Catalog file operations."""


@catalog.command("validate")
@click.argument("file", type=click.Path(exists=True))
def catalog_validate(file):
    try:
        cat = load_catalog(_read(file))
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"catalog ok: {len(cat.input_features())} input features, "
               f"{len(cat.output_features())} output features, version {cat.version}")


@main.group()
def rules():
    """Rule file operations."""


@rules.command("check")
@click.argument("file", type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
def rules_check(file, catalog_path):
    try:
        ruleset = parse_rules(_read(file), _load_cat(catalog_path))
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"rules ok: {len(ruleset.rules)} rule(s)")


# ---------------------------------------------------------------------------
# recommend
# ---------------------------------------------------------------------------

def _load_models(models_dir: str | None):
    models = {}
    if models_dir:
        for path in sorted(Path(models_dir).glob("*.json")):
            model = model_from_json(path.read_text("utf-8"))
            models[model.target] = model
    return models


@main.command("recommend")
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_path", type=click.Path(exists=True),
              help="Rule file (defaults to the bundled rule set).")
@click.option("--models", "models_dir", type=click.Path(exists=True, file_okay=False),
              help="Directory of trained model JSON files.")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
@click.option("--threshold", default=0.5, show_default=True,
              help="Minimum model confidence.")
@click.option("--explain", "do_explain", is_flag=True,
              help="Print the rule trace per feature.")
@click.option("--json", "as_json", is_flag=True)
def recommend_cmd(profile_path, rules_path, models_dir, catalog_path, threshold,
                  do_explain, as_json):
    """Produce a source-annotated prescription for a profile."""
    try:
        cat = _load_cat(catalog_path)
        profile = PatientProfile.from_json_dict(json.loads(_read(profile_path)))
        report = validate_profile(profile, cat, mode="strict")
        if not report.ok:
            for line in report.messages():
                click.echo(line, err=True)
            sys.exit(1)
        rules_text = _read(rules_path) if rules_path else _shipped_rules()
        ruleset = parse_rules(rules_text, cat)
        models = _load_models(models_dir)
        rec = recommend(profile, ruleset, models, cat, Policy(threshold=threshold))
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))

    if as_json:
        click.echo(json.dumps(rec.to_json_dict(), indent=2))
    else:
        click.echo(f"prescription for {profile.patient_id or 'profile'}:")
        for fid in cat.output_ids():
            if fid in rec.prescription.values:
                codes = "+".join(sorted(rec.prescription.values[fid]))
                src = rec.prescription.sources[fid]
                origin = src.origin.value
                if src.rule_name:
                    origin += f"({src.rule_name})"
                if src.confidence is not None:
                    origin += f" conf={src.confidence:.2f}"
                click.echo(f"  {fid:10s} {codes:22s} [{origin}]")
            else:
                click.echo(f"  {fid:10s} {'-':22s} [abstained]")
        if do_explain:
            click.echo("\ntrace:")
            for fid in cat.output_ids():
                text = explain(rec.trace, fid)
                if text:
                    click.echo(f"- {fid}:")
                    for line in text.splitlines():
                        click.echo(f"    {line}")


# ---------------------------------------------------------------------------
# train / eval
# ---------------------------------------------------------------------------

@main.command("train")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--target", default="all", show_default=True,
              help="Output feature id, or 'all'.")
@click.option("--kind", type=click.Choice(["tree", "forest"]), default="tree",
              show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="models",
              show_default=True)
@click.option("--max-depth", type=int, default=None)
@click.option("--min-samples-leaf", type=int, default=1, show_default=True)
@click.option("--n-trees", type=int, default=25, show_default=True)
@click.option("--feature-subsample", type=float, default=1.0, show_default=True)
@click.option("--no-bootstrap", is_flag=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
def train_cmd(dataset_path, target, kind, seed, out_dir, max_depth, min_samples_leaf,
              n_trees, feature_subsample, no_bootstrap, catalog_path):
    """Train per-feature models and write them as JSON files."""
    try:
        cat = _load_cat(catalog_path)
        dataset = load_dataset(_read(dataset_path), cat)
        targets = None if target == "all" else [target]
        models = train_models(
            dataset, cat, targets=targets, kind=kind,
            tree_params=TreeParams(max_depth=max_depth, min_samples_leaf=min_samples_leaf),
            forest_params=ForestParams(
                n_trees=n_trees, feature_subsample=feature_subsample,
                bootstrap=not no_bootstrap, max_depth=max_depth,
                min_samples_leaf=min_samples_leaf,
            ) if kind == "forest" else None,
            seed=seed,
        )
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for feature, model in models.items():
        (out / f"{feature}.json").write_text(model_to_json(model), "utf-8")
    click.echo(f"trained {len(models)} {kind} model(s) into {out}")


@main.command("eval")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--protocol", type=click.Choice(["resub", "loo"]), default="resub",
              show_default=True)
@click.option("--kind", type=click.Choice(["tree", "forest"]), default="tree",
              show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--report-dir", type=click.Path(file_okay=False),
              help="Write accuracy CSV and figure here.")
@click.option("--json", "as_json", is_flag=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
def eval_cmd(dataset_path, protocol, kind, seed, report_dir, as_json, catalog_path):
    """Per-feature model accuracy under resubstitution or leave-one-out."""
    protocol_name = {"resub": "resubstitution", "loo": "leave-one-out"}[protocol]
    try:
        cat = _load_cat(catalog_path)
        dataset = load_dataset(_read(dataset_path), cat)
        report = evaluate_models(dataset, cat, protocol=protocol_name, kind=kind, seed=seed)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    if as_json:
        click.echo(json.dumps(report.to_json_dict(), indent=2))
    else:
        for feature, acc in sorted(report.per_feature.items()):
            click.echo(f"  {feature:10s} {'n/a' if acc is None else f'{acc:.3f}'}")
        click.echo(f"macro average: {report.macro_average:.3f} "
                   f"({report.protocol}, {report.n_records} records)")
    if report_dir:
        from .report import save_eval_report
        for path in save_eval_report(report, report_dir):
            click.echo(f"wrote {path}", err=True)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@main.group()
def geom():
    """Numeric design sheets."""


def _geom_out(payload: dict, report: ValidationReport | None, as_json: bool):
    if as_json:
        doc = dict(payload)
        if report is not None:
            doc["findings"] = report.to_json_dict()["findings"]
        click.echo(json.dumps(doc, indent=2))
    else:
        for key, value in payload.items():
            click.echo(f"  {key}: {value}")
        if report is not None:
            for line in report.messages():
                click.echo(line)
    if report is not None and not report.ok:
        sys.exit(1)


@geom.command("rocker")
@click.option("--foot-length", required=True, type=float, help="mm")
@click.option("--foot-width", default=100.0, type=float, show_default=True)
@click.option("--shoe-length", required=True, type=float, help="Interior length, mm")
@click.option("--mth-line", type=float, default=None, help="MTH line from heel, mm")
@click.option("--fwt", default="FWT3", show_default=True)
@click.option("--fwrap", default="FWRAP1", show_default=True)
@click.option("--fwraa", default="FWRAA1", show_default=True)
@click.option("--fwrang", default="FWRANG1", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def geom_rocker(foot_length, foot_width, shoe_length, mth_line, fwt, fwrap, fwraa,
                fwrang, as_json):
    try:
        m = geometry.FootMeasurements(foot_length_mm=foot_length, foot_width_mm=foot_width,
                                      mth_line_from_heel_mm=mth_line)
        spec = geometry.rocker_spec(m, shoe_length, fwt_code=fwt, fwrap_code=fwrap,
                                    fwraa_code=fwraa, fwrang_code=fwrang)
        report = geometry.validate_rocker(spec)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    _geom_out(spec.to_json_dict(), report, as_json)


@geom.command("insole")
@click.option("--fwt", required=True)
@click.option("--insblm", required=True)
@click.option("--insmlm", required=True)
@click.option("--instlm", required=True)
@click.option("--printed-base", is_flag=True)
@click.option("--dual-density", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
def geom_insole(fwt, insblm, insmlm, instlm, printed_base, dual_density, as_json):
    try:
        stack = geometry.insole_stack_spec(fwt, insblm, insmlm, instlm,
                                           printed_base=printed_base,
                                           dual_density=dual_density)
        report = geometry.validate_stack(stack)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    _geom_out(stack.to_json_dict(), report, as_json)


@geom.command("met")
@click.option("--mth-line", required=True, type=float, help="MTH line from heel, mm")
@click.option("--insma", required=True)
@click.option("--insmap", default="INSMAP1", show_default=True)
@click.option("--top-cover", default=0.0, type=float, show_default=True,
              help="Top cover thickness, mm")
@click.option("--shift-factor", default=1.0, type=float, show_default=True)
@click.option("--thickness", type=float, default=None, help="Requested thickness, mm")
@click.option("--hardness", type=float, default=None, help="Requested Shore A")
@click.option("--json", "as_json", is_flag=True)
def geom_met(mth_line, insma, insmap, top_cover, shift_factor, thickness, hardness,
             as_json):
    try:
        spec = geometry.met_addition_placement(
            mth_line, insma, insmap, top_cover, shift_factor=shift_factor,
            requested_thickness_mm=thickness, requested_hardness_shore_a=hardness)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    doc = spec.to_json_dict()
    findings = doc.pop("findings")
    if as_json:
        doc["findings"] = findings
        click.echo(json.dumps(doc, indent=2))
    else:
        for key, value in doc.items():
            click.echo(f"  {key}: {value}")
        for f in findings:
            click.echo(f"{f['severity']}: {f['message']}")
    if any(f["severity"] == "error" for f in findings):
        sys.exit(1)


@geom.command("fit")
@click.option("--foot-length", required=True, type=float)
@click.option("--foot-width", default=100.0, type=float, show_default=True)
@click.option("--shoe-length", required=True, type=float)
@click.option("--oedema", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
def geom_fit(foot_length, foot_width, shoe_length, oedema, as_json):
    try:
        m = geometry.FootMeasurements(foot_length_mm=foot_length, foot_width_mm=foot_width)
        report = geometry.fit_check(m, shoe_length, oedema_present=oedema)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    if report.findings:
        _echo_report(report, as_json)
    else:
        click.echo("fit ok")


# ---------------------------------------------------------------------------
# pressure
# ---------------------------------------------------------------------------

def _parse_target_spec(spec: str | None) -> OffloadTarget:
    if not spec:
        return OffloadTarget()
    ppp_max = None
    reduction_min = None
    for clause in spec.split(","):
        clause = clause.strip()
        if clause.startswith("reduction>="):
            reduction_min = float(clause[len("reduction>="):])
        elif clause.startswith("ppp<="):
            ppp_max = float(clause[len("ppp<="):])
        else:
            raise ValueError(f"cannot parse target clause {clause!r} "
                             "(use e.g. 'reduction>=30,ppp<=200')")
    return OffloadTarget(ppp_max_kpa=ppp_max, reduction_min_pct=reduction_min)


@main.group()
def pressure():
    """Plantar pressure analytics."""


@pressure.command("compare")
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True))
@click.option("--intervention", "intervention_path", required=True,
              type=click.Path(exists=True))
@click.option("--target", "target_spec", default=None,
              help="e.g. 'reduction>=30,ppp<=200' (met when any clause holds)")
@click.option("--report-dir", type=click.Path(file_okay=False),
              help="Write zone CSV, heatmaps and reduction chart here.")
@click.option("--json", "as_json", is_flag=True)
def pressure_compare(baseline_path, intervention_path, target_spec, report_dir, as_json):
    """Baseline-vs-intervention offloading report over anatomical zones."""
    try:
        baseline = parse_recording(_read(baseline_path))
        intervention = parse_recording(_read(intervention_path))
        target = _parse_target_spec(target_spec)
        report = compare(baseline, intervention, target=target)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    if as_json:
        click.echo(json.dumps(report.to_json_dict(), indent=2))
    else:
        for z in report.zones:
            d = z.to_json_dict()
            red = d["ppp_reduction_pct"]
            red_s = red if isinstance(red, str) else f"{red:.1f}%"
            click.echo(f"  {z.zone:10s} PPP {z.ppp_baseline_kpa:7.1f} -> "
                       f"{z.ppp_intervention_kpa:7.1f} kPa  reduction {red_s:>7s}  "
                       f"{'met' if z.met else 'not met'}")
        click.echo(f"goal {'met' if report.all_met else 'not met'} across all zones")
    if report_dir:
        from .report import save_offload_report
        for path in save_offload_report(report, baseline, intervention, report_dir):
            click.echo(f"wrote {path}", err=True)


# ---------------------------------------------------------------------------
# trial workflow (file-backed event log)
# ---------------------------------------------------------------------------

@main.group()
def trial():
    """N-of-1 fitting workflow over a JSON event log."""


def _load_trial(path: str) -> Trial:
    return Trial.from_json_dict(json.loads(_read(path)))


def _save_trial(path: str, t: Trial) -> None:
    Path(path).write_text(t.to_json(), "utf-8")


@trial.command("init")
@click.option("--file", "path", required=True, type=click.Path())
@click.option("--trial-id", required=True)
@click.option("--patient-id", required=True)
@click.option("--prescription", "rx_path", required=True, type=click.Path(exists=True))
def trial_init(path, trial_id, patient_id, rx_path):
    if Path(path).exists():
        _fail(f"{path} already exists")
    try:
        t = Trial.start(trial_id, patient_id, json.loads(_read(rx_path)))
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    _save_trial(path, t)
    click.echo(f"trial {trial_id}: {t.state.describe()}")


@trial.command("fit")
@click.option("--file", "path", required=True, type=click.Path(exists=True))
@click.option("--date", "visit_date", required=True)
@click.option("--satisfaction", required=True, type=int)
@click.option("--worn", type=float, default=None, help="Worn hours/day")
@click.option("--ambulatory", type=float, default=None, help="Ambulatory hours/day")
@click.option("--notes", default="")
def trial_fit(path, visit_date, satisfaction, worn, ambulatory, notes):
    try:
        t = _load_trial(path)
        adh = adherence(worn, ambulatory) if worn is not None and ambulatory is not None \
            else None
        state = t.record_fitting(VisitRecord("T1", visit_date, satisfaction, adh, notes))
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    _save_trial(path, t)
    click.echo(f"trial {t.trial_id}: {state.describe()}")


@trial.command("modify")
@click.option("--file", "path", required=True, type=click.Path(exists=True))
@click.option("--prescription", "rx_path", required=True, type=click.Path(exists=True))
@click.option("--evaluation", "eval_path", required=True, type=click.Path(exists=True),
              help="Offload report JSON (uses its all_met flag).")
@click.option("--visit-label", default=None)
@click.option("--date", "visit_date", default=None)
@click.option("--satisfaction", type=int, default=3, show_default=True)
def trial_modify(path, rx_path, eval_path, visit_label, visit_date, satisfaction):
    try:
        t = _load_trial(path)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    visit = None
    if visit_label:
        visit = VisitRecord(visit_label, visit_date or "", satisfaction)
    try:
        state = t.record_modification(json.loads(_read(rx_path)),
                                      json.loads(_read(eval_path)), visit)
    except _DOMAIN_ERRORS as exc:
        # A rounds-exhausted attempt closes the trial; persist that before failing.
        _save_trial(path, t)
        _fail(str(exc))
    _save_trial(path, t)
    click.echo(f"trial {t.trial_id}: {state.describe()}")


@trial.command("withdraw")
@click.option("--file", "path", required=True, type=click.Path(exists=True))
def trial_withdraw(path):
    try:
        t = _load_trial(path)
        state = t.withdraw()
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    _save_trial(path, t)
    click.echo(f"trial {t.trial_id}: {state.describe()}")


@trial.command("show")
@click.option("--file", "path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def trial_show(path, as_json):
    try:
        t = _load_trial(path)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    if as_json:
        click.echo(json.dumps({"trial": t.to_json_dict(),
                               "state": t.state.to_json_dict()}, indent=2))
    else:
        state = t.state
        click.echo(f"trial {t.trial_id} ({t.patient_id}): {state.describe()}")
        click.echo(f"  prescription versions: {len(state.prescription_versions)}")
        for v in state.visits:
            click.echo(f"  visit {v.label} {v.date} satisfaction={v.satisfaction}")


@trial.command("adherence")
@click.option("--worn", required=True, type=float)
@click.option("--ambulatory", required=True, type=float)
def trial_adherence(worn, ambulatory):
    try:
        report = adherence(worn, ambulatory)
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"ratio {report.ratio:.3f}; goal (>80%) "
               f"{'met' if report.goal_met else 'not met'}")


@trial.command("maintenance")
@click.option("--last-replacement", required=True, help="ISO date")
@click.option("--today", required=True, help="ISO date")
def trial_maintenance(last_replacement, today):
    from datetime import date
    try:
        status = maintenance_due(date.fromisoformat(last_replacement),
                                 date.fromisoformat(today))
    except _DOMAIN_ERRORS as exc:
        _fail(str(exc))
    flag = "overdue" if status.overdue else ("due" if status.due else "not due")
    click.echo(f"top cover replacement {flag} ({status.elapsed_months} months elapsed; "
               f"window {status.window_months[0]}-{status.window_months[1]} months)")


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

@main.command("serve")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data", "data_dir", default=None,
              help="Data directory (defaults to $PEDOCDS_DATA or ./pedocds-data).")
def serve_cmd(port, host, data_dir):
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app
    uvicorn.run(create_app(data_dir=data_dir), host=host, port=port)


if __name__ == "__main__":
    main()
