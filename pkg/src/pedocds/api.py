"""HTTP API: thin validated wrappers over the engine modules.

Error mapping: domain validation problems become 400, missing documents
404, version or trial-state conflicts 409.  Pure endpoints (recommend,
geometry, compare) carry no timestamps, so identical requests produce
byte-identical responses for fixed rule/model versions.
"""

from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import geometry
from .catalog import (
    CatalogError,
    FeatureCatalog,
    PatientProfile,
    UnknownCodeError,
    default_catalog,
    validate_profile,
)
from .pressure import (
    OffloadTarget,
    PressureError,
    compare,
    parse_recording,
)
from .recommender import (
    ForestParams,
    Policy,
    RecommenderError,
    TreeParams,
    evaluate_models,
    load_dataset,
    model_from_json,
    model_to_json_dict,
    recommend,
    train_models,
)
from .ruledsl import RuleError, parse_rules
from .store import (
    BodyValidationError,
    DocumentStore,
    NotFoundError,
    StoreError,
    VersionConflictError,
)
from .trial import Trial, TrialError, TrialStateError, VisitRecord

DEFAULT_DATA_DIR = "pedocds-data"


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _shipped_rules_text() -> str:
    return resources.files("pedocds.data").joinpath("rules/paper.rules").read_text("utf-8")


def _load_config(data_dir: Path) -> dict:
    path = data_dir / "config.json"
    if path.is_file():
        return json.loads(path.read_text("utf-8"))
    return {}


def create_app(data_dir: str | Path | None = None,
               catalog: FeatureCatalog | None = None) -> FastAPI:
    catalog = catalog or default_catalog()
    data_dir = Path(data_dir or os.environ.get("PEDOCDS_DATA", DEFAULT_DATA_DIR))
    config = _load_config(data_dir)
    constants = geometry.DesignConstants.from_json_dict(config["constants"]) \
        if "constants" in config else geometry.design_defaults()
    default_target = OffloadTarget(**config["target"]) if "target" in config \
        else OffloadTarget()
    default_policy = Policy(**config["policy"]) if "policy" in config else Policy()

    store = DocumentStore(data_dir, catalog)
    app = FastAPI(title="pedocds", version="0.1.0")

    # -- error mapping ------------------------------------------------------

    def _handler(status: int):
        def handle(request: Request, exc: Exception):
            return JSONResponse(status_code=status, content={"detail": str(exc)})
        return handle

    for exc_type in (CatalogError, RuleError, geometry.GeometryError,
                     PressureError, RecommenderError, TrialError, BodyValidationError,
                     UnknownCodeError, KeyError, ValueError):
        app.add_exception_handler(exc_type, _handler(400))
    app.add_exception_handler(NotFoundError, _handler(404))
    app.add_exception_handler(VersionConflictError, _handler(409))
    app.add_exception_handler(TrialStateError, _handler(409))
    app.add_exception_handler(StoreError, _handler(400))
    app.add_exception_handler(ApiError, lambda r, e: JSONResponse(
        status_code=e.status, content={"detail": e.message}))

    # -- helpers --------------------------------------------------------

    def resolve_profile(payload: dict) -> PatientProfile:
        if "profile" in payload:
            profile = PatientProfile.from_json_dict(payload["profile"])
        elif "profile_id" in payload:
            envelope = store.get("profile", payload["profile_id"])
            profile = PatientProfile.from_json_dict(envelope.body)
        else:
            raise ApiError(400, "provide profile or profile_id")
        problems = validate_profile(profile, catalog, mode="strict").errors
        if problems:
            raise ApiError(400, "invalid profile: " + "; ".join(p.message for p in problems))
        return profile

    def resolve_ruleset(payload: dict):
        if "rules_text" in payload:
            return parse_rules(payload["rules_text"], catalog)
        if "ruleset_id" in payload:
            envelope = store.get("ruleset", payload["ruleset_id"])
            return parse_rules(envelope.body["text"], catalog)
        return parse_rules(_shipped_rules_text(), catalog)

    def resolve_models(payload: dict) -> dict:
        models = {}
        for feature, model_id in (payload.get("model_ids") or {}).items():
            envelope = store.get("model", model_id)
            models[feature] = model_from_json(json.dumps(envelope.body["model"]))
        return models

    def resolve_policy(payload: dict) -> Policy:
        raw = payload.get("policy")
        if not raw:
            return default_policy
        return Policy(threshold=raw.get("threshold", default_policy.threshold),
                      defaults=raw.get("defaults", dict(default_policy.defaults)))

    def resolve_target(raw: dict | None) -> OffloadTarget:
        if not raw:
            return default_target
        return OffloadTarget(ppp_max_kpa=raw.get("ppp_max_kpa"),
                             reduction_min_pct=raw.get("reduction_min_pct"))

    def measurements_from(doc: dict) -> geometry.FootMeasurements:
        return geometry.FootMeasurements(
            foot_length_mm=doc["foot_length_mm"],
            foot_width_mm=doc.get("foot_width_mm", 100.0),
            mth1_from_heel_mm=doc.get("mth1_from_heel_mm"),
            mth2_from_heel_mm=doc.get("mth2_from_heel_mm"),
            mth_line_from_heel_mm=doc.get("mth_line_from_heel_mm"),
            sex=doc.get("sex", "unspecified"),
            body_weight_kg=doc.get("body_weight_kg"),
        )

    # -- catalog and profiles ---------------------------------------------

    @app.get("/catalog")
    def get_catalog():
        return catalog.to_json_dict()

    @app.post("/profiles", status_code=201)
    def post_profile(payload: dict = Body(...)):
        profile = PatientProfile.from_json_dict(payload.get("profile", payload))
        record_id = payload.get("id") or profile.patient_id
        if not record_id:
            raise ApiError(400, "profile needs an id or patient_id")
        envelope = store.put("profile", record_id, profile.to_json_dict(),
                             payload.get("version"))
        return {"id": envelope.id, "version": envelope.version}

    @app.get("/profiles/{record_id}")
    def get_profile(record_id: str):
        return store.get("profile", record_id).to_json_dict()

    @app.post("/profiles/validate")
    def post_profile_validate(payload: dict = Body(...)):
        profile = PatientProfile.from_json_dict(payload.get("profile", payload))
        mode = payload.get("mode", "partial")
        return validate_profile(profile, catalog, mode=mode).to_json_dict()

    # -- recommendation -----------------------------------------------------

    def build_recommendation(payload: dict):
        profile = resolve_profile(payload)
        ruleset = resolve_ruleset(payload)
        models = resolve_models(payload)
        policy = resolve_policy(payload)
        return recommend(profile, ruleset, models, catalog, policy), profile

    @app.post("/recommend")
    def post_recommend(payload: dict = Body(...)):
        recommendation, _profile = build_recommendation(payload)
        return recommendation.to_json_dict()

    @app.post("/whatif")
    def post_whatif(payload: dict = Body(...)):
        base_rec, base_profile = build_recommendation(payload)
        overrides = payload.get("overrides") or {}
        if not overrides:
            raise ApiError(400, "provide overrides")
        tweaked = base_profile.with_overrides(overrides)
        problems = validate_profile(tweaked, catalog, mode="strict").errors
        if problems:
            raise ApiError(400, "invalid overrides: " + "; ".join(p.message for p in problems))
        alt_payload = dict(payload)
        alt_payload.pop("profile_id", None)
        alt_payload["profile"] = tweaked.to_json_dict()
        alt_rec, _ = build_recommendation(alt_payload)

        diff = {}
        for fid in catalog.output_ids():
            before_codes = sorted(base_rec.prescription.values.get(fid, ()))
            after_codes = sorted(alt_rec.prescription.values.get(fid, ()))
            before_origin = base_rec.origin(fid) or "abstained"
            after_origin = alt_rec.origin(fid) or "abstained"
            diff[fid] = {
                "changed": before_codes != after_codes or before_origin != after_origin,
                "before": {"codes": before_codes, "origin": before_origin},
                "after": {"codes": after_codes, "origin": after_origin},
            }
        return {"recommendation": alt_rec.to_json_dict(), "diff": diff}

    # -- geometry -----------------------------------------------------------

    @app.post("/geometry/rocker")
    def post_rocker(payload: dict = Body(...)):
        m = measurements_from(payload["measurements"])
        codes = payload.get("codes", {})
        spec = geometry.rocker_spec(
            m, payload["shoe_interior_length_mm"],
            fwt_code=codes.get("FWT", "FWT3"),
            fwrap_code=codes.get("FWRAP", "FWRAP1"),
            fwraa_code=codes.get("FWRAA", "FWRAA1"),
            fwrang_code=codes.get("FWRANG", "FWRANG1"),
            k=constants,
        )
        report = geometry.validate_rocker(spec, constants)
        return {"spec": spec.to_json_dict(), "findings": report.to_json_dict()["findings"]}

    @app.post("/geometry/insole")
    def post_insole(payload: dict = Body(...)):
        stack = geometry.insole_stack_spec(
            payload["fwt_code"], payload["insblm_code"], payload["insmlm_code"],
            payload["instlm_code"], constants,
            printed_base=payload.get("printed_base", False),
            dual_density=payload.get("dual_density", False),
        )
        report = geometry.validate_stack(stack, constants)
        return {"stack": stack.to_json_dict(), "findings": report.to_json_dict()["findings"]}

    @app.post("/geometry/met-addition")
    def post_met_addition(payload: dict = Body(...)):
        spec = geometry.met_addition_placement(
            payload["mth_line_from_heel_mm"], payload["addition_code"],
            payload.get("position_code", "INSMAP1"),
            payload.get("top_cover_thickness_mm", 0.0), constants,
            shift_factor=payload.get("shift_factor", 1.0),
            requested_thickness_mm=payload.get("requested_thickness_mm"),
            requested_hardness_shore_a=payload.get("requested_hardness_shore_a"),
        )
        return spec.to_json_dict()

    @app.post("/geometry/fit")
    def post_fit(payload: dict = Body(...)):
        m = measurements_from(payload["measurements"])
        report = geometry.fit_check(m, payload["shoe_interior_length_mm"],
                                    payload.get("oedema_present", False), constants)
        return report.to_json_dict()

    # -- pressure -------------------------------------------------------

    @app.post("/pressure/recordings", status_code=201)
    async def post_recording(request: Request, id: str = Query(...),
                             side: str = Query("left"),
                             condition: str = Query("in_shoe"),
                             label: str = Query("")):
        csv_text = (await request.body()).decode("utf-8")
        parse_recording(csv_text, side=side, condition=condition, label=label)
        envelope = store.put("recording", id, {
            "csv": csv_text, "side": side, "condition": condition, "label": label,
        })
        return {"id": envelope.id, "version": envelope.version}

    def resolve_recording(payload: dict, which: str):
        if f"{which}_csv" in payload:
            return parse_recording(payload[f"{which}_csv"])
        if f"{which}_id" in payload:
            body = store.get("recording", payload[f"{which}_id"]).body
            return parse_recording(body["csv"], side=body.get("side", "left"),
                                   condition=body.get("condition", "in_shoe"),
                                   label=body.get("label", ""))
        raise ApiError(400, f"provide {which}_csv or {which}_id")

    @app.post("/pressure/compare")
    def post_compare(payload: dict = Body(...)):
        baseline = resolve_recording(payload, "baseline")
        intervention = resolve_recording(payload, "intervention")
        target = resolve_target(payload.get("target"))
        report = compare(baseline, intervention, target=target)
        return report.to_json_dict()

    @app.get("/pressure/recordings/{record_id}/grid")
    def get_recording_grid(record_id: str):
        # Peak-over-time grid, server-computed so the console renders numbers
        # it never derives itself.
        body = store.get("recording", record_id).body
        rec = parse_recording(body["csv"])
        peak = [
            [max(float(f.grid[r, c]) for f in rec.frames)
             for c in range(rec.shape[1])]
            for r in range(rec.shape[0])
        ]
        return {
            "rows": rec.shape[0], "cols": rec.shape[1],
            "cell_area_cm2": rec.cell_area_cm2, "peak_grid": peak,
            "side": body.get("side", "left"), "label": body.get("label", ""),
        }

    # -- trials ---------------------------------------------------------

    @app.post("/trials", status_code=201)
    def post_trial(payload: dict = Body(...)):
        visit = VisitRecord.from_json_dict(payload["visit"]) if payload.get("visit") else None
        trial = Trial.start(
            trial_id=payload["trial_id"],
            patient_id=payload.get("patient_id", ""),
            prescription=payload["prescription"],
            baseline_recordings=payload.get("baseline_recordings"),
            visit=visit,
        )
        try:
            store.get("trial", trial.trial_id)
        except NotFoundError:
            pass
        else:
            raise VersionConflictError(f"trial {trial.trial_id} already exists")
        envelope = store.put("trial", trial.trial_id, trial.to_json_dict())
        return {"id": envelope.id, "version": envelope.version,
                "state": trial.state.to_json_dict()}

    @app.post("/trials/{trial_id}/events")
    def post_trial_event(trial_id: str, payload: dict = Body(...)):
        envelope = store.get("trial", trial_id)
        trial = Trial.from_json_dict(envelope.body)
        event = payload.get("event")
        try:
            if event == "fitted":
                trial.record_fitting(VisitRecord.from_json_dict(payload["visit"]))
            elif event == "modified":
                visit = VisitRecord.from_json_dict(payload["visit"]) \
                    if payload.get("visit") else None
                trial.record_modification(payload["prescription"],
                                          payload["evaluation"], visit)
            elif event == "withdrawn":
                trial.withdraw()
            else:
                raise ApiError(400, f"unknown event {event!r}")
        except TrialStateError:
            # The rounds-exhausted path appends a terminal close before
            # raising; persist it so exhaustion is observable.
            if len(trial.events) > len(envelope.body.get("events", [])):
                store.put("trial", trial_id, trial.to_json_dict(),
                          envelope.version + 1)
            raise
        new_envelope = store.put("trial", trial_id, trial.to_json_dict(),
                                 envelope.version + 1)
        return {"id": trial_id, "version": new_envelope.version,
                "state": trial.state.to_json_dict()}

    @app.get("/trials/{trial_id}")
    def get_trial(trial_id: str):
        envelope = store.get("trial", trial_id)
        trial = Trial.from_json_dict(envelope.body)
        return {"id": trial_id, "version": envelope.version,
                "state": trial.state.to_json_dict(),
                "events": [e.to_json_dict() for e in trial.events]}

    # -- models -----------------------------------------------------------

    @app.post("/models/train", status_code=201)
    def post_train(payload: dict = Body(...)):
        if "dataset" in payload:
            dataset = load_dataset(json.dumps(payload["dataset"]), catalog)
            dataset_id = None
        elif "dataset_id" in payload:
            dataset_id = payload["dataset_id"]
            dataset = load_dataset(json.dumps(store.get("dataset", dataset_id).body),
                                   catalog)
        else:
            raise ApiError(400, "provide dataset or dataset_id")
        targets = payload.get("targets")
        if targets in (None, "all", ["all"]):
            targets = None
        kind = payload.get("kind", "tree")
        params = payload.get("params") or {}
        seed = int(payload.get("seed", 0))
        tree_params = TreeParams(max_depth=params.get("max_depth"),
                                 min_samples_leaf=params.get("min_samples_leaf", 1))
        forest_params = ForestParams(
            n_trees=params.get("n_trees", 25),
            feature_subsample=params.get("feature_subsample", 1.0),
            bootstrap=params.get("bootstrap", True),
            max_depth=params.get("max_depth"),
            min_samples_leaf=params.get("min_samples_leaf", 1),
        ) if kind == "forest" else None
        models = train_models(dataset, catalog, targets=targets, kind=kind,
                              tree_params=tree_params, forest_params=forest_params,
                              seed=seed)
        ids = {}
        for target, model in models.items():
            model_id = f"{kind}-{target.lower()}"
            store.put("model", model_id, {
                "model": model_to_json_dict(model),
                "dataset_id": dataset_id,
                "kind": kind,
                "seed": seed,
            })
            ids[target] = model_id
        return {"models": ids}

    @app.get("/models/{model_id}/eval")
    def get_model_eval(model_id: str, protocol: str = Query("loo")):
        body = store.get("model", model_id).body
        if not body.get("dataset_id"):
            raise ApiError(400, "model was trained from an inline dataset; "
                                "re-train from a stored dataset to evaluate")
        dataset = load_dataset(json.dumps(store.get("dataset", body["dataset_id"]).body),
                               catalog)
        model = model_from_json(json.dumps(body["model"]))
        protocol_name = {"loo": "leave-one-out", "leave-one-out": "leave-one-out",
                         "resub": "resubstitution",
                         "resubstitution": "resubstitution"}.get(protocol)
        if protocol_name is None:
            raise ApiError(400, f"unknown protocol {protocol!r}")
        report = evaluate_models(
            dataset, catalog, protocol=protocol_name, kind=body.get("kind", "tree"),
            targets=[model.target],
            seed=body.get("seed", 0),
        )
        return report.to_json_dict()

    # -- datasets / rulesets (plain document CRUD) --------------------------

    @app.post("/datasets", status_code=201)
    def post_dataset(payload: dict = Body(...)):
        envelope = store.put("dataset", payload["id"], payload["records"],
                             payload.get("version"))
        return {"id": envelope.id, "version": envelope.version}

    @app.post("/rulesets", status_code=201)
    def post_ruleset(payload: dict = Body(...)):
        envelope = store.put("ruleset", payload["id"], {"text": payload["text"]},
                             payload.get("version"))
        return {"id": envelope.id, "version": envelope.version}

    return app
