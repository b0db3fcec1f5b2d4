"""Config-driven experiment runs: profile, counts, metrics, artifacts.

A run builds the unfolded train, computes the deterministic
aperture-integrated profile, samples Poisson counts, derives the dip/peak
metrics, and writes CSV/PGM artifacts plus a JSON report.  Identical
scenario and seed give byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .biphoton import (
    CoincidenceProfile,
    coincidence_rate_map,
    divergence_loss_distance,
    effective_detector_field,
    scan_detector,
)
from .field import axis_coords
from .counting import CountedProfile, sample_counts, snr
from .errors import PhysicsError, ValidationError
from .scenario import (
    Scenario,
    contrast,
    emit_scenario,
    feature_width,
    load_scenario,
    scenario_to_dict,
)


@dataclass(frozen=True)
class RunReport:
    scenario_name: str
    scenario_digest: str
    kappa: float
    profile: CoincidenceProfile
    counted: CountedProfile
    metrics: dict
    manifest: dict
    assumptions: tuple

    def to_json(self) -> str:
        doc = {
            "scenario_name": self.scenario_name,
            "scenario_digest": self.scenario_digest,
            "kappa": self.kappa,
            "metrics": self.metrics,
            "assumed_parameters": list(self.assumptions),
            "artifacts": self.manifest,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def scenario_digest(scenario: Scenario) -> str:
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def resolve_kappa(scenario: Scenario, _depth: int = 0) -> float:
    """Calibration constant making the reference scenario's peak rate equal
    its configured pairs/s; 1.0 when no calibration is declared."""
    if _depth > 2:
        raise ValidationError("calibration references form a cycle")
    calib = scenario.calibration
    if calib.pairs_per_s is not None:
        raw_peak = scan_detector(scenario, kappa=1.0).peak_rate
        if raw_peak <= 0:
            raise PhysicsError("cannot calibrate: raw peak rate is zero")
        return calib.pairs_per_s / raw_peak
    if calib.reference is not None:
        reference = load_scenario(calib.reference)
        return resolve_kappa(reference, _depth + 1)
    return 1.0


def profile_metrics(profile: CoincidenceProfile, counted: CountedProfile) -> dict:
    metrics = {
        "peak_rate_pairs_per_s": profile.peak_rate,
        "contrast": contrast(profile.rates),
        "snr": None,
        "feature_width_m": None,
    }
    try:
        metrics["feature_width_m"] = feature_width(profile.coordinates, profile.rates)
    except ValidationError:
        pass
    try:
        metrics["snr"] = snr(counted)
    except PhysicsError:
        pass
    return metrics


def run(scenario: Scenario, out_dir: str | Path, kappa: float | None = None,
        seed: int | None = None, write_field_csv: bool = False) -> RunReport:
    """Execute a scenario end to end and write artifacts into ``out_dir``."""
    if seed is not None:
        scenario = dataclasses.replace(
            scenario, counting=dataclasses.replace(scenario.counting, seed=seed)
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if kappa is None:
        kappa = resolve_kappa(scenario)

    profile = scan_detector(scenario, kappa=kappa)
    counted = sample_counts(profile, scenario.counting)
    metrics = profile_metrics(profile, counted)

    w_eff = effective_detector_field(scenario)
    metrics["divergence_loss_distance_m"] = divergence_loss_distance(scenario)

    # 2D coincidence map: full resolution as PGM, cropped to the scan region
    # and thinned to at most ~256 points per axis for the CSV
    rate_map, pitch = coincidence_rate_map(scenario, kappa)
    coords = axis_coords(rate_map.shape[0], pitch)
    margin = 1e-3
    keep = np.flatnonzero((coords >= scenario.scan.start_m - margin)
                          & (coords <= scenario.scan.stop_m + margin))
    keep = keep[::max(1, int(np.ceil(keep.size / 256)))]
    cropped = rate_map[np.ix_(keep, keep)]

    artifacts = {}

    def emit(name: str, data: bytes | str):
        path = out / name
        if isinstance(data, str):
            path.write_text(data)
        else:
            path.write_bytes(data)
        artifacts[name] = hashlib.sha256(path.read_bytes()).hexdigest()

    emit("scenario.json", emit_scenario(scenario))
    emit("profile.csv", fileio.profile_to_csv(profile.coordinates, profile.rates))
    emit("counts.csv", fileio.counted_to_csv(counted.coordinates, counted.expected_rates,
                                             counted.counts, counted.accidental_rates))
    emit("detector_field.pgm", fileio.intensity_to_pgm(w_eff.intensity()))
    emit("rate_map.pgm", fileio.intensity_to_pgm(rate_map))
    emit("rate_map.csv", fileio.map_to_csv(coords[keep], coords[keep], cropped))
    if write_field_csv:
        emit("detector_field.csv", fileio.field_to_csv(w_eff))

    report = RunReport(
        scenario_name=scenario.name,
        scenario_digest=scenario_digest(scenario),
        kappa=kappa,
        profile=profile,
        counted=counted,
        metrics=metrics,
        manifest=artifacts,
        assumptions=scenario.assumptions,
    )
    (out / "report.json").write_text(report.to_json())
    return report
