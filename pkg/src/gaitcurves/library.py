"""Gait records, slice descriptions, classification, statistics, and
persistence of traced gait libraries.

A library is a flat list of GaitRecord plus provenance (model parameters,
continuation settings, slice descriptions).  JSON holds the full library
losslessly; per-slice CSV files hold the plot data in a fixed column
order.  Both are written deterministically: the same records produce the
same bytes.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .dynamics import ModelParams, TrajectoryPoint
from .gaitmaps import OperatingPoint

__all__ = [
    "ClassificationError",
    "StatisticsError",
    "LibraryFormatError",
    "GaitRecord",
    "SliceSpec",
    "CurveStatistics",
    "classify_gait",
    "curve_statistics",
    "format_statistics",
    "export_library",
    "import_library",
    "export_curve_csv",
    "validate_records",
    "params_digest",
    "CSV_COLUMNS",
]

LIBRARY_FORMAT_VERSION = 1

UPHILL_BRACHIATION = "uphill_brachiation"
DOWNHILL_BRACHIATION = "downhill_brachiation"
DOWNHILL_WALKING = "downhill_walking"
UPHILL_WALKING = "uphill_walking"


class ClassificationError(ValueError):
    """Slope outside the four-type taxonomy for forward gaits."""


class StatisticsError(ValueError):
    """Too few points for quartile statistics."""


class LibraryFormatError(ValueError):
    """Malformed library file; message carries location diagnostics."""


def classify_gait(gamma_rad: float) -> str:
    """Gait type from the unwrapped slope (radians).

    Thresholds in degrees: uphill brachiation at and below -180, downhill
    brachiation in (-180, -90], downhill walking in (-90, 0), uphill
    walking in [0, 90).  At or beyond +90 the taxonomy does not apply and
    a ClassificationError is raised.
    """
    if not np.isfinite(gamma_rad):
        raise ClassificationError("slope must be finite")
    g = np.degrees(gamma_rad)
    if g <= -180.0:
        return UPHILL_BRACHIATION
    if g <= -90.0:
        return DOWNHILL_BRACHIATION
    if g < 0.0:
        return DOWNHILL_WALKING
    if g < 90.0:
        return UPHILL_WALKING
    raise ClassificationError(f"slope {g:.2f} deg is outside the gait taxonomy")


@dataclass
class GaitRecord:
    """One accepted curve point with its derived quantities.

    epsilon, res_homotopy, and condition_number are NaN for passive-family
    records, where the homotopy plays no role.  quartile is 0 until
    curve_statistics tags the record.
    """

    gait_id: str
    slice_id: str
    branch: int
    index: int
    epsilon: float
    x0: np.ndarray
    tau: float
    a: np.ndarray
    lam: np.ndarray
    gamma_rad: float
    gamma_deg: float
    v_avg: float
    cost: float
    res_periodicity: float
    res_stationarity: float
    res_homotopy: float
    classification: str
    condition_number: float
    quartile: int = 0

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).reshape(4)
        self.a = np.asarray(self.a, dtype=float).reshape(3)
        self.lam = np.asarray(self.lam, dtype=float).reshape(6)

    @property
    def trajectory_point(self) -> TrajectoryPoint:
        return TrajectoryPoint(x0=self.x0, tau=self.tau, a=self.a)

    @property
    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(gamma=self.gamma_rad, v_avg=self.v_avg)


@dataclass(frozen=True)
class SliceSpec:
    """Declarative description of a 1D slice of the optimal-gait manifold.

    p_des is the operating point at epsilon = 0 and seed_p the seed's
    actual operating point; along the curve the target interpolates as
    p(eps) = (1 - eps) p_des + eps seed_p.  Components listed in
    interpolated actually vary; the others have p_des equal to seed_p,
    which makes the interpolation formula uniform.
    """

    slice_id: str
    kind: str  # constant_velocity | constant_slope | custom
    p_des: tuple
    seed_p: tuple
    interpolated: tuple
    seed_ref: str = ""

    def __post_init__(self):
        object.__setattr__(self, "p_des", tuple(float(v) for v in self.p_des))
        object.__setattr__(self, "seed_p", tuple(float(v) for v in self.seed_p))
        object.__setattr__(self, "interpolated", tuple(self.interpolated))
        if self.kind not in ("constant_velocity", "constant_slope", "custom"):
            raise ValueError(f"unknown slice kind {self.kind!r}")
        if self.kind == "constant_velocity":
            if self.interpolated != ("gamma",) or self.p_des[1] != self.seed_p[1]:
                raise ValueError("constant_velocity interpolates gamma and holds the seed speed")
        if self.kind == "constant_slope":
            if self.interpolated != ("v_avg",) or self.p_des[0] != self.seed_p[0]:
                raise ValueError("constant_slope interpolates v_avg and holds the seed slope")

    def target_at(self, epsilon: float) -> OperatingPoint:
        p = (1.0 - epsilon) * np.asarray(self.p_des) + epsilon * np.asarray(self.seed_p)
        return OperatingPoint(gamma=p[0], v_avg=p[1])

    @property
    def desired_point(self) -> OperatingPoint:
        return OperatingPoint(gamma=self.p_des[0], v_avg=self.p_des[1])


def constant_velocity_slice(slice_id: str, seed_p: OperatingPoint, gamma_des: float = 0.0, seed_ref: str = "") -> SliceSpec:
    """Slice that sweeps slope toward gamma_des at the seed's speed."""
    return SliceSpec(
        slice_id=slice_id,
        kind="constant_velocity",
        p_des=(gamma_des, seed_p.v_avg),
        seed_p=(seed_p.gamma, seed_p.v_avg),
        interpolated=("gamma",),
        seed_ref=seed_ref,
    )


def constant_slope_slice(slice_id: str, seed_p: OperatingPoint, v_des: float, seed_ref: str = "") -> SliceSpec:
    """Slice that sweeps speed toward v_des at the seed's slope."""
    return SliceSpec(
        slice_id=slice_id,
        kind="constant_slope",
        p_des=(seed_p.gamma, v_des),
        seed_p=(seed_p.gamma, seed_p.v_avg),
        interpolated=("v_avg",),
        seed_ref=seed_ref,
    )


# -- statistics ------------------------------------------------------------


@dataclass
class CurveStatistics:
    """Quartile summary of the cost along a curve plus coordinate ranges."""

    n_points: int
    cost_min: float
    cost_median: float
    cost_max: float
    quartile_bounds: tuple  # (q1, q2, q3) by linear interpolation
    gamma_deg_range: tuple
    tau_range: tuple
    v_avg_range: tuple
    counts_by_type: dict
    median_cost_by_type: dict


def curve_statistics(records) -> CurveStatistics:
    """Summary statistics over the records of one curve.

    Quartile bounds use linear interpolation between order statistics
    (numpy's default percentile), and each record is tagged in place with
    its cost quartile 1..4.
    """
    records = list(records)
    if len(records) < 4:
        raise StatisticsError(f"need at least 4 points, got {len(records)}")
    costs = np.array([r.cost for r in records])
    q1, q2, q3 = np.percentile(costs, [25.0, 50.0, 75.0])
    for r in records:
        if r.cost <= q1:
            r.quartile = 1
        elif r.cost <= q2:
            r.quartile = 2
        elif r.cost <= q3:
            r.quartile = 3
        else:
            r.quartile = 4
    gammas = [r.gamma_deg for r in records]
    taus = [r.tau for r in records]
    vs = [r.v_avg for r in records]
    counts: dict = {}
    by_type: dict = {}
    for r in records:
        counts[r.classification] = counts.get(r.classification, 0) + 1
        by_type.setdefault(r.classification, []).append(r.cost)
    return CurveStatistics(
        n_points=len(records),
        cost_min=float(costs.min()),
        cost_median=float(q2),
        cost_max=float(costs.max()),
        quartile_bounds=(float(q1), float(q2), float(q3)),
        gamma_deg_range=(float(min(gammas)), float(max(gammas))),
        tau_range=(float(min(taus)), float(max(taus))),
        v_avg_range=(float(min(vs)), float(max(vs))),
        counts_by_type={k: counts[k] for k in sorted(counts)},
        median_cost_by_type={k: float(np.median(by_type[k])) for k in sorted(by_type)},
    )


def near_passive_ids(records, threshold: float = 1e-4):
    """Identifiers of records whose torque amplitude norm is below threshold.

    Such points are candidate intersections of an optimal-gait curve with
    the passive family; they are reported, never asserted to exist.
    """
    out = []
    for r in records:
        if float(np.linalg.norm(r.a)) < threshold:
            out.append(r.gait_id)
    return tuple(out)


def format_statistics(slice_id: str, stats: CurveStatistics, near_passive=None) -> str:
    """Render a statistics block as deterministic plain text."""
    lines = [
        f"slice: {slice_id}",
        f"points: {stats.n_points}",
        f"cost min/median/max: {stats.cost_min!r} {stats.cost_median!r} {stats.cost_max!r}",
        f"cost quartile bounds: {stats.quartile_bounds[0]!r} {stats.quartile_bounds[1]!r} {stats.quartile_bounds[2]!r}",
        f"slope range [deg]: {stats.gamma_deg_range[0]!r} {stats.gamma_deg_range[1]!r}",
        f"step duration range: {stats.tau_range[0]!r} {stats.tau_range[1]!r}",
        f"speed range: {stats.v_avg_range[0]!r} {stats.v_avg_range[1]!r}",
        "gait types:",
    ]
    for name in sorted(stats.counts_by_type):
        lines.append(
            f"  {name}: n={stats.counts_by_type[name]}"
            f" median_cost={stats.median_cost_by_type[name]!r}"
        )
    if near_passive is not None:
        shown = " ".join(near_passive) if near_passive else "none"
        lines.append(f"near-passive points: {shown}")
    return "\n".join(lines) + "\n"


# -- persistence -----------------------------------------------------------

CSV_COLUMNS = (
    "gait_id",
    "slice_id",
    "q1",
    "q2",
    "dq1",
    "dq2",
    "tau",
    "a1",
    "a2",
    "a3",
    "lam1",
    "lam2",
    "lam3",
    "lam4",
    "lam5",
    "lam6",
    "epsilon",
    "gamma_deg",
    "v_avg",
    "cost",
    "res_periodicity",
    "res_stationarity",
    "classification",
)


def params_digest(params: ModelParams) -> str:
    """Stable hash of the physical parameters, for provenance checks."""
    payload = json.dumps(
        {f.name: getattr(params, f.name) for f in fields(params)}, sort_keys=True
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _record_to_json(r: GaitRecord) -> dict:
    d = asdict(r)
    d["x0"] = [float(v) for v in r.x0]
    d["a"] = [float(v) for v in r.a]
    d["lam"] = [float(v) for v in r.lam]
    return d


_RECORD_FIELDS = tuple(f.name for f in fields(GaitRecord))


def _record_from_json(d: dict, where: str) -> GaitRecord:
    missing = [k for k in _RECORD_FIELDS if k not in d]
    if missing:
        raise LibraryFormatError(f"{where}: missing fields {missing}")
    extra = [k for k in d if k not in _RECORD_FIELDS]
    if extra:
        raise LibraryFormatError(f"{where}: unknown fields {extra}")
    try:
        return GaitRecord(**d)
    except (TypeError, ValueError) as exc:
        raise LibraryFormatError(f"{where}: {exc}") from exc


def _slice_to_json(s: SliceSpec) -> dict:
    return {
        "slice_id": s.slice_id,
        "kind": s.kind,
        "p_des": list(s.p_des),
        "seed_p": list(s.seed_p),
        "interpolated": list(s.interpolated),
        "seed_ref": s.seed_ref,
    }


def _slice_from_json(d: dict, where: str) -> SliceSpec:
    try:
        return SliceSpec(
            slice_id=d["slice_id"],
            kind=d["kind"],
            p_des=tuple(d["p_des"]),
            seed_p=tuple(d["seed_p"]),
            interpolated=tuple(d["interpolated"]),
            seed_ref=d.get("seed_ref", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LibraryFormatError(f"{where}: {exc}") from exc


def export_library(records, path, params: ModelParams, slices=(), config=None, extra=None):
    """Write the full library as JSON; returns the provenance dict.

    Float values are serialized with repr (shortest round-trip), so the
    file is lossless and byte-deterministic for identical inputs.
    """
    provenance = {
        "code_version": _package_version(),
        "params": {f.name: getattr(params, f.name) for f in fields(params)},
        "params_digest": params_digest(params),
        "slices": [_slice_to_json(s) for s in slices],
        "config": config if config is not None else {},
    }
    if extra:
        provenance.update(extra)
    doc = {
        "format_version": LIBRARY_FORMAT_VERSION,
        "provenance": provenance,
        "records": [_record_to_json(r) for r in records],
    }
    text = json.dumps(doc, sort_keys=True, indent=1)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
        f.write("\n")
    return provenance


def import_library(path, expected_params: ModelParams | None = None):
    """Read a library file back as (records, slices, provenance).

    A parameter digest that disagrees with expected_params produces a
    warning, not an error; the records may still be useful for inspection.
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise LibraryFormatError(
                f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
    for key in ("format_version", "provenance", "records"):
        if key not in doc:
            raise LibraryFormatError(f"{path}: missing top-level field {key!r}")
    if doc["format_version"] != LIBRARY_FORMAT_VERSION:
        raise LibraryFormatError(
            f"{path}: unsupported format_version {doc['format_version']!r}"
        )
    records = [
        _record_from_json(d, f"{path}: records[{i}]") for i, d in enumerate(doc["records"])
    ]
    slices = [
        _slice_from_json(d, f"{path}: slices[{i}]")
        for i, d in enumerate(doc["provenance"].get("slices", []))
    ]
    if expected_params is not None:
        digest = params_digest(expected_params)
        stored = doc["provenance"].get("params_digest")
        if stored != digest:
            warnings.warn(
                f"{path}: parameter digest {stored!r} does not match the current "
                f"model parameters ({digest!r}); proceeding anyway",
                stacklevel=2,
            )
    return records, slices, doc["provenance"]


def export_curve_csv(records, path):
    """Write plot data for one curve: fixed 23-column schema, one row per
    gait, floats via repr."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            row = [
                r.gait_id,
                r.slice_id,
                *(repr(float(v)) for v in r.x0),
                repr(float(r.tau)),
                *(repr(float(v)) for v in r.a),
                *(repr(float(v)) for v in r.lam),
                repr(float(r.epsilon)),
                repr(float(r.gamma_deg)),
                repr(float(r.v_avg)),
                repr(float(r.cost)),
                repr(float(r.res_periodicity)),
                repr(float(r.res_stationarity)),
                r.classification,
            ]
            f.write(",".join(row) + "\n")


def _package_version() -> str:
    from . import __version__

    return __version__


def validate_records(records, slices, params: ModelParams, tol: float = 1e-8, n_steps: int = 30):
    """Recompute residuals of stored records and compare with stored norms.

    Returns a list of (gait_id, check, stored, recomputed) tuples for every
    failure; an empty list means the library is consistent.  The tolerance
    on agreement is 10x the continuation tolerance.
    """
    from .gaitmaps import evaluate_step, _stationarity, unwrap_angle

    slice_by_id = {s.slice_id: s for s in slices}
    failures = []
    bound = 10.0 * tol
    for r in records:
        try:
            ev = evaluate_step(r.trajectory_point, params, n_steps)
        except Exception as exc:  # pragma: no cover - defensive
            failures.append((r.gait_id, "integration", str(exc), ""))
            continue
        res_p = float(np.abs(ev.P).max())
        if abs(res_p - r.res_periodicity) > bound:
            failures.append((r.gait_id, "periodicity", r.res_periodicity, res_p))
        res_stat = float(np.abs(_stationarity(ev, r.lam)).max())
        if abs(res_stat - r.res_stationarity) > bound:
            failures.append((r.gait_id, "stationarity", r.res_stationarity, res_stat))
        spec = slice_by_id.get(r.slice_id)
        if spec is not None and np.isfinite(r.epsilon):
            target = spec.target_at(r.epsilon)
            gamma = unwrap_angle(ev.gamma_raw, r.gamma_rad)
            phi = np.array([gamma - target.gamma, ev.v_avg - target.v_avg])
            res_phi = float(np.abs(phi).max())
            if res_phi > bound:
                failures.append((r.gait_id, "operating_point", 0.0, res_phi))
    return failures
