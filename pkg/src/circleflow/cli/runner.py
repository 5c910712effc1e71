"""Run an audit plan, assemble the report and write report.json / manifest.json."""
from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import CircleflowError
from .audits import AUDITS, AuditResult, Context
from .config import AuditSpec, Scenario

SCHEMA_VERSION = 1
PLOT_KINDS = ("trajectory", "spectrum", "zero-history", "distance-history", "ladder")
INTEGER_COLUMNS = ("index", "level", "count", "iterate")


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings nan / inf / -inf."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


@dataclass
class ExperimentReport:
    scenario: str
    scenario_hash: str
    resolution: dict
    rng_seed: int
    audits: list
    artifacts: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def audit(self, name: str) -> Optional[AuditResult]:
        for a in self.audits:
            if a.name == name:
                return a
        return None

    @property
    def structural_violation(self) -> bool:
        return any(a.structural_violation for a in self.audits)

    @property
    def any_failed(self) -> bool:
        return any(a.status == "fail" for a in self.audits)

    @property
    def any_inconclusive(self) -> bool:
        return any(a.status == "inconclusive" for a in self.audits)

    def exit_code(self, strict: bool = False) -> int:
        if self.structural_violation:
            return 2
        if self.any_failed:
            return 1
        if strict and self.any_inconclusive:
            return 3
        return 0

    def to_json(self) -> dict:
        """Deterministic content: no timings, no host data."""
        return jsonable({
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "scenario_hash": self.scenario_hash,
            "resolution": self.resolution,
            "rng_seed": self.rng_seed,
            "audits": [{"name": a.name, "status": a.status,
                        "structural_violation": a.structural_violation, "metrics": a.metrics}
                       for a in self.audits],
            "artifacts": {kind: sorted(labels) for kind, labels in sorted(self.artifacts.items())},
        })

    def summary_lines(self) -> list[str]:
        out = [f"scenario {self.scenario} [{self.scenario_hash[:12]}]"]
        for a in self.audits:
            flag = "  STRUCTURAL" if a.structural_violation else ""
            out.append(f"  {a.name:<20s} {a.status}{flag}")
        return out


def run_scenario(sc: Scenario, out_dir: str | Path | None = None, threads: int = 1,
                 audits: Optional[tuple] = None) -> ExperimentReport:
    """Execute ``audits`` (default: the scenario plan) in order.

    Numerical failures inside an audit (CircleflowError) make that audit
    inconclusive and the run continues; anything else propagates.
    """
    plan = tuple(sc.audits) if audits is None else tuple(
        a if isinstance(a, AuditSpec) else (sc.audit(a) or AuditSpec(a)) for a in audits)
    for a in plan:
        if a.name not in AUDITS:
            raise ValueError(f"unknown audit {a.name!r}; available: {sorted(AUDITS)}")
    ctx = Context(sc, threads)
    results, timings = [], {}
    t_start = time.perf_counter()
    for spec in plan:
        t0 = time.perf_counter()
        try:
            res = AUDITS[spec.name](ctx, spec)
        except CircleflowError as exc:
            res = AuditResult(spec.name, "inconclusive",
                              metrics={"error": f"{type(exc).__name__}: {exc}"})
        timings[spec.name] = time.perf_counter() - t0
        results.append(res)
    timings["total"] = time.perf_counter() - t_start
    artifacts = {}
    for res in results:
        for kind, tables in res.artifacts.items():
            for label, tab in tables.items():
                artifacts.setdefault(kind, {})[f"{res.name}.{label}"] = tab
    report = ExperimentReport(
        scenario=sc.name, scenario_hash=sc.hash(),
        resolution={"n_points": sc.n_points, "dt": sc.dt, "scheme": sc.scheme, "period_T": sc.period_T},
        rng_seed=sc.rng_seed, audits=results, artifacts=artifacts, timings=timings)
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(report: ExperimentReport, out_dir: str | Path) -> dict:
    """report.json, every plot-data kind present, and manifest.json (with timings)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind in sorted(report.artifacts):
        written.extend(emit_plot_data(report, kind, out))
    rpath = out / "report.json"
    rpath.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    written.append(rpath)
    files = {str(p.relative_to(out)): {"sha256": _sha256(p), "bytes": p.stat().st_size} for p in written}
    report.files = files
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "scenario": report.scenario,
        "scenario_hash": report.scenario_hash,
        "resolution": report.resolution,
        "files": files,
        "wall_clock_seconds": report.timings,
        "created_unix": time.time(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    (out / "manifest.json").write_text(json.dumps(jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return files


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def emit_plot_data(report: ExperimentReport, kind: str, out_dir: str | Path) -> list[Path]:
    """Write one whitespace-separated file per table of ``kind`` plus ``<kind>/index.json``.

    Each file starts with '#' header lines naming kind, label and columns in
    order.  Spectrum rows are sorted by non-increasing modulus.
    """
    if kind not in report.artifacts:
        available = sorted(report.artifacts)
        known = ", ".join(PLOT_KINDS)
        raise KeyError(f"report has no {kind!r} data; available kinds: {available or 'none'} "
                       f"(known kinds: {known})")
    base = Path(out_dir) / kind
    base.mkdir(parents=True, exist_ok=True)
    paths, index = [], {}
    for label in sorted(report.artifacts[kind]):
        tab = report.artifacts[kind][label]
        cols, rows = tab["columns"], np.asarray(tab["rows"], dtype=float)
        if kind == "spectrum" and len(rows):
            rows = rows[np.argsort(-rows[:, cols.index("modulus")], kind="stable")]
        fname = label.replace("/", "_") + ".dat"
        path = base / fname
        lines = [f"# kind: {kind}", f"# label: {label}", "# columns: " + " ".join(cols)]
        ints = [c in INTEGER_COLUMNS for c in cols]
        lines += [" ".join(str(int(v)) if is_int else _fmt(v) for v, is_int in zip(r, ints))
                  for r in rows]
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
        index[label] = {"file": fname, "columns": cols, "rows": int(len(rows))}
    ipath = base / "index.json"
    ipath.write_text(json.dumps({"kind": kind, "tables": index}, indent=2, sort_keys=True) + "\n")
    paths.append(ipath)
    return paths
