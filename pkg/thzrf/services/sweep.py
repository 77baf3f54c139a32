"""
Sweep Service - configuration files, sweep execution and result files.

A configuration file is sectioned key-value text:

    # comment
    [thz]
    alpha = 2.3
    [sweep]
    schemes = 4x2-rqam, 16-hqam

Parsing tracks line numbers; validation is left to the schema models and
every pydantic error is reported against the line of the offending key.
The runner evaluates each grid point independently, records per-point
failures as row flags and keeps going.
"""

import csv
import hashlib
import io
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

from pydantic import ValidationError

from thzrf import __version__
from thzrf.config import settings
from thzrf.errors import ConfigError, ThzrfError
from thzrf.schemas import (
    AlphaMuFading, AserCurve, AserRow, HqamScheme, NakagamiFading, NcfskScheme, OutputKind,
    PointingError, PowerNoise, RfHopConfig, RqamScheme, SimConfig, SweepAxis, SweepSpec,
    ThzHopConfig, bpsk, sqam,
)
from thzrf.services.aser import aser, aser_asymptotic
from thzrf.services.linkstats import SnrModel, on_asymptotic_pole
from thzrf.services.mcsim import run_mc_coupled

logger = logging.getLogger(__name__)

Scheme = Union[RqamScheme, HqamScheme, NcfskScheme]

CSV_COLUMNS = (
    "snr_db", "scheme", "aser_analytical", "aser_asymptotic", "aser_mc",
    "mc_stderr", "mc_trials", "flags",
)

FLAG_ANALYTICAL = "analytical-error"
FLAG_ASYMPTOTIC = "asymptotic-error"
FLAG_MC = "mc-error"
FLAG_POLE = "pole-perturbed"
FLAG_GEOMETRY = "invalid-geometry"

# (section, key) -> (model, field)
_FIELDS: Dict[str, Dict[str, Tuple[type, str]]] = {
    "thz": {
        **{name: (ThzHopConfig, name) for name in ThzHopConfig.model_fields},
        "alpha": (AlphaMuFading, "alpha"),
        "mu": (AlphaMuFading, "mu"),
        "omega": (AlphaMuFading, "omega"),
        "phi": (PointingError, "phi"),
        "s0": (PointingError, "s0"),
    },
    "rf": {
        **{name: (RfHopConfig, name) for name in RfHopConfig.model_fields},
        "m": (NakagamiFading, "m"),
        "omega_m": (NakagamiFading, "omega_m"),
    },
    "power": {name: (PowerNoise, name) for name in PowerNoise.model_fields},
    "sweep": {name: (SweepSpec, name) for name in SweepSpec.model_fields if name != "sim"},
    "sim": {name: (SimConfig, name) for name in SimConfig.model_fields},
}

_REQUIRED = {
    "thz": ("alpha", "mu", "omega", "phi", "s0"),
    "rf": ("m", "omega_m"),
    "sweep": ("schemes",),
}

_TUPLE_KEYS = {"snr_db", "axis_range", "schemes", "outputs"}

_SCHEME_PATTERNS = (
    (re.compile(r"^bpsk$"), lambda g: bpsk()),
    (re.compile(r"^(\d+)-sqam$"), lambda g: sqam(int(g[0]))),
    (re.compile(r"^(\d+)x(\d+)-rqam(?:-b(\S+))?$"),
     lambda g: RqamScheme(m_i=int(g[0]), m_q=int(g[1]), beta=float(g[2]) if g[2] else 1.0)),
    (re.compile(r"^(\d+)-hqam$"), lambda g: HqamScheme(m=int(g[0]))),
    (re.compile(r"^(\d+)-ncfsk$"), lambda g: NcfskScheme(m=int(g[0]))),
)


class _Entry(NamedTuple):
    value: str
    line: int


def parse_scheme(token: str) -> Scheme:
    """Scheme from its label: bpsk, 16-sqam, 4x2-rqam[-b<beta>], 16-hqam, 4-ncfsk."""
    text = token.strip().lower()
    for pattern, build in _SCHEME_PATTERNS:
        match = pattern.match(text)
        if match:
            return build(match.groups())
    raise ValueError(f"unknown scheme {token!r}")


def scheme_token(scheme: Scheme) -> str:
    """Exact inverse of parse_scheme."""
    if isinstance(scheme, RqamScheme):
        if scheme.beta == 1.0:
            return scheme.label
        return f"{scheme.m_i}x{scheme.m_q}-rqam-b{scheme.beta!r}"
    return scheme.label


def _read_sections(text: str, path: str) -> Tuple[Dict[str, Dict[str, _Entry]], Dict[str, int], int]:
    sections: Dict[str, Dict[str, _Entry]] = {}
    headers: Dict[str, int] = {}
    current: Optional[str] = None
    number = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", number, path)
            current = line[1:-1].strip().lower()
            if current not in _FIELDS:
                raise ConfigError(
                    f"unknown section [{current}]; expected one of {', '.join(_FIELDS)}", number, path
                )
            if current in sections:
                raise ConfigError(f"section [{current}] appears twice", number, path)
            sections[current] = {}
            headers[current] = number
            continue
        if current is None:
            raise ConfigError("key outside of any section", number, path)
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number, path)
        key = key.strip().lower()
        if key not in _FIELDS[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", number, path)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", number, path)
        sections[current][key] = _Entry(value.strip(), number)
    return sections, headers, number


def _convert(key: str, entry: _Entry, path: str) -> Any:
    if key not in _TUPLE_KEYS:
        return entry.value
    items = [item.strip() for item in entry.value.split(",") if item.strip()]
    if key == "schemes":
        try:
            return tuple(parse_scheme(item) for item in items)
        except (ValueError, ValidationError) as e:
            raise ConfigError(str(e), entry.line, path) from e
    return tuple(items)


def _build(model_cls: type, section: str, entries: Dict[str, _Entry], path: str,
           fallback_line: int, extra: Optional[Dict[str, Any]] = None):
    fields = _FIELDS[section]
    data = {fields[k][1]: _convert(k, e, path) for k, e in entries.items() if fields[k][0] is model_cls}
    data.update(extra or {})
    try:
        return model_cls(**data)
    except ValidationError as e:
        first = e.errors()[0]
        name = str(first["loc"][0]) if first["loc"] else ""
        line = entries[name].line if name in entries else fallback_line
        where = f"{name}: " if name else ""
        raise ConfigError(f"[{section}] {where}{first['msg']}", line, path) from e


def parse_config_text(text: str, path: str = "<config>",
                      use_defaults: bool = True) -> Tuple[SnrModel, SweepSpec]:
    """
    Parse and validate configuration text.

    Args:
        text: File content
        path: Name used in error messages
        use_defaults: Fill missing keys with the built-in link defaults; when
            False the fading shapes and the scheme list must be given

    Raises:
        ConfigError: Unknown section or key, duplicate, malformed line,
            missing required key or a value rejected by validation
    """
    sections, headers, last_line = _read_sections(text, path)
    if not use_defaults:
        for section, keys in _REQUIRED.items():
            present = sections.get(section, {})
            for key in keys:
                if key not in present:
                    raise ConfigError(
                        f"missing required key {key!r} in [{section}]",
                        headers.get(section, last_line), path,
                    )

    def part(model_cls: type, section: str, extra=None):
        return _build(model_cls, section, sections.get(section, {}), path,
                      headers.get(section, last_line), extra)

    model = SnrModel(
        thz=part(ThzHopConfig, "thz"),
        thz_fading=part(AlphaMuFading, "thz"),
        pointing=part(PointingError, "thz"),
        rf=part(RfHopConfig, "rf"),
        rf_fading=part(NakagamiFading, "rf"),
        power=part(PowerNoise, "power"),
    )
    sim = part(SimConfig, "sim") if "sim" in sections else None
    spec = part(SweepSpec, "sweep", {"sim": sim})
    logger.info(f"{path}: {len(spec.schemes)} scheme(s), {len(spec.grid())} grid point(s)")
    return model, spec


def parse_config(path: Union[str, Path], use_defaults: bool = True) -> Tuple[SnrModel, SweepSpec]:
    """Read and validate a configuration file (see parse_config_text)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_config_text(text, str(path), use_defaults)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list, frozenset, set)):
        if value and all(isinstance(v, (RqamScheme, HqamScheme, NcfskScheme)) for v in value):
            return ", ".join(scheme_token(v) for v in value)
        if isinstance(value, (frozenset, set)):
            return ", ".join(sorted(v.value for v in value))
        return ", ".join(_format_value(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def serialize(model: SnrModel, spec: SweepSpec) -> str:
    """Canonical configuration text; parsing it gives back equal objects."""
    sources = {
        ThzHopConfig: model.thz, AlphaMuFading: model.thz_fading, PointingError: model.pointing,
        RfHopConfig: model.rf, NakagamiFading: model.rf_fading, PowerNoise: model.power,
        SweepSpec: spec, SimConfig: spec.sim,
    }
    lines: List[str] = []
    for section, fields in _FIELDS.items():
        if section == "sim" and spec.sim is None:
            continue
        body = []
        for key, (model_cls, name) in fields.items():
            value = getattr(sources[model_cls], name)
            if value is None:
                continue
            body.append(f"{key} = {_format_value(value)}")
        lines.append(f"[{section}]")
        lines.extend(body)
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Sweep runner
# ---------------------------------------------------------------------------

def point_model(model: SnrModel, spec: SweepSpec, value: float) -> SnrModel:
    """Link at one grid value of the sweep axis."""
    if spec.axis == SweepAxis.SNR_DB:
        return model.with_snr_db(value)
    base = model.with_snr_db(spec.fixed_snr_db)
    if spec.axis == SweepAxis.OMEGA_M:
        return base.with_omega_m(value)
    return base.with_distances(value, spec.total_distance_m - value)


class SweepRunner:
    """
    Evaluates the requested ASER outputs over a sweep grid.

    Grid points run concurrently; rows come back sorted by (grid value,
    scheme) whatever the completion order.
    """

    def __init__(self, model: SnrModel, spec: SweepSpec):
        self.model = model
        self.spec = spec
        self.stats: Dict[str, Any] = {
            "points_processed": 0,
            "failed_points": 0,
            "errors": [],
        }

    def run(self) -> AserCurve:
        started = datetime.now()
        grid = self.spec.grid()
        workers = max(1, min(settings.workers, len(grid)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(self._evaluate_point, grid))

        rows = [row for point_rows in per_point for row in point_rows]
        for point_rows in per_point:
            self.stats["points_processed"] += 1
            if any(row.flags for row in point_rows):
                self.stats["failed_points"] += 1

        completed = datetime.now()
        self.stats["duration_seconds"] = (completed - started).total_seconds()
        logger.info(
            f"Sweep completed: {self.stats['points_processed']} point(s), "
            f"{self.stats['failed_points']} flagged, {self.stats['duration_seconds']:.1f}s"
        )
        rows.sort(key=lambda r: (r.axis_value, r.scheme))
        return AserCurve(axis=self.spec.axis, rows=tuple(rows))

    def _record(self, message: str) -> None:
        logger.error(message)
        self.stats["errors"].append(message)

    def _evaluate_point(self, value: float) -> List[AserRow]:
        spec = self.spec
        snr_db = value if spec.axis == SweepAxis.SNR_DB else spec.fixed_snr_db
        results = {s.label: {"snr_db": snr_db, "scheme": s.label, "axis_value": value, "flags": []}
                   for s in spec.schemes}

        try:
            model = point_model(self.model, spec, value)
        except (ThzrfError, ValueError) as e:
            self._record(f"{spec.axis.value}={value:g}: {e}")
            return [AserRow(**{**r, "flags": (FLAG_GEOMETRY,)}) for r in results.values()]

        for scheme in spec.schemes:
            row = results[scheme.label]
            if OutputKind.ANALYTICAL in spec.outputs:
                try:
                    row["aser_analytical"] = aser(model, scheme)
                except (ThzrfError, ArithmeticError, ValueError) as e:
                    self._record(f"{scheme.label} @ {spec.axis.value}={value:g}: analytical failed: {e}")
                    row["flags"].append(FLAG_ANALYTICAL)
            if OutputKind.ASYMPTOTIC in spec.outputs:
                if on_asymptotic_pole(model):
                    row["flags"].append(FLAG_POLE)
                try:
                    row["aser_asymptotic"] = aser_asymptotic(model, scheme)
                except (ThzrfError, ArithmeticError, ValueError) as e:
                    self._record(f"{scheme.label} @ {spec.axis.value}={value:g}: asymptotic failed: {e}")
                    row["flags"].append(FLAG_ASYMPTOTIC)

        if OutputKind.MC in spec.outputs:
            try:
                mc = run_mc_coupled(model, spec.schemes, spec.sim)
                for label, result in mc.items():
                    results[label].update(aser_mc=result.aser, mc_stderr=result.stderr,
                                          mc_trials=result.trials)
                    results[label]["flags"].extend(result.flags)
            except (ThzrfError, ArithmeticError, ValueError) as e:
                self._record(f"MC @ {spec.axis.value}={value:g}: {e}")
                for row in results.values():
                    row["flags"].append(FLAG_MC)

        return [AserRow(**{**r, "flags": tuple(r["flags"])}) for r in results.values()]


def run_sweep(model: SnrModel, spec: SweepSpec) -> AserCurve:
    return SweepRunner(model, spec).run()


def flag_summary(curve: AserCurve) -> Dict[str, Any]:
    """Machine-readable summary of flagged rows."""
    counts: Dict[str, int] = {}
    for row in curve.flagged:
        for flag in row.flags:
            counts[flag] = counts.get(flag, 0) + 1
    return {
        "flagged_rows": len(curve.flagged),
        "flags": dict(sorted(counts.items())),
        "points": [
            {"axis_value": row.axis_value, "scheme": row.scheme, "flags": list(row.flags)}
            for row in curve.flagged
        ],
    }


# ---------------------------------------------------------------------------
# Emitter
# ---------------------------------------------------------------------------

class EmittedFiles(NamedTuple):
    csv_path: Path
    plot_path: Path
    meta_path: Path


def _cell(value: Optional[Union[float, int]]) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def curve_to_csv(curve: AserCurve) -> str:
    """CSV text; the first column is the swept quantity."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = list(CSV_COLUMNS)
    header[0] = curve.axis.value
    writer.writerow(header)
    for row in curve.rows:
        first = row.snr_db if curve.axis == SweepAxis.SNR_DB else row.axis_value
        writer.writerow([
            _cell(first), row.scheme, _cell(row.aser_analytical), _cell(row.aser_asymptotic),
            _cell(row.aser_mc), _cell(row.mc_stderr), _cell(row.mc_trials), ";".join(row.flags),
        ])
    return buffer.getvalue()


def read_csv(path: Union[str, Path]) -> List[Dict[str, Optional[str]]]:
    """Rows of an emitted CSV with empty cells as None."""
    with open(path, newline="") as fh:
        return [{k: (v if v != "" else None) for k, v in row.items()} for row in csv.DictReader(fh)]


_PLOT_TEMPLATE = '''"""ASER versus {axis} for {csv_name} (generated)."""

import csv
from pathlib import Path

import matplotlib.pyplot as plt

CSV_PATH = Path(__file__).resolve().parent / "{csv_name}"
COLUMNS = ("aser_analytical", "aser_asymptotic", "aser_mc")
STYLES = {{"aser_analytical": "-", "aser_asymptotic": "--", "aser_mc": "o"}}


def main():
    curves = {{}}
    with open(CSV_PATH, newline="") as fh:
        for row in csv.DictReader(fh):
            for column in COLUMNS:
                if row[column]:
                    key = (row["scheme"], column)
                    curves.setdefault(key, []).append((float(row["{axis}"]), float(row[column])))

    fig, ax = plt.subplots(figsize=(7, 5))
    for (scheme, column), points in sorted(curves.items()):
        xs, ys = zip(*points)
        ax.semilogy(xs, ys, STYLES[column], label=f"{{scheme}} {{column[5:]}}")
    ax.set_xlabel("{axis}")
    ax.set_ylabel("ASER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(CSV_PATH.with_suffix(".png"), dpi=150)


if __name__ == "__main__":
    main()
'''


def emit(curve: AserCurve, spec: SweepSpec, model: Optional[SnrModel] = None) -> EmittedFiles:
    """
    Write the CSV, a matplotlib plot script next to it and a metadata file.

    The metadata holds the canonical configuration, the CSV's sha256 and the
    numerical settings, serialized with sorted keys so identical runs give
    identical files. I/O errors propagate unchanged.
    """
    csv_path = Path(spec.out_path)
    if csv_path.parent and not csv_path.parent.exists():
        csv_path.parent.mkdir(parents=True, exist_ok=True)
    text = curve_to_csv(curve)
    csv_path.write_text(text)

    plot_path = csv_path.with_name(f"{csv_path.stem}_plot.py")
    plot_path.write_text(_PLOT_TEMPLATE.format(axis=curve.axis.value, csv_name=csv_path.name))

    meta = {
        "version": __version__,
        "csv": csv_path.name,
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "rows": len(curve.rows),
        "flag_summary": flag_summary(curve),
        "settings": {
            "contour_decay_threshold": settings.contour_decay_threshold,
            "contour_tolerance": settings.contour_tolerance,
            "node_budget": settings.node_budget,
            "oracle_epsrel": settings.oracle_epsrel,
        },
    }
    if model is not None:
        meta["config"] = serialize(model, spec)
    meta_path = csv_path.with_name(f"{csv_path.stem}.meta.json")
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    logger.info(f"Wrote {csv_path}, {plot_path.name} and {meta_path.name}")
    return EmittedFiles(csv_path, plot_path, meta_path)
