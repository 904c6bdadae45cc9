"""Scenario documents: parsing, validation, execution and output.

A scenario is a TOML document (see ``docs/scenario-format.md``). Parsing is
strict: every key is checked, unknown keys are rejected with their dotted
location, and numeric ranges are validated before anything runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from . import correlation, gauge, interferometer
from .errors import AbspinError, ValidationError
from .spin_algebra import SpinState, check_transverse_spin_condition
from .spin_dynamics import FieldProfile, Particle, oracle_propagator, precession_frequency, propagator

FORMAT_VERSION = "1"
EXPERIMENTS = ("sab", "eab", "magnetic_ab", "ac", "custom_arms")
ARM_EXPERIMENTS = ("sab", "eab", "ac", "custom_arms")
POLARIZATIONS = {
    "sz+": ("z", 1), "sz-": ("z", -1),
    "sx+": ("x", 1), "sx-": ("x", -1),
    "sy+": ("y", 1), "sy-": ("y", -1),
}
SERIES_COLUMNS = ("t", "c_value", "s_value", "theta", "sx", "sy", "sz")

INTENSITY_NOTE = (
    "intensity-convention: I1 = cos^2(delta/2), I2 = sin^2(delta/2) with delta the relative "
    "phase of the interfering amplitudes; for a spin-up beam through a z pulse delta = mu*B*tau/hbar"
)


class ScenarioError(ValidationError):
    """Invalid scenario; ``location`` is a dotted key path or ``line:column``."""

    code = "invalid-value"

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)

    def as_dict(self):
        return {"code": self.code, "location": self.location, "message": str(self)}


class ScenarioSyntaxError(ScenarioError):
    code = "syntax"


class UnknownKeyError(ScenarioError):
    code = "unknown-key"


class MissingKeyError(ScenarioError):
    code = "missing-key"


class RangeError(ScenarioError):
    code = "range"


class IncompatibleError(ScenarioError):
    code = "incompatible"


class _Section:
    """Reads typed values out of one table and remembers which keys were used."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ScenarioError("expected a table", path)
        self.data = data
        self.path = path
        self.used = set()

    def loc(self, key):
        return f"{self.path}.{key}" if self.path else str(key)

    def has(self, key):
        return key in self.data

    def raw(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                raise MissingKeyError("required key is missing", self.loc(key))
            return default
        self.used.add(key)
        return self.data[key]

    def number(self, key, default=None, required=False, minimum=None, positive=False):
        value = self.raw(key, default, required)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"expected a number, got {value!r}", self.loc(key))
        value = float(value)
        if not math.isfinite(value):
            raise RangeError("must be finite", self.loc(key))
        if positive and value <= 0:
            raise RangeError(f"must be > 0, got {value!r}", self.loc(key))
        if minimum is not None and value < minimum:
            raise RangeError(f"must be >= {minimum}, got {value!r}", self.loc(key))
        return value

    def integer(self, key, default=None, minimum=None):
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"expected an integer, got {value!r}", self.loc(key))
        if minimum is not None and value < minimum:
            raise RangeError(f"must be >= {minimum}, got {value!r}", self.loc(key))
        return value

    def string(self, key, default=None, required=False, choices=None):
        value = self.raw(key, default, required)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ScenarioError(f"expected a string, got {value!r}", self.loc(key))
        if choices is not None and value not in choices:
            raise ScenarioError(f"must be one of {', '.join(choices)}; got {value!r}", self.loc(key))
        return value

    def vector(self, key, n, default=None, required=False):
        value = self.raw(key, default, required)
        if value is None:
            return None
        loc = self.loc(key)
        if not isinstance(value, (list, tuple)) or len(value) != n:
            raise ScenarioError(f"expected a list of {n} numbers", loc)
        out = []
        for i, x in enumerate(value):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise RangeError(f"entry {i} must be a finite number", loc)
            out.append(float(x))
        return tuple(out)

    def table(self, key, default=None):
        value = self.raw(key, default)
        if value is None:
            return None
        return _Section(value, self.loc(key))

    def finish(self):
        extra = sorted(set(self.data) - self.used, key=str)
        if extra:
            raise UnknownKeyError(f"unknown key {extra[0]!r}", self.loc(extra[0]))


# ---------------------------------------------------------------------------
# Scenario model


@dataclass(frozen=True)
class Numerics:
    tolerance: float = 1e-10
    oracle_steps: int = 10000
    line_samples: int = gauge.DEFAULT_SAMPLES


@dataclass(frozen=True)
class MagneticABSpec:
    flux: float
    flux_point: tuple
    path1: tuple
    path2: tuple
    loops: tuple = ()

    def paths(self):
        mk = lambda v: gauge.PlanarPath(v, self.flux_point)  # noqa: E731
        return mk(self.path1), mk(self.path2), tuple(mk(v) for v in self.loops)


@dataclass(frozen=True)
class ACSpec:
    momentum: tuple
    efield: tuple
    tau: float


@dataclass(frozen=True, eq=False)
class Scenario:
    version: str
    experiment: str
    particle: Particle
    beam: Any  # polarization name or Bloch vector tuple
    arms: Optional[tuple] = None
    ac: Optional[ACSpec] = None
    magnetic_ab: Optional[MagneticABSpec] = None
    analyses: dict = field(default_factory=dict)
    numerics: Numerics = Numerics()

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return to_document(self) == to_document(other)

    @property
    def beam_state(self) -> SpinState:
        if self.beam == "unpolarized":
            return SpinState.unpolarized()
        if isinstance(self.beam, str):
            return SpinState.eigenstate(*POLARIZATIONS[self.beam])
        return SpinState.from_bloch(self.beam)

    def arm_elements(self):
        """The two arms as element lists (built from the AC spec when needed)."""
        if self.experiment == "ac":
            return _ac_arms(self.particle, self.ac)
        if self.arms is None:
            raise IncompatibleError("experiment has no interferometer arms", "arms")
        return self.arms

    @property
    def digest(self) -> str:
        blob = json.dumps(to_document(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _ac_arms(particle, spec):
    b = gauge.ac_effective_field(particle, spec.momentum, spec.efield)
    mag = float(np.linalg.norm(b))
    if mag == 0:
        return ([interferometer.Free(spec.tau)], [interferometer.Free(spec.tau)])
    return ([interferometer.FieldPulse(mag, spec.tau, tuple(b / mag))], [interferometer.Free(spec.tau)])


ANALYSES = {
    # name: allowed experiments
    "intensities": EXPERIMENTS,
    "autocorrelation": EXPERIMENTS,
    "torque": EXPERIMENTS,
    "correlation_angle": EXPERIMENTS,
    "scalar_reduction": ("sab", "ac", "custom_arms"),
    "energy_scan": ARM_EXPERIMENTS,
    "oracle_check": ARM_EXPERIMENTS,
    "transverse_spin": EXPERIMENTS,
    "phase_difference": ("magnetic_ab",),
    "gauge_report": ("magnetic_ab",),
}


def _parse_element(sec: _Section):
    kind = sec.string("kind", required=True,
                      choices=("field_pulse", "shielded_potential", "optical_phase", "free"))
    try:
        if kind == "field_pulse":
            el = interferometer.FieldPulse(
                sec.number("B", required=True),
                sec.number("tau", required=True, minimum=0),
                sec.vector("direction", 3, default=[0.0, 0.0, 1.0]),
            )
        elif kind == "shielded_potential":
            el = interferometer.ShieldedPotential(sec.number("dV", required=True),
                                                  sec.number("tau", required=True, minimum=0))
        elif kind == "optical_phase":
            prof = sec.raw("profile", required=True)
            if not isinstance(prof, list) or not prof:
                raise ScenarioError("expected a non-empty list of [rate, duration] pairs",
                                    sec.loc("profile"))
            pairs = []
            for i, item in enumerate(prof):
                item_sec = _Section({"pair": item}, sec.loc(f"profile.{i}"))
                rate, dur = item_sec.vector("pair", 2)
                if dur < 0:
                    raise RangeError("duration must be >= 0", sec.loc(f"profile.{i}"))
                pairs.append((rate, dur))
            el = interferometer.OpticalPhase(tuple(pairs))
        else:
            el = interferometer.Free(sec.number("tau", default=0.0, minimum=0))
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(str(exc), sec.path) from None
    sec.finish()
    return el


def _parse_arms(sec: _Section):
    names = sorted(sec.data)
    if names != ["arm1", "arm2"]:
        raise ScenarioError(f"exactly two arms named arm1 and arm2 are required, got {names}",
                            sec.path)
    arms = []
    for name in ("arm1", "arm2"):
        items = sec.raw(name)
        if not isinstance(items, list):
            raise ScenarioError("expected a list of element tables", sec.loc(name))
        arms.append(tuple(_parse_element(_Section(it, sec.loc(f"{name}.{i}")))
                          for i, it in enumerate(items)))
    sec.finish()
    return tuple(arms)


def _parse_polyline(sec, key):
    value = sec.raw(key, required=True)
    loc = sec.loc(key)
    if not isinstance(value, list) or len(value) < 2:
        raise ScenarioError("expected a list of at least two [x, y] points", loc)
    pts = []
    for i, p in enumerate(value):
        pts.append(_Section({"p": p}, f"{loc}.{i}").vector("p", 2))
    return tuple(pts)


def _parse_analyses(sec: _Section, experiment: str):
    out = {}
    for name in list(sec.data):
        if name not in ANALYSES:
            raise UnknownKeyError(f"unknown analysis {name!r}", sec.loc(name))
        if experiment not in ANALYSES[name]:
            raise IncompatibleError(f"analysis {name!r} is not available for experiment {experiment!r}",
                                    sec.loc(name))
        a = sec.table(name)
        out[name] = _ANALYSIS_PARSERS[name](a)
        a.finish()
    sec.finish()
    return out


def _p_none(a):
    return {}


def _p_autocorrelation(a):
    p = {}
    if a.has("B"):
        p["B"] = a.number("B")
    if a.has("times"):
        times = a.raw("times")
        if not isinstance(times, list) or not times:
            raise ScenarioError("expected a non-empty list of times", a.loc("times"))
        p["times"] = list(_Section({"t": times}, a.loc("times")).vector("t", len(times)))
    else:
        p["t_start"] = a.number("t_start", default=0.0)
        p["t_stop"] = a.number("t_stop", required=True)
        p["samples"] = a.integer("samples", default=101, minimum=2)
        if p["t_stop"] <= p["t_start"]:
            raise RangeError("t_stop must exceed t_start", a.loc("t_stop"))
    if "times" in p and np.any(np.diff(p["times"]) <= 0):
        raise RangeError("time grid must be strictly increasing", a.loc("times"))
    p["eom_dt"] = a.number("eom_dt", default=1e-4, positive=True)
    return p


def _p_torque(a):
    return {"field": list(a.vector("field", 3))} if a.has("field") else {}


def _p_correlation_angle(a):
    p = {}
    if a.has("B"):
        p["B"] = a.number("B")
    if a.has("tau"):
        p["tau"] = a.number("tau", minimum=0)
    return p


def _p_energy_scan(a):
    energies = a.raw("energies", required=True)
    if not isinstance(energies, list) or not energies:
        raise ScenarioError("expected a non-empty list of energies", a.loc("energies"))
    vals = _Section({"e": energies}, a.loc("energies")).vector("e", len(energies))
    if min(vals) < 0:
        raise RangeError("kinetic energies must be >= 0", a.loc("energies"))
    return {"energies": list(vals)}


def _p_gauge_report(a):
    return {
        "trials": a.integer("trials", default=20, minimum=1),
        "seed": a.integer("seed", default=0, minimum=0),
        "bumps": a.integer("bumps", default=3, minimum=1),
    }


_ANALYSIS_PARSERS = {
    "intensities": _p_none,
    "autocorrelation": _p_autocorrelation,
    "torque": _p_torque,
    "correlation_angle": _p_correlation_angle,
    "scalar_reduction": _p_none,
    "energy_scan": _p_energy_scan,
    "oracle_check": _p_none,
    "transverse_spin": _p_none,
    "phase_difference": _p_none,
    "gauge_report": _p_gauge_report,
}


def _parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (0, 0)
        msg = getattr(exc, "msg", str(exc))
        raise ScenarioSyntaxError(msg, f"{line}:{col}") from None


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    return from_document(_parse_toml(text))


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def from_document(doc: dict) -> Scenario:
    root = _Section(doc, "")
    version = root.raw("version", required=True)
    if str(version) != FORMAT_VERSION:
        raise ScenarioError(f"unsupported format version {version!r} (expected {FORMAT_VERSION!r})",
                            "version")
    experiment = root.string("experiment", required=True, choices=EXPERIMENTS)

    psec = root.table("particle", default={})
    try:
        particle = Particle(
            mu=psec.number("mu", default=1.0),
            mass=psec.number("mass", default=1.0, positive=True),
            hbar=psec.number("hbar", default=1.0, positive=True),
            c=psec.number("c", default=1.0, positive=True),
            charge=psec.number("charge", default=1.0),
        )
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(str(exc), "particle") from None
    psec.finish()

    bsec = root.table("beam", default={"polarization": "sz+"})
    if bsec.has("bloch") and bsec.has("polarization"):
        raise ScenarioError("give either polarization or bloch, not both", "beam")
    if bsec.has("bloch"):
        beam = bsec.vector("bloch", 3)
        if np.linalg.norm(beam) > 1 + 1e-12:
            raise RangeError("Bloch vector length must be <= 1", "beam.bloch")
    else:
        beam = bsec.string("polarization", default="sz+",
                           choices=tuple(POLARIZATIONS) + ("unpolarized",))
    bsec.finish()

    arms = ac = mab = None
    if experiment in ("sab", "eab", "custom_arms"):
        if not root.has("arms"):
            raise MissingKeyError(f"experiment {experiment!r} needs an [arms] section", "arms")
        arms = _parse_arms(root.table("arms"))
        kinds = {type(el) for arm in arms for el in arm}
        need = {"sab": interferometer.FieldPulse, "eab": interferometer.ShieldedPotential}.get(experiment)
        if need is not None and need not in kinds:
            raise IncompatibleError(f"experiment {experiment!r} needs at least one "
                                    f"{'field_pulse' if experiment == 'sab' else 'shielded_potential'} element",
                                    "arms")
    elif experiment == "ac":
        s = root.table("ac")
        if s is None:
            raise MissingKeyError("experiment 'ac' needs an [ac] section", "ac")
        ac = ACSpec(s.vector("momentum", 3, required=True), s.vector("efield", 3, required=True),
                    s.number("tau", required=True, minimum=0))
        s.finish()
    else:
        s = root.table("magnetic_ab")
        if s is None:
            raise MissingKeyError("experiment 'magnetic_ab' needs a [magnetic_ab] section", "magnetic_ab")
        loops = s.raw("loops", default=[])
        if not isinstance(loops, list):
            raise ScenarioError("expected a list of closed polylines", s.loc("loops"))
        lsec = _Section({str(i): v for i, v in enumerate(loops)}, s.loc("loops"))
        mab = MagneticABSpec(
            flux=s.number("flux", required=True),
            flux_point=s.vector("flux_point", 2, default=[0.0, 0.0]),
            path1=_parse_polyline(s, "path1"),
            path2=_parse_polyline(s, "path2"),
            loops=tuple(_parse_polyline(lsec, str(i)) for i in range(len(loops))),
        )
        s.finish()
        try:
            p1, p2, lps = mab.paths()
        except AbspinError as exc:
            raise ScenarioError(str(exc), "magnetic_ab") from None
        if not (np.allclose(p1.start, p2.start) and np.allclose(p1.end, p2.end)):
            raise ScenarioError("path1 and path2 must share both endpoints", "magnetic_ab")
        for i, lp in enumerate(lps):
            if not lp.closed:
                raise ScenarioError("loop is not closed", f"magnetic_ab.loops.{i}")
    for name, other in (("arms", arms), ("ac", ac), ("magnetic_ab", mab)):
        if other is None and root.has(name):
            raise IncompatibleError(f"section [{name}] is not used by experiment {experiment!r}", name)

    analyses = _parse_analyses(root.table("analyses", default={}), experiment)

    nsec = root.table("numerics", default={})
    numerics = Numerics(
        tolerance=nsec.number("tolerance", default=1e-10, positive=True),
        oracle_steps=nsec.integer("oracle_steps", default=10000, minimum=1),
        line_samples=nsec.integer("line_samples", default=gauge.DEFAULT_SAMPLES, minimum=1),
    )
    nsec.finish()
    root.finish()

    return Scenario(version=FORMAT_VERSION, experiment=experiment, particle=particle, beam=beam,
                    arms=arms, ac=ac, magnetic_ab=mab, analyses=analyses, numerics=numerics)


def _element_doc(el) -> dict:
    if isinstance(el, interferometer.FieldPulse):
        return {"kind": "field_pulse", "B": el.B, "tau": el.tau, "direction": list(el.direction)}
    if isinstance(el, interferometer.ShieldedPotential):
        return {"kind": "shielded_potential", "dV": el.dV, "tau": el.tau}
    if isinstance(el, interferometer.OpticalPhase):
        return {"kind": "optical_phase", "profile": [list(p) for p in el.profile]}
    return {"kind": "free", "tau": el.tau}


def to_document(s: Scenario) -> dict:
    """Normalised document with every default filled in."""
    p = s.particle
    doc = {
        "version": s.version,
        "experiment": s.experiment,
        "particle": {"mu": p.mu, "mass": p.mass, "hbar": p.hbar, "c": p.c, "charge": p.charge},
        "beam": {"bloch": list(s.beam)} if isinstance(s.beam, tuple) else {"polarization": s.beam},
    }
    if s.arms is not None:
        doc["arms"] = {f"arm{i + 1}": [_element_doc(el) for el in arm] for i, arm in enumerate(s.arms)}
    if s.ac is not None:
        doc["ac"] = {"momentum": list(s.ac.momentum), "efield": list(s.ac.efield), "tau": s.ac.tau}
    if s.magnetic_ab is not None:
        m = s.magnetic_ab
        doc["magnetic_ab"] = {
            "flux": m.flux,
            "flux_point": list(m.flux_point),
            "path1": [list(v) for v in m.path1],
            "path2": [list(v) for v in m.path2],
            "loops": [[list(v) for v in lp] for lp in m.loops],
        }
    doc["analyses"] = {k: dict(v) for k, v in s.analyses.items()}
    doc["numerics"] = {
        "tolerance": s.numerics.tolerance,
        "oracle_steps": s.numerics.oracle_steps,
        "line_samples": s.numerics.line_samples,
    }
    return doc


def serialize_scenario(s: Scenario) -> str:
    return tomli_w.dumps(to_document(s))


# ---------------------------------------------------------------------------
# Execution


@dataclass(frozen=True)
class ScalarResult:
    analysis: str
    key: str
    value: Any
    unit: str


@dataclass
class ResultSet:
    scenario_digest: str
    scalar_results: list = field(default_factory=list)
    time_series: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    def add(self, analysis, key, value, unit="1"):
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        self.scalar_results.append(ScalarResult(analysis, key, value, unit))

    def note(self, analysis, message):
        code = message.split(":", 1)[0]
        entry = {"analysis": analysis, "code": code, "message": message}
        if entry not in self.diagnostics:
            self.diagnostics.append(entry)

    def scalars(self, analysis) -> dict:
        return {r.key: r.value for r in self.scalar_results if r.analysis == analysis}


def _first_pulse(s: Scenario):
    if s.experiment not in ARM_EXPERIMENTS:
        return None
    for arm in s.arm_elements():
        for el in arm:
            if isinstance(el, interferometer.FieldPulse):
                return el
    return None


def _field_along_z(s: Scenario, params, name):
    if "B" in params:
        return params["B"]
    pulse = _first_pulse(s)
    if pulse is None:
        raise IncompatibleError("no field given and the arms contain no field pulse",
                                f"analyses.{name}.B")
    if np.max(np.abs(np.asarray(pulse.direction) - (0, 0, 1))) > 1e-12:
        raise IncompatibleError("the field pulse is not along z; give B explicitly",
                                f"analyses.{name}.B")
    return pulse.B


def _sab_delta_phi(s: Scenario):
    """Sum of mu*B_z*tau/hbar over z pulses in arm1 minus arm2 (spin-up phase)."""
    total = 0.0
    for sign, arm in zip((1, -1), s.arm_elements()):
        for el in arm:
            if isinstance(el, interferometer.FieldPulse):
                total += sign * s.particle.mu * el.B * el.direction[2] * el.tau / s.particle.hbar
    return total


def _run_intensities(s, params, rs):
    if s.experiment == "magnetic_ab":
        p1, p2, _ = s.magnetic_ab.paths()
        f = gauge.GaugeField(s.magnetic_ab.flux, s.magnetic_ab.flux_point)
        k = s.particle.charge / (s.particle.hbar * s.particle.c)
        phases = [k * gauge.line_integral(f, p, s.numerics.line_samples) for p in (p1, p2)]
        arm1 = [interferometer.OpticalPhase(((phases[0], 1.0),))]
        arm2 = [interferometer.OpticalPhase(((phases[1], 1.0),))]
    else:
        arm1, arm2 = s.arm_elements()
    out = interferometer.run_mach_zehnder(arm1, arm2, s.beam_state, s.particle)
    rs.add("intensities", "I1", out.I1)
    rs.add("intensities", "I2", out.I2)
    rs.add("intensities", "relative_phase", out.relative_phase, "rad")
    rs.add("intensities", "visibility", out.visibility)
    rs.add("intensities", "probability_sum", out.I1 + out.I2)
    if s.experiment in ("sab", "ac"):
        rs.add("intensities", "delta_phi", _sab_delta_phi(s), "rad")
    rs.note("intensities", INTENSITY_NOTE)


def _run_autocorrelation(s, params, rs):
    b = _field_along_z(s, params, "autocorrelation")
    times = params.get("times")
    if times is None:
        times = np.linspace(params["t_start"], params["t_stop"], params["samples"])
    table = correlation.autocorrelation_series(s.particle, b, times, s.beam_state)
    rs.time_series["autocorrelation"] = table
    omega = precession_frequency(s.particle, b)
    t = np.asarray(table["t"])
    err = max(np.max(np.abs(table["c_value"] - np.cos(omega * t))),
              np.max(np.abs(table["s_value"] + np.sin(omega * t))))
    rs.add("autocorrelation", "omega", omega, "rad/time")
    rs.add("autocorrelation", "max_closed_form_error", float(err))
    mid = float(t[len(t) // 2])
    eom = correlation.autocorr_eom_residual(s.particle, b, mid, params["eom_dt"])
    rs.add("autocorrelation", "eom_residual_C", eom.dC)
    rs.add("autocorrelation", "eom_residual_S", eom.dS)
    rs.add("autocorrelation", "eom_residual_S_plus_sign", eom.dS_printed_sign)
    for n in eom.notes:
        rs.note("autocorrelation", n)


def _run_torque(s, params, rs):
    if "field" in params:
        b = np.asarray(params["field"], dtype=float)
    else:
        pulse = _first_pulse(s)
        if pulse is None:
            raise IncompatibleError("no field given and the arms contain no field pulse",
                                    "analyses.torque.field")
        b = pulse.B * np.asarray(pulse.direction)
    st = correlation.torque_fluctuations(s.beam_state, s.particle, b)
    for key in ("mean_Lx", "mean_Ly"):
        rs.add("torque", key, getattr(st, key), "energy")
    for key in ("mean_Lx2", "mean_Ly2", "var_Lx", "var_Ly"):
        rs.add("torque", key, getattr(st, key), "energy^2")
    rs.add("torque", "mu_B_squared", float((s.particle.mu * np.linalg.norm(b)) ** 2), "energy^2")
    for n in st.notes:
        rs.note("torque", n)


def _run_correlation_angle(s, params, rs):
    b = _field_along_z(s, params, "correlation_angle")
    if "tau" in params:
        tau = params["tau"]
    else:
        pulse = _first_pulse(s)
        if pulse is None:
            raise IncompatibleError("no tau given and the arms contain no field pulse",
                                    "analyses.correlation_angle.tau")
        tau = pulse.tau
    ca = correlation.correlation_angle(s.particle, b, tau)
    rs.add("correlation_angle", "theta", ca.theta, "rad")
    rs.add("correlation_angle", "delta_phi", ca.delta_phi, "rad")
    rs.add("correlation_angle", "ratio", ca.ratio)


def _run_scalar_reduction(s, params, rs):
    pulse = _first_pulse(s)
    if pulse is None:
        raise IncompatibleError("the arms contain no field pulse", "analyses.scalar_reduction")
    b = _field_along_z(s, params, "scalar_reduction")
    rep = interferometer.scalar_reduction_check(b, pulse.tau, s.particle, s.beam_state,
                                                atol=s.numerics.tolerance)
    rs.add("scalar_reduction", "I1_spin", rep.full.I1)
    rs.add("scalar_reduction", "I1_scalar", rep.scalar.I1)
    rs.add("scalar_reduction", "max_difference", rep.max_difference)
    rs.add("scalar_reduction", "equivalent", rep.equivalent)


def _run_energy_scan(s, params, rs):
    arm1, arm2 = s.arm_elements()
    scan = interferometer.energy_independence_scan(arm1, arm2, s.particle, params["energies"],
                                                   s.beam_state)
    rs.time_series["energy_scan"] = {
        "energy": np.asarray(scan.energies),
        "relative_phase": np.asarray(scan.phases),
        "I1": np.asarray([o.I1 for o in scan.outputs]),
    }
    rs.add("energy_scan", "spread", scan.spread, "rad")


def _run_oracle_check(s, params, rs):
    worst = 0.0
    for i, arm in enumerate(s.arm_elements(), start=1):
        segs = tuple(el.segment for el in arm if isinstance(el, interferometer.FieldPulse))
        prof = FieldProfile(segs)
        diff = float(np.max(np.abs(propagator(s.particle, prof)
                                   - oracle_propagator(s.particle, prof, s.numerics.oracle_steps))))
        rs.add("oracle_check", f"arm{i}_max_difference", diff)
        worst = max(worst, diff)
    rs.add("oracle_check", "within_tolerance", worst <= s.numerics.tolerance)


def _run_transverse_spin(s, params, rs):
    rep = check_transverse_spin_condition(s.beam_state)
    for key in ("mean_sx", "mean_sy", "mean_sx2", "mean_sy2", "satisfiable", "averages_vanish"):
        rs.add("transverse_spin", key, getattr(rep, key))


def _run_phase_difference(s, params, rs):
    m = s.magnetic_ab
    p1, p2, _ = m.paths()
    res = gauge.ab_phase_difference(p1, p2, m.flux, s.particle,
                                    samples_per_segment=s.numerics.line_samples)
    rs.add("phase_difference", "phase", res.phase, "rad")
    rs.add("phase_difference", "delta_n", res.delta_n)
    rs.add("phase_difference", "expected", res.expected, "rad")


def _run_gauge_report(s, params, rs):
    m = s.magnetic_ab
    p1, p2, loops = m.paths()
    paths = [p1, p2, *loops]
    if not loops:
        paths.append(p1.then(p2.reversed()))
    rep = gauge.gauge_invariance_report(gauge.GaugeField(m.flux, m.flux_point), paths,
                                        trials=params["trials"], seed=params["seed"],
                                        samples_per_segment=s.numerics.line_samples,
                                        n_bumps=params["bumps"])
    rs.add("gauge_report", "trials", rep.trials)
    rs.add("gauge_report", "closed_max_shift", rep.closed_max_shift, "flux")
    rs.add("gauge_report", "pair_max_shift", rep.pair_max_shift, "flux")
    rs.add("gauge_report", "open_max_shift", rep.open_max_shift, "flux")
    rs.add("gauge_report", "invariant", rep.invariant)
    rs.add("gauge_report", "gauge_dependent", bool(rep.gauge_dependent))


_RUNNERS = {
    "intensities": _run_intensities,
    "autocorrelation": _run_autocorrelation,
    "torque": _run_torque,
    "correlation_angle": _run_correlation_angle,
    "scalar_reduction": _run_scalar_reduction,
    "energy_scan": _run_energy_scan,
    "oracle_check": _run_oracle_check,
    "transverse_spin": _run_transverse_spin,
    "phase_difference": _run_phase_difference,
    "gauge_report": _run_gauge_report,
}


def run_scenario(s: Scenario) -> ResultSet:
    """Run every requested analysis. Failures become error entries, never omissions."""
    rs = ResultSet(scenario_digest=s.digest)
    for name in sorted(s.analyses):
        try:
            _RUNNERS[name](s, s.analyses[name], rs)
        except AbspinError as exc:
            rs.errors[name] = {"code": exc.code, "message": str(exc)}
            rs.diagnostics.append({"analysis": name, "code": exc.code, "message": str(exc)})
    return rs


# ---------------------------------------------------------------------------
# Output


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def results_document(rs: ResultSet, include_series: bool = False) -> dict:
    results = {}
    for r in rs.scalar_results:
        results.setdefault(r.analysis, {})[r.key] = {"value": _json_value(r.value), "unit": r.unit}
    doc = {
        "scenario_digest": rs.scenario_digest,
        "results": results,
        "diagnostics": rs.diagnostics,
        "errors": rs.errors,
    }
    if include_series:
        doc["time_series"] = {
            name: {col: [_json_value(x) for x in np.asarray(vals, dtype=float)] for col, vals in table.items()}
            for name, table in rs.time_series.items()
        }
    return doc


def series_csv(rs: ResultSet, name: str) -> str:
    """One time series as CSV: a digest comment line, the header, then rows."""
    table = rs.time_series[name]
    cols = list(SERIES_COLUMNS) if name == "autocorrelation" else list(table)
    buf = io.StringIO()
    buf.write(f"# scenario_digest={rs.scenario_digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in zip(*(np.asarray(table[c], dtype=float) for c in cols)):
        w.writerow([format(float(x), ".17g") for x in row])
    return buf.getvalue()


def emit(rs: ResultSet, fmt: str, destination) -> list:
    """Write results to the directory ``destination``; returns the paths written.

    ``csv``: one ``<series>.csv`` per time series plus ``results.json``.
    ``json``: a single ``results.json`` that also holds the time series.
    """
    if fmt not in ("csv", "json"):
        raise ValidationError(f"unknown output format {fmt!r}")
    dest = Path(destination)
    try:
        dest.mkdir(parents=True, exist_ok=True)
        written = []
        doc = results_document(rs, include_series=(fmt == "json"))
        path = dest / "results.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        written.append(path)
        if fmt == "csv":
            for name in sorted(rs.time_series):
                path = dest / f"{name}.csv"
                path.write_text(series_csv(rs, name))
                written.append(path)
    except OSError as exc:
        raise OutputError(f"cannot write to {dest}: {exc.strerror or exc}") from None
    return written


class OutputError(AbspinError):
    code = "output"
