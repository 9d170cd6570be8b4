"""
Run configuration: INI files with fixed sections, resolved against defaults.

Values are parsed with a small arithmetic evaluator, so ``pi/3``,
``pi - 0.1``, ``inf`` and complex literals such as ``0.5j`` are accepted.
Vectors and matrices are written as (nested) Python-style lists.
Ranges use ``start:stop:count``.
"""

import ast
import configparser
import copy
import math
import operator

import numpy as np

from .core import PostselectionScheme, SystemSpec, density_matrix, pure_state
from .dynamics import CouplingProfile
from .errors import NdweakError, PhysicsRangeError
from .exact_stats import DEFAULT_EPSILON, DecoherenceModel
from .probe import DEFAULT_HALF_WIDTH, DEFAULT_POINTS, DispersionRelation, GaussianProbe
from .spinhalf import PAULI, BlochConfig, bloch_state

QUANTITIES = ("Q_exact", "Q_interp", "Q_osc", "Z", "Z_x", "moments", "P_post")
MIN_POINTS = 256
MIN_HALF_COVERAGE = 3.0

# section -> key -> (kind, default); REQUIRED marks mandatory keys
REQUIRED = object()
SCHEMA = {
    "scenario": {"kind": ("choice:spin-half,generic", "spin-half")},
    "spin": {
        "pre_angle": ("float", None),
        "post_angle": ("float", None),
        "m": ("vector", None),
        "n": ("vector", None),
        "a": ("vector", [0.0, 0.0, 1.0]),
    },
    "system": {
        "eigenvalues": ("floats", None),
        "pre_state": ("vector", None),
        "pre_rho": ("matrix", None),
        "post_state": ("vector", None),
        "post_rho": ("matrix", None),
        "post_basis": ("matrix", None),
        "post_weights": ("floats", None),
    },
    "probe": {
        "spread": ("float", 1.0),
        "coherence": ("float", 2.0),
        "k_mean": ("float", 0.0),
        "x_mean": ("float", 0.0),
    },
    "coupling": {
        "strength": ("float", REQUIRED),
        "duration": ("float", 1.0),
        "profile": ("choice:constant,triangular,raised-cosine", "constant"),
    },
    "dispersion": {"k_h": ("float", None), "mass": ("float", None)},
    "decoherence": {
        "k_d": ("float", math.inf),
        "gamma": ("float", None),
        "thermal_energy": ("float", None),
        "epsilon": ("float", DEFAULT_EPSILON),
    },
    "grid": {"k_min": ("float", None), "k_max": ("float", None), "n_points": ("int", DEFAULT_POINTS)},
    "outputs": {
        "quantities": ("names", ["Q_exact", "Q_interp", "P_post", "moments"]),
        "theta": ("floats", "-3:3:61"),
        "chi": ("floats", "-2:2:41"),
        "plot": ("bool", False),
    },
}

SWEEP_PARAMETERS = {
    "lambda": ("coupling", "strength"),
    "kappa": ("probe", "coherence"),
    "k_H": ("dispersion", "k_h"),
    "K_D": ("decoherence", "k_d"),
    "angle": ("spin", "post_angle"),
}


class ConfigError(NdweakError, ValueError):
    """Malformed configuration; the message names the offending field."""


_NAMES = {"pi": math.pi, "inf": math.inf, "e": math.e}
_FUNCS = {"sqrt": np.sqrt, "cos": np.cos, "sin": np.sin, "exp": np.exp}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def evaluate(text):
    """Evaluate an arithmetic expression, list or nested list of numbers."""

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, (ast.List, ast.Tuple)):
            return [ev(e) for e in node.elts]
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {ast.dump(node)[:40]}")

    try:
        return ev(ast.parse(text.strip(), mode="eval").body)
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text!r}") from exc


def _real(v):
    v = complex(v)
    if v.imag != 0:
        raise ValueError("expected a real number")
    return v.real


def _parse_floats(raw):
    raw = raw.strip()
    if raw.count(":") == 2 and not raw.startswith("["):
        start, stop, count = (evaluate(p) for p in raw.split(":"))
        if int(count) != count or count < 1:
            raise ValueError("range count must be a positive integer")
        return [float(v) for v in np.linspace(_real(start), _real(stop), int(count))]
    if not raw:
        return []
    val = evaluate(raw if raw.startswith("[") else f"[{raw}]")
    return [_real(v) for v in val]


def _parse_value(kind, raw, default):
    if kind == "float":
        return float(_real(evaluate(raw)))
    if kind == "int":
        v = evaluate(raw)
        if not isinstance(v, int):
            raise ValueError("expected an integer")
        return v
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected true or false")
    if kind == "floats":
        return _parse_floats(raw)
    if kind == "vector":
        v = evaluate(raw if raw.strip().startswith("[") else f"[{raw}]")
        return [complex(x) if isinstance(x, complex) else float(x) for x in v]
    if kind == "matrix":
        m = evaluate(raw)
        if not (isinstance(m, list) and all(isinstance(r, list) for r in m)):
            raise ValueError("expected a nested list")
        return [[complex(x) if isinstance(x, complex) else float(x) for x in r] for r in m]
    if kind == "names":
        names = [n.strip() for n in raw.replace(";", ",").split(",") if n.strip()]
        bad = [n for n in names if n not in QUANTITIES]
        if bad:
            raise ValueError(f"unknown quantities {bad}; choose from {list(QUANTITIES)}")
        return names
    if kind.startswith("choice:"):
        options = kind.split(":", 1)[1].split(",")
        val = raw.strip()
        if val not in options:
            raise ValueError(f"expected one of {options}")
        return val
    raise AssertionError(kind)


def parse_config(text, source="<config>"):
    """Parse INI ``text`` into a resolved :class:`RunConfig`.

    Raises :class:`ConfigError` with the file, section and key of the
    first problem found.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
    for section, fields in SCHEMA.items():
        values[section] = {}
        present = parser[section] if parser.has_section(section) else {}
        for key in present:
            if key not in fields:
                raise ConfigError(f"{source}: [{section}] unknown key {key!r}")
        for key, (kind, default) in fields.items():
            if key in present:
                try:
                    values[section][key] = _parse_value(kind, present[key], default)
                except (ValueError, TypeError, ZeroDivisionError) as exc:
                    raise ConfigError(f"{source}: [{section}] {key}: {exc}") from None
            elif default is REQUIRED:
                raise ConfigError(f"{source}: [{section}] {key} is required")
            elif kind == "floats" and isinstance(default, str):
                values[section][key] = _parse_floats(default)
            else:
                values[section][key] = copy.deepcopy(default)
    cfg = RunConfig(values, source)
    cfg.check_structure()
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def _matrix(rows):
    return np.array(rows, dtype=complex)


class RunConfig:
    """Resolved configuration with builders for the library inputs."""

    def __init__(self, values, source="<config>"):
        self.values = values
        self.source = source

    def __getitem__(self, section):
        return self.values[section]

    @property
    def kind(self):
        return self.values["scenario"]["kind"]

    def _err(self, section, msg):
        return ConfigError(f"{self.source}: [{section}] {msg}")

    def check_structure(self):
        """Field-presence rules that do not depend on physics ranges."""
        if self.kind == "spin-half":
            s = self["spin"]
            angles = s["pre_angle"] is not None, s["post_angle"] is not None
            vectors = s["m"] is not None, s["n"] is not None
            if not (all(angles) or all(vectors)) or (any(angles) and any(vectors)):
                raise self._err("spin", "give either pre_angle and post_angle or the vectors m and n")
        else:
            s = self["system"]
            if s["eigenvalues"] is None:
                raise self._err("system", "eigenvalues is required for the generic scenario")
            if (s["pre_state"] is None) == (s["pre_rho"] is None):
                raise self._err("system", "give exactly one of pre_state, pre_rho")
            posts = [s["post_state"] is not None, s["post_rho"] is not None, s["post_basis"] is not None]
            if sum(posts) != 1:
                raise self._err("system", "give exactly one of post_state, post_rho, post_basis")
            if s["post_basis"] is not None and s["post_weights"] is None:
                raise self._err("system", "post_basis needs post_weights")
        d = self["dispersion"]
        if (d["k_h"] is None) == (d["mass"] is None):
            raise self._err("dispersion", "give exactly one of k_h, mass")
        dec = self["decoherence"]
        if (dec["gamma"] is None) != (dec["thermal_energy"] is None):
            raise self._err("decoherence", "gamma and thermal_energy go together")
        if dec["gamma"] is not None and math.isfinite(dec["k_d"]):
            raise self._err("decoherence", "give either k_d or gamma with thermal_energy")

    def with_value(self, section, key, value):
        values = copy.deepcopy(self.values)
        if section == "spin" and self.kind != "spin-half":
            raise self._err(section, "angle sweeps need the spin-half scenario")
        if section == "spin" and values["spin"]["post_angle"] is None:
            raise self._err(section, "angle sweeps need pre_angle and post_angle")
        if section == "dispersion" and values["dispersion"]["k_h"] is None:
            raise self._err(section, "k_H sweeps need k_h rather than mass")
        values[section][key] = float(value)
        return RunConfig(values, self.source)

    # library inputs

    def probe(self):
        p = self["probe"]
        if not (p["spread"] > 0 and p["coherence"] > 0):
            raise PhysicsRangeError("probe spread and coherence must be positive")
        return GaussianProbe(p["spread"], p["coherence"], p["k_mean"], p["x_mean"])

    def profile(self):
        c = self["coupling"]
        return CouplingProfile.preset(c["profile"], c["duration"], c["strength"])

    def dispersion(self, profile):
        d = self["dispersion"]
        if d["k_h"] is not None:
            if not d["k_h"] > 0:
                raise PhysicsRangeError("k_h must be positive")
            return DispersionRelation.from_hamiltonian_scale(d["k_h"], profile.tau0)
        if not d["mass"] > 0:
            raise PhysicsRangeError("mass must be positive")
        return DispersionRelation.quadratic(d["mass"])

    def decoherence(self, dispersion):
        dec = self["decoherence"]
        if dec["gamma"] is not None:
            return DecoherenceModel.from_rate(
                dec["gamma"], dec["thermal_energy"], dispersion.mass, self["coupling"]["duration"], dec["epsilon"]
            )
        return DecoherenceModel(dec["k_d"], dec["epsilon"])

    def bloch(self):
        """Spin-half scenario as a :class:`BlochConfig` (probe units ignored)."""
        s, p = self["spin"], self["probe"]
        a = np.array(s["a"], dtype=float)
        if s["pre_angle"] is not None:
            if not np.allclose(a, [0, 0, 1]):
                raise self._err("spin", "angles are measured from a = z; use vectors for other axes")
            t = s["pre_angle"] + s["post_angle"]
            m = [np.sin(s["pre_angle"]), 0.0, np.cos(s["pre_angle"])]
            n = [np.sin(t), 0.0, np.cos(t)]
        else:
            m, n = s["m"], s["n"]
        k_h = self["dispersion"]["k_h"] or 1.0
        return BlochConfig(m, n, a, self["coupling"]["strength"], p["coherence"] / p["spread"], k_h,
                           self["decoherence"]["k_d"], self["decoherence"]["epsilon"])

    def system_inputs(self):
        """(sys, rho_i, post) in the eigenbasis of the measured observable."""
        if self.kind == "spin-half":
            cfg = self.bloch()
            evals, vecs = np.linalg.eigh(np.einsum("i,ijk->jk", cfg.a, PAULI))
            rot = lambda r: vecs.conj().T @ bloch_state(r) @ vecs  # noqa: E731
            return SystemSpec(np.round(evals, 14)), rot(cfg.m), rot(cfg.n)
        s = self["system"]
        sys = SystemSpec(s["eigenvalues"])
        rho_i = pure_state(s["pre_state"]) if s["pre_state"] is not None else density_matrix(_matrix(s["pre_rho"]))
        if s["post_state"] is not None:
            post = pure_state(s["post_state"])
        elif s["post_rho"] is not None:
            post = density_matrix(_matrix(s["post_rho"]))
        else:
            post = PostselectionScheme(_matrix(s["post_basis"]), s["post_weights"])
        return sys, rho_i, post

    def inputs(self):
        """Keyword arguments for the exact and expansion engines."""
        sys, rho_i, post = self.system_inputs()
        profile = self.profile()
        dispersion = self.dispersion(profile)
        return dict(sys=sys, rho_i=rho_i, post=post, probe=self.probe(), profile=profile,
                    dispersion=dispersion, deco=self.decoherence(dispersion))

    def grid(self, sys=None):
        """Readout grid; defaults cover the probe and the largest coupling shift."""
        g, p = self["grid"], self["probe"]
        if g["n_points"] < MIN_POINTS:
            raise PhysicsRangeError(f"n_points must be at least {MIN_POINTS}")
        a_abs = float(np.max(np.abs(sys.eigenvalues))) if sys is not None else 1.0
        shift = abs(self["coupling"]["strength"]) * a_abs
        half = DEFAULT_HALF_WIDTH * p["spread"] + shift
        k_min = p["k_mean"] - half if g["k_min"] is None else g["k_min"]
        k_max = p["k_mean"] + half if g["k_max"] is None else g["k_max"]
        need = MIN_HALF_COVERAGE * p["spread"]
        if k_min > p["k_mean"] - need or k_max < p["k_mean"] + need:
            raise PhysicsRangeError(
                f"grid [{k_min:g}, {k_max:g}] must cover 6 probe spreads around k_mean = {p['k_mean']:g}"
            )
        return np.linspace(k_min, k_max, g["n_points"])

    def resolved(self):
        """JSON-friendly copy of every field, defaults included."""

        def clean(v):
            if isinstance(v, complex):
                return {"re": v.real, "im": v.imag}
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, list):
                return [clean(x) for x in v]
            return v

        return {sec: {k: clean(v) for k, v in fields.items()} for sec, fields in self.values.items()}
