"""JSON run configuration.

Matrices are nested arrays of ``[re, im]`` pairs, univariate polynomials are
coefficient arrays (index = power), and polynomials in ``(q, p)`` are lists of
``{"coeff": c, "q": [...], "p": [...]}`` monomials.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .bracket import HybridObservable
from .ensemble import DeltaClassical, GaussianClassical, HybridDensitySpec, QuantumMixture
from .integrator import IntegratorConfig
from .model import CouplingTerm, HybridHamiltonianSpec, HybridState, two_qubit_oscillator
from .potential import ClassicalPolynomial, OscillatorParams, PolynomialPotential
from .quantum_ops import HermitianOperator, pauli

log = logging.getLogger(__name__)

RENORMALIZE_WARN = 1e-6


class ConfigError(ValueError):
    """Unreadable or structurally malformed configuration."""


class ValidationError(ValueError):
    """Well-formed configuration describing an invalid model or run."""


def encode_matrix(m) -> list:
    m = m.matrix if isinstance(m, HermitianOperator) else np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ConfigError("matrix must be a nested array of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def encode_vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def decode_vector(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ConfigError("complex vector must be an array of [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def encode_classical_poly(poly: ClassicalPolynomial) -> list:
    k = poly.n_dof
    return [{"coeff": c, "q": list(e[:k]), "p": list(e[k:])} for e, c in sorted(poly.terms.items())]


def decode_classical_poly(data, n_dof: int) -> ClassicalPolynomial:
    terms = {}
    for mono in data:
        q = list(mono.get("q", [0] * n_dof))
        p = list(mono.get("p", [0] * n_dof))
        if len(q) != n_dof or len(p) != n_dof:
            raise ConfigError(f"monomial exponents must have length {n_dof}")
        key = tuple(q + p)
        terms[key] = terms.get(key, 0.0) + float(mono["coeff"])
    return ClassicalPolynomial(n_dof, terms)


def encode_observable(f: HybridObservable) -> dict:
    return {
        "terms": [{"coefficient": encode_classical_poly(c), "operator": encode_matrix(a)} for c, a in f.terms],
        "classical": encode_classical_poly(f.classical_part),
    }


def decode_observable(data, n_dof: int) -> HybridObservable:
    terms = [(decode_classical_poly(t["coefficient"], n_dof), HermitianOperator(decode_matrix(t["operator"])))
             for t in data.get("terms", [])]
    return HybridObservable(terms, decode_classical_poly(data.get("classical", []), n_dof), n_dof=n_dof)


def encode_model(spec: HybridHamiltonianSpec, macro_limit: bool = False) -> dict:
    return {
        "quantum_dim": spec.quantum_dim,
        "n_dof": spec.n_dof,
        "hbar": spec.hbar,
        "macro_limit": macro_limit,
        "H0": encode_matrix(spec.H0),
        "couplings": [{"coefficient": [list(f.coefficients) for f in c.factors],
                       "operator": encode_matrix(c.operator)} for c in spec.couplings],
        "potential": list(spec.potential.coefficients),
        "oscillator": {"mass": spec.oscillator.mass, "omega": spec.oscillator.omega},
    }


def decode_model(data) -> tuple[HybridHamiltonianSpec, bool]:
    n_dof = int(data.get("n_dof", 1))
    hbar = float(data.get("hbar", 1.0))
    macro = bool(data.get("macro_limit", False))
    osc = data.get("oscillator", {})
    H0 = decode_matrix(data["H0"])
    couplings_raw = data.get("couplings", [])
    potential_raw = [float(x) for x in data.get("potential", [0.0])]
    mass, omega = float(osc.get("mass", 1.0)), float(osc.get("omega", 1.0))
    coupling_parts = []
    for c in couplings_raw:
        factors = c["coefficient"]
        if not isinstance(factors, list) or not all(isinstance(f, list) for f in factors):
            raise ConfigError("coupling coefficient must be a list of per-DOF coefficient arrays")
        coupling_parts.append(([tuple(float(x) for x in f) for f in factors], decode_matrix(c["operator"])))
    try:
        params = OscillatorParams(mass, omega, 0.0 if macro else hbar)
        couplings = tuple(CouplingTerm(tuple(PolynomialPotential(f) for f in fs), HermitianOperator(m))
                          for fs, m in coupling_parts)
        spec = HybridHamiltonianSpec(HermitianOperator(H0), couplings, PolynomialPotential(tuple(potential_raw)),
                                     params, n_dof, hbar)
    except (ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc
    if "quantum_dim" in data and int(data["quantum_dim"]) != spec.quantum_dim:
        raise ValidationError(f"quantum_dim {data['quantum_dim']} does not match H0 ({spec.quantum_dim})")
    return spec, macro


@dataclass
class RunConfig:
    spec: HybridHamiltonianSpec
    initial: HybridState
    integrator: IntegratorConfig
    observables: dict[str, HybridObservable] = field(default_factory=dict)
    output_path: str | None = None
    output_format: str = "csv"
    macro_limit: bool = False

    def to_dict(self) -> dict[str, Any]:
        ic = self.integrator
        out = {
            "model": encode_model(self.spec, self.macro_limit),
            "initial": {"q": self.initial.q.tolist(), "p": self.initial.p.tolist(),
                        "omega": encode_vector(self.initial.omega)},
            "integrator": {"method": ic.method, "dt": ic.dt, "t_final": ic.t_final,
                           "output_stride": ic.output_stride, "renormalize": ic.renormalize},
            "observables": {name: encode_observable(f) for name, f in self.observables.items()},
        }
        out["output"] = {"path": self.output_path, "format": self.output_format}
        return out


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        spec, macro = decode_model(data["model"])
        init = data["initial"]
        q = [float(x) for x in init["q"]]
        p = [float(x) for x in init["p"]]
        omega = decode_vector(init["omega"])
        integ = data.get("integrator", {})
        method = str(integ.get("method", "strang"))
        dt = float(integ.get("dt", 1e-3))
        t_final = float(integ.get("t_final", 0.0))
        stride = int(integ.get("output_stride", 1))
        renorm = bool(integ.get("renormalize", False))
        obs_raw = data.get("observables", {})
        output = data.get("output", {}) or {}
    except ValidationError:
        raise
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ConfigError(f"malformed configuration: {exc!r}") from exc
    norm = float(np.linalg.norm(omega))
    if norm == 0 or not np.isfinite(norm):
        raise ValidationError("initial omega has zero or non-finite norm")
    if abs(norm - 1.0) > RENORMALIZE_WARN:
        log.warning("initial omega renormalized (norm was %.12g)", norm)
    omega = omega / norm
    try:
        observables = {str(name): decode_observable(o, spec.n_dof) for name, o in obs_raw.items()}
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed observable: {exc!r}") from exc
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    try:
        initial = HybridState(q, p, omega)
        integrator = IntegratorConfig(method, dt, t_final, stride, renorm)
        if initial.omega.size != spec.quantum_dim or initial.n_dof != spec.n_dof:
            raise ValueError("initial state does not match the model dimensions")
        for name, f in observables.items():
            if f.quantum_dim not in (None, spec.quantum_dim) or f.n_dof != spec.n_dof:
                raise ValueError(f"observable {name!r} does not match the model dimensions")
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    fmt = str(output.get("format", "csv"))
    if fmt != "csv":
        raise ValidationError(f"unsupported output format {fmt!r}")
    return RunConfig(spec, initial, integrator, observables, output.get("path"), fmt, macro)


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(data)


def _dumps(obj, indent: int = 0, width: int = 100) -> str:
    flat = json.dumps(obj)
    if len(flat) + indent <= width or not isinstance(obj, (dict, list)):
        return flat
    pad = " " * (indent + 2)
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(k)}: {_dumps(v, indent + 2, width)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    items = [pad + _dumps(v, indent + 2, width) for v in obj]
    return "[\n" + ",\n".join(items) + "\n" + " " * indent + "]"


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(_dumps(cfg.to_dict()) + "\n")


def parse_density(data: dict, cfg: RunConfig) -> HybridDensitySpec:
    """Density over the reduced phase space; omitted factors default to the run's initial point."""
    try:
        cl = data.get("classical", {"type": "delta"})
        if cl["type"] == "gaussian":
            classical = GaussianClassical(cl["mean"], cl["covariance"])
        elif cl["type"] == "delta":
            classical = DeltaClassical(cl.get("q", cfg.initial.q), cl.get("p", cfg.initial.p))
        else:
            raise ValueError(f"unknown classical density type {cl['type']!r}")
        qu = data.get("quantum", {"type": "pure"})
        if qu["type"] == "pure":
            omega = decode_vector(qu["omega"]) if "omega" in qu else cfg.initial.omega
            quantum = QuantumMixture.pure(omega)
        elif qu["type"] == "mixture":
            comps = qu["components"]
            quantum = QuantumMixture(tuple(float(c["weight"]) for c in comps),
                                     tuple(decode_vector(c["omega"]) for c in comps))
        else:
            raise ValueError(f"unknown quantum density type {qu['type']!r}")
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ValidationError(f"invalid density: {exc}") from exc
    if classical.n_dof != cfg.spec.n_dof or quantum.states[0].size != cfg.spec.quantum_dim:
        raise ValidationError("invalid density: dimensions do not match the model")
    return HybridDensitySpec(classical, quantum)


def load_density(path: str | Path, cfg: RunConfig) -> HybridDensitySpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValidationError(f"invalid density file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("invalid density: expected a JSON object")
    return parse_density(data, cfg)


def reference_config() -> RunConfig:
    """Two qubits + quartic oscillator with demonstration parameters."""
    spec = two_qubit_oscillator(1.0, 0.5, 0.3, 0.2, (0.0, 0.0, 0.5, 0.0, 0.1))
    omega = np.array([1.0, 1.0, 1.0, 1.0j]) / 2.0
    one = ClassicalPolynomial.constant(1.0)
    observables = {
        "sz1": HybridObservable([(one, pauli("z", 1, 2))]),
        "sz2": HybridObservable([(one, pauli("z", 2, 2))]),
        "sx1sx2": HybridObservable([(one, HermitianOperator(pauli("x", 1, 2) @ pauli("x", 2, 2)))]),
    }
    return RunConfig(spec, HybridState([1.0], [0.0], omega),
                     IntegratorConfig("strang", 1e-3, 50.0, 100), observables, "trajectory.csv")
