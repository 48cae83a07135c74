"""Scenario files: JSON documents declaring spaces, states, observables,
schemes and a program of directives.

Complex numbers are written either as plain numbers or as ``[re, im]``
pairs; matrices are row-major nested lists.  Loading validates every object
and every name a directive refers to, so :func:`relmeas.cli.run` only meets
runtime failures.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import InputError, ParseError, UnitarityError, ValidationError
from .linalg import DEFAULT_TOL, Tolerances
from .qstructs import DiscreteObservable, ReadingScale, State
from .rqm import CollapseSemantics
from .schemes import MeasurementScheme, build_lueders_scheme, build_naimark_scheme

SCENARIO_VERSION = "relmeas-scenario/1"
DIRECTIVES = (
    "interact",
    "sequential",
    "joint-spectrum",
    "cpl-check",
    "correlate",
    "schmidt",
    "lattice-check",
    "properties",
)
SAMPLING_DIRECTIVES = ("interact", "sequential")


@dataclass(frozen=True, eq=False)
class NamedState:
    state: State
    space: tuple
    vector: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class NamedObservable:
    observable: DiscreteObservable
    space: str


@dataclass(frozen=True, eq=False)
class NamedScheme:
    scheme: MeasurementScheme
    system: str


@dataclass(eq=False)
class Scenario:
    """Validated scenario; ``source`` is the canonical JSON-ready form."""

    version: str
    seed: int | None
    semantics: CollapseSemantics
    spaces: dict
    states: dict
    unitaries: dict
    observables: dict
    scales: dict
    schemes: dict
    program: list
    source: dict = field(repr=False)


# ---------------------------------------------------------------- numbers


def _complex(x, where):
    if isinstance(x, bool):
        raise ValidationError(f"{where}: expected a number, got a boolean", where)
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in x):
        return complex(x[0], x[1])
    raise ValidationError(f"{where}: expected a number or an [re, im] pair", where)


def parse_vector(v, where):
    if not isinstance(v, list) or not v:
        raise ValidationError(f"{where}: expected a non-empty list of entries", where)
    return np.array([_complex(x, f"{where}[{i}]") for i, x in enumerate(v)], dtype=np.complex128)


def parse_matrix(m, where):
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ValidationError(f"{where}: expected a non-empty list of rows", where)
    rows = [[_complex(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(m)]
    if len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{where}: rows have different lengths", where)
    return np.array(rows, dtype=np.complex128)


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_vector(v):
    return [encode_complex(z) for z in np.asarray(v).ravel()]


def encode_matrix(m):
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


# ---------------------------------------------------------------- helpers


def _require(d, key, where, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{where}: missing field {key!r}", f"{where}.{key}")
    value = d[key]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(f"{where}.{key}: wrong type {type(value).__name__}", f"{where}.{key}")
    return value


def _section(doc, key):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ValidationError(f"{key}: expected an object", key)
    return value


def _space_list(spec, spaces, where):
    names = [spec] if isinstance(spec, str) else spec
    if not isinstance(names, list) or not names:
        raise ValidationError(f"{where}: expected a space name or a list of space names", where)
    for n in names:
        if n not in spaces:
            raise ValidationError(f"{where}: undefined space {n!r}", where)
    return tuple(names)


def _dim(spaces, names):
    return int(np.prod([spaces[n] for n in names]))


def _wrap(where, fn, *args):
    # tag module validation errors with the field they came from
    try:
        return fn(*args)
    except (ValidationError, UnitarityError):
        raise
    except InputError as exc:
        raise ValidationError(f"{where}: {exc}", where) from exc


def _lookup(table, name, kind, where):
    if not isinstance(name, str) or name not in table:
        raise ValidationError(f"{where}: undefined {kind} {name!r}", where)
    return table[name]


# ---------------------------------------------------------------- sections


def _load_spaces(doc):
    spaces = {}
    for name, dim in _section(doc, "spaces").items():
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ValidationError(f"spaces.{name}: dimension must be a positive integer", f"spaces.{name}")
        spaces[name] = dim
    return spaces


def _load_state(name, spec, spaces, tol):
    where = f"states.{name}"
    space = _space_list(_require(spec, "space", where), spaces, f"{where}.space")
    dim = _dim(spaces, space)
    kind = _require(spec, "kind", where, str)
    vector = None
    if kind == "pure":
        vector = parse_vector(_require(spec, "vector", where), f"{where}.vector")
        if vector.shape != (dim,):
            raise ValidationError(f"{where}.vector: length {len(vector)} for dimension {dim}", f"{where}.vector")
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise ValidationError(f"{where}.vector: zero vector", f"{where}.vector")
        vector = vector / norm
        state = _wrap(where, State.pure, vector, tol)
    elif kind == "maximally_mixed":
        state = State.maximally_mixed(dim)
    elif kind == "basis":
        index = _require(spec, "index", where, int)
        if not 0 <= index < dim:
            raise ValidationError(f"{where}.index: out of range for dimension {dim}", f"{where}.index")
        vector = np.eye(dim, dtype=np.complex128)[index]
        state = State.basis(dim, index)
    elif kind == "matrix":
        rho = parse_matrix(_require(spec, "matrix", where), f"{where}.matrix")
        if rho.shape != (dim, dim):
            raise ValidationError(f"{where}.matrix: shape {rho.shape} for dimension {dim}", f"{where}.matrix")
        state = _wrap(where, State, rho, tol)
    else:
        raise ValidationError(f"{where}.kind: unknown state kind {kind!r}", f"{where}.kind")
    return NamedState(state, space, vector)


def _load_observable(name, spec, spaces, tol):
    where = f"observables.{name}"
    space = _require(spec, "space", where, str)
    _space_list(space, spaces, f"{where}.space")
    dim = spaces[space]
    kind = _require(spec, "kind", where, str)
    outcomes = spec.get("outcomes")
    if outcomes is not None and (not isinstance(outcomes, list) or not all(isinstance(o, str) for o in outcomes)):
        raise ValidationError(f"{where}.outcomes: expected a list of strings", f"{where}.outcomes")
    if kind == "computational":
        outcomes = outcomes or [str(i) for i in range(dim)]
        if len(outcomes) != dim:
            raise ValidationError(f"{where}.outcomes: need {dim} labels", f"{where}.outcomes")
        obs = _wrap(where, DiscreteObservable.from_basis, outcomes, np.eye(dim))
    elif kind == "basis":
        vecs = _require(spec, "vectors", where, list)
        cols = np.column_stack([parse_vector(v, f"{where}.vectors[{i}]") for i, v in enumerate(vecs)])
        if cols.shape[0] != dim:
            raise ValidationError(f"{where}.vectors: vectors must have length {dim}", f"{where}.vectors")
        cols = cols / np.linalg.norm(cols, axis=0)
        outcomes = outcomes or [str(i) for i in range(cols.shape[1])]
        obs = _wrap(where, DiscreteObservable.from_basis, outcomes, cols)
    elif kind == "effects":
        mats = _require(spec, "effects", where, list)
        effects = [parse_matrix(m, f"{where}.effects[{i}]") for i, m in enumerate(mats)]
        for i, e in enumerate(effects):
            if e.shape != (dim, dim):
                raise ValidationError(f"{where}.effects[{i}]: shape {e.shape} for dimension {dim}", f"{where}.effects")
        outcomes = outcomes or [str(i) for i in range(len(effects))]
        obs = _wrap(where, DiscreteObservable, outcomes, effects, tol)
    else:
        raise ValidationError(f"{where}.kind: unknown observable kind {kind!r}", f"{where}.kind")
    return NamedObservable(obs, space)


def _load_scale(name, spec, observables):
    where = f"scales.{name}"
    obs_name = _require(spec, "observable", where, str)
    obs = _lookup(observables, obs_name, "observable", f"{where}.observable").observable
    if spec.get("kind") == "singletons":
        return ReadingScale.singletons(obs)
    if spec.get("kind") == "trivial":
        return ReadingScale.trivial(obs)
    bins = _require(spec, "bins", where, list)
    if not all(isinstance(b, list) and all(isinstance(x, str) for x in b) for b in bins):
        raise ValidationError(f"{where}.bins: expected lists of outcome labels", f"{where}.bins")
    names = spec.get("names")
    scale = _wrap(where, ReadingScale, bins, names)
    _wrap(where, scale.check_covers, obs)
    return scale


def _hadamard():
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def _load_unitary(name, spec, spaces, observables, tol):
    where = f"unitaries.{name}"
    kind = _require(spec, "kind", where, str)
    if kind in ("lueders_dilation_of", "naimark_dilation_of"):
        obs = _lookup(observables, _require(spec, "observable", where), "observable", f"{where}.observable")
        build = build_lueders_scheme if kind == "lueders_dilation_of" else build_naimark_scheme
        m = _wrap(where, build, obs.observable)
        return m.U, None
    space = _space_list(_require(spec, "space", where), spaces, f"{where}.space")
    dim = _dim(spaces, space)
    if kind == "matrix":
        u = parse_matrix(_require(spec, "matrix", where), f"{where}.matrix")
        if u.shape != (dim, dim):
            raise ValidationError(f"{where}.matrix: shape {u.shape} for dimension {dim}", f"{where}.matrix")
    elif kind == "cnot":
        # |i, j> -> |i, j + i mod d_B>, the CNOT for two qubits
        if len(space) != 2:
            raise ValidationError(f"{where}.space: cnot needs two factors", f"{where}.space")
        da, db = spaces[space[0]], spaces[space[1]]
        u = np.zeros((dim, dim), dtype=np.complex128)
        for i in range(da):
            for j in range(db):
                u[i * db + (j + i) % db, i * db + j] = 1.0
    elif kind == "hadamard_on":
        factor = _require(spec, "factor", where, str)
        if factor not in space:
            raise ValidationError(f"{where}.factor: {factor!r} is not a factor of the space", f"{where}.factor")
        if spaces[factor] != 2:
            raise ValidationError(f"{where}.factor: hadamard needs a two-dimensional factor", f"{where}.factor")
        u = np.eye(1, dtype=np.complex128)
        for n in space:
            u = np.kron(u, _hadamard() if n == factor else np.eye(spaces[n]))
    else:
        raise ValidationError(f"{where}.kind: unknown unitary kind {kind!r}", f"{where}.kind")
    if not linalg.is_unitary(u, tol):
        defect = linalg.op_distance(linalg.dagger(u) @ u, np.eye(dim))
        raise UnitarityError(f"unitary {name!r} is not unitary (||U^+U - I|| = {defect:.3e})")
    return u, space


def _load_scheme(name, spec, spaces, states, unitaries, observables, tol):
    where = f"schemes.{name}"
    kind = _require(spec, "kind", where, str)
    if kind in ("lueders", "naimark"):
        obs = _lookup(observables, _require(spec, "observable", where), "observable", f"{where}.observable")
        build = build_lueders_scheme if kind == "lueders" else build_naimark_scheme
        return NamedScheme(_wrap(where, build, obs.observable), obs.space)
    if kind != "explicit":
        raise ValidationError(f"{where}.kind: unknown scheme kind {kind!r}", f"{where}.kind")
    system = _require(spec, "system", where, str)
    _space_list(system, spaces, f"{where}.system")
    u, _ = _lookup(unitaries, _require(spec, "unitary", where), "unitary", f"{where}.unitary")
    ready = _lookup(states, _require(spec, "ready", where), "state", f"{where}.ready")
    pointer = _lookup(observables, _require(spec, "pointer", where), "observable", f"{where}.pointer")
    if pointer.observable.dim != ready.state.dim:
        raise ValidationError(f"{where}.pointer: pointer and ready state dimensions differ", f"{where}.pointer")
    try:
        m = MeasurementScheme(spaces[system], u, ready.state, pointer.observable, tol)
    except UnitarityError as exc:
        raise UnitarityError(f"{where}: unitary {spec['unitary']!r}: {exc}") from exc
    except InputError as exc:
        raise ValidationError(f"{where}: {exc}", where) from exc
    return NamedScheme(m, system)


# ---------------------------------------------------------------- program


def _check_state_for(states, name, dim, where):
    st = _lookup(states, name, "state", where)
    if st.state.dim != dim:
        raise ValidationError(f"{where}: state {name!r} has dimension {st.state.dim}, expected {dim}", where)
    return st


def _check_scale_for(sc, scales, schemes, scheme_key, scale_key, where):
    m = _lookup(schemes, sc.get(scheme_key), "scheme", f"{where}.{scheme_key}").scheme
    if sc.get(scale_key) is not None:
        scale = _lookup(scales, sc[scale_key], "scale", f"{where}.{scale_key}")
        try:
            scale.check_covers(m.Z)
        except InputError as exc:
            raise ValidationError(f"{where}.{scale_key}: {exc}", f"{where}.{scale_key}") from exc
    return m


def _validate_directive(i, d, sc):
    where = f"program[{i}]"
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object", where)
    op = _require(d, "op", where, str)
    if op not in DIRECTIVES:
        raise ValidationError(f"{where}.op: unknown directive {op!r}", f"{where}.op")
    if "semantics" in d:
        try:
            CollapseSemantics.parse(d["semantics"])
        except ValueError as exc:
            raise ValidationError(f"{where}.semantics: {exc}", f"{where}.semantics") from exc
    for key in ("relative_states",):
        for j, pair in enumerate(d.get(key, [])):
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair)):
                raise ValidationError(f"{where}.{key}[{j}]: expected [system, perspective]", f"{where}.{key}")
    if op == "interact":
        m = _check_scale_for(d, sc.scales, sc.schemes, "scheme", "scale", where)
        _require(d, "target", where, str)
        _require(d, "observer", where, str)
        if "state" in d:
            _check_state_for(sc.states, d["state"], m.sys_dim, f"{where}.state")
    elif op == "sequential":
        stages = _require(d, "stages", where, list)
        if not stages:
            raise ValidationError(f"{where}.stages: at least one stage is needed", f"{where}.stages")
        dims = set()
        for j, st in enumerate(stages):
            m = _check_scale_for(st, sc.scales, sc.schemes, "scheme", "scale", f"{where}.stages[{j}]")
            _require(st, "observer", f"{where}.stages[{j}]", str)
            dims.add(m.sys_dim)
        if len(dims) != 1:
            raise ValidationError(f"{where}.stages: schemes act on different dimensions", f"{where}.stages")
        _check_state_for(sc.states, _require(d, "state", where), dims.pop(), f"{where}.state")
    elif op in ("joint-spectrum", "cpl-check", "properties"):
        m = _check_scale_for(d, sc.scales, sc.schemes, "scheme", "scale", where)
        if op != "properties" or "state" in d:
            _check_state_for(sc.states, _require(d, "state", where), m.sys_dim, f"{where}.state")
        if op == "cpl-check" and d.get("bob") is not None:
            bob = _check_scale_for(d, sc.scales, sc.schemes, "bob", "bob_scale", where)
            if bob.sys_dim != m.anc_dim:
                raise ValidationError(f"{where}.bob: Bob's scheme must act on the pointer space", f"{where}.bob")
    elif op == "correlate":
        st = _lookup(sc.states, _require(d, "state", where), "state", f"{where}.state")
        obs_names = _require(d, "observables", where, list)
        if len(obs_names) != 2:
            raise ValidationError(f"{where}.observables: expected two observables", f"{where}.observables")
        obs = [_lookup(sc.observables, n, "observable", f"{where}.observables[{k}]") for k, n in enumerate(obs_names)]
        if st.state.dim != obs[0].observable.dim * obs[1].observable.dim:
            raise ValidationError(f"{where}.state: dimension does not match the two observables", f"{where}.state")
        scale_names = d.get("scales")
        if scale_names is not None:
            if not isinstance(scale_names, list) or len(scale_names) != 2:
                raise ValidationError(f"{where}.scales: expected two scale names", f"{where}.scales")
            for k, (sn, o) in enumerate(zip(scale_names, obs)):
                scale = _lookup(sc.scales, sn, "scale", f"{where}.scales[{k}]")
                try:
                    scale.check_covers(o.observable)
                except InputError as exc:
                    raise ValidationError(f"{where}.scales[{k}]: {exc}", f"{where}.scales") from exc
        values = d.get("values")
        if values is not None and not (isinstance(values, list) and len(values) == 2):
            raise ValidationError(f"{where}.values: expected two value lists", f"{where}.values")
    elif op == "schmidt":
        st = _lookup(sc.states, _require(d, "state", where), "state", f"{where}.state")
        if st.vector is None:
            raise ValidationError(f"{where}.state: Schmidt decomposition needs a pure vector state", f"{where}.state")
        if len(st.space) != 2:
            raise ValidationError(f"{where}.state: state must live on two factors", f"{where}.state")
    elif op == "lattice-check":
        dim = _require(d, "dim", where, int)
        if dim < 2:
            raise ValidationError(f"{where}.dim: must be at least 2", f"{where}.dim")
        n = d.get("random_pairs", 0)
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ValidationError(f"{where}.random_pairs: expected a non-negative integer", f"{where}.random_pairs")
    return op


# ---------------------------------------------------------------- entry points


def _canonical(doc):
    """JSON-ready copy with complex entries normalized to ``[re, im]``."""
    return json.loads(json.dumps(doc))


def scenario_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOL) -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("scenario must be a JSON object", "")
    version = doc.get("version", SCENARIO_VERSION)
    if version != SCENARIO_VERSION:
        raise ValidationError(f"version: unsupported scenario version {version!r}", "version")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ValidationError("seed: expected a non-negative integer", "seed")
    try:
        semantics = CollapseSemantics.parse(doc.get("semantics", "local"))
    except ValueError as exc:
        raise ValidationError(f"semantics: {exc}", "semantics") from exc

    spaces = _load_spaces(doc)
    states = {n: _load_state(n, s, spaces, tol) for n, s in _section(doc, "states").items()}
    observables = {n: _load_observable(n, s, spaces, tol) for n, s in _section(doc, "observables").items()}
    scales = {n: _load_scale(n, s, observables) for n, s in _section(doc, "scales").items()}
    unitaries = {n: _load_unitary(n, s, spaces, observables, tol) for n, s in _section(doc, "unitaries").items()}
    schemes = {
        n: _load_scheme(n, s, spaces, states, unitaries, observables, tol) for n, s in _section(doc, "schemes").items()
    }
    program = doc.get("program", [])
    if not isinstance(program, list):
        raise ValidationError("program: expected a list of directives", "program")
    sc = Scenario(version, seed, semantics, spaces, states, unitaries, observables, scales, schemes, program, {})
    ops = [_validate_directive(i, d, sc) for i, d in enumerate(program)]
    if seed is None and any(op in SAMPLING_DIRECTIVES for op in ops):
        raise ValidationError("seed: a seed is required by sampling directives", "seed")
    sc.source = _canonical({**doc, "version": version, "semantics": semantics.value})
    return sc


def parse_scenario(text: str, tol: Tolerances = DEFAULT_TOL) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    return scenario_from_dict(doc, tol)


def load_scenario(path, tol: Tolerances = DEFAULT_TOL) -> Scenario:
    """Read and validate a scenario file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, tol)


def serialize_scenario(sc: Scenario) -> str:
    """Canonical JSON text; :func:`parse_scenario` reads it back."""
    return json.dumps(sc.source, indent=2) + "\n"
