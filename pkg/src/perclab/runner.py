"""Experiment orchestration: validated configs in, reproducible files out.

A run is (experiment kind, flat key=value config, master seed); it produces
a CSV of result rows plus a JSON sidecar holding the fully resolved config,
seed, package version, and wall time.  Everything numeric is written with
17 significant digits and '\\n' line endings, replicas are scheduled in
fixed blocks with index-ordered reduction, and replica j always runs on
stream j -- so the bytes of the CSV depend on nothing but (config, seed),
no matter how many workers run the blocks.

Wall time is the one quantity that varies between identical runs; it lives
alone in the sidecar's "timing" field, which comparisons drop.
"""

import csv
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import diagrams, estimators, oracle, osss, pioneers
from .explore import Caps
from .lattice import ModelSpec, jbracket
from .randomness import EdgeField


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


# ---------------------------------------------------------------------------
# config parsing: flat key=value text, schema-checked per experiment kind


def _parse_int(s):
    return int(s, 0)


def _parse_float(s):
    return float(s)


def _parse_str(s):
    return s


def _parse_int_list(s):
    items = [t.strip() for t in s.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(int(t, 0) for t in items)


def _parse_float_list(s):
    items = [t.strip() for t in s.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(t) for t in items)


def _parse_points(s):
    pts = []
    for chunk in s.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        pts.append(tuple(int(t.strip(), 0) for t in chunk.split(",")
                         if t.strip()))
    if not pts:
        raise ValueError("empty point list")
    if len({len(p) for p in pts}) != 1:
        raise ValueError("points have mixed dimensions")
    return tuple(pts)


def _parse_choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError("must be one of %s" % (", ".join(options)))
        return s
    return parse


@dataclass(frozen=True)
class _Field:
    parse: object
    required: bool = False
    default: object = None


_MODEL_KEYS = {
    "dimension": _Field(_parse_int, required=True),
    "geometry": _Field(_parse_choice("lattice", "torus"), default="lattice"),
    "period": _Field(_parse_int),
    "edge_range": _Field(_parse_int, default=1),
}

_CAPS_KEYS = {
    "max_volume": _Field(_parse_int),
    "max_radius": _Field(_parse_int),
    "max_intrinsic": _Field(_parse_int),
}

_SEED_KEY = {"master_seed": _Field(_parse_int, default=0)}

_REPLICAS_KEY = {"replicas": _Field(_parse_int, required=True)}


def _schema(*groups, **extra):
    out = {}
    for g in groups:
        out.update(g)
    out.update(extra)
    return out


_SCHEMAS = {
    "two_point": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p_values=_Field(_parse_float_list, required=True),
        xs=_Field(_parse_points),
        x_norms=_Field(_parse_int_list),
    ),
    "one_arm": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p_values=_Field(_parse_float_list, required=True),
        radii=_Field(_parse_int_list, required=True),
        metric=_Field(_parse_choice("extent", "distance"), default="extent"),
    ),
    "pioneers": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p=_Field(_parse_float, required=True),
        n_max=_Field(_parse_int, required=True),
        tail_ks=_Field(_parse_int_list, default=()),
    ),
    "susceptibility": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p_values=_Field(_parse_float_list, required=True),
    ),
    "plateau": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p=_Field(_parse_float, required=True),
        n_splits=_Field(_parse_int, default=8),
    ),
    "triangle": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p=_Field(_parse_float, required=True),
        n_splits=_Field(_parse_int, default=8),
        method=_Field(_parse_choice("auto", "direct", "fft"), default="auto"),
    ),
    "pt_solve": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        lam=_Field(_parse_float, default=1.0),
        p_lo=_Field(_parse_float, default=0.0),
        p_hi=_Field(_parse_float, default=1.0),
        tol_p=_Field(_parse_float, default=1e-4),
        max_iter=_Field(_parse_int, default=60),
    ),
    "mass_fit": _schema(
        _MODEL_KEYS, _CAPS_KEYS, _SEED_KEY, _REPLICAS_KEY,
        p=_Field(_parse_float, required=True),
        n_values=_Field(_parse_int_list, required=True),
        correction=_Field(_parse_float, default=0.0),
    ),
    "oracle": _schema(
        _SEED_KEY,
        graph=_Field(_parse_str, required=True),
        p_values=_Field(_parse_float_list, required=True),
        source=_Field(_parse_points),
        target=_Field(_parse_points),
    ),
    "osss_check": _schema(
        _SEED_KEY,
        instances=_Field(_parse_int, required=True),
        tol=_Field(_parse_float, default=1e-12),
    ),
}

EXPERIMENT_KINDS = tuple(sorted(_SCHEMAS))


def parse_config_text(text):
    """key = value lines; '#' comments; duplicate keys are errors."""
    raw = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d is not 'key = value': %r" % (ln, line))
        key, val = line.split("=", 1)
        key = key.strip()
        val = val.strip()
        if not key:
            raise ConfigError("line %d has an empty key" % ln)
        if key in raw:
            raise ConfigError("duplicate config key '%s' (line %d)"
                              % (key, ln))
        raw[key] = val
    return raw


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    values: dict
    model: object
    caps: object
    seed: int

    def resolved(self):
        """Flat JSON-safe view of every setting, defaults included."""
        out = {"kind": self.kind, "seed": self.seed}
        for k, v in sorted(self.values.items()):
            if isinstance(v, tuple):
                v = list(list(x) if isinstance(x, tuple) else x for x in v)
            out[k] = v
        return out


def build_config(kind, raw, seed=None):
    """Validate raw key=value strings against the kind's schema."""
    if kind not in _SCHEMAS:
        raise ConfigError("unknown experiment kind '%s' (expected one of %s)"
                          % (kind, ", ".join(EXPERIMENT_KINDS)))
    schema = _SCHEMAS[kind]
    raw = dict(raw)
    declared = raw.pop("kind", None)
    if declared is not None and declared != kind:
        raise ConfigError("config declares kind '%s' but '%s' was requested"
                          % (declared, kind))
    values = {}
    for key, val in raw.items():
        if key not in schema:
            raise ConfigError("unknown config key '%s' for experiment '%s'"
                              % (key, kind))
        try:
            values[key] = schema[key].parse(val)
        except (ValueError, TypeError) as exc:
            raise ConfigError("config field '%s': %s" % (key, exc)) from None
    for key, fld in schema.items():
        if key not in values:
            if fld.required:
                raise ConfigError("missing required config field '%s'" % key)
            if fld.default is not None or key in ("period",):
                values[key] = fld.default
            else:
                values[key] = None
    model = None
    if "dimension" in schema:
        if values["geometry"] == "torus" and values["period"] is None:
            raise ConfigError("missing required config field 'period' "
                              "(torus geometry)")
        try:
            model = ModelSpec(values["dimension"], values["geometry"],
                              period=values["period"] or 0,
                              edge_range=values["edge_range"])
        except (ValueError, TypeError) as exc:
            raise ConfigError("invalid model: %s" % exc) from None
    caps = None
    if "max_volume" in schema and any(values.get(k) is not None
                                      for k in _CAPS_KEYS):
        caps = Caps(values.get("max_volume"), values.get("max_radius"),
                    values.get("max_intrinsic"))
    if "replicas" in schema and values["replicas"] < 1:
        raise ConfigError("config field 'replicas': must be >= 1")
    for key in ("p", "p_lo", "p_hi"):
        if key in values and values[key] is not None and \
                not 0.0 <= values[key] <= 1.0:
            raise ConfigError("config field '%s': must lie in [0, 1]" % key)
    if "p_values" in values and values["p_values"] is not None:
        if any(not 0.0 <= q <= 1.0 for q in values["p_values"]):
            raise ConfigError("config field 'p_values': entries must lie "
                              "in [0, 1]")
    cfg_seed = values.get("master_seed", 0) if seed is None else int(seed)
    return ExperimentConfig(kind, values, model, caps, cfg_seed)


def load_config(path, kind, seed=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config file: %s" % exc) from None
    return build_config(kind, parse_config_text(text), seed=seed)


# ---------------------------------------------------------------------------
# deterministic serialization


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def sidecar_path(csv_path):
    return str(csv_path) + ".json"


def write_sidecar(csv_path, config, extras, wall_seconds):
    meta = {
        "config": config.resolved(),
        "seed": config.seed,
        "version": __version__,
        "extras": extras or {},
        "timing": {"wall_seconds": wall_seconds},
    }
    with open(sidecar_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sidecar(csv_path):
    with open(sidecar_path(csv_path)) as fh:
        return json.load(fh)


def metadata_without_timing(csv_path):
    """Sidecar contents minus the one nondeterministic field."""
    meta = load_sidecar(csv_path)
    meta.pop("timing", None)
    return meta


# ---------------------------------------------------------------------------
# experiment drivers: each returns (columns, rows, extras)


def _axis_points(config, d):
    xs = config.values.get("xs")
    norms = config.values.get("x_norms")
    if (xs is None) == (norms is None):
        raise ConfigError("exactly one of 'xs' and 'x_norms' is required")
    if norms is not None:
        return tuple((int(k),) + (0,) * (d - 1) for k in norms)
    if any(len(x) != d for x in xs):
        raise ConfigError("config field 'xs': points must have 'dimension' "
                          "coordinates")
    return xs


def _coord_columns(d):
    return ["x%d" % i for i in range(d)]


def _estimate_row(est):
    value = est.probability if hasattr(est, "probability") else est.value
    return {"value": value, "sem": est.sem, "replicas": est.replicas,
            "censored": est.censored, "unreliable": est.unreliable}


def _run_two_point(config, workers):
    model = config.model
    d = model.dimension
    field = EdgeField(config.seed)
    points = _axis_points(config, d)
    columns = ["p"] + _coord_columns(d) + ["value", "sem", "replicas",
                                           "censored", "unreliable"]
    rows = []
    for p in config.values["p_values"]:
        for x in points:
            est = estimators.two_point(model, field, x, p=p,
                                       replicas=config.values["replicas"],
                                       caps=config.caps, workers=workers)
            row = {"p": p}
            row.update({"x%d" % i: x[i] for i in range(d)})
            row.update(_estimate_row(est))
            rows.append(row)
    return columns, rows, {}


def _run_one_arm(config, workers):
    model = config.model
    field = EdgeField(config.seed)
    metric = config.values["metric"]
    columns = ["p", "radius", "value", "sem", "replicas", "censored",
               "unreliable"]
    rows = []
    for p in config.values["p_values"]:
        for rho in config.values["radii"]:
            est = estimators.one_arm(model, field, rho, metric=metric, p=p,
                                     replicas=config.values["replicas"],
                                     caps=config.caps, workers=workers)
            rows.append({"p": p, "radius": rho, **_estimate_row(est)})
    return columns, rows, {}


def _run_pioneers(config, workers):
    if config.model.is_torus:
        raise ConfigError("config field 'geometry': crossing bonds are a "
                          "lattice statistic")
    field = EdgeField(config.seed)
    p = config.values["p"]
    model = config.model.with_p(p)
    prof = pioneers.crossing_profile(model, field,
                                     n_max=config.values["n_max"],
                                     replicas=config.values["replicas"],
                                     caps=config.caps, workers=workers)
    columns = ["p", "quantity", "index", "value", "sem", "replicas",
               "censored"]
    rows = []
    for i, n in enumerate(prof.offsets):
        rows.append({"p": p, "quantity": "profile", "index": int(n),
                     "value": prof.mean[i], "sem": prof.sem[i],
                     "replicas": prof.replicas, "censored": prof.censored})
    for k in config.values["tail_ks"]:
        phat, sem = prof.tail_probability(k)
        rows.append({"p": p, "quantity": "tail", "index": int(k),
                     "value": phat, "sem": sem,
                     "replicas": prof.replicas, "censored": prof.censored})
    return columns, rows, {}


def _run_susceptibility(config, workers):
    model = config.model
    field = EdgeField(config.seed)
    columns = ["p", "value", "sem", "replicas", "censored", "unreliable"]
    rows = []
    for p in config.values["p_values"]:
        est = estimators.susceptibility(model, field, p=p,
                                        replicas=config.values["replicas"],
                                        caps=config.caps, workers=workers)
        rows.append({"p": p, **_estimate_row(est)})
    return columns, rows, {}


def _torus_distance_grid(d, r):
    ax = np.minimum(np.arange(r), r - np.arange(r)).astype(np.int16)
    dist = np.zeros((1,) * d, dtype=np.int16)
    for i in range(d):
        shape = (1,) * i + (r,) + (1,) * (d - 1 - i)
        dist = np.maximum(dist, ax.reshape(shape))
    return dist


def _run_plateau(config, workers):
    model = config.model
    if not model.is_torus:
        raise ConfigError("config field 'geometry': plateau runs on a torus")
    d, r = model.dimension, model.period
    field = EdgeField(config.seed)
    p = config.values["p"]
    tt = estimators.torus_two_point(model, field, p=p,
                                    replicas=config.values["replicas"],
                                    n_splits=config.values["n_splits"],
                                    caps=config.caps, workers=workers)
    dist = _torus_distance_grid(d, r)
    columns = (["p", "shell"] + _coord_columns(d)
               + ["rep_value", "rep_sem", "shell_mean", "shell_sem",
                  "shell_size", "replicas"])
    rows = []
    for k in range(1, r // 2 + 1):
        mask = dist == k
        rep = (k,) + (0,) * (d - 1)
        rep_v, rep_s = tt.value_at(rep)
        row = {"p": p, "shell": k, "rep_value": rep_v, "rep_sem": rep_s,
               "shell_mean": float(tt.tau[mask].mean()),
               # shell entries share replicas; the mean of their SEMs is a
               # correlation-safe (conservative) error for the shell mean
               "shell_sem": float(tt.sem[mask].mean()),
               "shell_size": int(mask.sum()), "replicas": tt.replicas}
        row.update({"x%d" % i: rep[i] for i in range(d)})
        rows.append(row)
    return columns, rows, {}


def _run_triangle(config, workers):
    model = config.model
    if not model.is_torus:
        raise ConfigError("config field 'geometry': triangle diagrams run "
                          "on a torus")
    field = EdgeField(config.seed)
    p = config.values["p"]
    tt = estimators.torus_two_point(model, field, p=p,
                                    replicas=config.values["replicas"],
                                    n_splits=config.values["n_splits"],
                                    caps=config.caps, workers=workers)
    grid = diagrams.Grid(tt.tau, wrap=True)
    method = config.values["method"]
    bubble = diagrams.convolve(grid, grid, method=method)
    triangle = diagrams.convolve(bubble, grid, method=method)
    origin = (0,) * model.dimension
    loc, peak = triangle.max_location()
    columns = ["p", "period", "volume", "bubble_origin", "triangle_origin",
               "triangle_max", "max_at_origin", "replicas"]
    rows = [{
        "p": p, "period": model.period, "volume": model.n_vertices,
        "bubble_origin": bubble.value_at(origin),
        "triangle_origin": triangle.value_at(origin),
        "triangle_max": peak, "max_at_origin": loc == origin,
        "replicas": tt.replicas,
    }]
    return columns, rows, {}


def _run_pt_solve(config, workers):
    model = config.model
    if not model.is_torus:
        raise ConfigError("config field 'geometry': the threshold is a "
                          "torus quantity")
    field = EdgeField(config.seed)
    res = estimators.solve_torus_threshold(
        model, field, config.values["lam"],
        replicas=config.values["replicas"], p_lo=config.values["p_lo"],
        p_hi=config.values["p_hi"], tol_p=config.values["tol_p"],
        max_iter=config.values["max_iter"], caps=config.caps,
        workers=workers)
    columns = ["period", "volume", "lam", "target", "p_hat", "chi",
               "chi_sem", "iterations", "bracket_lo", "bracket_hi",
               "replicas"]
    rows = [{
        "period": model.period, "volume": model.n_vertices,
        "lam": res.lam, "target": res.target, "p_hat": res.p,
        "chi": res.chi, "chi_sem": res.chi_sem, "iterations": res.iterations,
        "bracket_lo": res.bracket[0], "bracket_hi": res.bracket[1],
        "replicas": res.replicas,
    }]
    return columns, rows, {"p_hat": res.p}


def _run_mass_fit(config, workers):
    model = config.model
    if model.is_torus:
        raise ConfigError("config field 'geometry': decay-rate fits need "
                          "the infinite lattice")
    d = model.dimension
    field = EdgeField(config.seed)
    p = config.values["p"]
    replicas = config.values["replicas"]
    columns = ["n", "value", "sem", "replicas", "censored", "unreliable"]
    rows = []
    series = {}
    for i, n in enumerate(config.values["n_values"]):
        x = (int(n),) + (0,) * (d - 1)
        est = estimators.two_point(model, field, x, p=p, replicas=replicas,
                                   caps=config.caps, workers=workers,
                                   base_stream=i * replicas)
        series[int(n)] = est
        rows.append({"n": int(n), **_estimate_row(est)})
    extras = {}
    try:
        fit = estimators.fit_mass(series,
                                  correction=config.values["correction"])
        extras["fit"] = {
            "rate": fit.rate, "intercept": fit.intercept,
            "window": list(fit.fit_window), "residual": fit.residual,
            "correction": fit.correction, "n_points": fit.n_points,
        }
    except ValueError as exc:
        extras["fit"] = {"error": str(exc)}
    return columns, rows, extras


def parse_graph_spec(spec):
    """Graph shorthand: single | path:N | square | box:D:R | torus:D:R |
    spread:N:L (a 1d run of N+1 sites with bonds up to range L)."""
    parts = spec.split(":")
    name, args = parts[0], parts[1:]
    try:
        if name == "single" and not args:
            return oracle.single_edge_graph()
        if name == "path" and len(args) == 1:
            return oracle.path_graph(int(args[0]))
        if name == "square" and not args:
            from .lattice import Intersection, Slab
            return oracle.from_region(ModelSpec(2, "lattice"),
                                      Intersection(Slab(0, 0, 1),
                                                   Slab(1, 0, 1)))
        if name == "box" and len(args) == 2:
            return oracle.box_graph(int(args[0]), int(args[1]))
        if name == "torus" and len(args) == 2:
            return oracle.torus_graph(int(args[0]), int(args[1]))
        if name == "spread" and len(args) == 2:
            from .lattice import Slab
            model = ModelSpec(1, "lattice", edge_range=int(args[1]))
            return oracle.from_region(model, Slab(0, 0, int(args[0])))
    except ValueError as exc:
        raise ConfigError("config field 'graph': %s" % exc) from None
    raise ConfigError("config field 'graph': unrecognized spec %r" % spec)


def _run_oracle(config, workers):
    graph = parse_graph_spec(config.values["graph"])
    d = graph.dimension
    source = config.values.get("source")
    source = (0,) * d if source is None else source[0]
    target = config.values.get("target")
    target = graph.vertices[-1] if target is None else target[0]
    if len(source) != d or len(target) != d:
        raise ConfigError("config field 'source'/'target': dimension "
                          "mismatch with graph")
    conn = oracle.connection_event(source, target)
    conn_counts = oracle.count_polynomial(graph, conn)
    size_counts = oracle.count_polynomial(graph,
                                          oracle.cluster_size_value(source))
    lattice_embedded = graph.model is None or not graph.model.is_torus
    columns = ["p", "two_point", "cluster_mean", "crossing_total_mean"]
    rows = []
    for p in config.values["p_values"]:
        row = {
            "p": p,
            "two_point": oracle.evaluate_counts(conn_counts, graph.n_edges,
                                                p),
            "cluster_mean": oracle.evaluate_counts(size_counts,
                                                   graph.n_edges, p),
            "crossing_total_mean": (
                oracle.exact_crossing_summary(graph, p, source).mean_total
                if lattice_embedded else float("nan")),
        }
        rows.append(row)
    extras = {
        "graph": {"spec": config.values["graph"],
                  "n_vertices": graph.n_vertices,
                  "n_edges": graph.n_edges},
        "source": list(source), "target": list(target),
    }
    if graph.n_edges <= 12:
        extras["two_point_polynomial"] = oracle.polynomial_string(
            oracle.standard_coefficients(conn_counts))
        extras["cluster_mean_polynomial"] = oracle.polynomial_string(
            oracle.standard_coefficients(size_counts))
    return columns, rows, extras


def _run_osss_check(config, workers):
    rng = np.random.default_rng(config.seed)
    tol = config.values["tol"]
    columns = ["index", "kind", "n_bits", "lhs", "rhs", "slack", "holds"]
    rows = []
    violations = 0
    for i in range(config.values["instances"]):
        inst = osss.random_instance(rng)
        rep = osss.verify_osss(inst.measure, inst.f_table, inst.g_table,
                               inst.forest, tol=tol)
        if not rep.holds:
            violations += 1
        rows.append({"index": i, "kind": inst.kind,
                     "n_bits": inst.measure.n_bits, "lhs": rep.lhs,
                     "rhs": rep.rhs, "slack": rep.slack,
                     "holds": rep.holds})
    return columns, rows, {"violations": violations}


_DRIVERS = {
    "two_point": _run_two_point,
    "one_arm": _run_one_arm,
    "pioneers": _run_pioneers,
    "susceptibility": _run_susceptibility,
    "plateau": _run_plateau,
    "triangle": _run_triangle,
    "pt_solve": _run_pt_solve,
    "mass_fit": _run_mass_fit,
    "oracle": _run_oracle,
    "osss_check": _run_osss_check,
}


@dataclass(frozen=True)
class RunResult:
    csv_path: str
    sidecar: str
    n_rows: int
    extras: dict


def run_experiment(config, out, workers=None):
    """Execute one experiment and persist CSV + sidecar."""
    if config.kind not in _DRIVERS:
        raise ConfigError("unknown experiment kind '%s'" % config.kind)
    t0 = time.monotonic()
    columns, rows, extras = _DRIVERS[config.kind](config, workers)
    wall = time.monotonic() - t0
    write_csv(out, columns, rows)
    write_sidecar(out, config, extras, wall)
    return RunResult(str(out), sidecar_path(out), len(rows), extras)


# ---------------------------------------------------------------------------
# plots


def read_csv_columns(path):
    """CSV back as {column: list}, floats where they parse."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        cols = {h: [] for h in header}
        for row in rd:
            for h, v in zip(header, row):
                try:
                    v = float(v)
                except ValueError:
                    pass
                cols[h].append(v)
    return cols


def _log_errorbar(ax, x, y, err, **kw):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    err = np.asarray(err, dtype=float)
    # keep the lower whisker positive so log axes stay drawable
    lower = np.minimum(err, 0.999 * np.maximum(y, 1e-300))
    ax.errorbar(x, y, yerr=[lower, err], fmt="o", ms=3.5, lw=1,
                capsize=2, **kw)


def _ref_slope(ax, x, y, slope, label):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    good = y > 0
    if not good.any():
        return
    x0, y0 = x[good][0], y[good][0]
    xs = np.array([x[good].min(), x[good].max()], dtype=float)
    ax.plot(xs, y0 * (xs / x0) ** slope, "--", color="gray", lw=1,
            label=label)


def emit_plot(csv_path, out, kind=None):
    """Render one experiment CSV to a standalone SVG.

    The kind (and model facts such as the dimension) come from the sidecar
    when present; `kind` overrides.  An empty CSV yields empty axes and a
    warning, not an error.
    """
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "perclab"
    import matplotlib.pyplot as plt

    meta = {}
    try:
        meta = load_sidecar(csv_path)
    except OSError:
        pass
    cfg = meta.get("config", {})
    kind = kind or cfg.get("kind")
    if kind is None:
        raise ConfigError("plot kind unknown: pass --kind or keep the "
                          "sidecar next to the CSV")
    if kind not in _DRIVERS:
        raise ConfigError("unknown experiment kind '%s'" % kind)
    cols = read_csv_columns(csv_path)
    n_rows = len(next(iter(cols.values()))) if cols else 0
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    if n_rows == 0:
        print("warning: %s has no data rows; emitting empty axes"
              % csv_path, file=sys.stderr)
        ax.set_title("%s (no data)" % kind)
    else:
        _PLOTTERS[kind](ax, cols, cfg)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
    ax.set_title(kind.replace("_", " "))
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(out)


def _plot_two_point(ax, cols, cfg):
    d = int(cfg.get("dimension", 2))
    norms = [jbracket([cols["x%d" % i][j] for i in range(d)])
             for j in range(len(cols["value"]))]
    _log_errorbar(ax, norms, cols["value"], cols["sem"])
    _ref_slope(ax, norms, cols["value"], -(d - 2),
               "slope %g" % (-(d - 2)))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("distance")
    ax.set_ylabel("connection probability")


def _plot_one_arm(ax, cols, cfg):
    slope = -2.0 if cfg.get("metric", "extent") == "extent" else -1.0
    _log_errorbar(ax, cols["radius"], cols["value"], cols["sem"])
    _ref_slope(ax, cols["radius"], cols["value"], slope,
               "slope %g" % slope)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("radius")
    ax.set_ylabel("reach probability")


def _plot_pioneers(ax, cols, cfg):
    tail = [i for i, q in enumerate(cols["quantity"]) if q == "tail"]
    if tail:
        ks = [cols["index"][i] for i in tail]
        vals = [cols["value"][i] for i in tail]
        sems = [cols["sem"][i] for i in tail]
        _log_errorbar(ax, ks, vals, sems)
        _ref_slope(ax, ks, vals, -2.0 / 3.0, "slope -2/3")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("count threshold")
        ax.set_ylabel("tail probability")
    else:
        _log_errorbar(ax, cols["index"], cols["value"], cols["sem"])
        ax.set_yscale("log")
        ax.set_xlabel("plane offset")
        ax.set_ylabel("mean crossing bonds")


def _plot_susceptibility(ax, cols, cfg):
    _log_errorbar(ax, cols["p"], cols["value"], cols["sem"])
    ax.set_xlabel("edge density p")
    ax.set_ylabel("mean cluster size")


def _plot_plateau(ax, cols, cfg):
    d = int(cfg.get("dimension", 7))
    _log_errorbar(ax, cols["shell"], cols["shell_mean"], cols["shell_sem"],
                  label="shell mean")
    _log_errorbar(ax, cols["shell"], cols["rep_value"], cols["rep_sem"],
                  label="axis point")
    _ref_slope(ax, cols["shell"], cols["shell_mean"], -(d - 2),
               "slope %g" % (-(d - 2)))
    period = cfg.get("period")
    if period:
        v = float(period) ** d
        ax.axhline(v ** (-2.0 / 3.0), color="seagreen", lw=1, ls=":",
                   label="V^(-2/3)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("torus distance")
    ax.set_ylabel("torus connection probability")


def _plot_triangle(ax, cols, cfg):
    names = ["bubble_origin", "triangle_origin", "triangle_max"]
    vals = [cols[n][0] for n in names]
    ax.bar(range(len(names)), vals, color="steelblue")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(["bubble(0)", "triangle(0)", "triangle max"],
                       fontsize=8)
    ax.set_ylabel("diagram value")


def _plot_pt_solve(ax, cols, cfg):
    ax.errorbar(cols["p_hat"], cols["chi"], yerr=cols["chi_sem"], fmt="o")
    ax.axhline(cols["target"][0], color="gray", ls="--", lw=1,
               label="target")
    ax.set_xlabel("edge density p")
    ax.set_ylabel("torus susceptibility")


def _plot_mass_fit(ax, cols, cfg):
    _log_errorbar(ax, cols["n"], cols["value"], cols["sem"])
    ax.set_yscale("log")
    ax.set_xlabel("distance n")
    ax.set_ylabel("connection probability")


def _plot_oracle(ax, cols, cfg):
    ax.plot(cols["p"], cols["two_point"], "o-", label="two-point")
    ax.plot(cols["p"], cols["cluster_mean"], "s-", label="cluster mean")
    ax.set_xlabel("edge density p")
    ax.set_ylabel("exact value")


def _plot_osss(ax, cols, cfg):
    ax.scatter(cols["rhs"], cols["lhs"], s=8)
    m = max(max(cols["rhs"], default=1.0), max(cols["lhs"], default=1.0),
            1e-12)
    ax.plot([0, m], [0, m], "--", color="gray", lw=1, label="lhs = rhs")
    ax.set_xlabel("rhs")
    ax.set_ylabel("lhs")


_PLOTTERS = {
    "two_point": _plot_two_point,
    "one_arm": _plot_one_arm,
    "pioneers": _plot_pioneers,
    "susceptibility": _plot_susceptibility,
    "plateau": _plot_plateau,
    "triangle": _plot_triangle,
    "pt_solve": _plot_pt_solve,
    "mass_fit": _plot_mass_fit,
    "oracle": _plot_oracle,
    "osss_check": _plot_osss,
}
