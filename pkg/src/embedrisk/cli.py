"""Command-line entry point.

Subcommands: bounds, embed, rc-estimate, experiment, reproduce.  Configs
are JSON documents validated against strict schemas (unknown keys are
rejected); tabular outputs are CSV with a version/config-hash header
comment, summaries are JSON, and every run writes its resolved config next
to its outputs.  All files are written atomically (temp file plus rename).

Exit codes: 0 success, 1 validation error, 2 numerical failure.  Errors go
to stderr as one machine-readable JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time

import numpy as np
import jsonschema

from . import __version__, bounds as bnd
from .graphs import (
    Graph,
    complete_ary_tree,
    edge_labels,
    max_disjoint_star_packing,
    path_graph,
    random_tree,
    read_edge_list,
    star_graph,
)
from .learner import (
    DistributionSpec,
    LossSpec,
    cerm_train,
    empirical_risk,
    load_dataset_csv,
    risks_exact,
    sample_dataset,
)
from .measures import CoupleMeasure
from .rademacher import RcFailure, rc_monte_carlo
from .sarkar import calibrate_tree_embedding
from .spaces import (
    GFunc,
    GeometryError,
    OptimizerError,
    SpaceKind,
    SpaceSpec,
    verify_margin_condition,
)

TRAINING_RADIUS_LIMIT = 15.0  # float64 precision envelope for hyperbolic training

EXAMPLE43 = {
    "radius": 39.51,
    "xi": 0.5,
    "delta": 2.0**-10,
    "arity": 5,
    "levels": 4,
}


class CliValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliValidationError(message)


# ----------------------------------------------------------------------
# Config schemas
# ----------------------------------------------------------------------

_GRAPH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "path": {"type": "string"},
        "generator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["complete_ary_tree", "path", "star", "random_tree"]},
                "arity": {"type": "integer", "minimum": 1},
                "levels": {"type": "integer", "minimum": 1},
                "n": {"type": "integer", "minimum": 1},
                "leaves": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
            "required": ["kind"],
        },
    },
}

_SPACE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["euclidean", "hyperbolic"]},
        "dim": {"type": "integer", "minimum": 1},
        "radius": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind", "dim", "radius"],
}

_GFUNC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "exponent": {"type": "number", "minimum": 1},
        "space_threshold": {"type": "number", "minimum": 0},
    },
    "required": ["exponent", "space_threshold"],
}

_MU_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["uniform", "weights"]},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
    },
    "required": ["kind"],
}

_OPTIMIZER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "restarts": {"type": "integer", "minimum": 1},
        "steps": {"type": "integer", "minimum": 1},
        "step_size": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "polish_steps": {"type": "integer", "minimum": 0},
    },
}

_HINGE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": {"anyOf": [{"type": "number", "minimum": 0}, {"const": "inf"}]},
        "c": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["alpha", "c"],
}

BOUNDS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "graph": _GRAPH_SCHEMA,
        "space": _SPACE_SCHEMA,
        "gfunc": _GFUNC_SCHEMA,
        "mu": _MU_SCHEMA,
        "hinge": _HINGE_SCHEMA,
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "erm_eps": {"type": "number", "minimum": 0},
        "sup_B0": {"type": "number", "exclusiveMinimum": 0},
        "lambda_mode": {"enum": ["worst_metric", "euclidean_lemma", "numeric_estimate"]},
        "s_grid": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
        "crossover": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xi": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "v_min": {"type": "number", "minimum": 0},
            },
            "required": ["xi", "v_min"],
        },
        "old_bound": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lip_g2": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
    "required": ["graph", "space", "gfunc", "hinge", "delta", "s_grid"],
}

EMBED_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "graph": _GRAPH_SCHEMA,
        "space": _SPACE_SCHEMA,
        "gfunc": _GFUNC_SCHEMA,
        "xi": {"type": "number", "minimum": 0, "maximum": 1},
        "sample_size": {"type": "integer", "minimum": 1},
        "dataset_path": {"type": "string"},
        "optimizer": _OPTIMIZER_SCHEMA,
        "loss": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"clip_m": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
    "required": ["graph", "space", "gfunc"],
}

RC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "graph": _GRAPH_SCHEMA,
        "space": _SPACE_SCHEMA,
        "gfunc": _GFUNC_SCHEMA,
        "xi": {"type": "number", "minimum": 0, "maximum": 1},
        "sample_size": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 30},
        "optimizer": _OPTIMIZER_SCHEMA,
        "loss": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"clip_m": {"type": "number", "exclusiveMinimum": 0}},
        },
        "old_bound": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lip_g2": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
    "required": ["graph", "space", "gfunc", "xi", "sample_size", "trials"],
}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "graph": _GRAPH_SCHEMA,
        "calibrate": {"type": "boolean"},
        "space": _SPACE_SCHEMA,
        "gfunc": _GFUNC_SCHEMA,
        "xi_grid": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "minItems": 1,
        },
        "s_grid": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1, "maximum": 10000},
            "minItems": 1,
        },
        "trials": {"type": "integer", "minimum": 1, "maximum": 200},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "lambda_mode": {"enum": ["worst_metric", "euclidean_lemma", "numeric_estimate"]},
        "optimizer": _OPTIMIZER_SCHEMA,
    },
    "required": ["graph", "xi_grid", "s_grid", "trials", "delta"],
}


# ----------------------------------------------------------------------
# Builders and output plumbing
# ----------------------------------------------------------------------


def _build_graph(cfg: dict, seed: int) -> Graph:
    if ("path" in cfg) == ("generator" in cfg):
        raise CliValidationError("graph needs exactly one of 'path' or 'generator'")
    if "path" in cfg:
        return read_edge_list(cfg["path"])
    gen = cfg["generator"]
    kind = gen["kind"]
    if kind == "complete_ary_tree":
        return complete_ary_tree(gen["arity"], gen["levels"])
    if kind == "path":
        return path_graph(gen["n"])
    if kind == "star":
        return star_graph(gen["leaves"])
    if kind == "random_tree":
        rng = np.random.default_rng(gen.get("seed", seed))
        return random_tree(gen["n"], rng)
    raise CliValidationError(f"unknown generator {kind}")


def _build_space(cfg: dict) -> SpaceSpec:
    return SpaceSpec(SpaceKind(cfg["kind"]), cfg["dim"], cfg["radius"])


def _build_gfunc(cfg: dict) -> GFunc:
    return GFunc(cfg["exponent"], cfg["space_threshold"])


def _build_mu(cfg: dict | None, n_couples: int) -> CoupleMeasure:
    if cfg is None or cfg["kind"] == "uniform":
        return CoupleMeasure.uniform(n_couples)
    w = np.asarray(cfg["weights"], dtype=float)
    if w.shape[0] != n_couples:
        raise CliValidationError(f"weights length {w.shape[0]} != couple count {n_couples}")
    return CoupleMeasure(w / w.sum())


def _hinge_from_cfg(cfg: dict):
    alpha = math.inf if cfg["alpha"] == "inf" else float(cfg["alpha"])
    return bnd.hinge_params(alpha, float(cfg["c"]))


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header_comment: str, columns: list[str], rows: list[list]) -> str:
    lines = [header_comment, ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _header(cfg: dict) -> str:
    return f"# embedrisk {__version__} config_sha256={_config_hash(cfg)}"


def _emit(out_dir: str, name: str, text: str) -> str:
    path = os.path.join(out_dir, name)
    _write_atomic(path, text)
    return path


def _emit_json(out_dir: str, name: str, obj) -> str:
    return _emit(out_dir, name, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_config(path: str, schema: dict) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliValidationError(f"cannot read config {path}: {exc}")
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        raise CliValidationError(f"config invalid: {exc.message}")
    return cfg


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def _cmd_bounds(args) -> int:
    cfg = _load_config(args.config, BOUNDS_SCHEMA)
    graph = _build_graph(cfg["graph"], args.seed)
    space = _build_space(cfg["space"])
    gfunc = _build_gfunc(cfg["gfunc"])
    mu = _build_mu(cfg.get("mu"), graph.couple_count)
    hp = _hinge_from_cfg(cfg["hinge"])
    lam_sq = bnd.lambda_sq(
        cfg.get("lambda_mode", "worst_metric"), space, gfunc, graph.vertex_count, seed=args.seed
    )
    inputs = hp.to_inputs(
        lam_sq,
        cfg["delta"],
        erm_eps=cfg.get("erm_eps", 0.0),
        sup_B0=cfg.get("sup_B0"),
    )
    old_cfg = cfg.get("old_bound", {})
    cross = cfg.get("crossover")
    threshold = ""
    if cross is not None:
        th = bnd.crossover_thresholds(
            space.radius,
            gfunc.exponent,
            graph.couple_count,
            cross["xi"],
            cross["v_min"],
            cfg["delta"],
        )
        threshold = th.threshold.to_float()
    rows = []
    for s in cfg["s_grid"]:
        report = bnd.bound_local(float(s), inputs, mu)
        old = bnd.old_bound_rc(
            space.kind, space.radius, graph.vertex_count, mu, float(s), old_cfg.get("lip_g2", 1.0)
        )
        rows.append(
            [
                s,
                report.r_global,
                report.rates[mu.n_couples],
                bnd.rate_full_closed(float(s), inputs, mu.n_couples),
                report.minor_a,
                report.minor_b,
                report.total_local,
                report.total_global,
                old.value,
                threshold,
            ]
        )
    columns = [
        "S",
        "r0",
        "r_full_solved",
        "r_full_closed",
        "minor_a",
        "minor_b",
        "total_local",
        "total_global",
        "old_bound",
        "thresholds",
    ]
    _emit(args.out, "bounds.csv", _csv_text(_header(cfg), columns, rows))
    _emit_json(args.out, "resolved_config.json", _resolved(cfg, args))
    return 0


def _resolved(cfg: dict, args) -> dict:
    return {
        "config": cfg,
        "seed": args.seed,
        "threads": args.threads,
        "tool_version": __version__,
        "config_sha256": _config_hash(cfg),
    }


def _check_training_envelope(space: SpaceSpec) -> None:
    if space.kind is SpaceKind.HYPERBOLIC and space.radius > TRAINING_RADIUS_LIMIT:
        raise CliValidationError(
            f"hyperbolic training radius {space.radius} exceeds the float64 "
            f"precision envelope {TRAINING_RADIUS_LIMIT}"
        )


def _cmd_embed(args) -> int:
    cfg = _load_config(args.config, EMBED_SCHEMA)
    graph = _build_graph(cfg["graph"], args.seed)
    space = _build_space(cfg["space"])
    _check_training_envelope(space)
    gfunc = _build_gfunc(cfg["gfunc"])
    loss = LossSpec(clip_m=cfg.get("loss", {}).get("clip_m", 1.0))
    if ("sample_size" in cfg) == ("dataset_path" in cfg):
        raise CliValidationError("need exactly one of sample_size or dataset_path")
    if "dataset_path" in cfg:
        data = load_dataset_csv(cfg["dataset_path"])
        if data.n_entities != graph.vertex_count:
            raise CliValidationError("dataset entity count does not match the graph")
    else:
        dist = DistributionSpec.from_margin(graph, cfg.get("xi", 1.0))
        data = sample_dataset(dist, cfg["sample_size"], args.seed)
    opt = cfg.get("optimizer", {})
    t0 = time.perf_counter()
    result = cerm_train(
        space,
        gfunc,
        data,
        loss=loss,
        restarts=opt.get("restarts", 8),
        steps=opt.get("steps", 300),
        step_size=opt.get("step_size"),
        seed=args.seed,
        polish_steps=opt.get("polish_steps", 200),
    )
    wall = time.perf_counter() - t0
    dist_eval = DistributionSpec.from_margin(graph, cfg.get("xi", 1.0))
    risks = risks_exact(result.embedding, gfunc, dist_eval, loss)
    margin = verify_margin_condition(result.embedding, gfunc, edge_labels(graph))
    pts = result.embedding.points
    emb_rows = [[i] + [float(v) for v in row] for i, row in enumerate(pts)]
    emb_cols = ["entity"] + [f"coord{k}" for k in range(pts.shape[1])]
    _emit(args.out, "embedding.csv", _csv_text(_header(cfg), emb_cols, emb_rows))
    report = {
        "risks": {
            "expected": risks.expected,
            "clipped_expected": risks.clipped_expected,
            "bayes": risks.bayes,
            "excess": risks.excess,
        },
        "empirical_risk_clipped": empirical_risk(result.embedding, gfunc, data, loss),
        "eps_hat": result.eps_hat,
        "violations": margin.count,
        "wall_time_s": wall,
        "sample_size": data.size,
        "tool_version": __version__,
    }
    _emit_json(args.out, "run_report.json", report)
    _emit_json(args.out, "resolved_config.json", _resolved(cfg, args))
    return 0


def _cmd_rc_estimate(args) -> int:
    cfg = _load_config(args.config, RC_SCHEMA)
    graph = _build_graph(cfg["graph"], args.seed)
    space = _build_space(cfg["space"])
    _check_training_envelope(space)
    gfunc = _build_gfunc(cfg["gfunc"])
    loss = LossSpec(clip_m=cfg.get("loss", {}).get("clip_m", 1.0))
    dist = DistributionSpec.from_margin(graph, cfg["xi"])
    opt = cfg.get("optimizer", {})
    est = rc_monte_carlo(
        dist,
        space,
        gfunc,
        loss,
        cfg["sample_size"],
        cfg["trials"],
        restarts=opt.get("restarts", 8),
        steps=opt.get("steps", 150),
        seed=args.seed,
    )
    lam_sq = bnd.lambda_sq("worst_metric", space, gfunc, graph.vertex_count)
    theorem_bound = 2.0 * math.sqrt(lam_sq) * math.sqrt(2.0 / cfg["sample_size"])
    old = bnd.old_bound_rc(
        space.kind,
        space.radius,
        graph.vertex_count,
        dist.mu,
        float(cfg["sample_size"]),
        cfg.get("old_bound", {}).get("lip_g2", 1.0),
    )
    rows = [[k, v] for k, v in enumerate(est.values)]
    _emit(args.out, "trials.csv", _csv_text(_header(cfg), ["trial", "sup_value"], rows))
    summary = {
        "mean": est.mean,
        "std_err": est.std_err,
        "trials": est.trials,
        "dropped": est.dropped,
        "sup_method": est.sup_method,
        "theorem_bound": theorem_bound,
        "old_bound": old.value,
        "estimate_below_theorem_bound": est.mean <= theorem_bound + 3 * est.std_err,
        "estimate_below_old_bound": est.mean <= old.value + 3 * est.std_err,
        "note": "inner sup is under-approximated; the estimate is a lower estimate",
    }
    _emit_json(args.out, "summary.json", summary)
    _emit_json(args.out, "resolved_config.json", _resolved(cfg, args))
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load_config(args.config, EXPERIMENT_SCHEMA)
    graph = _build_graph(cfg["graph"], args.seed)
    if graph.vertex_count > 20:
        raise CliValidationError("experiment is desk-scale: at most 20 vertices")
    calibrate = cfg.get("calibrate", True)
    if calibrate:
        if not graph.is_tree():
            raise CliValidationError("calibrated experiments need a tree graph")
        cal = calibrate_tree_embedding(graph)
        space = SpaceSpec(SpaceKind.HYPERBOLIC, 2, cal.radius * 1.0000001)
        gfunc = cal.gfunc
    else:
        if "space" not in cfg or "gfunc" not in cfg:
            raise CliValidationError("calibrate=false needs explicit space and gfunc")
        space = _build_space(cfg["space"])
        gfunc = _build_gfunc(cfg["gfunc"])
    _check_training_envelope(space)
    loss = LossSpec()
    opt = cfg.get("optimizer", {})
    delta = cfg["delta"]
    lam_sq = bnd.lambda_sq(
        cfg.get("lambda_mode", "worst_metric"), space, gfunc, graph.vertex_count, seed=args.seed
    )
    rows = []
    summary_rows = []
    master = np.random.SeedSequence(args.seed)
    for xi in cfg["xi_grid"]:
        dist = DistributionSpec.from_margin(graph, xi)
        hp = bnd.hinge_params(math.inf, 3.0 / xi)
        for s in cfg["s_grid"]:
            excesses = []
            eps_hats = []
            for trial, child in enumerate(master.spawn(cfg["trials"])):
                trial_seed = int(child.generate_state(1)[0])
                data = sample_dataset(dist, int(s), trial_seed)
                result = cerm_train(
                    space,
                    gfunc,
                    data,
                    loss=loss,
                    restarts=opt.get("restarts", 4),
                    steps=opt.get("steps", 200),
                    step_size=opt.get("step_size"),
                    seed=trial_seed,
                    polish_steps=opt.get("polish_steps", 100),
                )
                rr = risks_exact(result.embedding, gfunc, dist, loss)
                excesses.append(rr.excess)
                eps_hats.append(result.eps_hat)
                rows.append([xi, s, trial, rr.excess, result.eps_hat])
            inputs = hp.to_inputs(lam_sq, delta, erm_eps=max(eps_hats))
            report = bnd.bound_local(float(s), inputs, dist.mu)
            quantile = float(np.quantile(excesses, 1.0 - delta))
            summary_rows.append(
                [
                    xi,
                    s,
                    quantile,
                    report.total_local,
                    max(eps_hats),
                    bool(quantile <= report.total_local),
                ]
            )
    _emit(
        args.out,
        "sweep.csv",
        _csv_text(_header(cfg), ["xi", "S", "trial", "excess", "eps_hat"], rows),
    )
    _emit(
        args.out,
        "summary.csv",
        _csv_text(
            _header(cfg),
            ["xi", "S", "excess_quantile", "bound_local", "max_eps_hat", "bound_holds"],
            summary_rows,
        ),
    )
    _emit_json(args.out, "resolved_config.json", _resolved(cfg, args))
    return 0


def reproduce_example43(v_min: int | None = None) -> dict:
    """Crossover thresholds for the 156-vertex 5-ary tree comparison, with
    the published calibration v_min = |V| = 156 and the star-packing lower
    bound as a second, labeled computation."""
    p = EXAMPLE43
    tree = complete_ary_tree(p["arity"], p["levels"])
    n_couples = tree.couple_count
    packing = max_disjoint_star_packing(tree, 6)

    def block(vm: float) -> dict:
        out = {}
        for label, q, drop in (
            ("q1", 1.0, False),
            ("q2_printed", 2.0, False),
            ("q2_drop_leading_q", 2.0, True),
        ):
            th = bnd.crossover_thresholds(
                p["radius"], q, n_couples, p["xi"], vm, p["delta"], drop_leading_q=drop
            )
            out[label] = th.as_floats()
        return out

    calibrated_vmin = tree.vertex_count if v_min is None else v_min
    mu = CoupleMeasure.uniform(n_couples)
    old = bnd.old_bound_rc("hyperbolic", p["radius"], tree.vertex_count, mu, 1.0)
    old_s = bnd.spectral_crossover_size(
        p["radius"], tree.vertex_count, mu, p["xi"], calibrated_vmin, p["delta"]
    )
    return {
        "config": {
            "radius": p["radius"],
            "xi": p["xi"],
            "delta": p["delta"],
            "arity": p["arity"],
            "levels": p["levels"],
            "n_vertices": tree.vertex_count,
            "n_couples": n_couples,
        },
        "calibrated": {"v_min": calibrated_vmin, **block(calibrated_vmin)},
        "star_packing": {
            "v_min": packing.count,
            "exact": packing.exact,
            **block(packing.count),
        },
        "old_bound": {
            "e_var": old.e_var,
            "lip_g2": 1.0,
            "crossover_S": old_s.to_float(),
            "log10_crossover_S": old_s.log10(),
        },
        "tool_version": __version__,
    }


def reproduce_remark62d(v_min: int | None = None) -> dict:
    """Old-bound crossover for the same instance, compared to the new one."""
    full = reproduce_example43(v_min)
    new_th = full["calibrated"]["q1"]["threshold"]
    return {
        "config": full["config"],
        "old_bound": full["old_bound"],
        "new_threshold_q1": new_th,
        "log10_ratio_old_over_new": full["old_bound"]["log10_crossover_S"]
        - math.log10(new_th),
        "tool_version": __version__,
    }


def _cmd_reproduce(args) -> int:
    if args.target == "example43":
        payload = reproduce_example43(args.vmin)
        name = "example43.json"
    else:
        payload = reproduce_remark62d(args.vmin)
        name = "remark62d.json"
    _emit_json(args.out, name, payload)
    _emit_json(
        args.out,
        "resolved_config.json",
        {"target": args.target, "vmin": args.vmin, "seed": args.seed, "tool_version": __version__},
    )
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="embedrisk", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--config", type=str, help="JSON config path")
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--out", type=str, default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="recorded; math is vectorized")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (
        ("bounds", _cmd_bounds, True),
        ("embed", _cmd_embed, True),
        ("rc-estimate", _cmd_rc_estimate, True),
        ("experiment", _cmd_experiment, True),
    ):
        p = sub.add_parser(name, parents=[common])
        p.set_defaults(fn=fn, needs_config=needs_config)
    rep = sub.add_parser("reproduce", parents=[common])
    rep.add_argument("target", choices=["example43", "remark62d"])
    rep.add_argument("--vmin", type=int, default=None, help="override the v_min calibration")
    rep.set_defaults(fn=_cmd_reproduce, needs_config=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _build_parser().parse_args(argv)
        if args.needs_config and not args.config:
            raise CliValidationError("--config is required for this subcommand")
        return args.fn(args)
    except CliValidationError as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1
    except (
        OptimizerError,
        RcFailure,
        GeometryError,
        ArithmeticError,
        FloatingPointError,
    ) as exc:
        print(
            json.dumps({"error": "numerical", "message": f"{type(exc).__name__}: {exc}"}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
