"""Command-line entry point.

Subcommands: synth-data, train-embed, train-gen, synth-features, eval,
gradcheck, report. Configuration is a flat `key = value` file with dotted
keys and `#` comments; command-line flags override file values. Every run
writes a `manifest.txt` with the fully resolved configuration, and rerunning
a subcommand from its manifest reproduces the outputs bit for bit.

Exit codes: 0 success, 1 validation/usage error, 2 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields

from . import __version__
from . import embedding as emb
from . import generation as gn
from . import mapper as mp
from .data import SyntheticSpec, load_dataset, make_synthetic, save_dataset
from .errors import ConfigError, ContractError, LoadError, NumericError, ShapeError, TrainingError
from .evaluation import (
    METRICS_CSV_HEADER,
    FinalClassifierConfig,
    evaluate,
    format_metrics_table,
    load_softmax,
    save_softmax,
)
from .serialize import config_hash

ABLATIONS = ("no-mi", "no-center", "minimax")

# desk-scale defaults; --paper-scale restores the full-size dimensions
PAPER_SCALE = {
    "embed.batch_size": 512,
    "embed.hidden": 2048,
    "gen.batch_size": 512,
    "gen.d_z": 1024,
    "gen.gen_hidden": 4096,
    "gen.mapper_hidden": 2048,
    "gen.critic_hidden": 1024,
}

# the default synthetic benchmark makes class signal subtle against a strong
# shared background, so discarding redundancy is genuinely load-bearing
BENCHMARK_DEFAULTS = {"signal_scale": 0.35}


def _spec_defaults():
    spec = SyntheticSpec(**BENCHMARK_DEFAULTS)
    return {f"data.{f.name}": getattr(spec, f.name) for f in fields(SyntheticSpec)
            if f.name != "seed"}


def _embed_defaults():
    config = emb.EmbedConfig()
    skip = {"seed"}
    return {f"embed.{f.name}": getattr(config, f.name) for f in fields(emb.EmbedConfig)
            if f.name not in skip}


def _gen_defaults():
    config = gn.GenConfig()
    skip = {"seed"}
    return {f"gen.{f.name}": getattr(config, f.name) for f in fields(gn.GenConfig)
            if f.name not in skip}


def _final_defaults():
    config = FinalClassifierConfig()
    return {f"final.{f.name}": getattr(config, f.name) for f in fields(FinalClassifierConfig)}


def default_config():
    table = {
        "run_id": "",
        "seed": 0,
        "data": "",
        "eval.mode": "generation",
        "paths.generator": "",
        "paths.mapper": "",
        "paths.model": "",
    }
    table.update(_spec_defaults())
    table.update(_embed_defaults())
    table.update(_gen_defaults())
    table.update(_final_defaults())
    return table


def _parse_value(key, raw, reference):
    if isinstance(reference, bool):
        if raw in ("true", "True", "1"):
            return True
        if raw in ("false", "False", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(reference, int) and not isinstance(reference, bool):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(reference, float):
        if raw in ("inf", "Inf", "infinity"):
            return math.inf
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def parse_config_file(path, table):
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for i, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "cmd":
            continue  # manifests record their subcommand; informational here
        if key not in table:
            raise ConfigError(f"{path}:{i}: unknown key {key!r}")
        table[key] = _parse_value(key, raw, table[key])
    return table


def apply_overrides(table, pairs):
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = (part.strip() for part in pair.split("=", 1))
        if key not in table:
            raise ConfigError(f"unknown key {key!r}")
        table[key] = _parse_value(key, raw, table[key])
    return table


def apply_ablation(table, ablate, cmd):
    if ablate is None:
        return table
    if ablate == "no-mi":
        if cmd == "train-embed":
            table["embed.bound"] = math.inf
            table["embed.variance_mode"] = "zero"
        else:
            table["gen.mi_constraint"] = False
    elif ablate == "no-center":
        if cmd != "train-gen":
            raise ConfigError("--ablate no-center applies to train-gen only")
        table["gen.center_enabled"] = False
    elif ablate == "minimax":
        if cmd != "train-gen":
            raise ConfigError("--ablate minimax applies to train-gen only")
        table["gen.mode"] = "minimax"
    else:
        raise ConfigError(f"unknown ablation {ablate!r}")
    return table


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.9g}"
    return str(value)


def write_manifest(out_dir, cmd, table):
    lines = [f"cmd = {cmd}"]
    for key in sorted(table):
        lines.append(f"{key} = {_format_value(table[key])}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, "manifest.txt"), "w") as f:
        f.write(text)
    return config_hash(text)


def spec_from_table(table, seed):
    kwargs = {f.name: table[f"data.{f.name}"] for f in fields(SyntheticSpec)
              if f.name != "seed"}
    return SyntheticSpec(seed=seed, **kwargs)


def embed_config_from_table(table, seed):
    kwargs = {f.name: table[f"embed.{f.name}"] for f in fields(emb.EmbedConfig)
              if f.name != "seed"}
    return emb.EmbedConfig(seed=seed, **kwargs)


def gen_config_from_table(table, seed):
    kwargs = {f.name: table[f"gen.{f.name}"] for f in fields(gn.GenConfig)
              if f.name != "seed"}
    return gn.GenConfig(seed=seed, **kwargs)


def final_config_from_table(table):
    return FinalClassifierConfig(**{f.name: table[f"final.{f.name}"]
                                    for f in fields(FinalClassifierConfig)})


def write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_format_value(row[k]) for k in header) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth_data(args):
    table = resolve(args, "synth-data")
    out = ensure_out(args)
    spec = spec_from_table(table, table["seed"])
    bundle = make_synthetic(spec)
    save_dataset(bundle, out)
    write_manifest(out, "synth-data", table)
    print(f"wrote synthetic dataset ({bundle.n_examples} examples, "
          f"{bundle.n_classes} classes) to {out}")
    return 0


def cmd_train_embed(args):
    table = resolve(args, "train-embed")
    out = ensure_out(args)
    bundle = load_dataset(require_data(table))
    config = embed_config_from_table(table, table["seed"])
    params, log = emb.train_embed(bundle, config)
    run_id = table["run_id"] or f"embed-s{table['seed']}"
    digest = write_manifest(out, "train-embed", table)
    mp.save_mapper(os.path.join(out, "mapper.ckpt"), params,
                   meta={"seed": table["seed"], "config_hash": digest})
    write_csv(os.path.join(out, "train_log.csv"), emb.EMBED_LOG_COLUMNS, log)
    metrics = evaluate(bundle, params, model=None, mode="embedding")
    _write_metrics(out, run_id, "embedding", metrics, table["seed"])
    print(f"{run_id}: U={metrics.U:.2f} S={metrics.S:.2f} H={metrics.H:.2f}")
    return 0


def cmd_train_gen(args):
    table = resolve(args, "train-gen")
    out = ensure_out(args)
    bundle = load_dataset(require_data(table))
    config = gen_config_from_table(table, table["seed"])
    final_config = final_config_from_table(table)
    result, model, metrics = gn.run_generation_pipeline(bundle, config, final_config)
    run_id = table["run_id"] or f"gen-s{table['seed']}"
    digest = write_manifest(out, "train-gen", table)
    meta = {"seed": table["seed"], "config_hash": digest}
    gn.save_generator(os.path.join(out, "generator.ckpt"), result.generator, meta)
    if result.mapper is not None:
        mp.save_mapper(os.path.join(out, "mapper.ckpt"), result.mapper, meta)
    gn.save_centers(os.path.join(out, "centers.ckpt"), result.centers, meta)
    save_softmax(os.path.join(out, "final_softmax.ckpt"), model, meta)
    write_csv(os.path.join(out, "train_log.csv"), gn.GEN_LOG_COLUMNS, result.log)
    _write_metrics(out, run_id, "generation", metrics, table["seed"])
    print(f"{run_id}: U={metrics.U:.2f} S={metrics.S:.2f} H={metrics.H:.2f}")
    return 0


def cmd_synth_features(args):
    table = resolve(args, "synth-features")
    out = ensure_out(args)
    bundle = load_dataset(require_data(table))
    generator, _ = gn.load_generator(require_path(table["paths.generator"], "--generator"))
    mapper_params = None
    if table["paths.mapper"]:
        mapper_params, _ = mp.load_mapper(table["paths.mapper"])
    counts = {int(c): table["gen.syn_per_class"] for c in bundle.unseen_classes}
    z, labels = gn.synthesize_unseen(generator, mapper_params, bundle.attributes, counts,
                                     seed=table["seed"],
                                     use_sampled_z=table["gen.use_sampled_z"])
    write_manifest(out, "synth-features", table)
    with open(os.path.join(out, "synthetic_features.csv"), "w") as f:
        for row in z:
            f.write(",".join("%.9g" % v for v in row) + "\n")
    with open(os.path.join(out, "synthetic_labels.csv"), "w") as f:
        for y in labels:
            f.write(f"{int(y)}\n")
    print(f"wrote {z.shape[0]} synthetic features to {out}")
    return 0


def cmd_eval(args):
    table = resolve(args, "eval")
    out = ensure_out(args)
    bundle = load_dataset(require_data(table))
    mapper_params, _ = mp.load_mapper(require_path(table["paths.mapper"], "--mapper"))
    mode = table["eval.mode"]
    if mode == "generation":
        model, _ = load_softmax(require_path(table["paths.model"], "--model"))
        metrics = evaluate(bundle, mapper_params, model, mode="generation")
    elif mode == "embedding":
        metrics = evaluate(bundle, mapper_params, model=None, mode="embedding")
    else:
        raise ConfigError(f"eval.mode must be generation or embedding, got {mode!r}")
    run_id = table["run_id"] or f"eval-s{table['seed']}"
    write_manifest(out, "eval", table)
    _write_metrics(out, run_id, mode, metrics, table["seed"])
    print(f"{run_id}: U={metrics.U:.2f} S={metrics.S:.2f} H={metrics.H:.2f}")
    return 0


def cmd_gradcheck(args):
    from .gradcheck import run_gradient_suite

    table = resolve(args, "gradcheck")
    out = ensure_out(args)
    results = run_gradient_suite(seeds=range(3), threshold=1e-3)
    write_manifest(out, "gradcheck", table)
    rows = [{"loss": name, "max_rel_error": err, "threshold": 1e-3,
             "status": "pass" if ok else "FAIL"}
            for name, err, ok in results]
    write_csv(os.path.join(out, "gradcheck.csv"),
              ("loss", "max_rel_error", "threshold", "status"), rows)
    all_ok = True
    for name, err, ok in results:
        print(f"{name:<28} max rel err {err:.3e}  {'pass' if ok else 'FAIL'}")
        all_ok = all_ok and ok
    return 0 if all_ok else 2


def cmd_report(args):
    table = resolve(args, "report")
    out = ensure_out(args)
    rows = []
    for run_dir in args.runs or []:
        path = os.path.join(run_dir, "metrics.csv")
        if not os.path.isfile(path):
            raise LoadError(f"{path}: missing metrics.csv")
        with open(path) as f:
            lines = [ln.strip() for ln in f if ln.strip()]
        if not lines or lines[0] != METRICS_CSV_HEADER:
            raise LoadError(f"{path}: unexpected header")
        rows.extend(lines[1:])
    write_manifest(out, "report", table)
    with open(os.path.join(out, "report.csv"), "w") as f:
        f.write(METRICS_CSV_HEADER + "\n")
        for row in rows:
            f.write(row + "\n")
    from .evaluation import GzslMetrics

    parsed = []
    for row in rows:
        run_id, mode, u, s, h, seed = row.split(",")
        parsed.append((run_id, mode, GzslMetrics(float(u), float(s), float(h)), seed))
    text = format_metrics_table(parsed)
    with open(os.path.join(out, "table.txt"), "w") as f:
        f.write(text)
    print(text, end="")
    return 0


def _write_metrics(out, run_id, mode, metrics, seed):
    with open(os.path.join(out, "metrics.csv"), "w") as f:
        f.write(METRICS_CSV_HEADER + "\n")
        f.write(metrics.csv_row(run_id, mode, seed) + "\n")


# ---------------------------------------------------------------------------
# plumbing


def resolve(args, cmd):
    """defaults -> --paper-scale -> config file -> --set/flag overrides."""
    table = default_config()
    if getattr(args, "paper_scale", False):
        table.update(PAPER_SCALE)
    if args.config:
        parse_config_file(args.config, table)
    apply_ablation(table, getattr(args, "ablate", None), cmd)
    apply_overrides(table, getattr(args, "set", None))
    if args.seed is not None:
        table["seed"] = args.seed
    if getattr(args, "data", None):
        table["data"] = args.data
    if getattr(args, "run_id", None):
        table["run_id"] = args.run_id
    for flag, key in (("generator", "paths.generator"), ("mapper", "paths.mapper"),
                      ("model", "paths.model")):
        if getattr(args, flag, None):
            table[key] = getattr(args, flag)
    return table


def ensure_out(args):
    if not args.out:
        raise ConfigError("--out is required")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def require_data(table):
    if not table["data"]:
        raise ConfigError("a dataset directory is required (--data or `data = ...`)")
    return table["data"]


def require_path(value, flag):
    if not value:
        raise ConfigError(f"{flag} is required")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="ibgzsl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd")

    def common(p, needs_data=False):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key")
        p.add_argument("--run-id", dest="run_id")
        if needs_data:
            p.add_argument("--data", help="dataset directory")

    p = sub.add_parser("synth-data", help="generate the synthetic benchmark")
    common(p)

    p = sub.add_parser("train-embed", help="train the embedding framework")
    common(p, needs_data=True)
    p.add_argument("--ablate", choices=ABLATIONS)
    p.add_argument("--paper-scale", action="store_true")

    p = sub.add_parser("train-gen", help="train the feature-generation framework")
    common(p, needs_data=True)
    p.add_argument("--ablate", choices=ABLATIONS)
    p.add_argument("--paper-scale", action="store_true")

    p = sub.add_parser("synth-features", help="synthesize unseen-class features")
    common(p, needs_data=True)
    p.add_argument("--generator", help="generator checkpoint")
    p.add_argument("--mapper", help="mapper checkpoint (omit for raw features)")

    p = sub.add_parser("eval", help="evaluate a trained model")
    common(p, needs_data=True)
    p.add_argument("--mapper", help="mapper checkpoint")
    p.add_argument("--model", help="final softmax checkpoint (generation mode)")

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    common(p)

    p = sub.add_parser("report", help="aggregate metrics.csv files into one table")
    common(p)
    p.add_argument("--runs", nargs="+", help="run directories to aggregate")
    return parser


HANDLERS = {
    "synth-data": cmd_synth_data,
    "train-embed": cmd_train_embed,
    "train-gen": cmd_train_gen,
    "synth-features": cmd_synth_features,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "report": cmd_report,
}


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.cmd:
            parser.print_usage(sys.stderr)
            return 1
        return HANDLERS[args.cmd](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (LoadError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, ShapeError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
