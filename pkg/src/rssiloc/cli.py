"""Command-line entry point: simulate | preprocess | train | eval | compare.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from rssiloc import TARGET_NODE
from rssiloc.config import Config, ConfigError, describe
from rssiloc.evaluate import baseline_bins, evaluate, format_table, write_metrics_csv
from rssiloc.models import (
    ARCHITECTURES,
    build_for,
    load_model,
    predict,
    save_model,
    train,
    write_trace,
)
from rssiloc.netsim import ParseError, read_dataset, run_acquisition, write_dataset
from rssiloc.pipeline import Preprocessed, load_tensors, preprocess, save_tensors
from rssiloc.scenario import make_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

SIM_KEYS = ("channel.", "node", "arena.", "trajectory.", "sim.", "paths.data")
PRE_KEYS = ("bins.", "pre.", "split.", "sim.environments", "paths.")
TRAIN_KEYS = PRE_KEYS + ("train.",)
EVAL_KEYS = PRE_KEYS
COMPARE_KEYS = TRAIN_KEYS + ("channel.", "node")

TENSORS_FILE = "tensors.npz"


def parse_overrides(tokens: list[str]) -> dict[str, str]:
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for {tok}")
            key, value = tok[2:], tokens[i + 1]
            i += 2
        out[key] = value
    return out


# commands ----------------------------------------------------------------------

def cmd_simulate(cfg: Config) -> None:
    arena = cfg.arena()
    traj = make_trajectory(arena, cfg["trajectory.kind"], cfg["trajectory.duration_s"],
                           seed=cfg["trajectory.seed"], **cfg.trajectory_kwargs())
    for env in range(cfg["sim.environments"]):
        # output paths stay out of meta.txt so datasets are location independent
        meta = {k: v for k, v in cfg.dump(SIM_KEYS[:-1]).items()
                if not (k.startswith("node") and v == "auto")}
        meta["env"] = str(env)
        ds = run_acquisition(arena, traj, cfg.channel_params(env), cfg["sim.loss_prob"],
                             seed=cfg["sim.seed"] + env, truth_noise_mm=cfg["sim.truth_noise_mm"],
                             meta=meta)
        out = write_dataset(ds, cfg.env_dir(env))
        counts = Counter(r.node_id for r in ds.records)
        per_node = sorted(set(counts.values()))
        summary = (f"{per_node[0]} records/node" if len(per_node) == 1
                   else ", ".join(f"node{n}: {counts[n]}" for n in sorted(counts)) + " records")
        print(f"env{env}: {len(traj)} ticks, {summary} -> {out}")


def _preprocess(cfg: Config) -> Preprocessed:
    ds = read_dataset(cfg.env_dir(cfg["pre.env"]))
    return preprocess(ds, cfg.binning(), W=cfg["pre.window"], stride=cfg["pre.stride"],
                      median_window=cfg["pre.median_window"], filter_rssi=cfg["pre.filter_rssi"],
                      filter_distance=cfg["pre.filter_distance"], train_frac=cfg["split.train"],
                      val_frac=cfg["split.val"])


def cmd_preprocess(cfg: Config) -> Preprocessed:
    pre = _preprocess(cfg)
    path = cfg.out_dir() / TENSORS_FILE
    save_tensors(path, pre)
    print(f"windows: train {len(pre.train)}, val {len(pre.val)}, test {len(pre.test)} -> {path}")
    return pre


def load_or_preprocess(cfg: Config) -> Preprocessed:
    path = cfg.out_dir() / TENSORS_FILE
    if path.exists():
        pre = load_tensors(path)
        if pre.spec != cfg.binning() or int(pre.meta["window"]) != cfg["pre.window"]:
            raise ConfigError(f"{path} was built with different binning/window; rerun preprocess")
        return pre
    return cmd_preprocess(cfg)


def _train_one(cfg: Config, arch: str, pre: Preprocessed):
    hp = cfg.hyperparams()
    model = build_for(arch, hp, n_bins=pre.spec.n_bins, n_nodes=pre.train.inputs.shape[2])
    result = train(model, pre.train, pre.val, hp)
    out = cfg.out_dir() / arch
    save_model(model, out / "checkpoint.bin")
    write_trace(out / "trace.csv", result.trace)
    return model, result


def cmd_train(cfg: Config, arch: str) -> None:
    pre = load_or_preprocess(cfg)
    _, result = _train_one(cfg, arch, pre)
    it, loss, acc = result.trace[-1]
    print(f"{arch}: iteration {it}, train loss {loss:.4f}, val accuracy {100 * acc:.2f}% "
          f"-> {cfg.out_dir() / arch}")


def _model_report(model, pre: Preprocessed, name: str):
    idx, dist = predict(model, pre.test.inputs, pre.spec)
    return evaluate(pre.test.labels, idx, pre.spec, name=name,
                    true_distances=pre.test_distances, predicted_distances=dist)


def cmd_eval(cfg: Config, checkpoint: str | None, arch: str | None) -> None:
    if checkpoint is None:
        if arch is None:
            raise ConfigError("eval needs --checkpoint PATH or --arch NAME")
        checkpoint = str(cfg.out_dir() / arch / "checkpoint.bin")
    if not Path(checkpoint).exists():
        raise FileNotFoundError(f"checkpoint not found: {checkpoint}")
    model = load_model(checkpoint)
    pre = load_or_preprocess(cfg)
    report = _model_report(model, pre, f"env{cfg['pre.env']}/{model.kind}")
    write_metrics_csv(Path(checkpoint).parent / "metrics.csv", [report])
    print(format_table([report]), end="")


def cmd_compare(cfg: Config) -> None:
    pre = load_or_preprocess(cfg)
    reports, traces = [], {}
    for arch in ARCHITECTURES:
        model, result = _train_one(cfg, arch, pre)
        traces[arch] = result.trace
        reports.append(_model_report(model, pre, arch))
    target = cfg.channel_params(cfg["pre.env"])[TARGET_NODE]
    ys, dist = baseline_bins(pre.test_raw_target, target, pre.spec)
    reports.append(evaluate(pre.test.labels, ys, pre.spec, name="pathloss-baseline",
                            true_distances=pre.test_distances, predicted_distances=dist))

    out = cfg.out_dir()
    iterations = [row[0] for row in traces[ARCHITECTURES[0]]]
    with open(out / "compare.csv", "w", newline="\n") as fh:
        fh.write("iteration," + ",".join(f"{a}_val_accuracy" for a in ARCHITECTURES) + "\n")
        for k, it in enumerate(iterations):
            fh.write(f"{it}," + ",".join(f"{traces[a][k][2]:.6f}" for a in ARCHITECTURES) + "\n")
    write_metrics_csv(out / "compare_metrics.csv", reports)
    print(format_table(reports), end="")
    print(f"traces -> {out / 'compare.csv'}")


# argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rssiloc", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, keys):
        p = sub.add_parser(name, help=help, description=help, epilog=describe(keys),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="FILE", help="key = value config file")
        return p

    add("simulate", "simulate the acquisition network and write dataset CSVs", SIM_KEYS)
    add("preprocess", "filter, normalize and window a dataset into a tensor cache", PRE_KEYS)
    p = add("train", "train one architecture; writes checkpoint and trace", TRAIN_KEYS)
    p.add_argument("arch", choices=ARCHITECTURES)
    p = add("eval", "evaluate a checkpoint on the test split", EVAL_KEYS)
    p.add_argument("--checkpoint", metavar="PATH", help="checkpoint file (default: <paths.out>/<arch>)")
    p.add_argument("--arch", choices=ARCHITECTURES, help="evaluate <paths.out>/<arch>/checkpoint.bin")
    add("compare", "train all architectures on the same tensors and tabulate results", COMPARE_KEYS)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:  # argparse: --help (0) or usage error (2)
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config, parse_overrides(extra))
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "preprocess":
            cmd_preprocess(cfg)
        elif args.command == "train":
            cmd_train(cfg, args.arch)
        elif args.command == "eval":
            cmd_eval(cfg, args.checkpoint, args.arch)
        else:
            cmd_compare(cfg)
    except (OSError, ParseError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FloatingPointError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:  # ConfigError, ConfigurationError, LabelError, empty splits
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
