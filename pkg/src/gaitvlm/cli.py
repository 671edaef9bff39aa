"""Command-line harness around dataset generation, training, and decoding."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import torch

from gaitvlm import decoder as dec
from gaitvlm import experiment as exp
from gaitvlm import synth
from gaitvlm.numeric import SCHEMES, NumericEmbedder, continuity_metrics, diagnose_similarity
from gaitvlm.params import enumerate_combinations, fit_normalization
from gaitvlm.encoders import make_encoder_pair


def _load_config(args) -> exp.ExperimentConfig:
    if getattr(args, "config", None):
        config = exp.ExperimentConfig.from_json(args.config)
    else:
        config = exp.ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "task", None):
        config = exp.ExperimentConfig.from_dict({**config.to_dict(), "task": args.task})
    return config


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(args) -> int:
    spec = synth.default_synthetic_spec(args.task, args.scale)
    dataset = synth.gen_synthetic_dataset(spec, args.seed, task=args.task)
    out = _out_dir(args)
    synth.save_dataset(dataset, out)
    print(f"wrote {len(dataset.clip_ids)} clips / {len(dataset.records)} records to {out}")
    return 0


def cmd_filter_combos(args) -> int:
    dataset = synth.load_dataset(args.data)
    combos = enumerate_combinations(dataset.records, threshold=args.threshold)
    print(f"{len(combos)} combinations pass |pearson| <= {args.threshold}")
    if args.out_dir:
        out = _out_dir(args) / "combinations.csv"
        with out.open("w") as fh:
            fh.write("p0,p1,p2,p3\n")
            for c in combos:
                fh.write(",".join(map(str, c.indices)) + "\n")
        print(f"wrote {out}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    dataset = synth.load_dataset(args.data)
    plan = exp.make_folds(dataset.subject_ids(), config.fold_count, config.seed)
    out = _out_dir(args)
    result = exp.train(config, dataset, plan[args.fold], log_path=out / "metrics.jsonl")
    exp.save_checkpoint(out / "checkpoint", result.model)
    print(
        f"fold {args.fold}: best epoch {result.best_epoch}, "
        f"val acc {result.best_accuracy:.3f}, macro-F1 {result.best_macro_f1:.3f}"
    )
    print(f"checkpoint saved to {out / 'checkpoint'}")
    return 0


def cmd_eval(args) -> int:
    model = exp.load_checkpoint(args.checkpoint)
    dataset = synth.load_dataset(args.data)
    plan = exp.make_folds(dataset.subject_ids(), model.config.fold_count, model.config.seed)
    _train_subjects, val_subjects = plan[args.fold]
    result = exp.evaluate(model, dataset, val_subjects)
    payload = {
        "fold": args.fold,
        "accuracy": result.accuracy,
        "macro_f1": result.macro_f1,
        "confusion": result.confusion.tolist(),
    }
    print(json.dumps(payload, indent=2))
    if args.out_dir:
        (_out_dir(args) / "eval.json").write_text(json.dumps(payload, indent=2))
    return 0


def cmd_run_cv(args) -> int:
    config = _load_config(args)
    dataset = synth.load_dataset(args.data)
    out = _out_dir(args) if args.out_dir else None
    if args.ablation_grid:
        rows = exp.ablation_grid(config, dataset, out, fold_limit=args.fold_limit)
        print(exp.format_grid(rows))
    else:
        report = exp.run_cv(config, dataset, out, fold_limit=args.fold_limit)
        for row in report["folds"]:
            print(f"fold {row['fold']}: acc {row['accuracy']:.3f}, F1 {row['macro_f1']:.3f}")
        print(
            f"mean: acc {report['mean']['accuracy']:.3f}, "
            f"F1 {report['mean']['macro_f1']:.3f}"
        )
    return 0


def cmd_classify(args) -> int:
    model = exp.load_checkpoint(args.checkpoint)
    dataset = synth.load_dataset(args.data)
    probs, pred = exp.classify_clip(model, dataset, args.clip)
    names = [s.class_name for s in model.class_specs]
    for name, p in zip(names, probs):
        print(f"{name}: {p:.4f}")
    print(f"predicted: {names[pred]} (class {pred})")
    return 0


def cmd_train_decoder(args) -> int:
    config = _load_config(args)
    dataset = synth.load_dataset(args.data)
    model = exp.load_checkpoint(args.checkpoint) if args.checkpoint else None
    out = _out_dir(args)
    if model is None:
        stats = fit_normalization(dataset.records, dataset.schema.healthy_label)
        model = exp.build_model(config, dataset.schema, dataset.class_specs, stats)
    combos = enumerate_combinations(dataset.records, config.combo_threshold)
    require_idx = None
    if config.require_param:
        require_idx = dataset.schema.names().index(config.require_param)
    sentences = exp.build_sentence_corpus(
        dataset.records, model.stats, dataset.schema, combos,
        args.sentences_per_record, config.seed, require_idx,
    )
    feats = exp.encode_corpus(model.embedder, sentences)
    targets = [dec.encode_target(s, model.tokenizer) for s in sentences]
    n_val = max(1, len(sentences) // 10)
    decoder, state = dec.train_decoder(
        feats[:-n_val], targets[:-n_val],
        steps=args.steps, seed=config.seed,
        val_features=feats[-n_val:], val_targets=targets[-n_val:],
        target_exact_match=args.target_match, out_dir=out / "decoder",
    )
    metrics = dec.decoder_round_trip_metrics(decoder, feats[-n_val:], targets[-n_val:])
    print(
        f"decoder trained for {state.step} steps: held-out word match "
        f"{metrics['word_exact_match']:.3f}, value error {metrics['mean_value_error']:.4f}"
    )
    print(f"decoder saved to {out / 'decoder'}")
    return 0


def cmd_decode(args) -> int:
    model = exp.load_checkpoint(args.checkpoint)
    decoder = dec.load_decoder(args.decoder)
    if args.class_index is not None:
        if model.bank is None:
            raise SystemExit("checkpoint carries no numeric bank; retrain with NTE on")
        with torch.no_grad():
            text_feats = model.text_features()
        result = dec.class_description(
            args.class_index, text_feats, model.heads, model.bank,
            decoder, model.schema, model.tokenizer,
        )
    else:
        from gaitvlm import blobio

        tensors = blobio.load_tensors(args.numeric_blob)
        prefix = torch.from_numpy(next(iter(tensors.values())).reshape(-1)).to(torch.float32)
        ids = dec.decode_greedy(decoder, prefix)[0]
        result = dec.parse_decoded(ids, model.schema, model.tokenizer)
    print(result.text)
    payload = {
        "text": result.text,
        "items": [{"phrase": p, "normalized_value": v} for p, v in result.items],
        "warnings": result.warnings,
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_diagnose_embedding(args) -> int:
    out = _out_dir(args)
    grid = np.arange(args.grid_min, args.grid_max + 1, dtype=np.float64)
    summary = {scheme: [] for scheme in SCHEMES}
    for seed in range(args.seeds):
        text_enc, _ = make_encoder_pair(seed)
        embedder = NumericEmbedder(text_enc, seed=seed)
        for scheme in SCHEMES:
            matrix = diagnose_similarity(embedder, scheme, grid, args.phrase)
            metrics = continuity_metrics(matrix, far_offset=args.far_offset)
            summary[scheme].append(metrics)
            if seed == 0:
                np.savetxt(
                    out / f"similarity_{scheme}.csv", matrix, delimiter=",", fmt="%.6f"
                )
    report = {}
    for scheme, rows in summary.items():
        report[scheme] = {
            key: float(np.mean([r[key] for r in rows])) for key in rows[0]
        }
    (out / "continuity_summary.json").write_text(json.dumps(report, indent=2))
    for scheme, row in report.items():
        print(
            f"{scheme}: near-far pass rate {row['near_far_pass_rate']:.3f}, "
            f"mean adjacent dissimilarity {row['mean_adjacent_dissimilarity']:.6f}"
        )
    return 0


def cmd_export_embeddings(args) -> int:
    model = exp.load_checkpoint(args.checkpoint)
    dataset = synth.load_dataset(args.data)
    out = _out_dir(args) / f"embeddings_{args.space}.csv"
    count = exp.export_embeddings(model, dataset, out, space=args.space)
    print(f"wrote {count} rows to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitvlm",
        description="Knowledge-augmented vision-language gait classification harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False, checkpoint=False):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default="out")
        if data:
            p.add_argument("--data", required=True, help="dataset directory")
        if checkpoint:
            p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic gait dataset")
    common(p)
    p.add_argument("--task", default="dementia-group", choices=sorted(exp.TASKS))
    p.add_argument("--scale", default="default", choices=["default", "paper-scale-synthetic"])
    p.set_defaults(func=cmd_gen_data)
    p.set_defaults(seed=0)

    p = sub.add_parser("filter-combos", help="enumerate low-correlation parameter subsets")
    common(p, data=True)
    p.add_argument("--threshold", type=float, default=0.4)
    p.set_defaults(func=cmd_filter_combos)

    p = sub.add_parser("train", help="train one cross-validation fold")
    common(p, data=True)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--task", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a fold")
    common(p, data=True, checkpoint=True)
    p.add_argument("--fold", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run-cv", help="full cross-validation (optionally the ablation grid)")
    common(p, data=True)
    p.add_argument("--ablation-grid", action="store_true")
    p.add_argument("--fold-limit", type=int, default=None)
    p.add_argument("--task", default=None)
    p.set_defaults(func=cmd_run_cv)

    p = sub.add_parser("classify", help="score one clip with a checkpoint")
    common(p, data=True, checkpoint=True)
    p.add_argument("--clip", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train-decoder", help="train the caption decoder on numeric sentences")
    common(p, data=True)
    p.add_argument("--checkpoint", default=None, help="classifier checkpoint (optional)")
    p.add_argument("--steps", type=int, default=1500)
    p.add_argument("--sentences-per-record", type=int, default=12)
    p.add_argument("--target-match", type=float, default=0.97)
    p.set_defaults(func=cmd_train_decoder)

    p = sub.add_parser("decode", help="decode a class description or a numeric feature blob")
    common(p, checkpoint=True)
    p.add_argument("--decoder", required=True, help="decoder checkpoint directory")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--class-index", type=int, default=None)
    group.add_argument("--numeric-blob", default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("diagnose-embedding", help="numeral-scheme similarity matrices")
    common(p)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--grid-min", type=int, default=0)
    p.add_argument("--grid-max", type=int, default=200)
    p.add_argument("--far-offset", type=int, default=100)
    p.add_argument("--phrase", default="the walking speed")
    p.set_defaults(func=cmd_diagnose_embedding)

    p = sub.add_parser("export-embeddings", help="CSV of numeric/text feature vectors")
    common(p, data=True, checkpoint=True)
    p.add_argument("--space", default="projected", choices=["original", "projected"])
    p.set_defaults(func=cmd_export_embeddings)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
