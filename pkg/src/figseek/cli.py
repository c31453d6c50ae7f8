"""Command-line pipeline: extract -> train -> classify -> index -> query.

Every stage reads and writes plain JSON/JSON-Lines files so the pipeline
can be resumed or inspected at any point.  All randomness flows from the
single configured seed, and outputs are byte-deterministic given the
same inputs and seed.

Exit codes: 0 success, 1 internal error, 2 bad user input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import classifier, docmodel, metadata, search, selector
from .errors import UserInputError
from .featurize import (
    FEATURE_FORMAT_VERSION,
    Vocabulary,
    build_vocabulary,
    featurize_all,
    load_gazetteer,
    load_stopwords,
)

logger = logging.getLogger("figseek")

MODEL_FORMAT = "figseek-model/1"

_PATH_KEYS = {
    "corpus",
    "metadata",
    "labels",
    "classified",
    "model",
    "index",
    "venues",
    "gazetteer",
    "stoplist",
}


@dataclass
class PipelineConfig:
    paths: dict[str, str] = field(default_factory=dict)
    selector_top_k: int | None = None
    selector_min_loss: float | None = None
    train: classifier.TrainConfig = field(default_factory=classifier.TrainConfig)
    ranking: search.RankingConfig = field(default_factory=search.RankingConfig)
    cv_folds: int = 5
    seed: int = 42


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise UserInputError(f"unknown key(s) {sorted(unknown)} in {where}")


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        obj = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise UserInputError(f"config {path}: invalid JSON: {exc}")
    _check_keys(
        obj, {"paths", "selector", "classifier", "ranking", "cv_folds", "seed"}, "config"
    )
    paths = obj.get("paths", {})
    _check_keys(paths, _PATH_KEYS, "config paths")

    selector_cfg = obj.get("selector") or {}
    _check_keys(selector_cfg, {"top_k", "min_loss"}, "config selector")
    if len(selector_cfg) > 1:
        raise UserInputError("config selector: give top_k or min_loss, not both")

    seed = int(obj.get("seed", 42))
    cls_cfg = obj.get("classifier") or {}
    _check_keys(cls_cfg, {"c", "epochs"}, "config classifier")
    train_config = classifier.TrainConfig(
        c=float(cls_cfg.get("c", 1.0)),
        epochs=int(cls_cfg.get("epochs", 200)),
        seed=seed,
    )

    ranking_cfg = dict(obj.get("ranking") or {})
    _check_keys(
        ranking_cfg,
        {
            "mode",
            "field_weights",
            "k1",
            "b",
            "beta_age",
            "beta_cite",
            "beta_venue",
            "half_life_years",
        },
        "config ranking",
    )
    try:
        ranking = search.RankingConfig(**ranking_cfg)
    except (TypeError, ValueError) as exc:
        raise UserInputError(f"config ranking: {exc}")

    cv_folds = int(obj.get("cv_folds", 5))
    if cv_folds < 2:
        raise UserInputError(f"cv_folds must be >= 2, got {cv_folds}")
    return PipelineConfig(
        paths={k: str(v) for k, v in paths.items()},
        selector_top_k=selector_cfg.get("top_k"),
        selector_min_loss=selector_cfg.get("min_loss"),
        train=train_config,
        ranking=ranking,
        cv_folds=cv_folds,
        seed=seed,
    )


def _resolve(flag_value: str | None, config: PipelineConfig, key: str) -> Path:
    value = flag_value or config.paths.get(key)
    if not value:
        raise UserInputError(
            f"no {key} path given (use --{key.replace('_', '-')} or config paths.{key})"
        )
    return Path(value)


def _require_input(path: Path, what: str) -> Path:
    if not path.exists():
        raise UserInputError(f"{what} file not found: {path}")
    return path


def _read_jsonl(path: Path, what: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                records.append(json.loads(raw))
            except json.JSONDecodeError as exc:
                raise UserInputError(f"{what} line {lineno}: invalid JSON: {exc}")
    return records


def _load_stopwords(config: PipelineConfig) -> frozenset[str]:
    path = config.paths.get("stoplist")
    return load_stopwords(_require_input(Path(path), "stoplist") if path else None)


def _load_gazetteer(config: PipelineConfig):
    path = config.paths.get("gazetteer")
    return load_gazetteer(_require_input(Path(path), "gazetteer") if path else None)


def cmd_extract(args, config: PipelineConfig) -> int:
    corpus_path = _require_input(_resolve(args.corpus, config, "corpus"), "corpus")
    out_path = _resolve(args.out, config, "metadata")
    docs = docmodel.load_corpus(corpus_path)
    if not docs:
        logger.warning("corpus %s contains no documents", corpus_path)
    baseline = metadata.corpus_baseline_line_count(docs)
    records = []
    for doc in docs:
        records.extend(metadata.extract_all(doc, baseline))
    empty_captions = sum(1 for r in records if not r.caption)
    empty_references = sum(1 for r in records if not r.reference_sentences)
    with open(out_path, "w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(json.dumps(metadata.metadata_to_dict(rec), sort_keys=True))
            handle.write("\n")
    print(
        f"extracted {len(records)} figure records from {len(docs)} documents "
        f"({empty_captions} empty captions, {empty_references} without references)"
    )
    return 0


def _read_labels(path: Path) -> dict[tuple[str, int], bool]:
    labels: dict[tuple[str, int], bool] = {}
    for rec in _read_jsonl(path, "labels"):
        _check_keys(rec, {"doc_id", "figure_number", "is_map"}, "labels record")
        for key in ("doc_id", "figure_number", "is_map"):
            if key not in rec:
                raise UserInputError(f"labels record missing {key!r}: {rec}")
        labels[(str(rec["doc_id"]), int(rec["figure_number"]))] = bool(rec["is_map"])
    return labels


def _read_metadata(path: Path) -> list[metadata.FigureMetadata]:
    out = []
    for rec in _read_jsonl(path, "metadata"):
        try:
            out.append(metadata.metadata_from_dict(rec))
        except ValueError as exc:
            raise UserInputError(f"metadata {path}: {exc}")
    return out


def cmd_train(args, config: PipelineConfig) -> int:
    meta_path = _require_input(_resolve(args.metadata, config, "metadata"), "metadata")
    labels_path = _require_input(_resolve(args.labels, config, "labels"), "labels")
    model_path = _resolve(args.model, config, "model")

    metas = _read_metadata(meta_path)
    labels = _read_labels(labels_path)
    known = {m.map_key for m in metas}
    unknown = sorted(set(labels) - known)
    if unknown:
        raise UserInputError(
            f"labels reference figures absent from the metadata: {unknown}"
        )
    unlabeled = [m for m in metas if m.map_key not in labels]
    if unlabeled:
        logger.warning(
            "%d figures have no label and are excluded from training", len(unlabeled)
        )
    training_metas = [m for m in metas if m.map_key in labels]

    stopwords = _load_stopwords(config)
    gazetteer = _load_gazetteer(config)
    vocab = build_vocabulary(training_metas, stopwords)
    vectors = featurize_all(training_metas, vocab, gazetteer, labels)

    report = classifier.cross_validate(
        vectors,
        config.cv_folds,
        config.train,
        selector_k=config.selector_top_k,
        selector_min_loss=config.selector_min_loss,
    )
    for m in report.folds:
        print(
            f"fold {m.fold}: accuracy={m.accuracy:.4f} precision={m.precision:.4f} "
            f"recall={m.recall:.4f} f1={m.f1:.4f}"
        )
    print(
        f"cv mean: accuracy={report.mean_accuracy:.4f} (+/- {report.std_accuracy:.4f}) "
        f"precision={report.mean_precision:.4f} recall={report.mean_recall:.4f} "
        f"f1={report.mean_f1:.4f}"
    )

    if config.selector_top_k is not None or config.selector_min_loss is not None:
        scores = selector.rank_features(vectors)
        selected = selector.select_top(
            scores, k=config.selector_top_k, min_loss=config.selector_min_loss
        )
    else:
        selected = {fid for v in vectors for fid in v.values}
    model = classifier.train(vectors, selected, config.train)
    model.cv_report = report
    print(f"training error={model.training_error:.4f}")

    payload = {
        "format": MODEL_FORMAT,
        "feature_format_version": FEATURE_FORMAT_VERSION,
        "vocabulary": list(vocab.terms),
        "stopwords": sorted(stopwords),
        "model": classifier.model_to_dict(model),
    }
    with open(model_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=1)
        handle.write("\n")
    print(f"model written to {model_path}")
    return 0


def _load_model_payload(path: Path) -> dict:
    try:
        payload = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise UserInputError(f"model {path}: invalid JSON: {exc}")
    if payload.get("format") != MODEL_FORMAT:
        raise UserInputError(
            f"unsupported model format {payload.get('format')!r}; expected {MODEL_FORMAT}"
        )
    version = payload.get("feature_format_version")
    if version != FEATURE_FORMAT_VERSION:
        raise UserInputError(
            f"model feature format version {version} does not match this "
            f"build's version {FEATURE_FORMAT_VERSION}; re-train the model"
        )
    return payload


def cmd_classify(args, config: PipelineConfig) -> int:
    meta_path = _require_input(_resolve(args.metadata, config, "metadata"), "metadata")
    model_path = _require_input(_resolve(args.model, config, "model"), "model")
    out_path = _resolve(args.out, config, "classified")

    payload = _load_model_payload(model_path)
    model = classifier.model_from_dict(payload["model"])
    stopwords = frozenset(payload["stopwords"])
    vocab = Vocabulary(
        terms=tuple(payload["vocabulary"]), corpus_freqs={}, stopwords=stopwords
    )
    gazetteer = _load_gazetteer(config)

    metas = _read_metadata(meta_path)
    vectors = featurize_all(metas, vocab, gazetteer)
    n_maps = 0
    with open(out_path, "w", encoding="utf-8") as handle:
        for meta, vec in zip(metas, vectors):
            is_map, margin = classifier.predict(model, vec)
            n_maps += is_map
            rec = metadata.metadata_to_dict(meta)
            rec["is_map"] = bool(is_map)
            rec["margin"] = margin
            handle.write(json.dumps(rec, sort_keys=True))
            handle.write("\n")
    print(f"classified {len(metas)} figures ({n_maps} maps) -> {out_path}")
    return 0


def cmd_index(args, config: PipelineConfig) -> int:
    classified_path = _require_input(
        _resolve(args.classified, config, "classified"), "classified metadata"
    )
    corpus_path = _require_input(_resolve(args.corpus, config, "corpus"), "corpus")
    out_path = _resolve(args.out, config, "index")

    venue_table = None
    venues_value = args.venues or config.paths.get("venues")
    if venues_value:
        venues_path = _require_input(Path(venues_value), "venue table")
        try:
            venue_table = {
                str(k): float(v)
                for k, v in json.loads(venues_path.read_text("utf-8")).items()
            }
        except (json.JSONDecodeError, AttributeError, ValueError) as exc:
            raise UserInputError(f"venue table {venues_path}: {exc}")

    docs = docmodel.load_corpus(corpus_path)
    doc_meta = {doc.doc_id: doc.metadata for doc in docs}
    maps = []
    for rec in _read_jsonl(classified_path, "classified metadata"):
        if "is_map" not in rec:
            raise UserInputError(
                "classified metadata record lacks is_map; run `figseek classify` first"
            )
        if not rec["is_map"]:
            continue
        rec = {k: v for k, v in rec.items() if k not in ("is_map", "margin")}
        meta = metadata.metadata_from_dict(rec)
        if meta.doc_id not in doc_meta:
            raise UserInputError(
                f"classified figure references unknown doc_id {meta.doc_id!r}"
            )
        maps.append((meta, doc_meta[meta.doc_id]))
    if not maps:
        raise UserInputError("no maps to index (no records with is_map=true)")

    index = search.build_index(maps, venue_table, _load_stopwords(config))
    search.save_index(index, out_path)
    print(f"indexed {index.map_count} maps -> {out_path}")
    return 0


def cmd_query(args, config: PipelineConfig) -> int:
    index_path = _require_input(_resolve(args.index, config, "index"), "index")
    index = search.load_index(index_path)
    ranking = config.ranking
    if args.mode:
        ranking = search.RankingConfig(
            mode=args.mode,
            field_weights=ranking.field_weights,
            k1=ranking.k1,
            b=ranking.b,
            beta_age=ranking.beta_age,
            beta_cite=ranking.beta_cite,
            beta_venue=ranking.beta_venue,
            half_life_years=ranking.half_life_years,
        )
    now = date.fromisoformat(args.now) if args.now else None
    hits = search.query(
        args.query,
        index,
        ranking,
        top_k=args.top_k,
        now=now,
        stopwords=_load_stopwords(config),
    )
    for rank, hit in enumerate(hits, start=1):
        doc_id, figure_number = hit.map_key
        print(
            f"{rank}. {doc_id} figure {figure_number} "
            f"final={hit.final_score:.6f} text={hit.text_score:.6f} "
            f"boost={hit.boost:.6f} fields={','.join(hit.matched_fields) or '-'}"
        )
    if not hits:
        print("no results")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figseek",
        description="Extract figure metadata, classify maps, and search them.",
    )
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract per-figure metadata from a corpus")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the map classifier with cross-validation")
    p.add_argument("--metadata")
    p.add_argument("--labels")
    p.add_argument("--model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="label figures as map / non-map")
    p.add_argument("--metadata")
    p.add_argument("--model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("index", help="build the fielded map index")
    p.add_argument("--classified")
    p.add_argument("--corpus")
    p.add_argument("--venues")
    p.add_argument("--out")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="search the map index")
    p.add_argument("query")
    p.add_argument("--index")
    p.add_argument("--mode", choices=("bm25f", "linear"))
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--now", help="reference date (ISO) for the age boost")
    p.set_defaults(func=cmd_query)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
            config.train = classifier.TrainConfig(
                c=config.train.c, epochs=config.train.epochs, seed=args.seed
            )
        return args.func(args, config)
    except (UserInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # pragma: no cover - internal failure path
        import traceback

        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
