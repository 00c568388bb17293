"""Command-line interface for the review mining and localization pipeline."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import evaluation
from .clustering import cop_kmeans, infer_k, load_constraints
from .config import PipelineConfig, load_config, with_overrides
from .errors import ConfigError, FormatError, RevlocError
from .evaluation import evaluate_rankings, format_report, load_ground_truth
from .ioutil import atomic_write_json, atomic_write_text
from .localization import (
    LocalizationRanking,
    build_df,
    load_commits,
    rank_files,
    tag_files,
)
from .reviews import Category, filter_informative, load_reviews, parse_instant
from .segmentation import SegmenterConfig, segment_review
from .textproc import TextNormalizer, TokenDoc, drop_short, to_token_docs
from .vsm import build_matrix, pca_reduce

log = logging.getLogger(__name__)

CATEGORY_FILES = {
    Category.FEATURE_REQUEST: "feature_request.jsonl",
    Category.PROBLEM_DISCOVERY: "problem_discovery.jsonl",
}


def _doc_row(doc: TokenDoc) -> dict:
    return {
        "doc_id": doc.doc_id,
        "review_id": doc.review_id,
        "seq": doc.seq,
        "category": doc.category.value,
        "text": doc.text,
        "tokens": list(doc.tokens),
        "timestamp": doc.timestamp.isoformat() if doc.timestamp else None,
    }


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    text = "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows)
    atomic_write_text(path, text)


def _load_docs(path: str | Path) -> list[TokenDoc]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read documents file {path}: {exc}") from exc
    docs = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            stamp = row.get("timestamp")
            docs.append(
                TokenDoc(
                    doc_id=row["doc_id"],
                    tokens=tuple(row["tokens"]),
                    category=Category(row.get("category", "unlabeled")),
                    review_id=row.get("review_id", row["doc_id"]),
                    seq=int(row.get("seq", 0)),
                    text=row.get("text", ""),
                    timestamp=parse_instant(stamp) if stamp else None,
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad document row at {path}:{lineno}: {exc}") from exc
    if not docs:
        raise FormatError(f"no documents in {path}")
    return docs


def _normalizer(cfg: PipelineConfig) -> TextNormalizer:
    return TextNormalizer.from_files(
        lemma_path=cfg.lemma_path,
        stopword_path=cfg.stopword_path,
        acronym_path=cfg.acronym_path,
        strings_xml=cfg.strings_xml,
    )


def _segmenter(cfg: PipelineConfig) -> SegmenterConfig:
    seg = SegmenterConfig()
    changes = {}
    if cfg.copulative is not None:
        changes["copulative"] = cfg.copulative
    if cfg.adversative is not None:
        changes["adversative"] = cfg.adversative
    return dataclasses.replace(seg, **changes) if changes else seg


def _require(value: str | None, key: str, flag: str) -> str:
    if not value:
        raise ConfigError(f"missing {key} path: pass {flag} or set {key!r} in the config file")
    return value


def _group_by_category(docs: list[TokenDoc]) -> dict[Category, list[TokenDoc]]:
    groups: dict[Category, list[TokenDoc]] = {}
    for doc in docs:
        groups.setdefault(doc.category, []).append(doc)
    return groups


def _merge_docs_by_review(docs: list[TokenDoc]) -> list[TokenDoc]:
    """Collapse sentence docs into one doc per review, keeping first-seen token order."""
    by_review: dict[str, list[TokenDoc]] = {}
    order: list[str] = []
    for doc in docs:
        rid = doc.review_id or doc.doc_id
        if rid not in by_review:
            order.append(rid)
        by_review.setdefault(rid, []).append(doc)
    merged = []
    for rid in order:
        parts = sorted(by_review[rid], key=lambda d: d.seq)
        seen: set[str] = set()
        tokens: list[str] = []
        for part in parts:
            for token in part.tokens:
                if token not in seen:
                    seen.add(token)
                    tokens.append(token)
        first = parts[0]
        merged.append(
            TokenDoc(
                doc_id=rid,
                tokens=tuple(tokens),
                category=first.category,
                review_id=rid,
                seq=0,
                text=" ".join(p.text for p in parts if p.text).strip(),
                timestamp=first.timestamp,
            )
        )
    return merged


def _preprocess(cfg: PipelineConfig, reviews_path: str, out_dir: Path) -> list[TokenDoc]:
    loaded = load_reviews(reviews_path)
    filtered = filter_informative(loaded.reviews, classify_fallback=cfg.classify_fallback)
    seg = _segmenter(cfg)
    sentences = []
    for review in filtered.reviews:
        sentences.extend(segment_review(review, seg))
    normalizer = _normalizer(cfg)
    stamps = {r.id: r.timestamp for r in filtered.reviews}
    docs = drop_short(to_token_docs(sentences, normalizer, stamps))
    _write_jsonl(out_dir / "docs.jsonl", [_doc_row(d) for d in docs])
    for category, name in CATEGORY_FILES.items():
        rows = [_doc_row(d) for d in docs if d.category is category]
        _write_jsonl(out_dir / name, rows)
    print(
        f"{len(loaded.reviews)} reviews loaded ({loaded.skipped} skipped), "
        f"{len(filtered.reviews)} informative "
        f"({filtered.unlabeled_dropped} unlabeled dropped), "
        f"{len(docs)} atomic docs kept"
    )
    return docs


def _cluster(
    cfg: PipelineConfig,
    docs: list[TokenDoc],
    out_path: Path,
    constraints_path: str | None,
) -> dict:
    if len(docs) < 2:
        raise FormatError(f"need at least 2 documents to cluster, got {len(docs)}")
    matrix, _ = build_matrix(docs)
    reduced = pca_reduce(matrix, r=cfg.pca_components, variance=cfg.pca_variance)
    k = cfg.k if cfg.k is not None else infer_k(docs)
    constraints = load_constraints(constraints_path) if constraints_path else None
    assignment = cop_kmeans(
        reduced,
        k,
        constraints=constraints,
        seed=cfg.seed,
        max_iter=cfg.max_iter,
        restarts=cfg.restarts,
    )
    rows = [
        {"doc_id": doc_id, "cluster": int(label), "text": docs[i].text}
        for i, (doc_id, label) in enumerate(zip(matrix.doc_ids, assignment.labels))
    ]
    try:
        index = evaluation.dbi(reduced, assignment)
    except ValueError:
        index = None
    meta = {
        "seed": cfg.seed,
        "k": k,
        "docs": len(docs),
        "pca_components": int(reduced.points.shape[1]),
        "iterations": assignment.iterations,
        "inertia": assignment.inertia,
        "dbi": index,
    }
    atomic_write_json(out_path, rows)
    atomic_write_json(out_path.with_suffix(".meta.json"), meta)
    print(
        f"clustered {len(docs)} docs into {k} groups "
        f"(dbi={'n/a' if index is None else f'{index:.4f}'}) -> {out_path}"
    )
    return meta


def _localize(
    cfg: PipelineConfig,
    docs: list[TokenDoc],
    commits_path: str,
    repo: str | None,
    out_path: Path,
    granularity: str = "sentence",
) -> list[LocalizationRanking]:
    normalizer = _normalizer(cfg)
    loaded = load_commits(commits_path, cfg.non_source_suffixes)
    tagged = tag_files(loaded.commits, repo, normalizer)
    if not tagged.pairs:
        raise FormatError("no candidate files to rank")
    if granularity == "review":
        docs = _merge_docs_by_review(docs)
    df = build_df([d.tokens for d in docs], tagged.pairs)
    cap = max(cfg.top_k) if cfg.top_k else None
    rankings = [rank_files(doc, tagged.pairs, df, top_k=cap) for doc in docs]
    rows = [
        {
            "review_id": r.review_id,
            "gamma": r.gamma,
            "L": r.review_len,
            "entries": [{"path": path, "score": score} for path, score in r.entries],
        }
        for r in rankings
    ]
    _write_jsonl(out_path, rows)
    print(
        f"ranked {len(tagged.pairs)} files for {len(rankings)} docs "
        f"({loaded.skipped} commit lines skipped, {loaded.dropped} commits dropped) "
        f"-> {out_path}"
    )
    return rankings


def _load_rankings(path: str | Path) -> list[LocalizationRanking]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read rankings file {path}: {exc}") from exc
    rankings = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            entries = tuple(
                (str(e["path"]), float(e["score"])) for e in row["entries"]
            )
            rankings.append(
                LocalizationRanking(
                    review_id=row["review_id"],
                    entries=entries,
                    gamma=int(row.get("gamma", 0)),
                    review_len=int(row.get("L", 0)),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad ranking row at {path}:{lineno}: {exc}") from exc
    if not rankings:
        raise FormatError(f"no rankings in {path}")
    return rankings


def _load_cluster_metas(paths: list[str]) -> dict[str, float | None]:
    """Read dbi values out of cluster meta sidecar files."""
    dbi_map: dict[str, float | None] = {}
    for meta_path in paths:
        try:
            meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read cluster meta {meta_path}: {exc}") from exc
        if not isinstance(meta, dict):
            raise FormatError(f"cluster meta {meta_path} is not an object")
        name = Path(meta_path).name
        for suffix in (".meta.json", ".json"):
            if name.endswith(suffix):
                name = name[: -len(suffix)]
                break
        value = meta.get("dbi")
        dbi_map[name] = float(value) if value is not None else None
    return dbi_map


def _evaluate(
    rankings: list[LocalizationRanking],
    truth_path: str,
    ks: tuple[int, ...],
    out_path: Path | None,
    dbi_map: dict[str, float | None] | None = None,
) -> None:
    truth = load_ground_truth(truth_path)
    single = None
    if dbi_map and len(dbi_map) == 1:
        single = next(iter(dbi_map.values()))
    report = evaluate_rankings(rankings, truth, ks, dbi_value=single)
    payload = {
        "evaluated": report.evaluated,
        "excluded": report.excluded,
        "top_k": {str(k): v for k, v in report.top_k.items()},
        "ndcg": {str(k): v for k, v in report.ndcg.items()},
        "details": list(report.details),
    }
    if dbi_map:
        payload["dbi"] = single if len(dbi_map) == 1 else dbi_map
    if out_path is not None:
        atomic_write_json(out_path, payload)
    print(format_report(report))
    if dbi_map and len(dbi_map) > 1:
        for name, value in sorted(dbi_map.items()):
            shown = "n/a" if value is None else f"{value:.4f}"
            print(f"dbi[{name}]  {shown}")


def _parse_top_k(raw: str | None) -> tuple[int, ...] | None:
    if raw is None:
        return None
    try:
        ks = tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise ConfigError(f"invalid cutoff list {raw!r}: expected comma-separated integers")
    if not ks or any(k < 1 for k in ks):
        raise ConfigError("cutoffs must be positive integers")
    return ks


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    return with_overrides(
        cfg,
        reviews=getattr(args, "reviews", None),
        commits=getattr(args, "commits", None),
        repo=getattr(args, "repo", None),
        constraints=getattr(args, "constraints", None),
        truth=getattr(args, "truth", None),
        seed=getattr(args, "seed", None),
        k=getattr(args, "k", None),
        pca_components=getattr(args, "pca_components", None),
        pca_variance=getattr(args, "pca_variance", None),
        max_iter=getattr(args, "max_iter", None),
        restarts=getattr(args, "restarts", None),
        top_k=_parse_top_k(getattr(args, "top_k", None)),
        classify_fallback=True if getattr(args, "fallback_classifier", False) else None,
        lemma_path=getattr(args, "lemmas", None),
        stopword_path=getattr(args, "stopwords", None),
        acronym_path=getattr(args, "acronyms", None),
        strings_xml=getattr(args, "strings_xml", None),
    )


def cmd_preprocess(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    reviews = _require(cfg.reviews, "reviews", "--reviews")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _preprocess(cfg, reviews, out_dir)
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    docs = _load_docs(args.docs)
    out = Path(args.out)
    groups = _group_by_category(docs)
    if len(groups) == 1:
        only = next(iter(groups.values()))
        _cluster(cfg, only, out, cfg.constraints)
        return 0
    for category in sorted(groups, key=lambda c: c.value):
        cat_docs = groups[category]
        if len(cat_docs) < 2:
            log.warning(
                "skipping %s clustering: only %d docs", category.value, len(cat_docs)
            )
            continue
        path = out.parent / f"{out.stem}_{category.value}{out.suffix}"
        _cluster(cfg, cat_docs, path, cfg.constraints)
    return 0


def cmd_localize(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    docs = _load_docs(args.docs)
    commits = _require(cfg.commits, "commits", "--commits")
    _localize(cfg, docs, commits, cfg.repo, Path(args.out), args.granularity)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    rankings = _load_rankings(args.rankings)
    truth = _require(cfg.truth, "truth", "--truth")
    dbi_map = _load_cluster_metas(args.clusters_meta) if args.clusters_meta else None
    _evaluate(
        rankings,
        truth,
        cfg.top_k,
        Path(args.out) if args.out else None,
        dbi_map,
    )
    return 0


def cmd_run_all(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    reviews = _require(cfg.reviews, "reviews", "--reviews")
    commits = _require(cfg.commits, "commits", "--commits")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = _preprocess(cfg, reviews, out_dir)
    groups = _group_by_category(docs)
    dbi_map: dict[str, float | None] = {}
    for category in sorted(groups, key=lambda c: c.value):
        cat_docs = groups[category]
        if len(cat_docs) < 2:
            log.warning(
                "skipping %s clustering: only %d docs", category.value, len(cat_docs)
            )
            continue
        out = out_dir / f"clusters_{category.value}.json"
        meta = _cluster(cfg, cat_docs, out, cfg.constraints)
        dbi_map[out.stem] = meta["dbi"]
    rankings = _localize(
        cfg, docs, commits, cfg.repo, out_dir / "rankings.jsonl", args.granularity
    )
    if cfg.truth:
        _evaluate(rankings, cfg.truth, cfg.top_k, out_dir / "report.json", dbi_map or None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revloc",
        description=(
            "Mine app reviews into concern clusters and rank the source files "
            "each concern is likely to change."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML settings file")
    common.add_argument("--verbose", action="store_true", help="log progress details")

    text_opts = argparse.ArgumentParser(add_help=False)
    text_opts.add_argument("--lemmas", help="lemma table (TSV), defaults to bundled")
    text_opts.add_argument("--stopwords", help="stopword list, defaults to bundled")
    text_opts.add_argument("--acronyms", help="shorthand table (TSV), defaults to bundled")
    text_opts.add_argument(
        "--strings-xml", help="UI strings resource whose words stay out of the stopword list"
    )
    text_opts.add_argument(
        "--fallback-classifier",
        action="store_true",
        help="cue-word classification for reviews without a category label",
    )

    cluster_opts = argparse.ArgumentParser(add_help=False)
    cluster_opts.add_argument("--seed", type=int, help="random seed (default 0)")
    cluster_opts.add_argument("--k", type=int, help="cluster count (default: inferred)")
    cluster_opts.add_argument("--pca-components", type=int, help="fixed PCA dimension")
    cluster_opts.add_argument(
        "--pca-variance", type=float, help="explained-variance target (default 0.95)"
    )
    cluster_opts.add_argument("--max-iter", type=int, help="assignment passes per restart")
    cluster_opts.add_argument("--restarts", type=int, help="independent restarts")
    cluster_opts.add_argument("--constraints", help="JSON file with must/cannot pairs")

    local_opts = argparse.ArgumentParser(add_help=False)
    local_opts.add_argument(
        "--granularity",
        choices=("sentence", "review"),
        default="sentence",
        help="rank per atomic sentence or per whole review",
    )
    local_opts.add_argument(
        "--top-k", help="comma-separated ranking cutoffs (default 1,5,10)"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "preprocess", parents=[common, text_opts], help="reviews to normalized docs"
    )
    p.add_argument("--reviews", help="reviews JSONL file")
    p.add_argument("--out-dir", required=True, help="directory for doc artifacts")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser(
        "cluster", parents=[common, cluster_opts], help="group docs into concerns"
    )
    p.add_argument("--docs", required=True, help="docs JSONL from preprocess")
    p.add_argument("--out", required=True, help="clusters JSON path")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser(
        "localize", parents=[common, text_opts, local_opts], help="rank files per review doc"
    )
    p.add_argument("--docs", required=True, help="docs JSONL from preprocess")
    p.add_argument("--commits", help="commit history JSONL")
    p.add_argument("--repo", help="source tree root to scan")
    p.add_argument("--out", required=True, help="rankings JSONL path")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("evaluate", parents=[common], help="score rankings against truth")
    p.add_argument("--rankings", required=True, help="rankings JSONL from localize")
    p.add_argument("--truth", help="ground truth JSON")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--top-k", help="comma-separated cutoffs (default 1,5,10)")
    p.add_argument(
        "--clusters-meta",
        action="append",
        metavar="META_JSON",
        help="cluster meta sidecar whose dbi joins the report (repeatable)",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "run-all",
        parents=[common, text_opts, cluster_opts, local_opts],
        help="full pipeline: preprocess, cluster, localize, evaluate",
    )
    p.add_argument("--reviews", help="reviews JSONL file")
    p.add_argument("--commits", help="commit history JSONL")
    p.add_argument("--repo", help="source tree root to scan")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--truth", help="ground truth JSON (enables evaluation)")
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (RevlocError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
