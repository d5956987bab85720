"""Command-line front end.

Subcommands cover the whole workflow: ``gen`` makes synthetic labeled
statements, ``train-nb`` fits the text classifiers, ``spread`` turns
ingestion files into transaction CSVs plus a certification report,
``eval-detect`` scores detector output against ground truth, ``render``
draws the reconciled grids as SVG, and ``validate`` checks an ingestion
file without spreading it.

Exit codes for ``spread``: 0 all inputs balanced, 2 at least one
nonzero checksum, 1 any hard failure. Outputs are byte-deterministic
for identical inputs and options.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import sys
from pathlib import Path

import click

from .docmodel import ParseError, TableCategory, parse_document, validate_document
from .metrics import EvalPair, detection_metrics, krippendorff_alpha
from .pipeline import (
    PipelineConfig,
    PipelineError,
    Thresholds,
    default_models,
    report_dict,
    run_pipeline,
    transactions_to_csv,
)
from .spreading import merge_synonyms
from .synthgen import GenConfig, build_text_corpus, expected_rows_as_csv, generate_statement
from .tdc import NBModelSet, train_model_set
from .tsr import render_overlay


def _load_models(models_dir: Path | None) -> NBModelSet:
    if models_dir is None:
        return default_models()
    return NBModelSet.load(models_dir)


def _load_config(
    models_dir: Path | None,
    synonyms_file: Path | None,
    thresholds_file: Path | None,
    year: int,
) -> PipelineConfig:
    synonyms = None
    if synonyms_file is not None:
        with open(synonyms_file, encoding="utf-8") as fh:
            synonyms = merge_synonyms(json.load(fh))
    thresholds = Thresholds()
    if thresholds_file is not None:
        with open(thresholds_file, encoding="utf-8") as fh:
            thresholds = Thresholds.from_mapping(json.load(fh))
    return PipelineConfig(
        models=_load_models(models_dir),
        statement_year=year,
        synonyms=synonyms,
        thresholds=thresholds,
    )


def _json_text(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


@click.group()
def main() -> None:
    """Spread bank statements from detector output into certified ledgers."""


def _spread_one(path: Path, config: PipelineConfig) -> tuple[str, str, bool, int]:
    doc = parse_document(path)
    result = run_pipeline(doc, config)
    return (
        transactions_to_csv(result.transactions),
        _json_text(report_dict(result)),
        result.balanced,
        result.checksum_cents,
    )


def _spread_worker(args: tuple[str, PipelineConfig]) -> tuple[str, str, bool, int]:
    return _spread_one(Path(args[0]), args[1])


@main.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "-o", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--models", "models_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None, help="Directory of trained classifier files (default: built-in).")
@click.option("--synonyms", "synonyms_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="JSON file of extra header synonyms per column role.")
@click.option("--thresholds", "thresholds_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="JSON file overriding structure thresholds.")
@click.option("--year", type=int, default=2024, show_default=True, help="Statement year for dates that omit one.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel workers when SOURCE is a directory.")
def spread(
    source: Path,
    out: Path,
    models_dir: Path | None,
    synonyms_file: Path | None,
    thresholds_file: Path | None,
    year: int,
    jobs: int,
) -> None:
    """Spread one ingestion file, or every *.json in a directory."""
    config = _load_config(models_dir, synonyms_file, thresholds_file, year)
    inputs = sorted(source.glob("*.json")) if source.is_dir() else [source]
    if not inputs:
        click.echo("error: no *.json inputs found", err=True)
        sys.exit(1)
    out.mkdir(parents=True, exist_ok=True)

    failures = 0
    unbalanced = 0
    results: list[tuple[Path, object]] = []
    if jobs > 1 and len(inputs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_spread_worker, (str(p), config)) for p in inputs]
            for path, fut in zip(inputs, futures):
                try:
                    results.append((path, fut.result()))
                except (ParseError, PipelineError, ValueError) as exc:
                    results.append((path, exc))
    else:
        for path in inputs:
            try:
                results.append((path, _spread_one(path, config)))
            except (ParseError, PipelineError, ValueError) as exc:
                results.append((path, exc))

    for path, outcome in results:
        if isinstance(outcome, Exception):
            failures += 1
            click.echo(f"{path.name}: error: {outcome}", err=True)
            continue
        csv_text, report_text, balanced, checksum = outcome
        (out / f"{path.stem}.transactions.csv").write_text(csv_text, encoding="utf-8")
        (out / f"{path.stem}.report.json").write_text(report_text, encoding="utf-8")
        if balanced:
            click.echo(f"{path.name}: balanced")
        else:
            unbalanced += 1
            click.echo(f"{path.name}: checksum off by {checksum} cents")
    if failures:
        sys.exit(1)
    if unbalanced:
        sys.exit(2)


@main.command("train-nb")
@click.option("--corpus", "corpus_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="CSV with caption,header,category columns (default: built-in corpus).")
@click.option("--out", "-o", required=True, type=click.Path(file_okay=False, path_type=Path))
def train_nb(corpus_file: Path | None, out: Path) -> None:
    """Train the three table-text classifiers and save them."""
    if corpus_file is None:
        rows = build_text_corpus()
    else:
        rows = []
        with open(corpus_file, newline="", encoding="utf-8") as fh:
            for i, rec in enumerate(csv.DictReader(fh)):
                try:
                    category = TableCategory(rec["category"])
                except (KeyError, ValueError):
                    click.echo(f"error: corpus row {i}: bad category", err=True)
                    sys.exit(1)
                rows.append((rec.get("caption", ""), rec.get("header", ""), category))
    try:
        models = train_model_set(rows)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    out.mkdir(parents=True, exist_ok=True)
    models.save(out)
    click.echo(f"saved 3 classifiers to {out}")


@main.command()
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--samples-per-class", type=int, default=40, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def corpus(out: Path, samples_per_class: int, seed: int) -> None:
    """Write the built-in classifier training corpus as CSV."""
    rows = build_text_corpus(samples_per_class=samples_per_class, seed=seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["caption", "header", "category"])
        for caption, header, category in rows:
            writer.writerow([caption, header, category.value])
    click.echo(f"wrote {len(rows)} corpus rows to {out}")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--pages", type=int, default=1, show_default=True)
@click.option("--out", "-o", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--jitter", type=int, default=0, show_default=True, help="Max per-corner detection jitter in pixels.")
@click.option("--year", type=int, default=2024, show_default=True)
@click.option("--long-table-prob", type=float, default=0.25, show_default=True)
def gen(seed: int, pages: int, out: Path, jitter: int, year: int, long_table_prob: float) -> None:
    """Generate one synthetic statement plus its ground-truth ledger."""
    cfg = GenConfig(
        seed=seed,
        pages=pages,
        jitter_px=jitter,
        statement_year=year,
        long_table_prob=long_table_prob,
    )
    generated = generate_statement(cfg)
    out.mkdir(parents=True, exist_ok=True)
    doc_path = out / f"statement_{seed:04d}.json"
    truth_path = out / f"expected_{seed:04d}.csv"
    doc_path.write_text(_json_text(generated.document), encoding="utf-8")
    truth_path.write_text(expected_rows_as_csv(generated.expected), encoding="utf-8")
    click.echo(f"wrote {doc_path} and {truth_path} ({len(generated.expected)} rows)")


@main.command("eval-detect")
@click.option("--truth", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--taxonomy", type=click.Choice(["tdc", "tsr", "both"]), default="both", show_default=True)
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None)
def eval_detect(truth: Path, pred: Path, taxonomy: str, out: Path | None) -> None:
    """Score predicted detections against ground truth."""
    try:
        truth_doc = parse_document(truth)
        pred_doc = parse_document(pred)
    except ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    report: dict = {}
    for tax in ("tdc", "tsr"):
        if taxonomy not in (tax, "both"):
            continue
        truth_objs = truth_doc.tdc_objects if tax == "tdc" else truth_doc.tsr_objects
        pred_objs = pred_doc.tdc_objects if tax == "tdc" else pred_doc.tsr_objects
        pages = sorted(
            {p.page_index for p in truth_doc.pages}
            | {p.page_index for p in pred_doc.pages}
        )
        pairs = [
            EvalPair(
                ground_truth=[o for o in truth_objs if o.page_index == page],
                predictions=[o for o in pred_objs if o.page_index == page],
            )
            for page in pages
        ]
        entry = detection_metrics(pairs).as_dict()
        entry["alpha"] = krippendorff_alpha(truth_objs, pred_objs)
        report[tax] = entry
    text = _json_text(report)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "-o", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--models", "models_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None)
@click.option("--year", type=int, default=2024, show_default=True)
def render(source: Path, out: Path, models_dir: Path | None, year: int) -> None:
    """Draw every spread table of one statement as an SVG overlay."""
    config = _load_config(models_dir, None, None, year)
    try:
        result = run_pipeline(parse_document(source), config)
    except (ParseError, PipelineError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    out.mkdir(parents=True, exist_ok=True)
    for table in result.spread_tables:
        svg = render_overlay(table.grid)
        path = out / f"{source.stem}.table_{table.table_index:03d}.svg"
        path.write_text(svg, encoding="utf-8")
    click.echo(f"rendered {len(result.spread_tables)} tables to {out}")


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate(source: Path) -> None:
    """Parse an ingestion file and report every warning."""
    try:
        doc = parse_document(source)
    except ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for warning in [*doc.parse_warnings, *validate_document(doc)]:
        click.echo(f"warning: {warning}")
    click.echo(
        f"ok: {len(doc.pages)} pages, {len(doc.tdc_objects)} category objects, "
        f"{len(doc.tsr_objects)} structure objects, {len(doc.ocr)} words"
    )


if __name__ == "__main__":
    main()
