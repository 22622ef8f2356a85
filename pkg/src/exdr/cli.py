"""Command-line entry points: ``exdr index | tune | run | report``."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import make_backend
from .confidence import DEFAULT_LEXICONS, SupportLexicons
from .core import load_corpus, load_dataset
from .errors import ExdrError
from .index import build_index, load_index, save_index
from .pipeline import (
    Mode,
    RunConfig,
    load_thresholds,
    report_from_outcomes,
    run as run_pipeline,
    tune as tune_thresholds,
)
from .prompts import PromptSet
from .trigger import SearchConfig


def _backend_options(fn):
    fn = click.option("--backend", "backend_kind", type=click.Choice(["http", "fixture"]),
                      default="http", show_default=True,
                      help="Model backend implementation.")(fn)
    fn = click.option("--backend-url", default=None,
                      help="HTTP backend base URL (default: env EXDR_BACKEND_URL).")(fn)
    fn = click.option("--fixtures", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="Trace file for the fixture backend.")(fn)
    return fn


def _build_backend(backend_kind, backend_url, fixtures):
    return make_backend(backend_kind, url=backend_url, fixtures=fixtures)


@click.group()
def main():
    """Dynamic retrieval-augmented verification of image-text claims."""


@main.command("index")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Corpus JSONL file.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Output index file.")
@click.option("--jobs", default=1, show_default=True, help="Parallel embed workers.")
@_backend_options
def index_cmd(corpus_path, out_path, jobs, backend_kind, backend_url, fixtures):
    """Embed a corpus into the searchable hybrid index."""
    backend = _build_backend(backend_kind, backend_url, fixtures)
    corpus = load_corpus(corpus_path)
    records, explanations = build_index(corpus, backend, jobs=jobs)
    save_index(out_path, records, explanations)
    click.echo(f"indexed {len(records)} corpus entries -> {out_path}")


@main.command("tune")
@click.option("--val", "val_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Labeled validation dataset JSONL.")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write thresholds.json.")
@click.option("--seed", default=0, show_default=True)
@click.option("--n-iter", default=100, show_default=True,
              help="Monte Carlo samples in the global stage.")
@click.option("--k-vote", default=10, show_default=True)
@click.option("--k-tok", default=10, show_default=True)
@click.option("--prompt3-literal", is_flag=True, default=False)
@click.option("--prompt-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--jobs", default=1, show_default=True)
@_backend_options
def tune_cmd(val_path, corpus_path, index_path, out_path, seed, n_iter, k_vote,
             k_tok, prompt3_literal, prompt_dir, jobs, backend_kind, backend_url,
             fixtures):
    """Search retrieval-trigger thresholds on a validation set."""
    backend = _build_backend(backend_kind, backend_url, fixtures)
    samples = load_dataset(val_path)
    corpus = load_corpus(corpus_path)
    records, explanations = load_index(index_path)
    cfg = RunConfig(
        modes=(Mode.FULL,),  # tuning touches every sample; thresholds come after
        k_vote=k_vote,
        k_tok=k_tok,
        prompt3_literal=prompt3_literal,
        prompts=PromptSet.from_dir(prompt_dir),
        jobs=jobs,
    )
    payload = tune_thresholds(
        samples, backend, cfg, corpus, records, explanations,
        search=SearchConfig(n_iter=n_iter, rng_seed=seed),
    )
    with open(out_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")
    click.echo(
        f"thresholds: label<{payload['theta_label']:.4f} tok<{payload['theta_tok']:.4f} "
        f"sent<{payload['theta_sent']:.4f} (val score {payload['val_score']}) -> {out_path}"
    )


@main.command("run")
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", "modes", default="dynamic", show_default=True,
              help="Single mode: no, full, or dynamic.")
@click.option("--modes", "multi_modes", default=None,
              help="Comma-separated modes sharing one plain pass, e.g. no,full,dynamic.")
@click.option("--thresholds", "thresholds_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="thresholds.json from `exdr tune` (dynamic mode).")
@click.option("--k-vote", default=10, show_default=True)
@click.option("--k-tok", default=10, show_default=True)
@click.option("--prompt3-literal", is_flag=True, default=False)
@click.option("--prompt-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--lexicons", "lexicons_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON override for the token-support lexicons.")
@click.option("--seed", default=0, show_default=True,
              help="Seed for any seeded component; inference is deterministic.")
@click.option("--jobs", default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Directory for summary.json and outcomes.jsonl.")
@_backend_options
def run_cmd(dataset_path, corpus_path, index_path, modes, multi_modes,
            thresholds_path, k_vote, k_tok, prompt3_literal, prompt_dir,
            lexicons_path, seed, jobs, out_dir, backend_kind, backend_url, fixtures):
    """Run detection over a dataset and write the report."""
    backend = _build_backend(backend_kind, backend_url, fixtures)
    mode_names = multi_modes.split(",") if multi_modes else [modes]
    try:
        mode_list = tuple(Mode(name.strip()) for name in mode_names)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    thresholds = load_thresholds(thresholds_path) if thresholds_path else None
    lexicons = (
        SupportLexicons.from_json(lexicons_path) if lexicons_path else DEFAULT_LEXICONS
    )
    cfg = RunConfig(
        modes=mode_list,
        thresholds=thresholds,
        k_vote=k_vote,
        k_tok=k_tok,
        prompt3_literal=prompt3_literal,
        prompts=PromptSet.from_dir(prompt_dir),
        lexicons=lexicons,
        jobs=jobs,
        seed=seed,
    )
    samples = load_dataset(dataset_path)
    corpus = load_corpus(corpus_path) if corpus_path else None
    records = explanations = None
    if index_path:
        records, explanations = load_index(index_path)
    result = run_pipeline(
        samples, backend, cfg,
        corpus=corpus, index=records, explanations=explanations, out_dir=out_dir,
    )
    click.echo(json.dumps(result.summary, sort_keys=True, indent=2))


@main.command("report")
@click.option("--outcomes", "outcomes_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Dataset with gold labels for re-scoring.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Optional path for the recomputed summary.json.")
def report_cmd(outcomes_path, dataset_path, out_path):
    """Recompute the summary report from a written outcomes file."""
    samples = load_dataset(dataset_path)
    summary = report_from_outcomes(outcomes_path, samples)
    rendered = json.dumps(summary, sort_keys=True, indent=2)
    if out_path:
        Path(out_path).write_text(rendered + "\n", encoding="utf-8")
    click.echo(rendered)


def entrypoint():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except ExdrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
