"""Command-line interface for the analysis engine and review service."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import evolution, synth
from .config import Config, load_config
from .pipeline import (PipelineError, load_entities, phash_popularity,
                       run_pipeline)
from .service import Engine, create_app
from .store import CorpusFormatError, EmbeddingStore


def _config(config_path: str | None, overrides: tuple[str, ...],
            **direct) -> Config:
    pairs = {}
    for item in overrides:
        if "=" not in item:
            raise click.UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key] = value
    for key, value in direct.items():
        if value is not None:
            pairs[key] = value
    return load_config(config_path, pairs)


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="TOML or JSON config file.")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Override a config key (dotted path).")(fn)
    return fn


def _engine(cfg: Config) -> Engine:
    store = EmbeddingStore.ingest(cfg.embeddings, cfg.metadata)
    return Engine(store, cfg.out_dir)


@click.group()
def main():
    """Multimodal embedding analytics and meme-variant review tooling."""


@main.command()
@_common
@click.option("--embeddings", default=None, help="EMB1 corpus file.")
@click.option("--metadata", default=None, help="JSONL metadata sidecar.")
def ingest(config_path, overrides, embeddings, metadata):
    """Validate and summarize a corpus (also the EMB1 format checker)."""
    cfg = _config(config_path, overrides,
                  **{"embeddings": embeddings, "metadata": metadata})
    try:
        store = EmbeddingStore.ingest(cfg.embeddings, cfg.metadata or None)
    except (CorpusFormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    summary = store.summary()
    click.echo(json.dumps(summary, sort_keys=True, indent=2))
    if summary["rejected_zero_vector_ids"]:
        click.echo(f"warning: rejected {len(summary['rejected_zero_vector_ids'])} "
                   "zero-vector records", err=True)
        sys.exit(2)


@main.command("synth")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=7, show_default=True)
@click.option("--dimension", default=512, show_default=True)
@click.option("--clusters", default=8, show_default=True)
@click.option("--cluster-size", default=150, show_default=True)
@click.option("--triplets", default=200, show_default=True)
@click.option("--triplet-noise", default=0.01, show_default=True)
@click.option("--entities", default=30, show_default=True)
@click.option("--background", default=8269, show_default=True)
def synth_cmd(out_dir, seed, dimension, clusters, cluster_size, triplets,
              triplet_noise, entities, background):
    """Generate a synthetic corpus with planted ground truth."""
    spec = synth.SynthSpec(
        seed=seed, dimension=dimension,
        clusters=synth.ClusterBlueprint(count=clusters, size=cluster_size),
        triplets=synth.TripletBlueprint(count=triplets, noise=triplet_noise),
        entities=synth.EntityBlueprint(count=entities,
                                       duplicated=min(5, entities)),
        background_posts=background)
    manifest = synth.generate(spec, out_dir)
    click.echo(json.dumps({"out_dir": str(out_dir), "counts": manifest["counts"]},
                          sort_keys=True, indent=2))


def _run_stage(config_path, overrides, until, command):
    cfg = _config(config_path, overrides)
    try:
        result = run_pipeline(cfg, command=command, until=until)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"out_dir": str(result.out_dir),
                           "artifacts": sorted(result.manifest.outputs)},
                          sort_keys=True, indent=2))


@main.command()
@_common
@click.option("--eps", type=float, default=None)
@click.option("--min-samples", type=int, default=None)
@click.option("--source", type=click.Choice(["image", "text", "fused"]), default=None)
def cluster(config_path, overrides, eps, min_samples, source):
    """DBSCAN over the configured embedding source."""
    cfg_overrides = {"cluster.eps": eps, "cluster.min_samples": min_samples,
                     "cluster.source": source}
    cfg = _config(config_path, overrides,
                  **{k: v for k, v in cfg_overrides.items() if v is not None})
    try:
        result = run_pipeline(cfg, command="cluster", until="cluster")
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"out_dir": str(result.out_dir),
                           "clusters": len(result.clusters)}, indent=2))


@main.command()
@_common
def annotate(config_path, overrides):
    """Cluster, then annotate surviving clusters with key phrases."""
    _run_stage(config_path, overrides, "annotate", "annotate")


@main.command()
@_common
def score(config_path, overrides):
    """Cluster, annotate, and hate-score clusters with the configured providers."""
    _run_stage(config_path, overrides, "score", "score")


@main.command()
@_common
def communities(config_path, overrides):
    """Full clustering pipeline through community detection."""
    _run_stage(config_path, overrides, "communities", "communities")


@main.command()
@_common
def run(config_path, overrides):
    """Run the whole pipeline, including configured evolution searches."""
    _run_stage(config_path, overrides, "entities", "run")


@main.command()
@_common
@click.option("--origin", type=int, required=True)
@click.option("--lo", type=float, default=None)
@click.option("--hi", type=float, default=None)
@click.option("--preset", type=click.Choice(sorted(evolution.PRESETS)), default=None)
def variants(config_path, overrides, origin, lo, hi, preset):
    """Live variant-band search around an origin image."""
    cfg = _config(config_path, overrides)
    if preset is not None:
        t = evolution.PRESETS[preset]
        lo = t.variant_lo if lo is None else lo
        hi = t.variant_hi if hi is None else hi
    if lo is None or hi is None:
        raise click.UsageError("provide --preset or both --lo and --hi")
    engine = _engine(cfg)
    hits = engine.search_variants(origin, lo, hi)
    click.echo(json.dumps(hits, indent=2))


@main.command("entity-variants")
@_common
@click.option("--origin", type=int, required=True)
@click.option("--entities", "entity_file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_file", type=click.Path(), default=None)
def entity_variants_cmd(config_path, overrides, origin, entity_file, out_file):
    """Directed variant per entity via cross-modal fusion and popularity."""
    cfg = _config(config_path, overrides)
    store = EmbeddingStore.ingest(cfg.embeddings, cfg.metadata or None)
    found = evolution.entity_variants(origin, load_entities(entity_file, store),
                                      store, phash_popularity(store))
    payload = json.dumps([
        {"surface": v.entity.surface, "category": v.entity.category.value,
         "variant_id": v.variant_id, "similarity": v.similarity,
         "post_count": v.post_count} for v in found
    ], sort_keys=True, indent=2)
    if out_file:
        Path(out_file).write_text(payload + "\n", encoding="utf-8")
    click.echo(payload)


_SHEET_HTML = """<!doctype html>
<html><head><meta charset="utf-8"><title>sweep {t}</title></head>
<body><h1>threshold {t} ({n} samples, {eligible} eligible)</h1>
<div style="display:flex;flex-wrap:wrap;gap:8px">{cells}</div></body></html>
"""


@main.command()
@_common
@click.option("--origin", type=int, required=True)
@click.option("--lo-from", "lo_from", type=float, default=0.81, show_default=True)
@click.option("--lo-to", "lo_to", type=float, default=0.95, show_default=True)
@click.option("--step", type=float, default=0.01, show_default=True)
@click.option("--sample-n", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--name", default=None, help="Sweep id (defaults to the origin id).")
@click.option("--labels", "labels_file", type=click.Path(exists=True), default=None,
              help="CSV (id,label) with tp/fp labels; computes FP%% per threshold.")
def sweep(config_path, overrides, origin, lo_from, lo_to, step, sample_n, seed,
          name, labels_file):
    """Threshold sweep: emit labeling sheets, or score attached labels."""
    cfg = _config(config_path, overrides)
    store = EmbeddingStore.ingest(cfg.embeddings, cfg.metadata or None)
    sheets = evolution.sweep(origin, store, lo_from, lo_to, step, sample_n, seed)
    sweep_id = name or str(origin)
    sweep_dir = Path(cfg.out_dir) / "sweeps" / sweep_id
    sweep_dir.mkdir(parents=True, exist_ok=True)

    if labels_file:
        labels = {}
        with open(labels_file, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                labels[int(row["id"])] = row["label"].strip()
        rates = evolution.false_positive_rates(sheets, labels)
        out = sweep_dir / "fp_rates.json"
        out.write_text(json.dumps(rates, sort_keys=True, indent=2) + "\n",
                       encoding="utf-8")
        click.echo(json.dumps(rates, indent=2))
        return

    for sheet in sheets:
        t = f"{sheet.threshold:g}"
        (sweep_dir / f"sheet_{t}.json").write_text(sheet.to_json() + "\n",
                                                   encoding="utf-8")
        cells = "".join(
            f'<figure><img src="{store.metadata(i).media_path or ""}" width="160">'
            f"<figcaption>id {i} sim {s:.4f}</figcaption></figure>"
            for i, s in zip(sheet.sample_ids, sheet.similarities))
        (sweep_dir / f"sheet_{t}.html").write_text(
            _SHEET_HTML.format(t=t, n=len(sheet.sample_ids),
                               eligible=sheet.eligible, cells=cells),
            encoding="utf-8")
    click.echo(json.dumps({"sweep": sweep_id, "sheets": len(sheets),
                           "dir": str(sweep_dir)}, indent=2))


@main.command()
@_common
@click.option("--group", type=int, required=True, help="Any image id in the phash group.")
@click.option("--start", type=int, default=None, help="Epoch seconds, inclusive.")
@click.option("--end", type=int, default=None, help="Epoch seconds, exclusive.")
@click.option("--out", "out_file", type=click.Path(), default=None)
def timeline(config_path, overrides, group, start, end, out_file):
    """Weekly post counts for one perceptual-hash group."""
    cfg = _config(config_path, overrides)
    engine = _engine(cfg)
    time_range = (start, end) if start is not None and end is not None else None
    series = engine.timeline(group, time_range)
    if out_file:
        Path(out_file).write_text(series.to_csv(), encoding="utf-8")
        sibling = Path(out_file).with_suffix(".json")
        sibling.write_text(series.to_json() + "\n", encoding="utf-8")
    click.echo(series.to_csv(), nl=False)


@main.command()
@_common
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, overrides, host, port):
    """Serve run artifacts, live search, and the verdict endpoint."""
    import uvicorn

    cfg = _config(config_path, overrides)
    app = create_app(_engine(cfg))
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port)


@main.command()
@_common
@click.option("--out", "out_file", type=click.Path(), default=None)
def export(config_path, overrides, out_file):
    """Export moderator-confirmed triplets/variants as JSON Lines."""
    cfg = _config(config_path, overrides)
    engine = _engine(cfg)
    lines = [json.dumps(item, sort_keys=True) for item in engine.confirmed()]
    payload = "".join(line + "\n" for line in lines)
    if out_file:
        Path(out_file).write_text(payload, encoding="utf-8")
    click.echo(payload, nl=False)


if __name__ == "__main__":
    main()
