"""Command-line entry points for the adapter."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from .encode import CorpusManifest, encode_corpus
from .entities import extract_entities, write_entity_lists


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="memescope-adapter",
        description="Convert a posts corpus into EMB1 + metadata, or extract entity lists.")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode posts into EMB1 + metadata")
    enc.add_argument("posts", type=Path)
    enc.add_argument("--out-embeddings", type=Path, required=True)
    enc.add_argument("--out-metadata", type=Path, required=True)
    enc.add_argument("--encoder", default="hash",
                     help="'hash' or 'module:factory' (default: hash)")
    enc.add_argument("--dimension", type=int, default=512)
    enc.add_argument("--batch-size", type=int, default=64)

    ent = sub.add_parser("entities", help="extract top-N entities per category")
    ent.add_argument("posts", type=Path)
    ent.add_argument("--out-dir", type=Path, required=True)
    ent.add_argument("--top-n", type=int, default=30)

    args = parser.parse_args(argv)
    if args.command == "encode":
        report = encode_corpus(CorpusManifest(
            posts_file=args.posts, out_embeddings=args.out_embeddings,
            out_metadata=args.out_metadata, encoder=args.encoder,
            dimension=args.dimension, batch_size=args.batch_size))
        print(json.dumps(report.summary(), sort_keys=True, indent=2))
        return 0
    ranked = extract_entities(args.posts, top_n=args.top_n)
    paths = write_entity_lists(ranked, args.out_dir)
    print(json.dumps({c: str(p) for c, p in paths.items()}, sort_keys=True,
                     indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
