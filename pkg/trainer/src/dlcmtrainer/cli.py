"""Command-line interface: train models, export CMX score tensors."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import torch

from .export import export_scores, export_strip_scores
from .model import build_model
from .train import TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def _load_corpus(folder):
    from PIL import Image

    paths = sorted(
        p
        for p in Path(folder).iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")
    )
    if not paths:
        raise FileNotFoundError(f"no images found in {folder}")
    images = []
    for p in paths:
        arr = np.asarray(Image.open(p))
        if arr.ndim == 2:
            arr = arr[:, :, None]
        images.append(arr)
    return images


def save_checkpoint(model, kind, piece_size, path):
    torch.save(
        {"kind": kind, "piece_size": piece_size, "state": model.state_dict()},
        path,
    )


def load_checkpoint(path):
    doc = torch.load(path, map_location="cpu", weights_only=True)
    model = build_model(doc["kind"], doc["piece_size"])
    model.load_state_dict(doc["state"])
    model.eval()
    return model


def cmd_train(args) -> int:
    corpus = _load_corpus(args.corpus)
    val = _load_corpus(args.val_corpus) if args.val_corpus else None
    model = build_model(args.model, args.piece_size)
    cfg = TrainConfig(
        piece_size=args.piece_size,
        epochs=args.epochs,
        batch_size=args.batch_size,
        steps_per_epoch=args.steps,
        lr=args.lr,
        loss=args.loss,
        seed=args.seed,
        augment=args.augment,
    )
    train(corpus, model, cfg, val_corpus=val, log_path=args.log)
    save_checkpoint(model, args.model, args.piece_size, args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    model = load_checkpoint(args.checkpoint)
    if args.strips:
        export_strip_scores(model, args.bundle, args.out, chunk=args.chunk)
    else:
        export_scores(model, args.bundle, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dlcm-trainer",
        description="Train pair-compatibility CNNs and export CMX tensors",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="train a model on an image folder")
    p.add_argument("--corpus", required=True)
    p.add_argument("--val-corpus", default=None)
    p.add_argument("--model", choices=("dlcm", "graynet"), required=True)
    p.add_argument("--piece-size", type=int, required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--loss", choices=("bce", "triplet"), default="bce")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--log", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export", help="score a bundle into a CMX file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--strips", action="store_true")
    p.add_argument("--chunk", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
