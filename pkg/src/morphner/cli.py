"""Command-line interface: train, tag, eval, compare, gradcheck, inspect-morpho."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .corpus import CorpusFormatError, Token, load_corpus, load_embeddings, read_blocks
from .evaluation import f1_score, format_mcnemar, format_table, mcnemar, to_records
from .gradcheck import check_gradients, tiny_model
from .morpho import MorphFormatError, Scheme, parse_analysis, project
from .tagger import ModelFormatError, TaggerConfig, TaggerModel, atomic_write, load_model, save_model
from .training import TrainConfig, train

SCHEMES = ["wr", "wor", "wr_adb", "char", "none"]

# every train flag that may also come from --config
TRAIN_KEYS = {
    "train", "dev", "embeddings", "model", "scheme", "char_embeddings", "word_dim", "char_dim",
    "morph_dim", "hidden_dim", "char_input_dim", "morph_input_dim", "lr", "clip_norm", "dropout",
    "epochs", "patience", "seed", "fine_tune_words", "constrained_decoding", "checkpoint_dir",
    "log", "strict_iob",
}


class CliError(Exception):
    pass


def on_off(value: str) -> bool:
    if value.lower() in ("on", "true", "yes", "1"):
        return True
    if value.lower() in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="morphner", description=__doc__, formatter_class=fmt,
                                     allow_abbrev=False)
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a tagger", formatter_class=fmt, allow_abbrev=False)
    parser.train_parser = p
    p.add_argument("--config", help="JSON file of flag values (explicit flags win)")
    p.add_argument("--train", help="training corpus (required)")
    p.add_argument("--dev", help="dev corpus for model selection")
    p.add_argument("--embeddings", help="pretrained word vectors (text format)")
    p.add_argument("--model", default="model.mner", help="output model file")
    p.add_argument("--scheme", choices=SCHEMES, default="wor", help="morphological embedding scheme")
    p.add_argument("--char-embeddings", type=on_off, default=True, metavar="{on,off}",
                   help="character embeddings")
    p.add_argument("--word-dim", type=int, default=100, help="word embedding size d_w")
    p.add_argument("--char-dim", type=int, default=100, help="char Bi-LSTM size per direction d_c")
    p.add_argument("--morph-dim", type=int, default=100, help="morph Bi-LSTM size per direction d_m")
    p.add_argument("--hidden-dim", type=int, default=100, help="sentence Bi-LSTM size per direction")
    p.add_argument("--char-input-dim", type=int, default=25, help="character symbol vector size")
    p.add_argument("--morph-input-dim", type=int, default=25, help="morph symbol vector size")
    p.add_argument("--lr", type=float, default=0.01, help="SGD learning rate")
    p.add_argument("--clip-norm", type=float, default=5.0, help="global gradient norm clip")
    p.add_argument("--dropout", type=float, default=0.5, help="input dropout rate")
    p.add_argument("--epochs", type=int, default=100, help="maximum epochs")
    p.add_argument("--patience", type=int, default=None, help="early-stopping patience (dev epochs)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--fine-tune-words", type=on_off, default=True, metavar="{on,off}",
                   help="update word embeddings during training")
    p.add_argument("--constrained-decoding", type=on_off, default=False, metavar="{on,off}",
                   help="forbid invalid IOB transitions when decoding")
    p.add_argument("--checkpoint-dir", default=None, help="directory for per-epoch checkpoints")
    p.add_argument("--log", default=None, help="training log file (default: <model>.log)")
    p.add_argument("--strict-iob", action="store_true", help="reject IOB1-style span openings")

    p = sub.add_parser("tag", help="append predicted labels to a corpus", formatter_class=fmt,
                       allow_abbrev=False)
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--input", required=True, help="2- or 3-column corpus")
    p.add_argument("--output", default="-", help="output file ('-' for stdout)")

    p = sub.add_parser("eval", help="entity-level precision/recall/F1", formatter_class=fmt,
                       allow_abbrev=False)
    p.add_argument("--gold", required=True, help="gold corpus (label in column 3)")
    p.add_argument("--pred", required=True, help="predicted corpus (label in last column)")
    p.add_argument("--format", choices=["table", "records"], default="table", help="output style")

    p = sub.add_parser("compare", help="McNemar's test between two predictions",
                       formatter_class=fmt, allow_abbrev=False)
    p.add_argument("--gold", required=True, help="gold corpus")
    p.add_argument("--pred-a", required=True, help="predictions of system A")
    p.add_argument("--pred-b", required=True, help="predictions of system B")
    p.add_argument("--unit", choices=["token", "entity"], default="token", help="correctness unit")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check on a tiny model",
                       formatter_class=fmt, allow_abbrev=False)
    p.add_argument("--seed", type=int, default=0, help="seed of the random tiny model")
    p.add_argument("--scheme", choices=SCHEMES[:-1], default="wr", help="morph scheme of the tiny model")
    p.add_argument("--eps", type=float, default=1e-5, help="finite-difference step")
    p.add_argument("--tolerance", type=float, default=1e-4, help="max allowed relative error")

    p = sub.add_parser("inspect-morpho", help="show the projections of an analysis",
                       formatter_class=fmt, allow_abbrev=False)
    p.add_argument("--analysis", required=True, help="analysis string, e.g. ev+Noun+A3pl+P3sg+Loc")
    return parser


def _merge_config(parser, argv, args):
    with open(args.config, encoding="utf-8") as fh:
        values = json.load(fh)
    values = {k.replace("-", "_"): v for k, v in values.items()}
    unknown = sorted(set(values) - TRAIN_KEYS)
    if unknown:
        raise CliError(f"unknown keys in {args.config}: {', '.join(unknown)}")
    parser.train_parser.set_defaults(**values)
    return parser.parse_args(argv)


def cmd_train(args) -> int:
    sentences = load_corpus(args.train, strict=args.strict_iob)
    if not sentences:
        raise CliError(f"{args.train}: no sentences")
    dev = load_corpus(args.dev, strict=args.strict_iob) if args.dev else None
    embeddings = load_embeddings(args.embeddings, args.word_dim) if args.embeddings else None
    config = TaggerConfig(
        d_w=args.word_dim, d_c=args.char_dim, d_m=args.morph_dim, p=args.hidden_dim,
        use_char=args.char_embeddings, morph_scheme=None if args.scheme == "none" else args.scheme,
        dropout_rate=args.dropout, seed=args.seed, char_input_dim=args.char_input_dim,
        morph_input_dim=args.morph_input_dim, fine_tune_words=args.fine_tune_words,
        constrained_decoding=args.constrained_decoding,
    )
    model = TaggerModel.build(config, sentences, embeddings)
    log_path = args.log or args.model + ".log"
    atomic_write(log_path, b"")
    cfg = TrainConfig(lr=args.lr, clip_norm=args.clip_norm, dropout=args.dropout, epochs=args.epochs,
                      seed=args.seed, patience=args.patience, checkpoint_dir=args.checkpoint_dir,
                      log_path=log_path)
    model, report = train(model, sentences, dev, cfg)
    save_model(model, args.model)
    print(f"wrote {args.model} ({len(report.nll)} epochs, final nll {report.nll[-1]:.4f})")
    return 0


def _read_tokens(block):
    tokens = []
    for lineno, cols in block:
        if len(cols) < 2:
            raise CorpusFormatError("expected at least 2 columns", lineno)
        try:
            tokens.append(Token(cols[0], parse_analysis(cols[1])))
        except MorphFormatError as exc:
            raise CorpusFormatError(str(exc), lineno) from None
    return tokens


def cmd_tag(args) -> int:
    model = load_model(args.model)
    lines = []
    for block in read_blocks(args.input):
        labels = model.tag(_read_tokens(block))
        for (_, cols), label in zip(block, labels):
            lines.append(" ".join(cols + [label]))
        lines.append("")
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.output == "-":
        sys.stdout.write(text)
    else:
        atomic_write(args.output, text.encode("utf-8"))
    return 0


def _label_columns(path, column):
    """Per-sentence (surfaces, labels) taken from ``column`` (-1 = last)."""
    out = []
    for block in read_blocks(path):
        surfaces, labels = [], []
        for lineno, cols in block:
            if len(cols) < 3:
                raise CorpusFormatError("expected a label column", lineno, path)
            surfaces.append(cols[0])
            labels.append(cols[column])
        out.append((surfaces, labels))
    return out


def _aligned(gold_path, *pred_paths):
    gold = _label_columns(gold_path, 2)
    preds = []
    for path in pred_paths:
        pred = _label_columns(path, -1)
        for i in range(max(len(gold), len(pred))):
            if i >= len(gold) or i >= len(pred) or gold[i][0] != pred[i][0]:
                raise CliError(f"{path} diverges from {gold_path} at sentence {i}")
        preds.append([labels for _, labels in pred])
    return [labels for _, labels in gold], preds


def cmd_eval(args) -> int:
    gold, (pred,) = _aligned(args.gold, args.pred)
    result = f1_score(gold, pred)
    if args.format == "table":
        print(format_table(result))
    else:
        print("\n".join(to_records(result)))
    return 0


def cmd_compare(args) -> int:
    gold, (a, b) = _aligned(args.gold, args.pred_a, args.pred_b)
    print(format_mcnemar(mcnemar(gold, a, b, unit=args.unit)))
    return 0


def cmd_gradcheck(args) -> int:
    model, sentences = tiny_model(seed=args.seed, scheme=args.scheme)
    errors = check_gradients(model, sentences, eps=args.eps)
    worst = 0.0
    for name, err in errors.items():
        status = "ok" if err <= args.tolerance else "FAIL"
        print(f"{name:<18} max_rel_err={err:.3e} {status}")
        worst = max(worst, err)
    print(f"overall max_rel_err={worst:.3e} tolerance={args.tolerance:.0e}")
    return 0 if worst <= args.tolerance else 1


def cmd_inspect_morpho(args) -> int:
    a = parse_analysis(args.analysis)
    print(f"root: {a.root}")
    print("groups: " + " | ".join("+".join(g) for g in a.groups))
    for scheme in Scheme:
        print(f"{scheme.name}: {' '.join(project(a, scheme))}")
    return 0


def _usage_problem(args):
    if args.command == "train" and not args.train:
        return "the following arguments are required: --train"
    if args.command == "inspect-morpho" and not args.analysis:
        return "--analysis must be non-empty"
    return None


COMMANDS = {
    "train": cmd_train,
    "tag": cmd_tag,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "gradcheck": cmd_gradcheck,
    "inspect-morpho": cmd_inspect_morpho,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "train" and args.config:
            args = _merge_config(parser, argv, args)
        usage = _usage_problem(args)
        if usage:
            print(f"morphner {args.command}: error: {usage}", file=sys.stderr)
            return 2
        return COMMANDS[args.command](args)
    except (CliError, CorpusFormatError, MorphFormatError, ModelFormatError, ValueError, OSError) as exc:
        print(f"morphner {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
