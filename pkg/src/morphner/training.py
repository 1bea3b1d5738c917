"""Per-sentence SGD training with clipping, checkpoints and dev selection."""
from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .evaluation import f1_score
from .numcore import TrainingError, make_rng, sgd_step
from .tagger import TaggerModel, read_model, save_model

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "last.ckpt"
BEST_NAME = "best.mner"


@dataclass
class TrainConfig:
    lr: float = 0.01
    clip_norm: float = 5.0
    dropout: float = 0.5
    epochs: int = 100
    seed: int = 0
    patience: int | None = None
    checkpoint_dir: str | None = None
    # stop as soon as dev F1 reaches this value
    target_f1: float | None = None
    log_path: str | None = None

    def __post_init__(self):
        if not self.lr >= 0:
            raise ValueError("lr must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class TrainReport:
    nll: list[float] = field(default_factory=list)
    dev_f1: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    best_epoch: int | None = None

    def to_dict(self):
        return {"nll": self.nll, "dev_f1": self.dev_f1, "seconds": self.seconds,
                "best_epoch": self.best_epoch}

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["nll"]), list(d["dev_f1"]), list(d["seconds"]), d["best_epoch"])


def evaluate(model: TaggerModel, sentences) -> float:
    gold = [s.labels for s in sentences]
    pred = [model.tag(s) for s in sentences]
    return f1_score(gold, pred).f1


def log_line(epoch: int, nll: float, dev_f1: float | None) -> str:
    dev = "NA" if dev_f1 is None else f"{dev_f1:.6f}"
    return f"epoch={epoch} nll={nll:.6f} devF1={dev}"


def train(model: TaggerModel, train_sentences, dev_sentences=None, cfg: TrainConfig | None = None,
          resume: str | os.PathLike | None = None):
    """Train ``model`` in place; returns ``(model, TrainReport)``.

    With ``cfg.checkpoint_dir`` set, the state after every epoch (parameters,
    generator state, report) is written to ``last.ckpt`` and the best dev
    model to ``best.mner``.  ``resume`` continues from such a checkpoint.
    """
    cfg = cfg or TrainConfig()
    train_sentences = list(train_sentences)
    if not train_sentences:
        raise ValueError("training set is empty")
    rng = make_rng(cfg.seed)
    report = TrainReport()
    best_f1, best_state = -1.0, None
    start_epoch = 0

    if resume is not None:
        ckpt, extras = read_model(resume)
        if extras is None or "rng_state" not in extras:
            raise ValueError(f"{resume} is not a training checkpoint")
        model.load_state(ckpt.state())
        rng.bit_generator.state = extras["rng_state"]
        report = TrainReport.from_dict(extras["report"])
        start_epoch = extras["epoch"]
        best_f1 = extras["best_f1"]
        if report.best_epoch is not None:
            best_path = os.path.join(os.path.dirname(os.fspath(resume)), BEST_NAME)
            best_state = read_model(best_path)[0].state()

    if cfg.checkpoint_dir:
        os.makedirs(cfg.checkpoint_dir, exist_ok=True)
    log_fh = open(cfg.log_path, "a", encoding="utf-8") if cfg.log_path else None
    params = model.trainable()
    stale = 0 if report.best_epoch is None else len(report.nll) - 1 - report.best_epoch
    try:
        for epoch in range(start_epoch, cfg.epochs):
            t0 = time.perf_counter()
            total = 0.0
            for idx in rng.permutation(len(train_sentences)):
                loss = model.loss(train_sentences[idx], train_mode=True, rng=rng, dropout=cfg.dropout)
                value = float(loss.value)
                if not math.isfinite(value):
                    raise TrainingError(f"non-finite loss at epoch {epoch + 1}, sentence {idx}")
                total += value
                loss.backward()
                sgd_step(params, cfg.lr, cfg.clip_norm)
            report.nll.append(total / len(train_sentences))

            dev_f1 = None
            if dev_sentences:
                dev_f1 = evaluate(model, dev_sentences)
                report.dev_f1.append(dev_f1)
                if dev_f1 > best_f1:
                    best_f1, best_state, stale = dev_f1, model.state(), 0
                    report.best_epoch = epoch
                    if cfg.checkpoint_dir:
                        save_model(model, os.path.join(cfg.checkpoint_dir, BEST_NAME))
                else:
                    stale += 1
            report.seconds.append(time.perf_counter() - t0)

            line = log_line(epoch + 1, report.nll[-1], dev_f1)
            logger.info(line)
            if log_fh:
                log_fh.write(line + "\n")
                log_fh.flush()
            if cfg.checkpoint_dir:
                extras = {"epoch": epoch + 1, "rng_state": rng.bit_generator.state,
                          "report": report.to_dict(), "best_f1": best_f1}
                save_model(model, os.path.join(cfg.checkpoint_dir, CHECKPOINT_NAME), extras)
            if cfg.target_f1 is not None and dev_f1 is not None and dev_f1 >= cfg.target_f1:
                break
            if cfg.patience is not None and stale >= cfg.patience:
                logger.info("early stop: no dev improvement for %d epochs", stale)
                break
    finally:
        if log_fh:
            log_fh.close()

    if best_state is not None:
        model.load_state(best_state)
    if report.best_epoch is None and not dev_sentences:
        report.best_epoch = len(report.nll) - 1
    return model, report


def mean_nll(model: TaggerModel, sentences) -> float:
    return float(np.mean([float(model.loss(s).value) for s in sentences]))
