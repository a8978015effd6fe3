"""Watermark-removal and piracy attacks, with the success/failure verdict.

Every attack copies the incoming model, so runs are pure functions of
(model, data, seed). Fine-tuning attacks train on half of the test pairs
("attack half"); evaluation uses the held-out half.
"""

from dataclasses import dataclass

import numpy as np

from .graph import LinkDataset
from .nn import (FINAL_LAYER, AdamState, LinkPredictor, PairBatch, TrainConfig,
                 adam_step, batch_logits, evaluate_auc, loss_and_grads, softmax)
from .util import derive_seed
from .watermark import watermark_auc

FINETUNE_MODES = ("FTLL", "RTLL", "FTAL", "RTAL")

# utility drop an adversary is assumed unwilling to exceed
UTILITY_DROP_LIMIT = 0.10


@dataclass
class AttackReport:
    kind: str
    auc_test_pre: float
    auc_test_post: float
    auc_wm_pre: float
    auc_wm_post: float
    threshold: float
    verdict: str

    def to_json_dict(self) -> dict:
        return self.__dict__.copy()


def attack_verdict(auc_wm_post: float, auc_test_pre: float, auc_test_post: float,
                   threshold: float) -> str:
    """Removal fails (watermark wins) unless the trigger AUC fell to the
    threshold or below while utility dropped no more than 10 points."""
    removed = auc_wm_post <= threshold
    cheap = (auc_test_pre - auc_test_post) <= UTILITY_DROP_LIMIT
    return "watermark_failure" if (removed and cheap) else "watermark_success"


def make_report(kind: str, model_pre: LinkPredictor, model_post: LinkPredictor,
                eval_batch, wm, threshold: float) -> AttackReport:
    auc_test_pre = evaluate_auc(model_pre, eval_batch)
    auc_test_post = evaluate_auc(model_post, eval_batch)
    auc_wm_pre = watermark_auc(model_pre, wm)
    auc_wm_post = watermark_auc(model_post, wm)
    return AttackReport(kind, auc_test_pre, auc_test_post, auc_wm_pre, auc_wm_post,
                        threshold,
                        attack_verdict(auc_wm_post, auc_test_pre, auc_test_post, threshold))


def attacker_split(ds: LinkDataset, seed: int):
    """Random halves of the test pairs: (attack half, evaluation half),
    positives and negatives split separately so both halves stay balanced."""
    pairs, labels = ds.split_arrays("test")
    rng = np.random.default_rng(seed)
    halves = ([], [])
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        cut = len(idx) // 2
        halves[0].extend(idx[:cut].tolist())
        halves[1].extend(idx[cut:].tolist())
    first, second = (np.asarray(sorted(h)) for h in halves)
    mk = lambda sel: PairBatch(ds.mp_adjacency, ds.features, pairs[sel], labels[sel])
    return mk(first), mk(second)


def finetune(model: LinkPredictor, attack_batch, mode: str, epochs: int = 50,
             learning_rate: float = 1e-3, seed: int = 0) -> LinkPredictor:
    """FTLL/RTLL tune only the final decoder layer (RTLL reinitializes it
    first); FTAL/RTAL tune everything (RTAL reinitializes the final layer)."""
    if mode not in FINETUNE_MODES:
        raise ValueError(f"unknown fine-tuning mode {mode!r}")
    out = model.clone()
    if mode in ("RTLL", "RTAL"):
        out.reinit_final_layer(derive_seed(seed, "reinit"))
    trainable = set(FINAL_LAYER) if mode in ("FTLL", "RTLL") else set(out.params)
    opt = AdamState(learning_rate)
    for _ in range(epochs):
        _, grads = loss_and_grads(out, attack_batch)
        adam_step(opt, out.params, grads, trainable=trainable)
    return out


def prune(model: LinkPredictor, fraction: float) -> LinkPredictor:
    """Zero the floor(fraction * count) globally smallest-magnitude weight
    entries; biases are exempt."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    out = model.clone()
    names = out.weight_names()
    flat = np.concatenate([out.params[n].ravel() for n in names])
    k = int(np.floor(fraction * flat.size))
    if k == 0:
        return out
    cut = np.argsort(np.abs(flat), kind="stable")[:k]
    flat[cut] = 0.0
    pos = 0
    for n in names:
        size = out.params[n].size
        out.params[n] = flat[pos:pos + size].reshape(out.params[n].shape)
        pos += size
    return out


def quantize(model: LinkPredictor, bits: int = 3) -> LinkPredictor:
    """Uniform affine quantize-dequantize per tensor over [min, max] with
    2^bits levels."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    out = model.clone()
    levels = 2 ** bits - 1
    for name, w in out.params.items():
        lo, hi = float(w.min()), float(w.max())
        if hi == lo:
            continue
        step = (hi - lo) / levels
        out.params[name] = lo + np.round((w - lo) / step) * step
    return out


def fine_prune(model: LinkPredictor, fraction: float, mode: str, attack_batch,
               epochs: int = 50, learning_rate: float = 1e-3, seed: int = 0) -> LinkPredictor:
    """Prune then fine-tune; pruned entries are free to regrow."""
    return finetune(prune(model, fraction), attack_batch, mode, epochs=epochs,
                    learning_rate=learning_rate, seed=seed)


def _train_on_targets(surrogate: LinkPredictor, batch: PairBatch, targets: np.ndarray,
                      cfg: TrainConfig) -> LinkPredictor:
    opt = AdamState(cfg.learning_rate)
    for _ in range(cfg.epochs):
        _, grads = loss_and_grads(surrogate, batch, targets=targets)
        adam_step(opt, surrogate.params, grads)
    return surrogate


def _victim_targets(victim: LinkPredictor, batch: PairBatch, label_mode: str) -> np.ndarray:
    logits = batch_logits(victim, batch)
    probs = softmax(logits)
    if label_mode == "soft":
        return probs
    if label_mode == "hard":
        hard = np.argmax(probs, axis=1)
        onehot = np.zeros_like(probs)
        onehot[np.arange(len(hard)), hard] = 1.0
        return onehot
    raise ValueError(f"unknown label mode {label_mode!r}")


def extract(victim: LinkPredictor, surrogate_arch: str, label_mode: str,
            rounds: int, query_batch: PairBatch, cfg: TrainConfig) -> LinkPredictor:
    """Train a fresh surrogate on the victim's responses to the query pairs.
    Two rounds chain hard-label extraction victim -> s1 -> s2 over the same
    queries."""
    if rounds not in (1, 2):
        raise ValueError("rounds must be 1 or 2")
    if rounds == 2:
        label_mode = "hard"
    teacher = victim
    surrogate = None
    for r in range(rounds):
        targets = _victim_targets(teacher, query_batch, label_mode)
        surrogate = LinkPredictor.init(surrogate_arch, query_batch.features.shape[1],
                                       cfg.hidden_dim, derive_seed(cfg.seed, f"extract{r}"))
        _train_on_targets(surrogate, query_batch, targets, cfg)
        teacher = surrogate
    return surrogate


def distill(victim: LinkPredictor, student_arch: str, query_batch: PairBatch,
            cfg: TrainConfig, mix: float = 0.5) -> LinkPredictor:
    """Student trained on mix * victim soft targets + (1 - mix) * ground
    truth. Cross entropy is linear in the target, so the blend is a single
    target distribution; mix=1 reduces to soft extraction, mix=0 to plain
    training."""
    if not 0.0 <= mix <= 1.0:
        raise ValueError("mix must lie in [0, 1]")
    soft = _victim_targets(victim, query_batch, "soft")
    targets = mix * soft + (1.0 - mix) * query_batch.onehot_targets()
    student = LinkPredictor.init(student_arch, query_batch.features.shape[1],
                                 cfg.hidden_dim, derive_seed(cfg.seed, "distill"))
    return _train_on_targets(student, query_batch, targets, cfg)


def piracy_embed(stolen: LinkPredictor, pirated_wm, owner_wm, test_batch,
                 epochs: int, trace_every: int = 1,
                 learning_rate: float = 1e-3) -> list:
    """Embed the adversary's trigger set into a stolen model using only the
    trigger-phase updates, tracing (epoch, test AUC, owner trigger AUC,
    pirate trigger AUC) so the utility trade-off is observable."""
    model = stolen.clone()
    pirate_batch = pirated_wm.batch()
    opt = AdamState(learning_rate)

    def snapshot(epoch):
        return (epoch, evaluate_auc(model, test_batch),
                watermark_auc(model, owner_wm), watermark_auc(model, pirated_wm))

    trace = [snapshot(0)]
    for epoch in range(1, epochs + 1):
        _, grads = loss_and_grads(model, pirate_batch)
        adam_step(opt, model.params, grads)
        if epoch % trace_every == 0 or epoch == epochs:
            trace.append(snapshot(epoch))
    return trace
