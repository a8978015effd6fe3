"""Watermark embedding: the interleaved two-step procedure and four baseline
schemes it is benchmarked against.

All methods run full-batch gradients (the datasets are desk scale, and it
removes a hyperparameter). Each training function mutates and returns the
model it was given.
"""

import numpy as np

from .nn import AdamState, LinkPredictor, TrainConfig, adam_step, loss_and_grads


class NonFiniteLoss(RuntimeError):
    def __init__(self, method: str, epoch: int, loss: float):
        super().__init__(f"{method}: non-finite loss {loss} at epoch {epoch}")


def _checked(loss: float, method: str, epoch: int) -> float:
    if not np.isfinite(loss):
        raise NonFiniteLoss(method, epoch, loss)
    return loss


def _flatten(grads: dict, order) -> np.ndarray:
    return np.concatenate([grads[name].ravel() for name in order])


def _unflatten(vec: np.ndarray, template: dict, order) -> dict:
    out = {}
    pos = 0
    for name in order:
        size = template[name].size
        out[name] = vec[pos:pos + size].reshape(template[name].shape)
        pos += size
    return out


def train_clean(model: LinkPredictor, train_batch, cfg: TrainConfig) -> LinkPredictor:
    """Plain training on the task data only."""
    opt = AdamState(cfg.learning_rate)
    for epoch in range(cfg.epochs):
        loss, grads = loss_and_grads(model, train_batch)
        _checked(loss, "train", epoch)
        adam_step(opt, model.params, grads)
    return model


def embed_interleaved(model: LinkPredictor, train_batch, wm_batch,
                      cfg: TrainConfig) -> LinkPredictor:
    """Per epoch: task gradient, optimizer update, trigger-set gradient,
    second update through the same optimizer state. An empty trigger set
    degenerates to plain training."""
    opt = AdamState(cfg.learning_rate)
    for epoch in range(cfg.epochs):
        loss, grads = loss_and_grads(model, train_batch)
        _checked(loss, "interleaved/task", epoch)
        adam_step(opt, model.params, grads)
        if wm_batch is None or len(wm_batch) == 0:
            continue
        wm_loss, wm_grads = loss_and_grads(model, wm_batch)
        _checked(wm_loss, "interleaved/trigger", epoch)
        adam_step(opt, model.params, wm_grads)
    return model


def embed_finetune_baseline(clean_model: LinkPredictor, wm_batch,
                            cfg: TrainConfig, epochs: int = 50) -> LinkPredictor:
    """Fine-tune a pre-trained clean model on the trigger set alone."""
    opt = AdamState(cfg.learning_rate)
    for epoch in range(epochs):
        loss, grads = loss_and_grads(clean_model, wm_batch)
        _checked(loss, "finetune", epoch)
        adam_step(opt, clean_model.params, grads)
    return clean_model


def embed_poison_baseline(model: LinkPredictor, train_batch, wm_batch,
                          cfg: TrainConfig) -> LinkPredictor:
    """Trigger samples merged into the training set: one update per epoch on
    the mean loss over the combined pool."""
    n_t, n_w = len(train_batch), len(wm_batch)
    total = n_t + n_w
    opt = AdamState(cfg.learning_rate)
    for epoch in range(cfg.epochs):
        loss_t, grads_t = loss_and_grads(model, train_batch)
        loss_w, grads_w = loss_and_grads(model, wm_batch)
        _checked(loss_t + loss_w, "poison", epoch)
        merged = {name: (n_t * grads_t[name] + n_w * grads_w[name]) / total
                  for name in grads_t}
        adam_step(opt, model.params, merged)
    return model


def embed_uniform_baseline(model: LinkPredictor, train_batch, wm_batch,
                           cfg: TrainConfig) -> LinkPredictor:
    """Single update per epoch on the summed losses (gradients added with
    unit weights)."""
    opt = AdamState(cfg.learning_rate)
    for epoch in range(cfg.epochs):
        loss_t, grads_t = loss_and_grads(model, train_batch)
        loss_w, grads_w = loss_and_grads(model, wm_batch)
        _checked(loss_t + loss_w, "uniform", epoch)
        summed = {name: grads_t[name] + grads_w[name] for name in grads_t}
        adam_step(opt, model.params, summed)
    return model


def min_norm_coefficient(g1: np.ndarray, g2: np.ndarray) -> float:
    """Weight on g1 minimizing ||a*g1 + (1-a)*g2|| over a in [0, 1].

    Closed-form two-task solution: a = ((g2 - g1) . g2) / ||g1 - g2||^2,
    clipped; the 0/0 case (equal gradients) is defined as 0.5.
    """
    diff = g1 - g2
    denom = float(diff @ diff)
    if denom == 0.0:
        return 0.5
    alpha = float((g2 - g1) @ g2) / denom
    return min(max(alpha, 0.0), 1.0)


def embed_mgda_baseline(model: LinkPredictor, train_batch, wm_batch,
                        cfg: TrainConfig) -> LinkPredictor:
    """Per epoch, step along the min-norm convex combination of the two task
    gradients."""
    order = sorted(model.params)
    opt = AdamState(cfg.learning_rate)
    for epoch in range(cfg.epochs):
        loss_t, grads_t = loss_and_grads(model, train_batch)
        loss_w, grads_w = loss_and_grads(model, wm_batch)
        _checked(loss_t + loss_w, "mgda", epoch)
        g1 = _flatten(grads_t, order)
        g2 = _flatten(grads_w, order)
        a1 = min_norm_coefficient(g1, g2)
        combined = _unflatten(a1 * g1 + (1.0 - a1) * g2, model.params, order)
        adam_step(opt, model.params, combined)
    return model


EMBED_METHODS = {
    "genie": embed_interleaved,
    "poison": embed_poison_baseline,
    "uniform": embed_uniform_baseline,
    "mgda": embed_mgda_baseline,
}


def embed_with_method(method: str, model: LinkPredictor, train_batch, wm_batch,
                      cfg: TrainConfig) -> LinkPredictor:
    """Dispatch on the config's method token. "finetune" first trains a clean
    model for cfg.epochs, then fine-tunes on the trigger set for 50 epochs."""
    if method == "finetune":
        train_clean(model, train_batch, cfg)
        return embed_finetune_baseline(model, wm_batch, cfg)
    if method not in EMBED_METHODS:
        raise ValueError(f"unknown embedding method {method!r}")
    return EMBED_METHODS[method](model, train_batch, wm_batch, cfg)
