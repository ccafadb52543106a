"""Online learning for factorization machines.

``theta_update`` is one SGD step with L2 penalties.  ``lambda_update`` treats
the incoming sample as a validation sample and moves the regularization
strengths along the gradient of the validation loss taken through one
anticipated SGD step.  ``incremental_step`` chains the two, regularization
first, which is what the streaming recommender calls once per event.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fm import _tally, check_dim, factor_sums, fm_gradient_squared_loss


@dataclass(frozen=True)
class UpdatePolicy:
    adaptive_regularization: bool = True
    # only read when adaptive_regularization is on
    anticipate_step: bool = True
    max_epochs: int = 30
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")


def theta_update(model, x, y, counter=None):
    """One SGD step on ``(y_hat(x) - y)^2`` plus the L2 penalties, in place.

    Only ``w0`` and the parameters of features active in ``x`` move.
    """
    grad = fm_gradient_squared_loss(model, x, y, counter)
    eta = model.eta
    idx = grad.indices
    model.w0 -= eta * (grad.dW0 + 2.0 * model.lambda0 * model.w0)
    w_act = model.w[idx]
    model.w[idx] = w_act - eta * (grad.dW + 2.0 * model.lambda_w * w_act)
    V_act = model.V[idx]
    model.V[idx] = V_act - eta * (grad.dV + 2.0 * model.lambda_v * V_act)
    _tally(counter, 3 * V_act.size + 3 * idx.size)
    return model


def lambda_gradient(model, x, y, anticipate_step=True, counter=None):
    """Gradient of the validation loss w.r.t. ``(lambda0, lambda_w, lambda_v)``.

    With ``anticipate_step`` the loss is evaluated at the parameters one SGD
    step ahead; since that step is affine in the lambdas the result is the
    exact derivative of the post-step loss.
    """
    check_dim(model, x)
    eta = model.eta
    idx = x.indices
    xv = x.values[:, None]
    Vx, s, sq = factor_sums(model, x, counter)
    w_act = model.w[idx]
    y_hat = model.w0 + float(w_act @ x.values) + 0.5 * float(s @ s - sq.sum())
    if anticipate_step:
        g = 2.0 * (y_hat - y)
        dV = g * (xv * s - Vx * (xv * xv))
        w0_next = model.w0 - eta * (g + 2.0 * model.lambda0 * model.w0)
        w_next = w_act - eta * (g * x.values + 2.0 * model.lambda_w * w_act)
        V_next = Vx - eta * (dV + 2.0 * model.lambda_v * Vx)
        weighted = V_next * xv
        s_next = weighted.sum(axis=0)
        sq_next = (weighted * weighted).sum(axis=0)
        y_next = w0_next + float(w_next @ x.values) + 0.5 * float(s_next @ s_next - sq_next.sum())
        _tally(counter, 8 * Vx.size)
    else:
        V_next, s_next, y_next = Vx, s, y_hat
    g_val = 2.0 * (y_next - y)
    d_lambda0 = g_val * (-2.0 * eta * model.w0)
    d_lambda_w = g_val * float(x.values @ (-2.0 * eta * w_act))
    dyhat_dV = xv * s_next - V_next * (xv * xv)
    d_lambda_v = g_val * (dyhat_dV * (-2.0 * eta * Vx)).sum(axis=0)
    _tally(counter, 3 * Vx.size + x.nnz)
    return d_lambda0, d_lambda_w, d_lambda_v


def lambda_update(model, x, y, anticipate_step=True, counter=None):
    """Projected gradient step on the regularization strengths, in place.

    The learning rate is the model's ``eta``; parameters are not modified.
    """
    d0, dw, dv = lambda_gradient(model, x, y, anticipate_step, counter)
    eta = model.eta
    model.lambda0 = max(0.0, model.lambda0 - eta * d0)
    model.lambda_w = max(0.0, model.lambda_w - eta * dw)
    model.lambda_v = np.maximum(0.0, model.lambda_v - eta * dv)
    return model


def incremental_step(model, x, policy, counter=None):
    """Process one positive event: optional lambda update, then theta update."""
    check_dim(model, x)
    if policy.adaptive_regularization:
        lambda_update(model, x, 1.0, policy.anticipate_step, counter)
    return theta_update(model, x, 1.0, counter)


def batch_train(model, train, policy):
    """Run ``policy.max_epochs`` shuffled SGD epochs over ``(x, y)`` pairs.

    Regularization strengths stay fixed here.  Epoch ``e`` is shuffled by a
    generator seeded with ``(policy.shuffle_seed, e)``.
    """
    if not train:
        raise ValueError("empty training set")
    for x, _ in train:
        check_dim(model, x)
    for epoch in range(policy.max_epochs):
        order = np.random.default_rng([policy.shuffle_seed, epoch]).permutation(len(train))
        for j in order:
            x, y = train[j]
            theta_update(model, x, y)
    return model


def grow_model(model, new_dim):
    """Extend the feature space to ``new_dim``.

    New linear weights are zero and new factor rows are Gaussian draws from
    the model's own generator, so growth is reproducible for a given seed.
    """
    if new_dim < model.d:
        raise ValueError(f"cannot shrink model from {model.d} to {new_dim}")
    extra = new_dim - model.d
    if extra == 0:
        return model
    model.w = np.concatenate([model.w, np.zeros(extra)])
    rows = model.rng.normal(0.0, model.init_sigma, size=(extra, model.k))
    model.V = np.vstack([model.V, rows])
    return model
