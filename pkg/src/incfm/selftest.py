"""Randomized oracle suites run by ``incfm selftest``.

Every suite compares an optimized routine against an independent reference
on small random instances: the factored FM prediction against the explicit
pairwise sum, analytic gradients against central finite differences, the
regularization gradient against finite differences taken through an actual
SGD step, and the streaming metrics against brute-force recomputation.

``perturb`` is a negative-control hook: naming a component scales that
analytic quantity by ``1 + PERTURBATION`` before comparison, which must make
the matching suite fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fm import SparseVector, fm_gradient_squared_loss, fm_init, fm_predict, fm_predict_naive
from .mf import MfModel, imf_update
from .online import lambda_gradient, theta_update
from .prequential import EvalState

PERTURBATION = 1e-3
COMPONENTS = ("dW0", "dW", "dV", "imf_p", "imf_q", "lambda0", "lambda_w", "lambda_v")


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    max_error: float = 0.0
    tolerance: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def check(self, component, error, case):
        self.max_error = max(self.max_error, error)
        if not error <= self.tolerance:
            self.failures.append((component, case, error))


def _rel(analytic, numeric, floor=1e-3):
    """Norm-wise relative error.

    ``floor`` keeps an exactly-zero gradient (a single active feature has
    no factor gradient) from turning finite-difference noise into error 1.
    """
    a = np.atleast_1d(np.asarray(analytic, dtype=float))
    n = np.atleast_1d(np.asarray(numeric, dtype=float))
    scale = max(np.linalg.norm(n), np.linalg.norm(a), floor)
    return float(np.linalg.norm(a - n) / scale)


def _bump(value, name, perturb):
    return value * (1.0 + PERTURBATION) if name == perturb else value


def random_instance(rng, d_max=20, k_max=8, sigma=0.5):
    """A random FM with nonzero parameters and a random sparse input."""
    d = int(rng.integers(1, d_max + 1))
    k = int(rng.integers(1, k_max + 1))
    lambdas = (float(rng.uniform(0, 0.5)), float(rng.uniform(0, 0.5)), rng.uniform(0, 0.5, k))
    model = fm_init(d, k, float(rng.uniform(0.005, 0.05)), lambdas, sigma, int(rng.integers(2**31)))
    model.w0 = float(rng.normal())
    model.w = rng.normal(size=d)
    nnz = int(rng.integers(1, d + 1))
    idx = np.sort(rng.choice(d, size=nnz, replace=False))
    vals = rng.uniform(0.1, 1.5, size=nnz) * rng.choice([-1.0, 1.0], size=nnz)
    return model, SparseVector(d, idx, vals)


def suite_predict(rng, cases=1000):
    res = SuiteResult("predict vs explicit pairwise sum", tolerance=1e-9)
    for case in range(cases):
        model, x = random_instance(rng)
        fast = fm_predict(model, x)
        slow = fm_predict_naive(model, x)
        res.cases += 1
        res.check("prediction", abs(fast - slow) / (1.0 + abs(slow)), case)
    return res


def _loss(model, x, y):
    return (fm_predict(model, x) - y) ** 2


def suite_theta_gradient(rng, cases=200, perturb=None, h=1e-3):
    # The loss is quadratic in any single parameter, so central differences
    # carry no truncation error and a large step only reduces rounding noise.
    res = SuiteResult("squared-loss gradient vs finite differences", tolerance=1e-5)
    for case in range(cases):
        model, x = random_instance(rng)
        y = float(rng.normal())
        grad = fm_gradient_squared_loss(model, x, y)

        def central(get, put):
            orig = get()
            put(orig + h)
            up = _loss(model, x, y)
            put(orig - h)
            down = _loss(model, x, y)
            put(orig)
            return (up - down) / (2 * h)

        num_w0 = central(lambda: model.w0, lambda v: setattr(model, "w0", v))
        num_w = [central(lambda i=i: model.w[i], lambda v, i=i: model.w.__setitem__(i, v))
                 for i in x.indices]
        num_v = [[central(lambda i=i, f=f: model.V[i, f],
                          lambda v, i=i, f=f: model.V.__setitem__((i, f), v))
                  for f in range(model.k)] for i in x.indices]
        res.cases += 1
        res.check("dW0", _rel(_bump(grad.dW0, "dW0", perturb), num_w0), case)
        res.check("dW", _rel(_bump(grad.dW, "dW", perturb), num_w), case)
        res.check("dV", _rel(_bump(grad.dV, "dV", perturb), num_v), case)
    return res


def suite_imf_update(rng, cases=200, perturb=None, h=1e-3):
    """The iMF step must equal ``-eta`` times the gradient of its objective."""
    res = SuiteResult("iMF update vs finite differences", tolerance=1e-5)
    for case in range(cases):
        k = int(rng.integers(1, 9))
        eta, lam = float(rng.uniform(0.001, 0.05)), float(rng.uniform(0, 0.5))
        model = MfModel(k, eta, lam, init_sigma=0.5, seed=int(rng.integers(2**31)))
        u, i = model.ensure_user("u"), model.ensure_item("i")
        p0, q0 = model.P.matrix[u].copy(), model.Q.matrix[i].copy()
        imf_update(model, "u", "i")
        step_p = (model.P.matrix[u] - p0) / (-eta)
        step_q = (model.Q.matrix[i] - q0) / (-eta)

        def objective(p, q):
            return (1.0 - p @ q) ** 2 + lam * (p @ p + q @ q)

        eye = np.eye(k) * h
        num_p = [(objective(p0 + e, q0) - objective(p0 - e, q0)) / (2 * h) for e in eye]
        num_q = [(objective(p0, q0 + e) - objective(p0, q0 - e)) / (2 * h) for e in eye]
        res.cases += 1
        res.check("imf_p", _rel(_bump(step_p, "imf_p", perturb), num_p), case)
        res.check("imf_q", _rel(_bump(step_q, "imf_q", perturb), num_q), case)
    return res


def _loss_after_step(model, x, y, lambdas):
    probe = model.copy()
    probe.lambda0, probe.lambda_w, probe.lambda_v = lambdas[0], lambdas[1], np.array(lambdas[2])
    theta_update(probe, x, y)
    return _loss(probe, x, y)


def suite_lambda_gradient(rng, cases=200, perturb=None, h=1e-5):
    """Regularization gradient vs differences of the loss after a real SGD step."""
    res = SuiteResult("lambda gradient vs finite differences through the update", tolerance=1e-4)
    for case in range(cases):
        model, x = random_instance(rng)
        y = 1.0
        d0, dw, dv = lambda_gradient(model, x, y, anticipate_step=True)
        base = (model.lambda0, model.lambda_w, model.lambda_v.copy())

        def central(which, f=None):
            def shifted(delta):
                lam = [base[0], base[1], base[2].copy()]
                if f is None:
                    lam[which] += delta
                else:
                    lam[2][f] += delta
                return _loss_after_step(model, x, y, lam)
            return (shifted(h) - shifted(-h)) / (2 * h)

        res.cases += 1
        res.check("lambda0", _rel(_bump(d0, "lambda0", perturb), central(0)), case)
        res.check("lambda_w", _rel(_bump(dw, "lambda_w", perturb), central(1)), case)
        num_v = [central(2, f) for f in range(model.k)]
        res.check("lambda_v", _rel(_bump(dv, "lambda_v", perturb), num_v), case)
    return res


def suite_metrics(rng, cases=50):
    """Streaming MPR and windowed recall vs recomputation from the raw log."""
    res = SuiteResult("metric recomputation", tolerance=1e-12)
    for case in range(cases):
        t = int(rng.integers(1, 40))
        state = EvalState(n=1, window_t=t)
        hits = rng.integers(0, 2, size=int(rng.integers(1, 200)))
        prs = rng.uniform(0, 100, size=hits.size)
        for j, (hit, pr) in enumerate(zip(hits, prs)):
            state.record(j, j, int(hit), float(pr))
        res.cases += 1
        res.check("mpr", abs(state.mpr - prs.mean()) / prs.mean(), case)
        brute = [hits[max(0, j - t + 1):j + 1].mean() for j in range(hits.size)]
        got = [e.windowed_recall for e in state.log]
        res.check("windowed_recall", float(np.max(np.abs(np.array(got) - brute))), case)
    return res


def run_selftest(seed=None, perturb=None):
    """Run every suite; returns ``(seed, results)``."""
    if perturb is not None and perturb not in COMPONENTS:
        raise ValueError(f"unknown component {perturb!r}; choose from {COMPONENTS}")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2**32)
    rng = np.random.default_rng(seed)
    results = [
        suite_predict(rng),
        suite_theta_gradient(rng, perturb=perturb),
        suite_imf_update(rng, perturb=perturb),
        suite_lambda_gradient(rng, perturb=perturb),
        suite_metrics(rng),
    ]
    return seed, results


def format_report(seed, results):
    lines = [f"selftest seed {seed}"]
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        lines.append(f"{status} {r.name}: {r.cases} cases, max error {r.max_error:.3g} "
                     f"(tolerance {r.tolerance:g})")
        for component in sorted({c for c, _, _ in r.failures}):
            n = sum(1 for c, _, _ in r.failures if c == component)
            lines.append(f"     component {component} failed in {n} cases")
    return "\n".join(lines)
