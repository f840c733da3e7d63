from dataclasses import dataclass, field

import numpy as np


@dataclass
class GradCheckReport:
    max_rel_error: float
    errors: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def relative_error(analytic, numeric):
    num = np.linalg.norm(analytic - numeric)
    den = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    return 0.0 if den == 0.0 else float(num / den)


def numeric_gradient(loss_fn, tensors, name, step=1e-5):
    x = tensors[name]
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + step
        plus = loss_fn(tensors)
        x[idx] = old - step
        minus = loss_fn(tensors)
        x[idx] = old
        grad[idx] = (plus - minus) / (2.0 * step)
    return grad


def grad_check(loss_and_grads, tensors, step=1e-5, tol=1e-4, names=None):
    """Compare analytic gradients against central finite differences.

    ``loss_and_grads(tensors)`` must return ``(loss, grads)`` where ``grads``
    maps (a subset of) tensor names to arrays. Every entry of every checked
    tensor is perturbed; the error per tensor is the norm-wise relative error
    ``|a - n| / (|a| + |n|)``.
    """
    _, analytic = loss_and_grads(tensors)
    names = list(analytic) if names is None else list(names)

    def loss_only(t):
        return loss_and_grads(t)[0]

    report = GradCheckReport(max_rel_error=0.0)
    for name in names:
        num = numeric_gradient(loss_only, tensors, name, step)
        err = relative_error(analytic[name], num)
        report.errors[name] = err
        report.max_rel_error = max(report.max_rel_error, err)
        if not err <= tol:
            report.failures.append(name)
    return report
