"""Central finite-difference gradient oracle for the recorded tape."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autograd import ParameterTape, Value
from .errors import InvalidStateError


@dataclass
class ParamErrors:
    name: str
    rel_err: float
    max_abs_diff: float


@dataclass
class GradCheckReport:
    tol: float
    h: float
    max_rel_err: float
    mean_rel_err: float
    per_param: list[ParamErrors] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tol

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"{status} max_rel_err={self.max_rel_err:.3e} "
            f"mean_rel_err={self.mean_rel_err:.3e} (tol={self.tol:g}, h={self.h:g})"
        ]
        for p in self.per_param:
            lines.append(
                f"  {p.name}: rel_err={p.rel_err:.3e} "
                f"max_abs_diff={p.max_abs_diff:.3e}"
            )
        return "\n".join(lines)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``|a - b| / max(1e-8, |a| + |b|)`` in the 2-norm over the whole array.

    A norm-based error is used per parameter (rather than elementwise)
    because float64 central differences carry irreducible rounding noise
    of roughly ``eps * |loss| / h`` in each derivative estimate; an
    elementwise ratio on an entry whose true gradient sits below that
    noise floor measures only rounding, not correctness.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(1e-8, float(np.linalg.norm(a)) + float(np.linalg.norm(b)))
    return float(np.linalg.norm(a - b)) / denom


def finite_diff_check(
    loss_fn: Callable[[], Value],
    tape: ParameterTape,
    h: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare tape gradients of ``loss_fn`` against central differences.

    ``loss_fn`` must rebuild the forward graph from the tape's current
    parameter values on every call and be deterministic; non-determinism
    (two identical calls disagreeing) aborts the check.
    """
    l1 = loss_fn()
    l2 = loss_fn()
    if float(l1.data) != float(l2.data):
        raise InvalidStateError(
            "finite_diff_check aborted: loss is non-deterministic "
            f"({float(l1.data)!r} vs {float(l2.data)!r} on identical calls)"
        )

    tape.backward(loss_fn())
    analytic = {name: p.grad.copy() for name, p in tape.items()}

    per_param = []
    all_max = 0.0
    err_sum = 0.0
    err_count = 0
    for name, p in tape.items():
        flat = p.data.ravel()
        numeric = np.empty_like(flat)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = float(loss_fn().data)
            flat[idx] = orig - h
            down = float(loss_fn().data)
            flat[idx] = orig
            numeric[idx] = (up - down) / (2.0 * h)
        err = relative_error(analytic[name].ravel(), numeric)
        max_abs = float(np.max(np.abs(analytic[name].ravel() - numeric)))
        per_param.append(ParamErrors(name, err, max_abs))
        all_max = max(all_max, err)
        err_sum += err
        err_count += 1

    mean = err_sum / err_count if err_count else 0.0
    return GradCheckReport(tol, h, all_max, mean, per_param)


def standard_check(seed: int = 7, h: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Gradient check of the full plastic classifier on a small instance.

    Builds a k=4, l=2, d=2 model, re-randomizes every parameter and the
    initial memory to O(1) magnitudes, and differentiates the
    cross-entropy of a 3-step sequence.  The randomization matters: at
    the training initialization the Hebbian traces, and with them the
    alpha gradients, sit below the float64 central-difference noise
    floor (~1e-11 per derivative at h=1e-5), where no relative-error
    comparison is informative.
    """
    from .model import Classifier, ModelConfig, cross_entropy

    model = Classifier(
        ModelConfig(
            input_dim=2,
            embed_dim=4,
            memory_len=2,
            num_classes=2,
            seed=0,
            memory_init="uniform",
        )
    )
    rng = np.random.default_rng(seed)
    for _, p in model.tape.items():
        p.data[...] = rng.uniform(-1.5, 1.5, p.data.shape)
    model.cell.M0[...] = rng.uniform(-1.0, 1.0, model.cell.M0.shape)
    sequence = rng.uniform(-1.0, 1.0, (3, 2))

    def loss_fn() -> Value:
        probs, _ = model.forward(sequence)
        return cross_entropy(probs, 1)

    return finite_diff_check(loss_fn, model.tape, h=h, tol=tol)
