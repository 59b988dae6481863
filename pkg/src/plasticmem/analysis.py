"""Diagnostics: output sparsity, 2-D PCA, matrix snapshots, runtime bench."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, matio
from .errors import InvalidArgumentError
from .memory import PlasticMemoryCell, init_memory
from .model import Classifier

DEFAULT_SPARSITY_EPS = 0.05


def sparsity(v: np.ndarray, eps: float = DEFAULT_SPARSITY_EPS) -> float:
    """Fraction of entries with |v_i| < eps."""
    if eps <= 0:
        raise InvalidArgumentError("sparsity: eps must be > 0")
    v = np.asarray(v, dtype=np.float64)
    return float(np.count_nonzero(np.abs(v) < eps)) / v.size


def pca_2d(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean-centered projection onto the top-2 principal directions.

    Returns (projections (n, 2), explained variances (2,)).  Components are
    ordered by descending eigenvalue; each direction's first nonzero
    loading is made positive so the output is sign-deterministic.
    Rank-0 input (all samples identical) yields zero projections.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 3:
        raise InvalidArgumentError("pca_2d requires >= 3 samples of equal dim")
    centered = samples - samples.mean(axis=0)
    if not np.any(centered):
        return np.zeros((samples.shape[0], 2)), np.zeros(2)
    cov = centered.T @ centered / (samples.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    comps = eigvecs[:, order]
    variances = np.maximum(eigvals[order], 0.0)
    for j in range(comps.shape[1]):
        nz = np.flatnonzero(np.abs(comps[:, j]) > 1e-12)
        if nz.size and comps[nz[0], j] < 0:
            comps[:, j] = -comps[:, j]
    if comps.shape[1] < 2:  # k == 1 input
        comps = np.pad(comps, ((0, 0), (0, 2 - comps.shape[1])))
        variances = np.pad(variances, (0, 2 - variances.size))
    return centered @ comps, variances


SNAPSHOT_NAMES = (
    "memory",
    "read_w", "read_alpha", "read_hebb",
    "out_w", "out_alpha", "out_hebb",
    "write_w", "write_alpha", "write_hebb",
)


def _snapshot_matrix(model: Classifier, name: str) -> np.ndarray:
    cell = model.cell
    if name == "memory":
        return cell._M_data.copy()
    ctrl, kind = name.split("_", 1)
    ctrl = "out" if ctrl == "out" else ctrl
    if not isinstance(cell, PlasticMemoryCell):
        raise InvalidArgumentError(
            f"matrix {name!r} requires a plastic memory cell"
        )
    if kind == "hebb":
        return cell._hebb_data[ctrl].copy()
    params = cell.params[ctrl]
    return (params.w if kind == "w" else params.alpha).data.copy()


def snapshot_matrices(
    model: Classifier, which: list[str], out_dir, tag: str
) -> list[Path]:
    """Write the requested matrices as JSON files named ``{tag}__{name}.json``."""
    for name in which:
        if name not in SNAPSHOT_NAMES:
            raise InvalidArgumentError(
                f"unknown matrix {name!r}; valid names: {', '.join(SNAPSHOT_NAMES)}"
            )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in which:
        path = out_dir / f"{tag}__{name}.json"
        matio.save_matrix(path, f"{tag}:{name}", _snapshot_matrix(model, name))
        paths.append(path)
    return paths


@dataclass
class BenchRow:
    l: int
    k: int
    wall_seconds: float


def _plastic_args(k: int, l: int, steps: int, rng):
    bound = 1.0 / np.sqrt(k)
    wr, wo, ww = (rng.uniform(-bound, bound, (k, k)) for _ in range(3))
    ar, ao, aw = (rng.uniform(-0.01, 0.01, (k, k)) for _ in range(3))
    M = init_memory(l, k)
    H = np.zeros((k, k))
    X = rng.uniform(-1, 1, (steps, k))
    return (wr, ar, wo, ao, ww, aw, 0.5, M, H, H.copy(), H.copy(), X)


def _baseline_args(k: int, l: int, steps: int, rng):
    bound = 1.0 / np.sqrt(k)
    r_wx, r_wh, w_wx, w_wh = (rng.uniform(-bound, bound, (4 * k, k)) for _ in range(4))
    r_b, w_b = (np.zeros(4 * k) for _ in range(2))
    M = init_memory(l, k)
    X = rng.uniform(-1, 1, (steps, k))
    return (r_wx, r_wh, r_b, w_wx, w_wh, w_b, M, X)


def bench_runtime(
    memory_kind: str = "plastic",
    l_values: list[int] = (10, 20, 40),
    k_values: list[int] = (40, 80, 160),
    k_fixed: int = 3,
    l_fixed: int = 20,
    n_predictions: int = 100,
    steps: int = 200,
    repeats: int = 3,
    seed: int = 0,
) -> list[BenchRow]:
    """Wall-clock scaling of the memory cell's single-thread forward pass.

    Each grid point times ``n_predictions`` sequence forward passes; the
    timed batches are interleaved across grid points and repeated
    ``repeats`` times, keeping the minimum per point.  Interleaving cancels
    slow drift (CPU frequency ramp-up), and the minimum discards scheduler
    interference, which only ever adds time.  The l-sweep holds k at
    ``k_fixed`` and vice versa.  The encoder is excluded: its cost is
    independent of l and would mask the memory-scaling trend being
    measured.
    """
    if memory_kind not in ("plastic", "baseline"):
        raise InvalidArgumentError(f"unknown memory kind {memory_kind!r}")
    if memory_kind == "plastic":
        fn, make_args = kernels.plastic_cell_sequence, _plastic_args
    else:
        fn, make_args = kernels.baseline_cell_sequence, _baseline_args
    rng = np.random.default_rng(seed)
    grid = [(int(l), k_fixed) for l in l_values]
    grid += [(l_fixed, int(k)) for k in k_values]
    points = [(l, k, make_args(k, l, steps, rng)) for l, k in grid]
    best = [np.inf] * len(points)
    for _, _, args in points:  # warm-up pass over the whole grid
        fn(*args)
    for _ in range(max(1, repeats)):
        for idx, (_, _, args) in enumerate(points):
            start = time.perf_counter()
            for _ in range(n_predictions):
                fn(*args)
            best[idx] = min(best[idx], time.perf_counter() - start)
    return [BenchRow(l, k, best[i]) for i, (l, k, _) in enumerate(points)]


def write_bench_csv(path, rows: list[BenchRow]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "k", "wall_seconds"])
        for row in rows:
            writer.writerow([row.l, row.k, repr(row.wall_seconds)])
