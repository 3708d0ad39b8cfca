"""Benchmark of the compiled kernel extension against the numpy fallback.

Run as ``python -m exbmdp.benchmark``. Times the two hot paths on
representative workloads: the population-loss sweep over all 115975
partitions of a 10-observation environment, and the count-based sweep over a
pair of 8000-step rollouts.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels, learning
from .learning import span_joint_tensors
from .sampling import sample_dataset, span_index
from .zoo import zoo_build

_BATCH = 2048


def _drive(backend, evaluate_batch, n_obs):
    """Run a full enumeration sweep through ``evaluate_batch`` and fold the
    losses so the work cannot be optimized away."""
    start = backend.rgs_first(n_obs)
    checksum = 0.0
    count = 0
    while True:
        rows, terms, fwd = evaluate_batch(start)
        checksum += float(terms.sum()) + float(fwd.sum())
        count += rows.shape[0]
        if rows.shape[0] < _BATCH:
            break
        nxt = np.array(rows[-1], dtype=np.int8)
        if not backend.rgs_successor(nxt):
            break
        start = nxt
    return checksum, count


def _time_exact(backend, joints, n_obs):
    started = time.perf_counter()
    checksum, count = _drive(
        backend, lambda s: backend.exact_sweep(joints, s, _BATCH), n_obs
    )
    return time.perf_counter() - started, checksum, count


def _time_span(backend, n_obs, n_actions, spans_train, spans_val):
    def evaluate(start):
        return backend.span_sweep(
            n_obs,
            n_actions,
            spans_train.x0,
            spans_train.first_action,
            spans_train.xk,
            spans_val.x0,
            spans_val.first_action,
            spans_val.xk,
            1e-7,
            start,
            _BATCH,
        )

    started = time.perf_counter()
    checksum, count = _drive(backend, evaluate, n_obs)
    return time.perf_counter() - started, checksum, count


def run(repeats: int = 1) -> list[dict]:
    results = []
    names = kernels.available_backends()

    env10 = zoo_build("periodic_coupling10").env
    joints = span_joint_tensors(env10, 3)
    for name in names:
        backend = kernels.get_backend(name)
        best = min(
            _time_exact(backend, joints, env10.n_obs) for _ in range(repeats)
        )
        results.append(
            {
                "workload": f"exact sweep {env10.name} K=3 ({best[2]} partitions)",
                "backend": name,
                "seconds": best[0],
                "checksum": best[1],
            }
        )

    env5 = zoo_build("prime_cycle", {"p": 3, "q": 5}).env
    train = sample_dataset(env5, 1, 8000, learning.derive_seed(7, 0))
    val = sample_dataset(env5, 1, 8000, learning.derive_seed(7, 1))
    spans_train = span_index(train, 7)
    spans_val = span_index(val, 7)
    for name in names:
        backend = kernels.get_backend(name)
        best = min(
            _time_span(backend, env5.n_obs, env5.n_actions, spans_train, spans_val)
            for _ in range(repeats)
        )
        results.append(
            {
                "workload": f"count sweep {env5.name} K_max=7 ({best[2]} partitions)",
                "backend": name,
                "seconds": best[0],
                "checksum": best[1],
            }
        )
    return results


def main() -> int:
    print(f"active backend: {kernels.BACKEND}")
    results = run(repeats=3)
    by_workload: dict = {}
    for row in results:
        by_workload.setdefault(row["workload"], []).append(row)
    for workload, rows in by_workload.items():
        print(f"\n{workload}")
        baseline = next(
            (r["seconds"] for r in rows if r["backend"] == "pure-python"), None
        )
        checksums = {f"{r['checksum']:.9f}" for r in rows}
        for row in rows:
            speedup = (
                f"  ({baseline / row['seconds']:.1f}x vs pure)"
                if baseline and row["backend"] != "pure-python"
                else ""
            )
            print(f"  {row['backend']:12s} {row['seconds'] * 1000:9.1f} ms{speedup}")
        if len(checksums) > 1:
            print(f"  WARNING: checksums disagree: {sorted(checksums)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
