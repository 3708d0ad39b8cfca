"""Multi-trial experiment harness: sweeps over loss variants, span horizons
and data budgets, with success-rate summaries, CSV output and a dependency-free
SVG curve renderer.

Within a trial, one train/validation pair is sampled per data budget and
shared by every (variant, K) cell, and one span index at the largest K serves
all cells. Trials are independent tasks, so any process count reproduces the
same rows; only the wall-clock column varies between runs.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import learning
from .core import parse_env
from .errors import ExBmdpError, SchemaError
from .learning import LossConfig, LossVariant, derive_seed
from .sampling import UNIFORM_OBS, sample_dataset
from .validation import OutcomeKind, classify
from .zoo import zoo_build

DEFAULT_STEPS = (500, 1000, 2000, 4000, 8000, 16000)

CSV_HEADER = "env,variant,K,steps,trial,seed,outcome,n_latent,loss,runtime_ms"


@dataclass(frozen=True)
class SweepConfig:
    env_source: dict
    variants: tuple[LossVariant, ...]
    k_values: tuple[int, ...]
    steps_values: tuple[int, ...] = DEFAULT_STEPS
    trials: int = 50
    base_seed: int = 0
    n_trajectories: int = 1
    start_mode: str = UNIFORM_OBS
    smoothing_floor: float = 1e-7
    tolerance: float = 1e-3

    def __post_init__(self):
        object.__setattr__(
            self, "variants", tuple(LossVariant(v) for v in self.variants)
        )
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(
            self, "steps_values", tuple(int(s) for s in self.steps_values)
        )
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.k_values or not self.variants or not self.steps_values:
            raise ValueError("variants, K and steps must all be nonempty")


@dataclass(frozen=True)
class SweepRow:
    env: str
    variant: str
    K: int
    steps: int
    trial: int
    seed: int
    outcome: str
    n_latent: int | None
    loss: float | None
    runtime_ms: float

    def to_csv(self) -> str:
        n_latent = "" if self.n_latent is None else str(self.n_latent)
        loss = "" if self.loss is None else repr(self.loss)
        return (
            f"{self.env},{self.variant},{self.K},{self.steps},{self.trial},"
            f"{self.seed},{self.outcome},{n_latent},{loss},{self.runtime_ms:.3f}"
        )


def parse_sweep_config(document: str) -> SweepConfig:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected an object")
    if "env" not in doc:
        raise SchemaError("$.env", "missing required field")
    env_source = doc["env"]
    if not isinstance(env_source, dict) or not (
        "zoo" in env_source or "file" in env_source
    ):
        raise SchemaError("$.env", 'expected {"zoo": name} or {"file": path}')
    try:
        return SweepConfig(
            env_source=env_source,
            variants=tuple(doc.get("variants", ["ac_state", "acdf"])),
            k_values=tuple(doc.get("K", [1])),
            steps_values=tuple(doc.get("steps", DEFAULT_STEPS)),
            trials=int(doc.get("trials", 50)),
            base_seed=int(doc.get("base_seed", 0)),
            n_trajectories=int(doc.get("n_trajectories", 1)),
            start_mode=doc.get("start_mode", UNIFORM_OBS),
            smoothing_floor=float(doc.get("smoothing_floor", 1e-7)),
            tolerance=float(doc.get("tolerance", 1e-3)),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError("$", str(exc)) from exc


def build_env(env_source: dict):
    if "zoo" in env_source:
        return zoo_build(env_source["zoo"], env_source.get("params")).env
    with open(env_source["file"], encoding="utf-8") as handle:
        return parse_env(handle.read())


def _trial_task(config: SweepConfig, trial: int, steps: int) -> list[SweepRow]:
    """All (variant, K) cells of one trial at one data budget, on shared data."""
    env = build_env(config.env_source)
    trial_seed = config.base_seed ^ trial
    steps_index = config.steps_values.index(steps)
    length = max(steps // config.n_trajectories, 2)
    train = sample_dataset(
        env,
        config.n_trajectories,
        length,
        derive_seed(trial_seed, steps_index, 0),
        config.start_mode,
    )
    validation = sample_dataset(
        env,
        config.n_trajectories,
        length,
        derive_seed(trial_seed, steps_index, 1),
        config.start_mode,
    )
    k_max = max(config.k_values)
    rows: list[SweepRow] = []

    fast = [v for v in config.variants if v in (LossVariant.AC_STATE, LossVariant.ACDF)]
    slow = [v for v in config.variants if v not in fast]

    if fast:
        cells = [
            (variant, k)
            for variant in fast
            for k in config.k_values
        ]
        configs = [
            LossConfig(
                variant=variant,
                K=k,
                smoothing_floor=config.smoothing_floor,
                tolerance=config.tolerance,
            )
            for variant, k in cells
        ]
        started = time.perf_counter()
        try:
            batches = learning.sweep_sampled_terms(
                env.n_obs,
                env.n_actions,
                train,
                validation,
                k_max,
                config.smoothing_floor,
            )
            results = learning.select_from_term_batches(batches, configs)
            elapsed_ms = (time.perf_counter() - started) * 1000.0 / len(cells)
            for (variant, k), (encoder, loss, _) in zip(cells, results):
                outcome = classify(encoder, env)
                rows.append(
                    SweepRow(
                        env=env.name,
                        variant=variant.value,
                        K=k,
                        steps=steps,
                        trial=trial,
                        seed=trial_seed,
                        outcome=outcome.kind.value,
                        n_latent=encoder.n_latent,
                        loss=loss,
                        runtime_ms=elapsed_ms,
                    )
                )
        except ExBmdpError as exc:
            elapsed_ms = (time.perf_counter() - started) * 1000.0 / len(cells)
            for variant, k in cells:
                rows.append(
                    _error_row(env, variant, k, steps, trial, trial_seed, exc, elapsed_ms)
                )

    for variant in slow:
        for k in config.k_values:
            started = time.perf_counter()
            try:
                result = learning.learn_from_datasets(
                    env,
                    LossConfig(
                        variant=variant,
                        K=k,
                        smoothing_floor=config.smoothing_floor,
                        tolerance=config.tolerance,
                    ),
                    train,
                    validation,
                )
                outcome = classify(result.encoder, env)
                rows.append(
                    SweepRow(
                        env=env.name,
                        variant=variant.value,
                        K=k,
                        steps=steps,
                        trial=trial,
                        seed=trial_seed,
                        outcome=outcome.kind.value,
                        n_latent=result.encoder.n_latent,
                        loss=result.loss,
                        runtime_ms=(time.perf_counter() - started) * 1000.0,
                    )
                )
            except ExBmdpError as exc:
                rows.append(
                    _error_row(
                        env,
                        variant,
                        k,
                        steps,
                        trial,
                        trial_seed,
                        exc,
                        (time.perf_counter() - started) * 1000.0,
                    )
                )
    return rows


def _error_row(env, variant, k, steps, trial, seed, exc, elapsed_ms) -> SweepRow:
    return SweepRow(
        env=env.name,
        variant=variant.value,
        K=k,
        steps=steps,
        trial=trial,
        seed=seed,
        outcome=f"error:{type(exc).__name__}",
        n_latent=None,
        loss=None,
        runtime_ms=elapsed_ms,
    )


def run_sweep(config: SweepConfig, threads: int = 1) -> list[SweepRow]:
    """Every (trial, steps) task, rows ordered by (trial, variant, K, steps)."""
    tasks = [
        (trial, steps)
        for trial in range(config.trials)
        for steps in config.steps_values
    ]
    rows: list[SweepRow] = []
    if threads <= 1:
        for trial, steps in tasks:
            rows.extend(_trial_task(config, trial, steps))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_trial_task, config, trial, steps)
                for trial, steps in tasks
            ]
            for future in futures:
                rows.extend(future.result())
    variant_order = {v.value: i for i, v in enumerate(config.variants)}
    rows.sort(
        key=lambda r: (r.trial, variant_order.get(r.variant, 99), r.K, r.steps)
    )
    return rows


def rows_to_csv(rows) -> str:
    return "\n".join([CSV_HEADER] + [row.to_csv() for row in rows]) + "\n"


@dataclass
class SummaryCell:
    n: int = 0
    correct: int = 0
    correct_minimal: int = 0

    @property
    def success_rate(self) -> float:
        return self.correct / self.n if self.n else 0.0

    @property
    def minimal_rate(self) -> float:
        return self.correct_minimal / self.n if self.n else 0.0


def summarize(rows) -> dict:
    """Per (env, variant, K, steps) cell: fraction of correct outcomes (either
    flavor) and fraction that were also state-minimal."""
    table: dict = {}
    for row in rows:
        cell = table.setdefault((row.env, row.variant, row.K, row.steps), SummaryCell())
        cell.n += 1
        if row.outcome in (
            OutcomeKind.CORRECT_MINIMAL.value,
            OutcomeKind.CORRECT_NONMINIMAL.value,
        ):
            cell.correct += 1
        if row.outcome == OutcomeKind.CORRECT_MINIMAL.value:
            cell.correct_minimal += 1
    return table


def summary_text(table: dict) -> str:
    lines = [
        f"{'env':22s} {'variant':11s} {'K':>3s} {'steps':>7s} "
        f"{'success':>8s} {'minimal':>8s} {'n':>4s}"
    ]
    for (env, variant, k, steps), cell in sorted(table.items()):
        lines.append(
            f"{env:22s} {variant:11s} {k:3d} {steps:7d} "
            f"{cell.success_rate:8.3f} {cell.minimal_rate:8.3f} {cell.n:4d}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# SVG success curves
# ---------------------------------------------------------------------------

_PALETTE = (
    "#1b6ca8",
    "#d1495b",
    "#3a7d44",
    "#8d5a97",
    "#c77d1e",
    "#2a9d8f",
    "#6c464f",
    "#577590",
)


def render_success_svg(table: dict, env: str, variant: str) -> str:
    """One plot per (env, variant): success rate against data budget, one
    curve per K. Solid lines count any correct encoder, dashed lines only
    state-minimal ones."""
    cells = {
        (k, steps): cell
        for (env_, var_, k, steps), cell in table.items()
        if env_ == env and var_ == variant
    }
    k_values = sorted({k for k, _ in cells})
    steps_values = sorted({steps for _, steps in cells})
    width, height = 560, 360
    left, right, top, bottom = 60, 150, 30, 50
    plot_w = width - left - right
    plot_h = height - top - bottom

    def x_of(i: int) -> float:
        if len(steps_values) == 1:
            return left + plot_w / 2
        return left + plot_w * i / (len(steps_values) - 1)

    def y_of(rate: float) -> float:
        return top + plot_h * (1.0 - rate)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" font-size="13">{env} / {variant}: success rate vs steps</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in (0.0, 0.5, 1.0):
        y = y_of(tick)
        parts.append(
            f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>'
            f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{tick:.1f}</text>'
        )
    for i, steps in enumerate(steps_values):
        x = x_of(i)
        parts.append(
            f'<line x1="{x:.1f}" y1="{top + plot_h}" x2="{x:.1f}" y2="{top + plot_h + 4}" stroke="black"/>'
            f'<text x="{x:.1f}" y="{top + plot_h + 18}" text-anchor="middle">{steps}</text>'
        )
    for ki, k in enumerate(k_values):
        color = _PALETTE[ki % len(_PALETTE)]
        for dashed, attr in ((False, "success_rate"), (True, "minimal_rate")):
            points = []
            for i, steps in enumerate(steps_values):
                cell = cells.get((k, steps))
                if cell is None:
                    continue
                points.append(f"{x_of(i):.1f},{y_of(getattr(cell, attr)):.1f}")
            if points:
                dash = ' stroke-dasharray="5,4"' if dashed else ""
                parts.append(
                    f'<polyline points="{" ".join(points)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.6"{dash}/>'
                )
        y_legend = top + 14 * ki
        parts.append(
            f'<line x1="{left + plot_w + 12}" y1="{y_legend}" '
            f'x2="{left + plot_w + 36}" y2="{y_legend}" stroke="{color}" stroke-width="1.6"/>'
            f'<text x="{left + plot_w + 42}" y="{y_legend + 4}">K={k}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w + 12}" y="{top + 14 * len(k_values) + 16}">'
        "solid: correct</text>"
        f'<text x="{left + plot_w + 12}" y="{top + 14 * len(k_values) + 30}">'
        "dashed: minimal</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)
