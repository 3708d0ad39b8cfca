"""Command-line interface.

Subcommands: analyze, learn, validate, sweep, zoo, gen. Exit codes: 0 on
success, 2 on configuration errors (bad flags, malformed files), 3 on runtime
failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import learning, sweep as sweep_mod
from .analysis import analyze, communicating_classes
from .core import Encoder, parse_env, serialize_env
from .errors import (
    BadParams,
    ExBmdpError,
    SchemaError,
    TooFewTrajectories,
    UnknownEntry,
)
from .learning import DataParams, LossConfig, LossVariant
from .sampling import PER_CLASS, UNIFORM_OBS
from .validation import classify, minimal_size
from .zoo import zoo_build, zoo_names
from .zoo import random_exbmdp

_CONFIG_ERRORS = (SchemaError, UnknownEntry, BadParams, ValueError, OSError)


def _parse_params(text: str | None) -> dict:
    if not text:
        return {}
    params = {}
    for part in text.split(","):
        if "=" not in part:
            raise BadParams(f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        params[key.strip()] = int(value)
    return params


def _load_env(args):
    if getattr(args, "zoo", None):
        return zoo_build(args.zoo, _parse_params(getattr(args, "params", None))).env
    if getattr(args, "env", None):
        with open(args.env, encoding="utf-8") as handle:
            return parse_env(handle.read())
    raise BadParams("need either --zoo NAME or --env FILE")


def _cmd_analyze(args) -> int:
    env = _load_env(args)
    report = analyze(env.endo)
    classes = communicating_classes(env)
    if args.json:
        payload = {
            "env": env.name,
            "n_obs": env.n_obs,
            "communicating_classes": classes,
            "diameter": report.diameter,
            "period": report.period,
            "cyclic_class": list(report.cyclic_class),
            "d_prime_bound": report.d_prime_bound,
            "max_finite_witness": report.max_finite_witness,
            "witness": [
                [a, b, None if math.isinf(v) else v]
                for (a, b), v in sorted(report.witness.items())
            ],
        }
        print(json.dumps(payload, indent=2))
        return 0
    print(f"environment            {env.name}")
    print(f"observations           {env.n_obs}")
    print(f"communicating classes  {len(classes)}")
    print(f"diameter (D)           {report.diameter}")
    print(f"period                 {report.period}")
    print(f"cyclic classes         {list(report.cyclic_class)}")
    print(f"witness bound 2D^2+D   {report.d_prime_bound}")
    print(f"max finite witness     {report.max_finite_witness}")
    print("witness distances:")
    for (a, b), value in sorted(report.witness.items()):
        if a == b:
            continue
        shown = "inf" if math.isinf(value) else str(int(value))
        print(f"  ({a:2d},{b:2d})  {shown:>4s}")
    return 0


def _cmd_learn(args) -> int:
    env = _load_env(args)
    config = LossConfig(
        variant=LossVariant(args.loss.replace("-", "_")),
        K=args.K,
        tolerance=args.tolerance,
    )
    keep = bool(args.emit_losses)
    seed = args.seed_override if args.seed_override is not None else args.seed
    if args.exact:
        result = learning.learn_exact(env, config, keep_losses=keep)
    else:
        data = DataParams(
            steps=args.steps,
            n_trajectories=args.trajectories,
            start_mode=PER_CLASS if args.per_class_starts else UNIFORM_OBS,
        )
        result = learning.learn(env, config, data=data, seed=seed, keep_losses=keep)
    outcome = classify(result.encoder, env)
    if args.emit_losses:
        with open(args.emit_losses, "w", encoding="utf-8") as handle:
            handle.write("encoder,n_latent,loss\n")
            for encoder, loss in result.per_encoder_losses:
                handle.write(f"{encoder.to_string()},{encoder.n_latent},{loss!r}\n")
    if args.json:
        print(
            json.dumps(
                {
                    "env": env.name,
                    "variant": config.variant.value,
                    "K": config.K,
                    "encoder": result.encoder.to_string(),
                    "n_latent": result.encoder.n_latent,
                    "loss": result.loss,
                    "outcome": outcome.kind.value,
                    "n_evaluated": result.n_evaluated,
                    "seed": result.seed,
                },
                indent=2,
            )
        )
        return 0
    print(f"environment   {env.name}")
    print(f"loss variant  {config.variant.value}  K={config.K}")
    print(f"encoder       {result.encoder.to_string()}  ({result.encoder.n_latent} latent states)")
    print(f"loss          {result.loss:.6f}")
    print(f"outcome       {outcome.kind.value}")
    print(f"evaluated     {result.n_evaluated} encoders")
    return 0


def _cmd_validate(args) -> int:
    env = _load_env(args)
    encoder = Encoder.from_string(args.encoder)
    outcome = classify(encoder, env)
    if args.json:
        print(
            json.dumps(
                {
                    "env": env.name,
                    "encoder": encoder.to_string(),
                    "n_latent": encoder.n_latent,
                    "minimal_size": minimal_size(env),
                    "outcome": outcome.kind.value,
                    "detail": str(outcome.detail) if outcome.detail else None,
                },
                indent=2,
            )
        )
        return 0
    print(f"environment   {env.name}")
    print(f"encoder       {encoder.to_string()}  ({encoder.n_latent} latent states)")
    print(f"minimal size  {minimal_size(env)}")
    print(f"outcome       {outcome.kind.value}")
    if outcome.detail is not None:
        print(f"detail        {outcome.detail}")
    return 0


def _cmd_zoo(args) -> int:
    if args.zoo_command == "list":
        for name in zoo_names():
            params = {"p": 3, "q": 5} if name in ("prime_cycle", "double_prime") else None
            entry = zoo_build(name, params)
            expected = " ".join(f"{k}={v}" for k, v in sorted(entry.expected.items()))
            suffix = " (shown at p=3,q=5)" if params else ""
            print(f"{name:22s} {expected}{suffix}")
        return 0
    entry = zoo_build(args.name, _parse_params(args.params))
    text = serialize_env(entry.env)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_gen(args) -> int:
    seed = args.seed_override if args.seed_override is not None else args.seed
    env = random_exbmdp(
        n_endo=args.n_endo,
        n_exo=args.n_exo,
        n_actions=args.n_actions,
        seed=seed,
        period=args.period,
    )
    text = serialize_env(env)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config, encoding="utf-8") as handle:
        config = sweep_mod.parse_sweep_config(handle.read())
    rows = sweep_mod.run_sweep(config, threads=args.threads)
    csv_text = sweep_mod.rows_to_csv(rows)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(csv_text)
    table = sweep_mod.summarize(rows)
    if args.svg:
        os.makedirs(args.svg, exist_ok=True)
        env_name = rows[0].env if rows else "env"
        for variant in {row.variant for row in rows}:
            path = os.path.join(
                args.svg, f"{env_name.replace('/', '_')}_{variant}.svg"
            )
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(sweep_mod.render_success_svg(table, env_name, variant))
    if args.json:
        payload = [
            {
                "env": env,
                "variant": variant,
                "K": k,
                "steps": steps,
                "success_rate": cell.success_rate,
                "minimal_rate": cell.minimal_rate,
                "n": cell.n,
            }
            for (env, variant, k, steps), cell in sorted(table.items())
        ]
        print(json.dumps(payload, indent=2))
    else:
        print(sweep_mod.summary_text(table))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exbmdp",
        description=(
            "Tabular laboratory for control-endogenous latent-state discovery"
        ),
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    parser.add_argument("--seed", type=int, default=0, help="default seed")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_env_flags(p):
        p.add_argument("--zoo", help="catalog environment name")
        p.add_argument("--params", help="catalog parameters, e.g. p=3,q=5")
        p.add_argument("--env", help="environment JSON file")

    p = sub.add_parser("analyze", help="graph analysis of an environment")
    add_env_flags(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("learn", help="search all encoders for the loss minimum")
    add_env_flags(p)
    p.add_argument("--loss", default="acdf", help="ac_state|acdf|full_multi|imprecise_k")
    p.add_argument("--K", type=int, default=1, help="largest span length")
    p.add_argument("--steps", type=int, default=8000, help="observations per dataset")
    p.add_argument("--trajectories", type=int, default=1, help="rollouts per dataset")
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--exact", action="store_true", help="use the population oracle")
    p.add_argument("--per-class-starts", action="store_true")
    p.add_argument("--emit-losses", metavar="PATH", help="CSV of every encoder's loss")
    p.add_argument("--seed", type=int, dest="seed_override", default=None)
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("validate", help="classify an encoder against ground truth")
    add_env_flags(p)
    p.add_argument("--encoder", required=True, help='latent labels, e.g. "0112"')
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sweep", help="multi-trial success-rate experiment")
    p.add_argument("--config", required=True, help="sweep configuration JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", metavar="DIR", help="also render success curves")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("zoo", help="catalog of constructed environments")
    zoo_sub = p.add_subparsers(dest="zoo_command", required=True)
    zoo_sub.add_parser("list", help="list catalog entries")
    p_emit = zoo_sub.add_parser("emit", help="write an environment file")
    p_emit.add_argument("--name", required=True)
    p_emit.add_argument("--params")
    p_emit.add_argument("--out")
    p.set_defaults(func=_cmd_zoo)

    p = sub.add_parser("gen", help="random environment generator")
    p.add_argument("--n-endo", type=int, required=True)
    p.add_argument("--n-exo", type=int, default=1)
    p.add_argument("--n-actions", type=int, default=2)
    p.add_argument("--period", type=int, help="require this exact period")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, dest="seed_override", default=None)
    p.set_defaults(func=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TooFewTrajectories as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExBmdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
