"""Command-line surface: generate | train | audit | evaluate | project.

Every run is reproducible from one master seed, which fans out to the
sub-seeds (dataset generation, parameter init, batch shuffling, audit
sampling) through numpy's SeedSequence: the four entries of
``SeedSequence(master).generate_state(4)`` in that fixed order.

Reports are YAML files that echo the fully resolved configuration and the
master seed, so a report is a self-describing record of its run. Figures
are rendered next to the delimited outputs unless --no-figures is given.

Exit codes: 0 success, 2 usage/validation error, 3 theorem-level bound
failure (an implementation-bug signal), 4 training divergence.

A config file (--config, YAML) can pre-set any option; explicit flags win
over the file, which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np
import yaml

from . import plotting
from .datasets import (
    MANIFOLDS,
    generate_cinnamon_roll,
    generate_twisted_surface,
    lift_to_high_dim,
    load_embeddings,
    save_embeddings,
)
from .guarantees import AuditConfig, full_audit
from .kernels import KINDS, RelationshipConfig
from .loss import DISCREPANCIES, MASKINGS, LossConfig
from .network import ACTIVATIONS, forward, init_params, load_checkpoint, save_checkpoint
from .report import write_report
from .retrieval import evaluate_pair
from .trainer import LOSS_SCALES, OPTIMIZERS, TrainConfig, TrainingDiverged, train

REPORT_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BOUND_FAILURE = 3
EXIT_DIVERGED = 4

SEED_ROLES = ("data", "init", "shuffle", "audit")


def derive_seeds(master_seed: int) -> dict[str, int]:
    """Deterministic sub-seeds for the independent random choices of a run."""
    state = np.random.SeedSequence(master_seed).generate_state(len(SEED_ROLES))
    return {role: int(s) for role, s in zip(SEED_ROLES, state)}


def _load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping of sections")
    return data


class _Resolver:
    """flag > config-file value > default, per the documented precedence."""

    def __init__(self, config: dict):
        self.config = config

    def get(self, flag_value, section: str, key: str, default):
        if flag_value is not None:
            return flag_value
        sect = self.config.get(section)
        if isinstance(sect, dict) and key in sect and sect[key] is not None:
            return sect[key]
        return default


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in str(text).replace(",", " ").split()]
    except ValueError:
        raise ValueError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not values:
        raise ValueError(f"{flag} must name at least one value")
    return values


def _tri_state(value, flag: str) -> bool | None:
    if value is None or value == "auto":
        return None
    if isinstance(value, bool):
        return value
    if value in ("true", "false"):
        return value == "true"
    raise ValueError(f"{flag} must be one of auto/true/false, got {value!r}")


def _relationship_config(res: _Resolver, args) -> RelationshipConfig:
    kind = res.get(getattr(args, "phi", None), "relationship", "kind", "dot")
    gamma = res.get(getattr(args, "gamma", None), "relationship", "gamma", None)
    if kind == "rbf" and gamma is None:
        gamma = 1.0
    if kind != "rbf":
        gamma = None
    return RelationshipConfig(
        kind=kind,
        gamma=None if gamma is None else float(gamma),
        norm_upper=res.get(getattr(args, "norm_upper", None), "relationship", "norm_upper", None),
        norm_lower=res.get(getattr(args, "norm_lower", None), "relationship", "norm_lower", None),
    )


def _loss_config(res: _Resolver, args) -> LossConfig:
    top_k = res.get(getattr(args, "top_k", None), "loss", "top_k", None)
    return LossConfig(
        discrepancy=res.get(getattr(args, "discrepancy", None), "loss", "discrepancy", "mse"),
        masking=res.get(getattr(args, "mask", None), "loss", "masking", "none"),
        top_k=None if top_k is None else int(top_k),
        alpha=res.get(getattr(args, "alpha", None), "loss", "alpha", None),
        include_diagonal=_tri_state(
            res.get(getattr(args, "include_diagonal", None), "loss", "include_diagonal", None),
            "--include-diagonal",
        ),
    )


def _echo_relationship(cfg: RelationshipConfig) -> dict:
    return {
        "kind": cfg.kind,
        "gamma": cfg.gamma,
        "norm_upper": cfg.norm_upper,
        "norm_lower": cfg.norm_lower,
    }


def _echo_loss(cfg: LossConfig) -> dict:
    return {
        "discrepancy": cfg.discrepancy,
        "masking": cfg.masking,
        "top_k": cfg.top_k,
        "alpha": cfg.alpha,
        "include_diagonal": cfg.include_diagonal,
    }


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# sub-commands


def cmd_generate(args) -> int:
    out = _out_dir(args)
    seeds = derive_seeds(args.seed)
    n = int(args.n)
    if args.manifold == "cinnamon-roll":
        sample = generate_cinnamon_roll(n, turns=args.turns, noise=args.noise, seed=seeds["data"])
    else:
        sample = generate_twisted_surface(n, twist=args.twist, noise=args.noise, seed=seeds["data"])
    if args.lift is not None:
        sample = lift_to_high_dim(sample, int(args.lift), seed=seeds["data"])
    emb_path = out / f"{args.manifold}.embeddings.txt"
    lat_path = out / f"{args.manifold}.latent.txt"
    save_embeddings(emb_path, sample.points)
    save_embeddings(lat_path, sample.latent.reshape(-1, 1))
    print(f"wrote {emb_path} ({n} rows, dim {sample.points.shape[1]}) and {lat_path}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config_file(args.config) if args.config else {}
    res = _Resolver(config)
    out = _out_dir(args)
    seeds = derive_seeds(args.seed)

    x, ids = load_embeddings(args.input)
    rel_cfg = _relationship_config(res, args)
    loss_cfg = _loss_config(res, args)
    target_dim = int(res.get(args.target_dim, "network", "target_dim", 3))
    hidden_raw = res.get(args.hidden, "network", "hidden", [64, 64])
    hidden = _parse_int_list(hidden_raw, "--hidden") if isinstance(hidden_raw, str) else [int(h) for h in hidden_raw]
    activation = res.get(args.activation, "network", "activation", "tanh")
    train_cfg = TrainConfig(
        batch_size=int(res.get(args.batch_size, "train", "batch_size", 128)),
        max_epochs=int(res.get(args.epochs, "train", "max_epochs", 500)),
        learning_rate=float(res.get(args.lr, "train", "learning_rate", 1e-3)),
        optimizer=res.get(args.optimizer, "train", "optimizer", "adam"),
        seed=seeds["shuffle"],
        shuffle=bool(res.get(args.shuffle, "train", "shuffle", True)),
        loss_scale=res.get(args.loss_scale, "train", "loss_scale", "mean"),
        early_stop_tol=res.get(args.early_stop_tol, "train", "early_stop_tol", None),
    )
    if train_cfg.batch_size > x.shape[0]:
        train_cfg = dataclasses.replace(train_cfg, batch_size=x.shape[0])

    layer_dims = [x.shape[1], *hidden, target_dim]
    params0 = init_params(layer_dims, activation=activation, seed=seeds["init"])

    resolved_loss = loss_cfg.resolved(rel_cfg)
    report_doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "command": "train",
        "master_seed": args.seed,
        "derived_seeds": seeds,
        "config": {
            "input": str(args.input),
            "relationship": _echo_relationship(rel_cfg),
            "loss": _echo_loss(resolved_loss),
            "network": {
                "layer_dims": layer_dims,
                "activation": activation,
                "target_dim": target_dim,
            },
            "train": {
                "batch_size": train_cfg.batch_size,
                "max_epochs": train_cfg.max_epochs,
                "learning_rate": train_cfg.learning_rate,
                "optimizer": train_cfg.optimizer,
                "shuffle": train_cfg.shuffle,
                "loss_scale": train_cfg.loss_scale,
                "early_stop_tol": train_cfg.early_stop_tol,
            },
        },
    }
    report_path = out / "train_report.yaml"

    try:
        params, train_report = train(x, target_dim, rel_cfg, loss_cfg, train_cfg, params0)
    except TrainingDiverged as exc:
        partial = exc.report
        report_doc["results"] = {
            "diverged": True,
            "message": str(exc),
            "epochs_run": len(partial.epoch_losses),
            "loss_trajectory": partial.epoch_losses,
            "last_finite_loss": partial.epoch_losses[-1] if partial.epoch_losses else None,
            "pairs_observed": partial.pairs_observed,
        }
        write_report(report_path, report_doc)
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    y, _ = forward(params, x)
    ckpt_path = out / "checkpoint.txt"
    proj_path = out / "projected.embeddings.txt"
    save_checkpoint(ckpt_path, params)
    save_embeddings(proj_path, y, ids=ids)

    report_doc["results"] = {
        "diverged": False,
        "n": int(x.shape[0]),
        "input_dim": int(x.shape[1]),
        "epochs_run": len(train_report.epoch_losses),
        "stopped_early": train_report.stopped_early,
        "initial_epoch_loss": train_report.epoch_losses[0],
        "final_epoch_loss": train_report.epoch_losses[-1],
        "loss_trajectory": train_report.epoch_losses,
        "final_batch_epsilon_hats": train_report.final_batch_epsilon_hats,
        "pairs_observed": train_report.pairs_observed,
    }
    report_doc["outputs"] = {"checkpoint": ckpt_path.name, "projected": proj_path.name}
    if not args.no_figures:
        fig_path = out / "loss_curve.png"
        plotting.save_loss_curve(fig_path, train_report.epoch_losses)
        report_doc["outputs"]["figure"] = fig_path.name
    write_report(report_path, report_doc)
    print(
        f"trained {len(train_report.epoch_losses)} epochs, "
        f"loss {train_report.epoch_losses[0]:.6g} -> {train_report.epoch_losses[-1]:.6g} "
        f"({train_report.wall_time:.1f}s)"
    )
    return EXIT_OK


def cmd_audit(args) -> int:
    config = _load_config_file(args.config) if args.config else {}
    res = _Resolver(config)
    out = _out_dir(args)
    seeds = derive_seeds(args.seed)

    x, _ = load_embeddings(args.original)
    y, _ = load_embeddings(args.projected)
    if x.shape[0] != y.shape[0]:
        raise ValueError(
            f"row counts differ: {args.original} has {x.shape[0]}, {args.projected} has {y.shape[0]}"
        )
    rel_cfg = _relationship_config(res, args)
    m_value = res.get(args.m, "audit", "m", None)
    audit_cfg = AuditConfig(
        m=None if m_value is None else int(m_value),
        delta=float(res.get(args.delta, "audit", "delta", 0.05)),
        seed=seeds["audit"],
        ortho_tol=float(res.get(args.ortho_tol, "audit", "ortho_tol", 1e-10)),
        rank_tol=float(res.get(args.rank_tol, "audit", "rank_tol", 1e-8)),
        m_bound=res.get(args.m_bound, "audit", "m_bound", None),
    )

    bound_report = full_audit(x, y, rel_cfg, audit_cfg)

    report_doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "command": "audit",
        "master_seed": args.seed,
        "derived_seeds": seeds,
        "config": {
            "original": str(args.original),
            "projected": str(args.projected),
            "relationship": _echo_relationship(rel_cfg),
            "audit": {
                "m": audit_cfg.m,
                "delta": audit_cfg.delta,
                "ortho_tol": audit_cfg.ortho_tol,
                "rank_tol": audit_cfg.rank_tol,
                "m_bound": audit_cfg.m_bound,
            },
        },
        "results": bound_report.to_dict(),
    }
    if not args.no_figures:
        fig_path = out / "spectrum.png"
        plotting.save_spectrum_figure(fig_path, bound_report.eigs_high, bound_report.eigs_low)
        report_doc["outputs"] = {"figure": fig_path.name}
    write_report(out / "audit_report.yaml", report_doc)

    verdicts = bound_report.theorem_verdicts()
    failed = [name for name, v in verdicts.items() if v is False]
    skipped = [name for name, v in verdicts.items() if v is None]
    if failed:
        print(f"BOUND FAILURE (implementation bug signal): {', '.join(failed)}", file=sys.stderr)
        return EXIT_BOUND_FAILURE
    if skipped:
        print(f"warning: hypothesis not met for: {', '.join(skipped)}", file=sys.stderr)
    print(f"audit complete: epsilon={bound_report.epsilon:.6g}, all theorem checks passed")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _load_config_file(args.config) if args.config else {}
    res = _Resolver(config)
    out = _out_dir(args)

    a, _ = load_embeddings(args.queries)
    b, _ = load_embeddings(args.gallery)
    if a.shape != b.shape:
        raise ValueError(
            f"queries and gallery must be index-paired with equal shapes: "
            f"{args.queries} is {a.shape}, {args.gallery} is {b.shape}"
        )
    kind = res.get(args.similarity, "evaluate", "similarity", "cosine")
    gamma = res.get(args.gamma, "relationship", "gamma", 1.0 if kind == "rbf" else None)
    sim_cfg = RelationshipConfig(kind=kind, gamma=gamma if kind == "rbf" else None)
    k_list = _parse_int_list(res.get(args.k_list, "evaluate", "k_list", "1,5,10,100"), "--k-list")

    reports = evaluate_pair(a, b, sim_cfg, k_values=k_list)
    report_doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "command": "evaluate",
        "config": {
            "queries": str(args.queries),
            "gallery": str(args.gallery),
            "similarity": kind,
            "gamma": sim_cfg.gamma,
            "k_list": k_list,
        },
        "results": {direction: rep.to_dict() for direction, rep in reports.items()},
    }
    if not args.no_figures:
        fig_path = out / "recall.png"
        plotting.save_recall_figure(fig_path, reports)
        report_doc["outputs"] = {"figure": fig_path.name}
    write_report(out / "retrieval_report.yaml", report_doc)
    r1 = reports["a_to_b"].recall_at.get(1)
    print(f"evaluated {reports['a_to_b'].n_queries} queries per direction (R@1 a->b: {r1})")
    return EXIT_OK


def cmd_project(args) -> int:
    out = _out_dir(args)
    params = load_checkpoint(args.checkpoint)
    x, ids = load_embeddings(args.input)
    if x.shape[1] != params.input_dim:
        raise ValueError(
            f"{args.input} has dim {x.shape[1]} but {args.checkpoint} expects {params.input_dim}"
        )
    latent = None
    if args.latent is not None:
        lat_matrix, _ = load_embeddings(args.latent)
        if lat_matrix.shape[0] != x.shape[0]:
            raise ValueError(
                f"latent file has {lat_matrix.shape[0]} rows but input has {x.shape[0]}"
            )
        latent = lat_matrix[:, 0]
    y, _ = forward(params, x)
    columns = y if latent is None else np.column_stack([y, latent])
    proj_path = out / "projection.txt"
    save_embeddings(proj_path, columns, ids=ids)
    if not args.no_figures:
        plotting.save_projection_figure(out / "projection.png", y, latent=latent)
    print(f"wrote {proj_path} ({columns.shape[0]} rows, {columns.shape[1]} columns)")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpl",
        description="Relationship-preserving dimensionality reduction and bound auditing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a synthetic manifold dataset")
    p_gen.add_argument("--manifold", required=True, choices=MANIFOLDS)
    p_gen.add_argument("--n", type=int, default=2000, help="number of points")
    p_gen.add_argument("--turns", type=float, default=2.0, help="spiral revolutions (cinnamon-roll)")
    p_gen.add_argument("--twist", type=float, default=1.0, help="half-twists per revolution (twisted-surface)")
    p_gen.add_argument("--noise", type=float, default=0.0, help="gaussian positional noise scale")
    p_gen.add_argument("--lift", type=int, default=None, help="lift isometrically to this dimension")
    p_gen.add_argument("--seed", type=int, default=0, help="master seed")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_generate)

    p_train = sub.add_parser("train", help="train a projection network")
    p_train.add_argument("--input", required=True, help="embedding file to compress")
    p_train.add_argument("--target-dim", dest="target_dim", type=int, default=None)
    p_train.add_argument("--phi", choices=KINDS, default=None, help="relationship kernel")
    p_train.add_argument("--gamma", type=float, default=None, help="rbf width")
    p_train.add_argument("--norm-upper", dest="norm_upper", type=float, default=None)
    p_train.add_argument("--norm-lower", dest="norm_lower", type=float, default=None)
    p_train.add_argument("--discrepancy", choices=DISCREPANCIES, default=None)
    p_train.add_argument("--mask", choices=MASKINGS, default=None)
    p_train.add_argument("--top-k", dest="top_k", type=int, default=None)
    p_train.add_argument("--alpha", type=float, default=None, help="sigmoid mask steepness")
    p_train.add_argument(
        "--include-diagonal",
        dest="include_diagonal",
        choices=("auto", "true", "false"),
        default=None,
    )
    p_train.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--optimizer", choices=OPTIMIZERS, default=None)
    p_train.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=None)
    p_train.add_argument("--loss-scale", dest="loss_scale", choices=LOSS_SCALES, default=None)
    p_train.add_argument("--early-stop-tol", dest="early_stop_tol", type=float, default=None)
    p_train.add_argument("--hidden", default=None, help="comma-separated hidden widths (default 64,64)")
    p_train.add_argument("--activation", choices=ACTIVATIONS, default=None)
    p_train.add_argument("--seed", type=int, default=0, help="master seed")
    p_train.add_argument("--config", default=None, help="YAML config file")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--no-figures", dest="no_figures", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_audit = sub.add_parser("audit", help="audit perturbation bounds on an embedding pair")
    p_audit.add_argument("--original", required=True)
    p_audit.add_argument("--projected", required=True)
    p_audit.add_argument("--phi", choices=KINDS, default=None)
    p_audit.add_argument("--gamma", type=float, default=None)
    p_audit.add_argument("--norm-upper", dest="norm_upper", type=float, default=None)
    p_audit.add_argument("--norm-lower", dest="norm_lower", type=float, default=None)
    p_audit.add_argument("--m", type=int, default=None, help="sampled entry count")
    p_audit.add_argument("--delta", type=float, default=None, help="confidence parameter")
    p_audit.add_argument("--m-bound", dest="m_bound", type=float, default=None, help="a-priori entry bound M")
    p_audit.add_argument("--ortho-tol", dest="ortho_tol", type=float, default=None)
    p_audit.add_argument("--rank-tol", dest="rank_tol", type=float, default=None)
    p_audit.add_argument("--seed", type=int, default=0, help="master seed")
    p_audit.add_argument("--config", default=None)
    p_audit.add_argument("--out", required=True)
    p_audit.add_argument("--no-figures", dest="no_figures", action="store_true")
    p_audit.set_defaults(func=cmd_audit)

    p_eval = sub.add_parser("evaluate", help="cross-modal retrieval metrics for paired embeddings")
    p_eval.add_argument("--queries", required=True)
    p_eval.add_argument("--gallery", required=True)
    p_eval.add_argument("--similarity", choices=KINDS, default=None)
    p_eval.add_argument("--gamma", type=float, default=None)
    p_eval.add_argument("--k-list", dest="k_list", default=None, help="comma-separated recall cutoffs")
    p_eval.add_argument("--config", default=None)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--no-figures", dest="no_figures", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_proj = sub.add_parser("project", help="apply a trained checkpoint to embeddings")
    p_proj.add_argument("--checkpoint", required=True)
    p_proj.add_argument("--input", required=True)
    p_proj.add_argument("--latent", default=None, help="latent file to append as a color column")
    p_proj.add_argument("--out", required=True)
    p_proj.add_argument("--no-figures", dest="no_figures", action="store_true")
    p_proj.set_defaults(func=cmd_project)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
