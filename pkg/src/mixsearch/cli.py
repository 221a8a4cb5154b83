"""Command-line entry points: gen-data, train, eval, serve, export-curves."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .agent.network import QNetwork
from .agent.training import save_checkpoint, train
from .catalog import cluster_reduce, generate_synthetic, load_catalog, save_catalog, split
from .config import Config, load_config
from .evaluate import EvalConfig, evaluate, reports_from_json, write_report_files
from .policies import make_policy
from .relevance import default_params
from .service import create_app


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")


def _load(args) -> Config:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _params(cfg: Config, catalog):
    return default_params(catalog, cfg.likelihood.sigma_scale,
                          cfg.likelihood.tau_scale, cfg.likelihood.floor)


def cmd_gen_data(args) -> int:
    cfg = _load(args)
    g = cfg.gen
    catalog = generate_synthetic(g.n, g.d, g.m, g.clusters, cfg.seed)
    if g.reduce_to and g.reduce_to < catalog.n:
        catalog, _id_map = cluster_reduce(catalog, g.reduce_to, cfg.seed)
    save_catalog(catalog, args.out)
    print(f"wrote {catalog.n} items (d={catalog.d}, m={catalog.m}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load(args)
    catalog = load_catalog(args.catalog)
    assignment = split(catalog, cfg.split.ratios, cfg.seed)
    params = _params(cfg, catalog)
    noise = cfg.user

    def user_factory(target_id, role_seed):
        return noise.make_user(catalog, target_id, role_seed)

    started = time.time()

    def progress(epoch, loss, successes, auc):
        print(f"epoch {epoch:3d}  loss {loss:10.6f}  val successes {successes:3d}"
              f"  val auc {auc:.4f}  [{time.time() - started:6.1f}s]")

    net, log = train(catalog, assignment, cfg.train, params=params,
                     user_factory=user_factory, progress=progress)
    save_checkpoint(net, args.out, cfg.train, log)
    if args.log:
        log.save(args.log)
    print(f"selected epoch {log.selected_epoch}; checkpoint {args.out} "
          f"(hash {net.params_hash()[:16]})")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    catalog = load_catalog(args.catalog)
    assignment = split(catalog, cfg.split.ratios, cfg.seed)
    params = _params(cfg, catalog)
    net = QNetwork.load(args.checkpoint) if args.checkpoint else None

    names = [p.strip() for p in args.policies.split(",") if p.strip()]
    policies = [make_policy(name, net) for name in names]
    targets = list(assignment.test)
    if args.n_targets and args.n_targets < len(targets):
        targets = targets[: args.n_targets]
    ecfg = EvalConfig(n_users=cfg.eval.n_users, max_iterations=cfg.eval.max_iterations,
                      history=cfg.eval.history, top_k=cfg.eval.top_k,
                      page_size=cfg.eval.page_size, master_seed=cfg.seed)
    reports = []
    for policy in policies:
        started = time.time()
        report = evaluate(policy, catalog, targets, params, cfg.user, ecfg)
        print(f"{policy.name:7s} auc {report.auc:.4f}  successes "
              f"{report.successes}/{report.n_searches}  [{time.time() - started:5.1f}s]")
        reports.append(report)
    paths = write_report_files(reports, args.outdir, figures=not args.no_figures)
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    cfg = _load(args)
    catalog = load_catalog(args.catalog)
    net = QNetwork.load(args.checkpoint) if args.checkpoint else None
    ui_dir = args.ui_dir if args.ui_dir and Path(args.ui_dir).is_dir() else None
    app = create_app(catalog, net=net, params=_params(cfg, catalog), cfg=cfg,
                     ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_export_curves(args) -> int:
    reports = reports_from_json(Path(args.report).read_text())
    paths = write_report_files(reports, args.outdir, figures=not args.no_figures)
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixsearch",
                                     description="mixed-initiative retrieval toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic catalog")
    _common(p)
    p.add_argument("--out", type=Path, required=True, help="catalog output path (.json/.csv)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the RL arbiter")
    _common(p)
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="checkpoint output (.npz)")
    p.add_argument("--log", type=Path, default=None, help="training log CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate policies on the test split")
    _common(p)
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--policies", default="RL,WS,PRR,SK_PRR")
    p.add_argument("--n-targets", type=int, default=0, help="cap test targets (0 = all)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP session API")
    _common(p)
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", type=Path, default=Path("frontend/dist"))
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-curves", help="re-emit CSVs and figures from a report")
    p.add_argument("--report", type=Path, required=True, help="report.json from eval")
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_export_curves)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
