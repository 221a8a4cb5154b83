"""Percentile-rank evaluation harness: curves, AUC tables, action distributions.

Each policy is scored by running seeded searches for every (test target,
simulated user) pair and averaging percentile ranks per iteration. Searches
that succeed early keep contributing their final rank to later iterations
(the results stay on screen), while action counts only cover iterations in
which a search was still active.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent.core import Action
from .agent.training import derive_seed, pad_prs, run_episode
from .catalog import Catalog
from .interactions import build_pivot_trees
from .relevance import LikelihoodParams, percentile_rank
from .session import SearchSession
from .simuser import UserNoise

__all__ = [
    "EvalConfig",
    "EvalReport",
    "auc_of",
    "evaluate",
    "compare",
    "curves_csv",
    "auc_csv",
    "actions_csv",
    "parse_csv",
    "reports_to_json",
    "reports_from_json",
    "write_report_files",
]

N_ACTIONS = 3


@dataclass(frozen=True)
class EvalConfig:
    n_users: int = 10
    max_iterations: int = 10
    history: int = 3
    top_k: int = 5
    page_size: int = 8
    master_seed: int = 0


def auc_of(curve) -> float:
    """AUC of a percentile-rank curve: the mean of its per-iteration values."""
    return float(np.mean(np.asarray(curve, dtype=np.float64)))


@dataclass(frozen=True)
class EvalReport:
    """Aggregated outcome of one policy over all (target, user) searches."""

    policy: str
    curve: tuple[float, ...]  # mean PR at iterations 1..max_iterations
    auc: float
    action_counts: tuple[tuple[int, ...], ...]  # (n_actions, max_iterations)
    iteration0_pr: float
    n_searches: int
    successes: int

    def action_fractions(self) -> np.ndarray:
        counts = np.asarray(self.action_counts, dtype=np.float64)
        active = counts.sum(axis=0)
        out = np.zeros_like(counts)
        np.divide(counts, active, out=out, where=active > 0)
        return out


def evaluate(policy, catalog: Catalog, test_targets: list[int],
             params: LikelihoodParams, noise: UserNoise,
             cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Run every (target, user) search under one policy and aggregate."""
    if not test_targets:
        raise ValueError("test_targets must be non-empty")
    n_iter = cfg.max_iterations
    trees = build_pivot_trees(catalog)
    pr_rows: list[list[float]] = []
    iter0: list[float] = []
    counts = np.zeros((N_ACTIONS, n_iter), dtype=int)
    successes = 0
    for target in test_targets:
        for u in range(cfg.n_users):
            user_seed = derive_seed(cfg.master_seed, 200 + u)
            user = noise.make_user(catalog, target, user_seed)
            session = SearchSession(catalog, params, target_id=target,
                                    page_size=cfg.page_size, max_iterations=n_iter,
                                    trees=trees)
            iter0.append(percentile_rank(session.ranking, target))
            trajectory, success = run_episode(policy, session, user, n_iter,
                                              cfg.history, cfg.top_k)
            successes += int(success)
            pr_rows.append(pad_prs(trajectory, n_iter))
            for i, step in enumerate(trajectory):
                counts[int(step[1]), i] += 1
    curve = np.asarray(pr_rows).mean(axis=0)
    return EvalReport(
        policy=policy.name,
        curve=tuple(float(x) for x in curve),
        auc=auc_of(curve),
        action_counts=tuple(tuple(int(c) for c in row) for row in counts),
        iteration0_pr=float(np.mean(iter0)),
        n_searches=len(pr_rows),
        successes=successes,
    )


def compare(reports: list[EvalReport]) -> list[tuple[str, float]]:
    """Policies ranked by AUC, best first; exact ties sort by name."""
    return [(r.policy, r.auc) for r in
            sorted(reports, key=lambda r: (-r.auc, r.policy))]


# ----- delimited output -----

def curves_csv(reports: list[EvalReport]) -> str:
    """policy,iteration,mean_pr rows; iteration 0 is the pre-feedback rank."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["policy", "iteration", "mean_pr"])
    for r in reports:
        writer.writerow([r.policy, 0, repr(r.iteration0_pr)])
        for i, pr in enumerate(r.curve, start=1):
            writer.writerow([r.policy, i, repr(pr)])
    return buf.getvalue()


def auc_csv(reports: list[EvalReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["policy", "auc"])
    for policy, auc in compare(reports):
        writer.writerow([policy, repr(auc)])
    return buf.getvalue()


def actions_csv(reports: list[EvalReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["policy", "iteration", "action", "fraction"])
    for r in reports:
        fractions = r.action_fractions()
        for i in range(fractions.shape[1]):
            for action in Action:
                writer.writerow([r.policy, i + 1, action.name.lower(),
                                 repr(float(fractions[int(action), i]))])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def reports_to_json(reports: list[EvalReport]) -> str:
    return json.dumps([{
        "policy": r.policy,
        "curve": list(r.curve),
        "auc": r.auc,
        "action_counts": [list(row) for row in r.action_counts],
        "iteration0_pr": r.iteration0_pr,
        "n_searches": r.n_searches,
        "successes": r.successes,
    } for r in reports], indent=2)


def reports_from_json(text: str) -> list[EvalReport]:
    out = []
    for row in json.loads(text):
        out.append(EvalReport(
            policy=row["policy"],
            curve=tuple(row["curve"]),
            auc=row["auc"],
            action_counts=tuple(tuple(c) for c in row["action_counts"]),
            iteration0_pr=row["iteration0_pr"],
            n_searches=row["n_searches"],
            successes=row["successes"],
        ))
    return out


def write_report_files(reports: list[EvalReport], outdir: str | Path,
                       figures: bool = True) -> dict[str, Path]:
    """Write report.json plus the three CSVs (and figures) into outdir."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": outdir / "report.json",
        "curves": outdir / "curves.csv",
        "auc": outdir / "auc.csv",
        "actions": outdir / "actions.csv",
    }
    paths["report"].write_text(reports_to_json(reports))
    paths["curves"].write_text(curves_csv(reports))
    paths["auc"].write_text(auc_csv(reports))
    paths["actions"].write_text(actions_csv(reports))
    if figures:
        from .figures import render_actions, render_curves

        paths["curves_png"] = render_curves(reports, outdir / "percentile_rank.png")
        paths["actions_png"] = render_actions(reports, outdir / "actions.png")
    return paths
