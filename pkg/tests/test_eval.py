import math

import numpy as np
import pytest

from mixsearch.catalog import generate_synthetic, split
from mixsearch.config import Config, ConfigError, load_config
from mixsearch.evaluate import (
    EvalConfig,
    EvalReport,
    actions_csv,
    auc_csv,
    auc_of,
    compare,
    curves_csv,
    evaluate,
    parse_csv,
    reports_from_json,
    reports_to_json,
    write_report_files,
)
from mixsearch.policies import PRRPolicy, SKPRRPolicy, WSPolicy, make_policy
from mixsearch.relevance import default_params
from mixsearch.simuser import UserNoise


@pytest.fixture(scope="module")
def eval_setup():
    cat = generate_synthetic(60, 8, 4, clusters=4, seed=91)
    params = default_params(cat)
    targets = list(split(cat, seed=91).test)[:4]
    noise = UserNoise()
    cfg = EvalConfig(n_users=3, master_seed=7)
    return cat, params, targets, noise, cfg


class TestAggregation:
    def test_auc_of_constant_curve(self):
        assert auc_of([0.8] * 10) == pytest.approx(0.8)

    def test_auc_is_mean(self):
        curve = [0.1, 0.2, 0.3, 0.4]
        assert auc_of(curve) == pytest.approx(0.25)


class TestEvaluate:
    def test_report_shapes(self, eval_setup):
        cat, params, targets, noise, cfg = eval_setup
        report = evaluate(PRRPolicy(), cat, targets, params, noise, cfg)
        assert len(report.curve) == 10
        assert all(0.0 <= v <= 1.0 for v in report.curve)
        assert 0.0 <= report.auc <= 1.0
        assert report.n_searches == len(targets) * cfg.n_users
        counts = np.asarray(report.action_counts)
        assert counts.shape == (3, 10)
        # iteration 1 is always active for every search
        assert counts[:, 0].sum() == report.n_searches
        # active searches can only shrink over iterations
        active = counts.sum(axis=0)
        assert all(a >= b for a, b in zip(active, active[1:]))

    def test_deterministic(self, eval_setup):
        cat, params, targets, noise, cfg = eval_setup
        a = evaluate(WSPolicy(), cat, targets, params, noise, cfg)
        b = evaluate(WSPolicy(), cat, targets, params, noise, cfg)
        assert a == b

    def test_ws_actions_all_freeform(self, eval_setup):
        cat, params, targets, noise, cfg = eval_setup
        report = evaluate(WSPolicy(), cat, targets, params, noise, cfg)
        counts = np.asarray(report.action_counts)
        assert counts[1].sum() == 0 and counts[2].sum() == 0

    def test_skprr_sketches_exactly_once_per_search(self, eval_setup):
        cat, params, targets, noise, cfg = eval_setup
        report = evaluate(SKPRRPolicy(), cat, targets, params, noise, cfg)
        counts = np.asarray(report.action_counts)
        assert counts[2, 0] == report.n_searches
        assert counts[2, 1:].sum() == 0

    def test_prr_interval_bound_single_attribute(self):
        # after q noiseless answers the consistent slice is <= ceil(N/2^q)+1
        cat = generate_synthetic(128, 4, 1, clusters=2, seed=17)
        params = default_params(cat)
        from mixsearch.session import SearchSession
        from mixsearch.simuser import SimulatedUser
        from mixsearch.agent.core import Action

        target = 77
        session = SearchSession(cat, params, target_id=target)
        user = SimulatedUser(target_id=target, catalog=cat, rng_seed=0,
                             attr_subset=frozenset({0}))
        q = 0
        while not session.finished and not session.rr.all_exhausted():
            session.begin(Action.QUESTION)
            _, request = session.pending
            response = user.answer_question(request.attr, request.pivot_id)
            session.apply_answer(response)
            q += 1
            node = session.rr.cursors[0]
            size = 0 if node is None else node.slice_size
            assert size <= math.ceil(cat.n / 2**q) + 1

    def test_empty_targets_rejected(self, eval_setup):
        cat, params, _, noise, cfg = eval_setup
        with pytest.raises(ValueError):
            evaluate(PRRPolicy(), cat, [], params, noise, cfg)


class TestCompareAndCsv:
    def _reports(self):
        mk = lambda name, auc: EvalReport(
            policy=name, curve=tuple([auc] * 10), auc=auc,
            action_counts=tuple(tuple([1] * 10) for _ in range(3)),
            iteration0_pr=0.5, n_searches=30, successes=12)
        return [mk("WS", 0.7), mk("PRR", 0.9), mk("SK_PRR", 0.7)]

    def test_single_report_single_row(self):
        rows = compare(self._reports()[:1])
        assert rows == [("WS", 0.7)]

    def test_sorted_by_auc_ties_by_name(self):
        rows = compare(self._reports())
        assert rows == [("PRR", 0.9), ("SK_PRR", 0.7), ("WS", 0.7)]

    def test_csv_round_trips(self, eval_setup, tmp_path):
        cat, params, targets, noise, cfg = eval_setup
        reports = [evaluate(PRRPolicy(), cat, targets, params, noise, cfg),
                   evaluate(WSPolicy(), cat, targets, params, noise, cfg)]
        rows = parse_csv(curves_csv(reports))
        assert len(rows) == 2 * 11  # iterations 0..10 per policy
        for report in reports:
            mine = [r for r in rows if r["policy"] == report.policy]
            assert float(mine[0]["mean_pr"]) == report.iteration0_pr
            for i, pr in enumerate(report.curve, start=1):
                assert float(mine[i]["mean_pr"]) == pr
        auc_rows = parse_csv(auc_csv(reports))
        assert {r["policy"]: float(r["auc"]) for r in auc_rows} == {
            r.policy: r.auc for r in reports}
        act_rows = parse_csv(actions_csv(reports))
        assert len(act_rows) == 2 * 10 * 3
        back = reports_from_json(reports_to_json(reports))
        assert back == reports

    def test_write_report_files(self, eval_setup, tmp_path):
        cat, params, targets, noise, cfg = eval_setup
        reports = [evaluate(PRRPolicy(), cat, targets, params, noise, cfg)]
        paths = write_report_files(reports, tmp_path / "out", figures=True)
        for key in ("report", "curves", "auc", "actions", "curves_png", "actions_png"):
            assert paths[key].exists(), key
        assert paths["curves_png"].stat().st_size > 1000


class TestActionFractions:
    def test_fractions_sum_to_one_while_active(self):
        report = EvalReport(
            policy="X", curve=tuple([0.5] * 10), auc=0.5,
            action_counts=((4, 2, 0, 0, 0, 0, 0, 0, 0, 0),
                           (0, 1, 0, 0, 0, 0, 0, 0, 0, 0),
                           (0, 1, 0, 0, 0, 0, 0, 0, 0, 0)),
            iteration0_pr=0.1, n_searches=4, successes=4)
        fr = report.action_fractions()
        np.testing.assert_allclose(fr[:, 0], [1.0, 0.0, 0.0])
        np.testing.assert_allclose(fr[:, 1], [0.5, 0.25, 0.25])
        np.testing.assert_allclose(fr[:, 2], [0.0, 0.0, 0.0])


class TestConfig:
    def test_defaults_document_and_reload(self, tmp_path):
        cfg = Config()
        path = tmp_path / "defaults.conf"
        path.write_text(cfg.document())
        assert load_config(path) == cfg

    def test_overrides(self, tmp_path):
        path = tmp_path / "cfg.conf"
        path.write_text("seed = 5\ntrain.epochs = 3\ngen.n = 100  # comment\n")
        cfg = load_config(path)
        assert cfg.seed == 5
        assert cfg.train.seed == 5
        assert cfg.eval.master_seed == 5
        assert cfg.train.epochs == 3
        assert cfg.gen.n == 100

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("train.oops = 1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("train.epochs = banana\n")
        with pytest.raises(ConfigError, match="bad value"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no such config"):
            load_config(tmp_path / "absent.conf")

    def test_make_policy_names(self):
        for name in ("WS", "PRR", "SK_PRR", "ws"):
            assert make_policy(name).name == name.upper()
        with pytest.raises(ValueError):
            make_policy("RL")
        with pytest.raises(ValueError):
            make_policy("nope")
