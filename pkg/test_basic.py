#!/usr/bin/env python3
"""
Basic test script for the semi-exponential extremes toolkit.
Tests configuration, caching, reporting and the command line without long simulations.
"""

import json
import os
import sys
import tempfile

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def test_imports():
    """Test that all modules can be imported."""
    print("Testing imports...")

    modules = ['utils', 'renewal', 'analytic', 'subordinator', 'zeroset', 'capacity', 'process', 'limit',
               'stats', 'database', 'report', 'experiments', 'main']
    for name in modules:
        __import__(name)
        print(f"✓ {name} module imported successfully")


def test_utils():
    """Test utility functions."""
    print("\nTesting utility functions...")

    from utils import format_estimate, format_verdict, stream_rng

    assert format_estimate(0.123456) == "0.12346"
    assert format_estimate(0.5, 0.0123) == "0.5 ± 0.012"
    assert format_verdict(True) == "✅ PASS"
    assert format_verdict(False) == "❌ FAIL"
    print("✓ Formatting works")

    a = stream_rng(42, 1, 2).random(5)
    b = stream_rng(42, 1, 2).random(5)
    c = stream_rng(42, 1, 3).random(5)
    assert (a == b).all() and not (a == c).all()
    print("✓ Seeded streams are reproducible and keyed")


def test_config_files():
    """Test loading, saving and validating configuration files."""
    print("\nTesting configuration files...")

    from utils import ConfigError, load_config, save_config

    with tempfile.TemporaryDirectory() as tmp:
        missing = os.path.join(tmp, "missing.json")
        assert load_config(missing) == {}

        path = os.path.join(tmp, "config.json")
        save_config({'seed': 3}, path)
        assert load_config(path) == {'seed': 3, 'schema_version': 1}

        with open(path, 'w', encoding='utf-8') as f:
            json.dump({'schema_version': 2}, f)
        try:
            load_config(path)
            raise AssertionError("future schema accepted")
        except ConfigError as e:
            assert e.field_path == "schema_version"

        with open(path, 'w', encoding='utf-8') as f:
            f.write("{not json")
        try:
            load_config(path)
            raise AssertionError("broken JSON accepted")
        except ConfigError:
            pass
    print("✓ Missing, saved, versioned and broken files")


def test_environment():
    """Test environment overrides."""
    print("\nTesting environment overrides...")

    from utils import ConfigError, get_db_path, get_output_dir, get_thread_count

    saved = {k: os.environ.get(k) for k in ('EVT_THREADS', 'EVT_OUTPUT_DIR', 'EVT_DB_PATH')}
    try:
        os.environ['EVT_THREADS'] = "3"
        os.environ['EVT_OUTPUT_DIR'] = "out"
        os.environ.pop('EVT_DB_PATH', None)
        assert get_thread_count() == 3
        assert get_output_dir() == "out"
        assert get_db_path() == "evt_cache.db"
        os.environ['EVT_THREADS'] = "many"
        try:
            get_thread_count()
            raise AssertionError("non-integer thread count accepted")
        except ConfigError as e:
            assert e.field_path == "EVT_THREADS"
    finally:
        for key, value in saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value
    print("✓ EVT_* variables are honoured")


def test_parse_config():
    """Test experiment configuration validation."""
    print("\nTesting experiment configuration...")

    from experiments import DEFAULT_REPS, default_config, parse_config
    from utils import ConfigError

    config = default_config()
    assert config.params.alpha == 0.5 and config.params.beta == 0.25
    assert config.n_grid == [1000, 10000, 100000]
    assert config.reps == DEFAULT_REPS
    assert config.truncation == (60, 60)

    custom = parse_config({'params': {'alpha': 0.7}, 'n_grid': [100, 200], 'reps': {'joint': 5}, 'seed': 9})
    assert custom.params.alpha == 0.7 and custom.reps['joint'] == 5 and custom.seed == 9
    assert custom.summary()['n_grid'] == [100, 200]

    bad = [
        ({'reps': {'joint': 0}}, 'reps.joint'),
        ({'reps': {'nothing': 5}}, 'reps.nothing'),
        ({'n_grid': [100, 100]}, 'n_grid'),
        ({'n_grid': []}, 'n_grid'),
        ({'params': {'beta': 0.7}}, 'params'),
        ({'params': {'delta': 1}}, 'params.delta'),
        ({'seed': -1}, 'seed'),
        ({'seed': True}, 'seed'),
        ({'truncation': [10]}, 'truncation'),
        ({'stream_scheme': 'mt19937'}, 'stream_scheme'),
        ({'c_inf_n': 10}, 'c_inf_n'),
    ]
    for raw, field_path in bad:
        try:
            parse_config(raw)
            raise AssertionError(f"accepted {raw}")
        except ConfigError as e:
            assert e.field_path == field_path, (raw, e.field_path)
    print(f"✓ Defaults and {len(bad)} invalid configurations")


def test_database():
    """Test the c_∞ and normalizer cache."""
    print("\nTesting database...")

    from analytic import ModelParams, normalizers
    from database import ExperimentDatabase
    from utils import CacheMiss

    with tempfile.TemporaryDirectory() as tmp:
        db = ExperimentDatabase(os.path.join(tmp, "cache.db"))
        try:
            db.require_c_infty(0.25, "constant", 1.0)
            raise AssertionError("empty cache returned a value")
        except CacheMiss as e:
            assert "estimate-cinf" in str(e)

        db.save_c_infty(0.25, "constant", 1.0, 1000, 100, 7, 0.6, 0.01, 0.62, 0.01, 0.61)
        entry = db.require_c_infty(0.25, "constant", 1.0)
        assert abs(entry['value'] - 0.61) < 1e-12
        assert db.get_c_infty(0.25, "constant", 1.0, 1000, 100, 7)['route_b'] == 0.62
        assert db.get_c_infty(0.25, "constant", 1.0, 1000, 100, 8) is None
        assert db.latest_c_infty(0.3, "constant", 1.0) is None

        # same provenance replaces, it does not duplicate
        db.save_c_infty(0.25, "constant", 1.0, 1000, 100, 7, 0.5, 0.01, 0.5, 0.01, 0.61)
        assert db.get_stats()['c_infty_runs'] == 1
        assert db.require_c_infty(0.25, "constant", 1.0)['value'] == 0.5

        p = ModelParams()
        table = normalizers(1000, 0.6, p)
        key = db.generate_key(sorted(p.to_dict().items()))
        db.save_normalizers(key, table)
        stored = db.get_normalizers(key, 1000, 0.6)
        assert stored['a_n'] == table.a_n and stored['b_n'] == table.b_n
        assert db.get_normalizers(key, 1000, 0.5) is None
    print("✓ Cache stores, pools and reports misses")


def test_report_generator():
    """Test artifact writing and the acceptance report."""
    print("\nTesting report generator...")

    from report import ReportGenerator
    from stats import Verdict

    with tempfile.TemporaryDirectory() as tmp:
        reporter = ReportGenerator(os.path.join(tmp, "results"))
        rows = [(1000, 0.1 + 0.2, "[0.0,1.0]"), (2000, float('-inf'), "a,b")]
        first = reporter.write_csv("rows.csv", ("n", "value", "interval"), rows)
        with open(first, 'rb') as f:
            content = f.read()
        assert content == b'n,value,interval\r\n1000,0.30000000000000004,"[0.0,1.0]"\r\n2000,-inf,"a,b"\r\n'

        verdicts = [Verdict("ks_ok", True, {'distance': 0.01}, [1]), Verdict("trend", False, {}, [1])]
        path = reporter.write_summary("demo", verdicts, {'seed': 1})
        with open(path, encoding='utf-8') as f:
            summary = json.load(f)
        assert summary['experiment'] == "demo" and summary['passed'] is False
        assert [v['name'] for v in summary['verdicts']] == ["ks_ok", "trend"]

        report = reporter.generate_report({'demo': verdicts}, {'seed': 1, 'params': {}})
        assert "# Acceptance Report" in report
        assert "- **Checks**: 2" in report and "- **Failed**: 1" in report
        assert "✅ PASS `ks_ok` (distance=0.01)" in report
        assert "❌ FAIL `trend`" in report
        saved = reporter.save_report(report)
        assert os.path.exists(saved)
    print("✓ CSV bytes, summaries and reports")


def test_retry_and_trend_verdicts():
    """Test the retry wiring of experiments and the p̄ trend verdict."""
    print("\nTesting retries and trend verdicts...")

    from dataclasses import replace
    from database import ExperimentDatabase
    from experiments import EXPERIMENTS, RunContext, default_config, p_bar_trend_verdict, run_experiment
    from report import ReportGenerator, RunLog
    from stats import Verdict
    from utils import retry_seed

    assert retry_seed(11) == retry_seed(11) and retry_seed(11) != retry_seed(12)

    seen = []

    def flaky(ctx):
        seen.append(ctx.config.seed)
        return [Verdict('flaky_check', ctx.config.seed != 11, {}, [ctx.config.seed])]

    with tempfile.TemporaryDirectory() as tmp:
        config = replace(default_config(), seed=11, output_dir=os.path.join(tmp, "out"))
        ctx = RunContext(config=config, reporter=ReportGenerator(config.output_dir),
                         log=RunLog(os.path.join(tmp, "logs"), tag="retry"),
                         db=ExperimentDatabase(os.path.join(tmp, "cache.db")))
        EXPERIMENTS['flaky'] = flaky
        try:
            verdicts = run_experiment(ctx, 'flaky')
        finally:
            EXPERIMENTS.pop('flaky', None)
        with open(os.path.join(config.output_dir, "flaky_summary.json"), encoding='utf-8') as f:
            summary = json.load(f)
    assert seen == [11, retry_seed(11)]
    assert verdicts[0].passed and verdicts[0].seeds == [11, retry_seed(11)]
    assert summary['passed'] is True and summary['verdicts'][0]['seeds'] == [11, retry_seed(11)]
    print("✓ A failed check reruns once on a second recorded seed")

    falling = [[0.10 + 0.001 * i for i in range(10)], [0.06 + 0.001 * i for i in range(10)],
               [0.02 + 0.001 * i for i in range(10)]]
    assert p_bar_trend_verdict(falling, [0.1, 0.06, 0.02], 0.03, 1).passed
    rising = falling[::-1]
    flat_but_small = p_bar_trend_verdict(rising, [0.02, 0.06, 0.01], 0.03, 1)
    assert not flat_but_small.passed
    assert flat_but_small.metrics['final_below_threshold'] is True
    assert not p_bar_trend_verdict(falling[:1], [0.02], 0.03, 1).passed
    print("✓ The p̄ verdict needs a falling KS trend, not just a small last value")


def test_cli():
    """Test the command line end to end on a small run."""
    print("\nTesting command line...")

    from main import main

    cwd = os.getcwd()
    saved = os.environ.get('EVT_DB_PATH')
    with tempfile.TemporaryDirectory() as tmp:
        try:
            os.chdir(tmp)
            os.environ['EVT_DB_PATH'] = os.path.join(tmp, "cache.db")
            config = os.path.join(tmp, "config.json")
            with open(config, 'w', encoding='utf-8') as f:
                json.dump({'reps': {'counterexample': 300}, 'seed': 5}, f)

            outputs = []
            for run in ("a", "b"):
                out = os.path.join(tmp, run)
                code = main(['counterexample', '--config', config, '--output-dir', out, '--threads', '1'])
                assert code == 0, code
                with open(os.path.join(out, "counterexample.csv"), 'rb') as f:
                    outputs.append(f.read())
                assert os.path.exists(os.path.join(out, "counterexample_summary.json"))
            assert outputs[0] == outputs[1]
            print("✓ Reruns with the same seed give identical CSV bytes")

            assert main(['simulate-process', '--config', config, '--output-dir', tmp]) == 2
            print("✓ Missing c_∞ cache exits with status 2")

            with open(config, 'w', encoding='utf-8') as f:
                json.dump({'reps': {'joint': 0}}, f)
            assert main(['counterexample', '--config', config, '--output-dir', tmp]) == 2
            assert main(['counterexample', '--config', config, '--seed', '-3']) == 2
            print("✓ Invalid configuration exits with status 2")
        finally:
            os.chdir(cwd)
            if saved is None:
                os.environ.pop('EVT_DB_PATH', None)
            else:
                os.environ['EVT_DB_PATH'] = saved


def main():
    """Run all tests."""
    print("Semi-exponential Extremes Toolkit - Basic Tests")
    print("=" * 50)

    tests = [
        test_imports,
        test_utils,
        test_config_files,
        test_environment,
        test_parse_config,
        test_database,
        test_report_generator,
        test_retry_and_trend_verdicts,
        test_cli,
    ]

    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"✗ {test.__name__} failed: {e!r}")

    print(f"\n{'='*50}")
    print(f"Tests passed: {passed}/{len(tests)}")

    if passed == len(tests):
        print("🎉 All tests passed!")
        return 0
    print("❌ Some tests failed. Check the output above.")
    return 1


if __name__ == "__main__":
    sys.exit(main())
