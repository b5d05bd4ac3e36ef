"""
场景模拟集成测试

RA → Querier 订阅 → Mobile Node 上报 → SP 投递 → Querier 解密，结果与明文 oracle 对照。
"""

import random

import pytest

from pepsi.base import ConfigInvalidError
from pepsi.core.labels import Label
from pepsi.services.simulation import (
    ScenarioConfig,
    ScenarioResult,
    compare_deliveries,
    plaintext_oracle,
    run_scenario,
)

pytestmark = pytest.mark.integration

TEMP = ["Temp", "Irvine, CA"]
HUMIDITY = ["Humidity", "Irvine, CA"]


@pytest.fixture(scope="module")
def seven() -> ScenarioConfig:
    return ScenarioConfig(
        seed=7,
        num_nodes=10,
        num_queriers=10,
        label_universe=(
            ("Temp", "Irvine, CA"),
            ("Humidity", "Irvine, CA"),
            ("Temp", "Tokyo"),
            ("Noise", "Tokyo"),
            ("PM2.5", "Paris", "Outdoor"),
        ),
        subscription_density=0.5,
        reports_per_node=10,
    )


@pytest.fixture(scope="module")
def seven_result(seven):
    return run_scenario(seven)


# ============ oracle ============

class TestPlaintextOracle:

    def test_matches_equal_labels_only(self):
        temp, humidity = Label.of(*TEMP), Label.of(*HUMIDITY)
        subs = [(0, temp), (1, humidity), (2, temp)]
        assert plaintext_oracle([temp, humidity], subs) == {
            (0, (0, temp)),
            (0, (2, temp)),
            (1, (1, humidity)),
        }

    def test_empty(self):
        assert plaintext_oracle([], [(0, Label.of(*TEMP))]) == set()
        assert plaintext_oracle([Label.of(*TEMP)], []) == set()


class TestCompareDeliveries:

    def test_exact(self):
        temp = Label.of(*TEMP)
        expected = {(0, (0, temp)), (1, (0, temp))}
        comparison = compare_deliveries([(1, (0, temp)), (0, (0, temp))], expected)
        assert comparison.exact

    def test_duplicate_hides_missing(self):
        temp, humidity = Label.of(*TEMP), Label.of(*HUMIDITY)
        expected = {(0, (0, temp)), (1, (1, humidity))}
        # 数量与期望相同，但一对重复、另一对缺失
        comparison = compare_deliveries([(0, (0, temp)), (0, (0, temp))], expected)
        assert (comparison.false, comparison.missing, comparison.duplicates) == (0, 1, 1)
        assert not comparison.exact

    def test_false_delivery(self):
        temp, humidity = Label.of(*TEMP), Label.of(*HUMIDITY)
        comparison = compare_deliveries([(0, (0, temp)), (0, (1, humidity))], {(0, (0, temp))})
        assert (comparison.false, comparison.missing, comparison.duplicates) == (1, 0, 0)

    def test_result_requires_exact_set(self):
        result = ScenarioResult(
            deliveries_expected=2, deliveries_made=2, decryptions_ok=2,
            missing_deliveries=1, duplicate_deliveries=1,
        )
        assert not result.passed
        assert "duplicate_deliveries=1" in result.to_lines()
        assert "passed=false" in result.to_lines()


# ============ 配置 ============

class TestScenarioConfig:

    def test_from_mapping(self):
        cfg = ScenarioConfig.from_mapping(
            {"seed": 1, "num_nodes": 2, "num_queriers": 1, "labels": [TEMP, HUMIDITY]}
        )
        assert cfg.label_universe == (tuple(TEMP), tuple(HUMIDITY))
        assert cfg.matching == "tag"

    def test_duplicate_labels_collapse(self):
        cfg = ScenarioConfig(1, 1, 1, (("Temp", "Irvine, CA"), ("irvine, ca", "TEMP")))
        assert cfg.labels() == [Label.of(*TEMP)]

    @pytest.mark.parametrize(
        "override",
        [
            {"num_nodes": 0},
            {"num_queriers": -1},
            {"subscription_density": 1.5},
            {"payload_size": 0},
            {"seed": -1},
            {"matching": "flood"},
            {"transport": "no"},
            {"transport": 1},
            {"labels": []},
            {"labels": [["   "]]},
            {"labels": "Temp"},
            {"colour": "blue"},
        ],
    )
    def test_invalid(self, override):
        data = {"seed": 1, "num_nodes": 1, "num_queriers": 1, "labels": [TEMP]} | override
        with pytest.raises(ConfigInvalidError):
            ScenarioConfig.from_mapping(data)

    def test_missing_keys(self):
        with pytest.raises(ConfigInvalidError) as exc_info:
            ScenarioConfig.from_mapping({"seed": 1})
        assert "num_nodes" in exc_info.value.details["keys"]

    def test_from_toml(self, tmp_path):
        path = tmp_path / "scenario.toml"
        path.write_text(
            'seed = 3\nnum_nodes = 2\nnum_queriers = 2\nsubscription_density = 0.5\n'
            'labels = [["Temp", "Irvine, CA"]]\n',
            encoding="utf-8",
        )
        cfg = ScenarioConfig.from_toml(path)
        assert (cfg.seed, cfg.num_nodes, cfg.subscription_density) == (3, 2, 0.5)

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("seed = = 3", encoding="utf-8")
        with pytest.raises(ConfigInvalidError):
            ScenarioConfig.from_toml(path)


# ============ 场景 ============

class TestRunScenario:

    def test_minimal(self):
        result = run_scenario(ScenarioConfig(seed=1, num_nodes=1, num_queriers=1, label_universe=(tuple(TEMP),)))
        assert result.deliveries_made == 1
        assert result.decryptions_ok == 1
        assert result.passed
        assert "deliveries=1" in result.to_lines()
        assert "passed=true" in result.to_lines()

    def test_nobody_subscribed(self):
        result = run_scenario(
            ScenarioConfig(
                seed=1, num_nodes=2, num_queriers=2, label_universe=(tuple(TEMP),), subscription_density=0.0
            )
        )
        assert result.subscriptions == 0
        assert result.deliveries_made == 0
        assert result.passed

    def test_seed_seven(self, seven_result):
        assert seven_result.reports_published == 100
        assert seven_result.false_deliveries == 0
        assert seven_result.missing_deliveries == 0
        assert seven_result.duplicate_deliveries == 0
        assert seven_result.decryptions_failed == 0
        assert seven_result.deliveries_made == seven_result.deliveries_expected
        assert seven_result.decryptions_ok == seven_result.deliveries_made
        assert set(seven_result.timings) == {"register", "report", "match", "decrypt"}

    def test_deterministic(self, seven, seven_result):
        assert run_scenario(seven).counters() == seven_result.counters()

    def test_concurrent_publish(self, seven, seven_result):
        cfg = ScenarioConfig.from_mapping(
            {
                "seed": seven.seed,
                "num_nodes": seven.num_nodes,
                "num_queriers": seven.num_queriers,
                "labels": [list(kw) for kw in seven.label_universe],
                "subscription_density": seven.subscription_density,
                "reports_per_node": seven.reports_per_node,
                "concurrency": 4,
            }
        )
        assert run_scenario(cfg).counters() == seven_result.counters()

    def test_over_transport(self, seven, seven_result):
        cfg = ScenarioConfig(
            seed=seven.seed,
            num_nodes=seven.num_nodes,
            num_queriers=seven.num_queriers,
            label_universe=seven.label_universe,
            subscription_density=seven.subscription_density,
            reports_per_node=seven.reports_per_node,
            concurrency=4,
            transport=True,
        )
        assert run_scenario(cfg).counters() == seven_result.counters()

    def test_broadcast_baseline(self):
        common = dict(seed=11, num_nodes=3, num_queriers=2, label_universe=(tuple(TEMP), tuple(HUMIDITY)))
        tagged = run_scenario(ScenarioConfig(**common))
        broadcast = run_scenario(ScenarioConfig(**common, matching="broadcast"))
        assert broadcast.passed
        assert broadcast.deliveries_made == tagged.deliveries_made
        assert broadcast.trial_decryptions > 0
        assert tagged.trial_decryptions == 0
        assert any(line.startswith("trial_decryptions=") for line in broadcast.to_lines())

    @pytest.mark.slow
    def test_random_scenarios(self):
        cities = ["Irvine, CA", "Tokyo", "Lima", "Paris", "Oslo"]
        kinds = ["Temp", "Humidity", "Noise", "CO2"]
        universe = [[kind, city] for kind in kinds for city in cities]
        assert len(universe) == 20
        rnd = random.Random(2024)
        for _ in range(50):
            cfg = ScenarioConfig.from_mapping(
                {
                    "seed": rnd.randrange(2**64),
                    "num_nodes": rnd.randint(1, 50),
                    "num_queriers": rnd.randint(1, 50),
                    "labels": rnd.sample(universe, rnd.randint(1, len(universe))),
                    "subscription_density": rnd.random(),
                    "reports_per_node": rnd.randint(1, 3),
                    "payload_size": rnd.randint(1, 64),
                }
            )
            result = run_scenario(cfg)
            assert result.passed, cfg
