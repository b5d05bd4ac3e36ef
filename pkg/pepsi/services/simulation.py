"""
端到端场景模拟与明文 oracle

流程: RA 颁发密钥 → Querier 订阅 → Mobile Node 上报 → SP 匹配投递 → Querier 解密

oracle 独立于 tag：对所有 (报告, 订阅) 对直接比较 Label，得到期望投递集合，
再与 SP 的实际投递逐一对照。

运行方式:
- matching = "tag":        正常 PEPSI 匹配
- matching = "broadcast":  朴素基线，每个报告发给每个 Querier，逐密钥试解密
- concurrency > 1:         并发向 SP 发布（结果与单线程相同）
- transport = true:        经模拟网络运营商 (httpx.MockTransport) 发布
"""

import asyncio
import random
import time
import tomllib
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Literal

from loguru import logger

from pepsi.base import MAX_PAYLOAD_BYTES, ConfigInvalidError, JSONData, PepsiError, UsageError
from pepsi.core.labels import Label, canonicalize
from pepsi.core.pairing import SeededEntropy
from pepsi.core.wire import Delivery
from pepsi.parties.mobile_node import MobileNode
from pepsi.parties.querier import Querier
from pepsi.parties.registration_authority import RegistrationAuthority
from pepsi.parties.service_provider import SubscriptionTable
from pepsi.services.transport import NetworkClient, NetworkOperator

MatchingMode = Literal["tag", "broadcast"]
MAX_SEED = 2**64 - 1


# ============ 配置 ============

@dataclass(frozen=True)
class ScenarioConfig:
    """
    场景配置（TOML）

    示例:
        seed = 7
        num_nodes = 10
        num_queriers = 10
        reports_per_node = 10
        subscription_density = 0.5
        payload_size = 16
        labels = [["Temp", "Irvine, CA"], ["Humidity", "Irvine, CA"]]
    """
    seed: int
    num_nodes: int
    num_queriers: int
    label_universe: tuple[tuple[str, ...], ...]
    reports_per_node: int = 1
    subscription_density: float = 1.0
    payload_size: int = 16
    concurrency: int = 1
    transport: bool = False
    matching: MatchingMode = "tag"

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "label_universe", tuple(tuple(keywords) for keywords in self.label_universe)
        )
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigInvalidError: 任一字段越界
        """
        def invalid(reason: str, **details: Any) -> ConfigInvalidError:
            return ConfigInvalidError(f"invalid scenario config: {reason}", details)

        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise invalid("seed must be a u64", seed=self.seed)
        for name in ("num_nodes", "num_queriers", "reports_per_node", "concurrency"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise invalid(f"{name} must be an integer >= 1", **{name: value})
        if not isinstance(self.subscription_density, int | float) or not 0.0 <= self.subscription_density <= 1.0:
            raise invalid("subscription_density must be in [0, 1]", subscription_density=self.subscription_density)
        if isinstance(self.payload_size, bool) or not isinstance(self.payload_size, int) \
                or not 1 <= self.payload_size <= MAX_PAYLOAD_BYTES:
            raise invalid("payload_size out of range", payload_size=self.payload_size)
        if not isinstance(self.transport, bool):
            raise invalid("transport must be a boolean", transport=self.transport)
        if self.matching not in ("tag", "broadcast"):
            raise invalid("matching must be 'tag' or 'broadcast'", matching=self.matching)
        if not self.label_universe:
            raise invalid("label universe is empty")
        self.labels()

    def labels(self) -> list[Label]:
        """规范化后的 Label 全集（去重，保持首次出现顺序）"""
        seen: dict[Label, None] = {}
        for keywords in self.label_universe:
            try:
                seen.setdefault(canonicalize(keywords), None)
            except UsageError as e:
                raise ConfigInvalidError(
                    "invalid label in universe", {"keywords": list(keywords), "reason": e.message}
                ) from e
        return list(seen)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)} - {"label_universe"} | {"labels"}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalidError("unknown config keys", {"keys": sorted(unknown)})
        missing = {"seed", "num_nodes", "num_queriers", "labels"} - set(data)
        if missing:
            raise ConfigInvalidError("missing config keys", {"keys": sorted(missing)})
        values = dict(data)
        universe = values.pop("labels")
        if not isinstance(universe, list) or not all(
            isinstance(kw, list) and all(isinstance(k, str) for k in kw) for kw in universe
        ):
            raise ConfigInvalidError("labels must be a list of keyword lists")
        try:
            return cls(label_universe=tuple(tuple(kw) for kw in universe), **values)
        except TypeError as e:
            raise ConfigInvalidError("malformed scenario config", {"reason": str(e)}) from e

    @classmethod
    def from_toml(cls, path: str | Path) -> "ScenarioConfig":
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigInvalidError("scenario config is not valid TOML", {"path": str(path), "reason": str(e)}) from e
        return cls.from_mapping(data)


# ============ 结果 ============

@dataclass
class ScenarioResult:
    deliveries_expected: int = 0
    deliveries_made: int = 0
    decryptions_ok: int = 0
    decryptions_failed: int = 0
    false_deliveries: int = 0
    missing_deliveries: int = 0
    duplicate_deliveries: int = 0
    reports_published: int = 0
    subscriptions: int = 0
    trial_decryptions: int = 0
    matching: str = "tag"
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.false_deliveries == 0
            and self.missing_deliveries == 0
            and self.duplicate_deliveries == 0
            and self.decryptions_failed == 0
            and self.deliveries_made == self.deliveries_expected
        )

    def counters(self) -> JSONData:
        """除计时外的全部字段（确定性比较用）"""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "timings"}

    def to_lines(self) -> list[str]:
        """key=value 行，供脚本解析"""
        lines = [
            f"deliveries={self.deliveries_made}",
            f"deliveries_expected={self.deliveries_expected}",
            f"decryptions_ok={self.decryptions_ok}",
            f"decryptions_failed={self.decryptions_failed}",
            f"false_deliveries={self.false_deliveries}",
            f"missing_deliveries={self.missing_deliveries}",
            f"duplicate_deliveries={self.duplicate_deliveries}",
            f"reports_published={self.reports_published}",
            f"subscriptions={self.subscriptions}",
            f"matching={self.matching}",
        ]
        if self.matching == "broadcast":
            lines.append(f"trial_decryptions={self.trial_decryptions}")
        lines.extend(f"time_{phase}_ms={ms:.3f}" for phase, ms in self.timings.items())
        lines.append(f"passed={'true' if self.passed else 'false'}")
        return lines


# ============ oracle ============

SubscriptionKey = tuple[int, Label]  # (querier 序号, Label)
DeliveryKey = tuple[int, SubscriptionKey]  # (报告序号, 订阅)


def plaintext_oracle(
    report_labels: list[Label],
    subscriptions: list[SubscriptionKey],
) -> set[DeliveryKey]:
    """暴力比较 Label，得到期望投递 {(报告序号, 订阅)}"""
    return {
        (report_index, sub)
        for report_index, label in enumerate(report_labels)
        for sub in subscriptions
        if sub[1] == label
    }


@dataclass(frozen=True)
class OracleComparison:
    """实际投递与期望集合的逐项对照"""
    false: int
    missing: int
    duplicates: int

    @property
    def exact(self) -> bool:
        return self.false == 0 and self.missing == 0 and self.duplicates == 0


def compare_deliveries(actual: Iterable[DeliveryKey], expected: set[DeliveryKey]) -> OracleComparison:
    """
    按集合比较：实际投递必须恰好等于期望集合，且每对只出现一次

    计数相等但内容不同（例如一对重复、另一对缺失）不算通过。
    """
    counts = Counter(actual)
    return OracleComparison(
        false=sum(n for key, n in counts.items() if key not in expected),
        missing=len(expected - set(counts)),
        duplicates=sum(n - 1 for n in counts.values() if n > 1),
    )


def _apply_comparison(result: ScenarioResult, comparison: OracleComparison) -> None:
    result.false_deliveries = comparison.false
    result.missing_deliveries = comparison.missing
    result.duplicate_deliveries = comparison.duplicates


# ============ 场景 ============

@dataclass
class _Scenario:
    nodes: list[MobileNode]
    queriers: list[Querier]
    subscriptions: list[SubscriptionKey]
    frames: list[bytes] = field(default_factory=list)
    payloads: list[bytes] = field(default_factory=list)
    report_labels: list[Label] = field(default_factory=list)


@contextmanager
def _phase(timings: dict[str, float], name: str) -> Iterator[None]:
    started = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = (time.perf_counter() - started) * 1000


def _payload(node_index: int, report_index: int, size: int) -> bytes:
    stem = f"n{node_index}r{report_index}:".encode("ascii")
    return (stem * (size // len(stem) + 1))[:size]


def _build(cfg: ScenarioConfig, timings: dict[str, float]) -> _Scenario:
    plan = random.Random(cfg.seed)
    labels = cfg.labels()

    with _phase(timings, "register"):
        ra = RegistrationAuthority.create(rng=SeededEntropy(f"ra:{cfg.seed}"))
        nodes = []
        for i in range(cfg.num_nodes):
            label = labels[plan.randrange(len(labels))]
            nk = ra.register_node(label, f"node-{i}")
            nodes.append(MobileNode(nk, ra.params, rng=SeededEntropy(f"node:{cfg.seed}:{i}")))
        queriers = []
        subscriptions: list[SubscriptionKey] = []
        for j in range(cfg.num_queriers):
            querier = Querier(endpoint=f"querier-{j}")
            for label in labels:
                if plan.random() < cfg.subscription_density:
                    querier.add_key(ra.register_querier(label, f"querier-{j}"))
                    subscriptions.append((j, label))
            queriers.append(querier)

    scenario = _Scenario(nodes, queriers, subscriptions)
    with _phase(timings, "report"):
        for i, node in enumerate(nodes):
            for k in range(cfg.reports_per_node):
                payload = _payload(i, k, cfg.payload_size)
                scenario.frames.append(node.report(payload).to_bytes())
                scenario.payloads.append(payload)
                scenario.report_labels.append(node.key.label)
    return scenario


def _match_locally(cfg: ScenarioConfig, scenario: _Scenario, table: SubscriptionTable) -> list[list[Delivery]]:
    if cfg.concurrency == 1:
        return [table.match_report(frame) for frame in scenario.frames]
    with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
        return list(pool.map(table.match_report, scenario.frames))


async def _match_over_transport(
    cfg: ScenarioConfig,
    scenario: _Scenario,
    sub_ids: dict[int, SubscriptionKey],
    operator: NetworkOperator,
) -> list[list[Delivery]]:
    async with NetworkClient(operator) as net:
        for j, querier in enumerate(scenario.queriers):
            for sub in querier.subscriptions():
                subscription_id = await net.subscribe(sub)
                sub_ids[subscription_id] = (j, querier.key_for(sub.tag).label)
        results = await net.parallel_execute(
            [net.publish(frame) for frame in scenario.frames], max_concurrent=cfg.concurrency
        )
        for result in results:
            if isinstance(result, BaseException):
                raise result
        by_frame: dict[bytes, list[Delivery]] = {frame: [] for frame in scenario.frames}
        for querier in scenario.queriers:
            for delivery in await net.fetch_deliveries(querier.endpoint):
                by_frame[delivery.report].append(delivery)
    return [by_frame[frame] for frame in scenario.frames]


def _run_tag_matching(cfg: ScenarioConfig, scenario: _Scenario, result: ScenarioResult) -> None:
    sub_ids: dict[int, SubscriptionKey] = {}
    with _phase(result.timings, "match"):
        if cfg.transport:
            operator = NetworkOperator()
            per_report = asyncio.run(_match_over_transport(cfg, scenario, sub_ids, operator))
        else:
            table = SubscriptionTable()
            for j, querier in enumerate(scenario.queriers):
                for sub in querier.subscriptions():
                    sub_ids[table.subscribe(sub)] = (j, querier.key_for(sub.tag).label)
            per_report = _match_locally(cfg, scenario, table)

    expected = plaintext_oracle(scenario.report_labels, scenario.subscriptions)
    result.deliveries_expected = len(expected)
    actual: list[DeliveryKey] = []
    with _phase(result.timings, "decrypt"):
        for report_index, deliveries in enumerate(per_report):
            for delivery in deliveries:
                result.deliveries_made += 1
                sub = sub_ids[delivery.subscription_id]
                actual.append((report_index, sub))
                try:
                    _label, measurement = scenario.queriers[sub[0]].decrypt(delivery)
                except PepsiError as e:
                    logger.warning(f"Delivered report failed to decrypt: {e}")
                    result.decryptions_failed += 1
                    continue
                if measurement.payload == scenario.payloads[report_index]:
                    result.decryptions_ok += 1
                else:
                    result.decryptions_failed += 1
    _apply_comparison(result, compare_deliveries(actual, expected))


def _run_broadcast(scenario: _Scenario, result: ScenarioResult) -> None:
    expected = plaintext_oracle(scenario.report_labels, scenario.subscriptions)
    result.deliveries_expected = len(expected)
    actual: list[DeliveryKey] = []
    with _phase(result.timings, "decrypt"):
        for report_index, frame in enumerate(scenario.frames):
            for j, querier in enumerate(scenario.queriers):
                if not querier.labels:
                    continue
                opened, attempts = querier.trial_decrypt(frame)
                result.trial_decryptions += attempts
                wanted = any(
                    (report_index, (j, label)) in expected for label in querier.labels
                )
                if opened is None:
                    if wanted:
                        result.decryptions_failed += 1
                    continue
                label, measurement = opened
                result.deliveries_made += 1
                actual.append((report_index, (j, label)))
                if measurement.payload == scenario.payloads[report_index]:
                    result.decryptions_ok += 1
                else:
                    result.decryptions_failed += 1
    _apply_comparison(result, compare_deliveries(actual, expected))


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """
    运行一个完整场景并与明文 oracle 对照

    给定 seed 结果计数确定；单线程与并发、直连与经传输层的计数相同。

    Raises:
        ConfigInvalidError: 配置无效
    """
    cfg.validate()
    result = ScenarioResult(matching=cfg.matching)
    logger.info(
        f"Scenario start: seed={cfg.seed} nodes={cfg.num_nodes} queriers={cfg.num_queriers} "
        f"labels={len(cfg.label_universe)} matching={cfg.matching}"
    )
    scenario = _build(cfg, result.timings)
    result.reports_published = len(scenario.frames)
    result.subscriptions = len(scenario.subscriptions)

    if cfg.matching == "broadcast":
        _run_broadcast(scenario, result)
    else:
        _run_tag_matching(cfg, scenario, result)

    logger.info(
        f"Scenario finished: deliveries={result.deliveries_made}/{result.deliveries_expected} "
        f"false={result.false_deliveries} missing={result.missing_deliveries} "
        f"duplicate={result.duplicate_deliveries} failed={result.decryptions_failed}"
    )
    return result
