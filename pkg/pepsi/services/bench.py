"""
基准测试

- bench_report: 每报告开销（配对 + tag + 加密），默认 100 次取均值与 p95；
  冷路径每次重新做配对，热路径使用缓存的共享秘密。另给出 Querier 解密耗时。
- bench_match:  SP 在不同订阅规模下的 match_report 平均耗时（哈希查找，应与规模无关）。

计时使用 time.perf_counter（单调时钟）。
"""

import statistics
import time
from collections.abc import Sequence
from dataclasses import dataclass

from loguru import logger

from pepsi.core.labels import Label
from pepsi.core.pairing import BACKEND, SeededEntropy, derive_key, derive_tag
from pepsi.core.wire import AEAD_TAG_SIZE, NONCE_SIZE, TAG_SIZE, Report, Subscription, Tag
from pepsi.parties.mobile_node import Measurement, cached_node_secret, node_shared_secret, seal
from pepsi.parties.querier import decrypt_report
from pepsi.parties.registration_authority import RegistrationAuthority
from pepsi.parties.service_provider import SubscriptionTable

DEFAULT_TRIALS = 100
# 参考设备（600 MHz ARM）上的每报告耗时上界
REFERENCE_REPORT_MS = 93.47

BENCH_LABEL = ("temp", "irvine, ca")


@dataclass(frozen=True)
class BenchResult:
    trials: int
    mean_ms: float
    p95_ms: float
    report_overhead_bytes: int
    pairing_mean_ms: float
    seal_mean_ms: float
    decrypt_mean_ms: float
    payload_size: int
    cold: bool
    backend: str = BACKEND.name
    curve: str = BACKEND.curve_id

    @property
    def within_reference(self) -> bool:
        return self.mean_ms < REFERENCE_REPORT_MS

    def to_lines(self) -> list[str]:
        return [
            f"trials={self.trials}",
            f"backend={self.backend}",
            f"curve={self.curve}",
            f"cold={'true' if self.cold else 'false'}",
            f"payload_size={self.payload_size}",
            f"mean_ms={self.mean_ms:.3f}",
            f"p95_ms={self.p95_ms:.3f}",
            f"pairing_mean_ms={self.pairing_mean_ms:.3f}",
            f"seal_mean_ms={self.seal_mean_ms:.3f}",
            f"decrypt_mean_ms={self.decrypt_mean_ms:.3f}",
            f"report_overhead_bytes={self.report_overhead_bytes}",
        ]


def _p95(samples: list[float]) -> float:
    if len(samples) == 1:
        return samples[0]
    return statistics.quantiles(samples, n=20, method="inclusive")[18]


def bench_report(
    trials: int = DEFAULT_TRIALS,
    payload_size: int = 16,
    cold: bool = True,
    seed: int = 0,
) -> BenchResult:
    """
    计时 make_report 的各步骤

    Raises:
        ValueError: trials < 1
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ra = RegistrationAuthority.create(rng=SeededEntropy(f"bench:{seed}"))
    label = Label(BENCH_LABEL)
    nk = ra.register_node(label, "bench-node")
    qk = ra.register_querier(label, "bench-querier")
    measurement = Measurement(b"7" * payload_size)
    rng = SeededEntropy(f"bench-nonce:{seed}")

    totals: list[float] = []
    pairings: list[float] = []
    seals: list[float] = []
    decrypts: list[float] = []
    overhead = 0
    for _ in range(trials):
        started = time.perf_counter()
        shared = node_shared_secret(nk) if cold else cached_node_secret(nk)
        paired = time.perf_counter()
        report = seal(derive_tag(shared), derive_key(shared), measurement, rng)
        frame = report.to_bytes()
        finished = time.perf_counter()

        decrypt_report(qk, frame)
        decrypted = time.perf_counter()

        pairings.append((paired - started) * 1000)
        seals.append((finished - paired) * 1000)
        totals.append((finished - started) * 1000)
        decrypts.append((decrypted - finished) * 1000)
        overhead = len(frame) - payload_size

    result = BenchResult(
        trials=trials,
        mean_ms=statistics.fmean(totals),
        p95_ms=_p95(totals),
        report_overhead_bytes=overhead,
        pairing_mean_ms=statistics.fmean(pairings),
        seal_mean_ms=statistics.fmean(seals),
        decrypt_mean_ms=statistics.fmean(decrypts),
        payload_size=payload_size,
        cold=cold,
    )
    logger.info(f"Report bench finished: {trials} trials, mean {result.mean_ms:.2f} ms (cold={cold})")
    return result


# ============ SP 规模 ============

@dataclass(frozen=True)
class MatchBenchPoint:
    subscriptions: int
    probes: int
    mean_us: float


def _random_report(rng: SeededEntropy, tag: Tag) -> bytes:
    return Report(tag, rng.read(NONCE_SIZE), rng.read(8 + AEAD_TAG_SIZE)).to_bytes()


def bench_match(
    sizes: Sequence[int] = (10_000, 100_000),
    probes: int = 1_000,
    seed: int = 0,
) -> list[MatchBenchPoint]:
    """
    每个规模各建一张表，用 probes 个报告（一半命中）计时 match_report

    只用随机 tag 与随机密文：SP 不需要任何密码学输入。
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    points = []
    for size in sizes:
        rng = SeededEntropy(f"match:{seed}:{size}")
        table = SubscriptionTable()
        tags = [Tag(rng.read(TAG_SIZE)) for _ in range(size)]
        for index, tag in enumerate(tags):
            table.subscribe(Subscription(tag, f"q{index}".encode()))
        frames = [
            _random_report(rng, tags[(i * 7919) % size] if i % 2 == 0 and size else Tag(rng.read(TAG_SIZE)))
            for i in range(probes)
        ]
        started = time.perf_counter()
        for frame in frames:
            table.match_report(frame)
        elapsed = time.perf_counter() - started
        points.append(MatchBenchPoint(size, probes, elapsed / probes * 1e6))
        logger.info(f"Match bench: {size} subscriptions, {points[-1].mean_us:.2f} us/report")
    return points
