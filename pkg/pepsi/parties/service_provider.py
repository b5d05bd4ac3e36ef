"""
Service Provider (不经意匹配代理)

存储订阅 tag，按字节相等匹配报告 tag，原样转发密文。

本模块只依赖 pepsi.base 与 pepsi.core.wire：它看不到 Label、密钥或配对运算，
对报告只检查 20 字节 tag 与总长度。

并发模型:
- match_report 可并发执行，读取的是当前表的不可变快照
- subscribe / unsubscribe 在写锁下串行，以整体替换桶元组的方式原子发布
- 计数器单独加锁，单调递增
"""

import itertools
import threading
from collections.abc import Iterable
from dataclasses import dataclass

from loguru import logger

from pepsi.base import MalformedReportError, MalformedSubscriptionError
from pepsi.core.wire import Delivery, Subscription, Tag, peek_report_tag

SubscriptionID = int


@dataclass(frozen=True, slots=True)
class SubscriptionEntry:
    subscription_id: SubscriptionID
    endpoint: bytes


@dataclass(frozen=True, slots=True)
class ProviderStats:
    """计数器快照"""
    reports_seen: int = 0
    matches_made: int = 0
    subs_active: int = 0
    reports_dropped: int = 0
    reports_rejected: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "reports_seen": self.reports_seen,
            "matches_made": self.matches_made,
            "subs_active": self.subs_active,
            "reports_dropped": self.reports_dropped,
            "reports_rejected": self.reports_rejected,
        }


class SubscriptionTable:
    """
    Tag → [(subscription-id, endpoint)] 多重映射

    使用方法:
        table = SubscriptionTable()
        sid = table.subscribe(subscription_frame)
        deliveries = table.match_report(report_frame)
    """

    def __init__(self) -> None:
        # 桶是不可变元组，写者整体替换
        self._buckets: dict[Tag, tuple[SubscriptionEntry, ...]] = {}
        self._tag_by_id: dict[SubscriptionID, Tag] = {}
        self._ids = itertools.count(1)
        self._write_lock = threading.Lock()
        self._stats_lock = threading.Lock()
        self._reports_seen = 0
        self._matches_made = 0
        self._reports_dropped = 0
        self._reports_rejected = 0

    def __len__(self) -> int:
        return len(self._tag_by_id)

    # ============ 订阅 ============

    def subscribe(self, sub: Subscription | bytes) -> SubscriptionID:
        """
        登记订阅；相同 (tag, endpoint) 不去重

        Raises:
            MalformedSubscriptionError: 帧结构不合法
        """
        if not isinstance(sub, Subscription):
            sub = Subscription.from_bytes(sub)
        with self._write_lock:
            subscription_id = next(self._ids)
            entry = SubscriptionEntry(subscription_id, sub.endpoint)
            self._buckets[sub.tag] = (*self._buckets.get(sub.tag, ()), entry)
            self._tag_by_id[subscription_id] = sub.tag
        logger.debug(f"Subscribed #{subscription_id} tag={sub.tag.hex()[:8]}")
        return subscription_id

    def subscribe_many(self, subs: Iterable[Subscription | bytes]) -> list[SubscriptionID]:
        return [self.subscribe(sub) for sub in subs]

    def unsubscribe(self, subscription_id: SubscriptionID) -> bool:
        """未知 id 返回 False"""
        with self._write_lock:
            tag = self._tag_by_id.pop(subscription_id, None)
            if tag is None:
                return False
            remaining = tuple(e for e in self._buckets[tag] if e.subscription_id != subscription_id)
            if remaining:
                self._buckets[tag] = remaining
            else:
                del self._buckets[tag]
        logger.debug(f"Unsubscribed #{subscription_id}")
        return True

    # ============ 匹配 ============

    def match_report(self, report_frame: bytes) -> list[Delivery]:
        """
        按 tag 匹配并生成投递，报告字节原样转发

        Returns:
            桶内按订阅插入顺序排列的 Delivery 列表

        Raises:
            MalformedReportError: 帧结构不合法（不做任何部分处理）
        """
        try:
            tag = peek_report_tag(report_frame)
        except MalformedReportError:
            with self._stats_lock:
                self._reports_rejected += 1
            raise
        report = bytes(report_frame)
        bucket = self._buckets.get(tag, ())
        deliveries = [Delivery(e.subscription_id, report, e.endpoint) for e in bucket]
        with self._stats_lock:
            self._reports_seen += 1
            self._matches_made += len(deliveries)
            if not deliveries:
                self._reports_dropped += 1
        return deliveries

    def stats(self) -> ProviderStats:
        with self._write_lock, self._stats_lock:
            return ProviderStats(
                reports_seen=self._reports_seen,
                matches_made=self._matches_made,
                subs_active=len(self._tag_by_id),
                reports_dropped=self._reports_dropped,
                reports_rejected=self._reports_rejected,
            )


# ============ 函数式接口 ============

def subscribe(table: SubscriptionTable, sub: Subscription | bytes) -> SubscriptionID:
    return table.subscribe(sub)


def unsubscribe(table: SubscriptionTable, subscription_id: SubscriptionID) -> bool:
    return table.unsubscribe(subscription_id)


def match_report(table: SubscriptionTable, report_frame: bytes) -> list[Delivery]:
    return table.match_report(report_frame)


def stats(table: SubscriptionTable) -> ProviderStats:
    return table.stats()


__all__ = [
    "SubscriptionID",
    "SubscriptionEntry",
    "ProviderStats",
    "SubscriptionTable",
    "subscribe",
    "unsubscribe",
    "match_report",
    "stats",
    "MalformedSubscriptionError",
]
