"""
PEPSI - Privacy-Enhanced Participatory Sensing Infrastructure

分层结构:
- core/     配对核心、Label 规范化、线格式
- parties/  Registration Authority / Mobile Node / Querier / Service Provider
- services/ 模拟网络运营商、端到端模拟、基准测试
- cli       命令行 (`pepsi`)

使用示例:
    from pepsi import Label, Measurement, Querier, RegistrationAuthority, SubscriptionTable, make_report

    ra = RegistrationAuthority.create()
    label = Label.of("Temp", "Irvine, CA")
    nk = ra.register_node(label, "node-1")
    qk = ra.register_querier(label, "querier-1")

    sp = SubscriptionTable()
    querier = Querier([qk], endpoint="querier-1")
    for sub in querier.subscriptions():
        sp.subscribe(sub)

    for delivery in sp.match_report(make_report(nk, Measurement(b"74 F")).to_bytes()):
        label, measurement = querier.decrypt(delivery)

子包按需加载，只用到 Service Provider 时不会导入配对库。
"""

from importlib import import_module
from typing import Any

__version__ = "1.0.0"

from .base import (
    ERRORS_BY_NAME,
    PROTOCOL_VERSION,
    AuthenticationFailedError,
    ConfigInvalidError,
    EmptyLabelError,
    EmptyPayloadError,
    GroupMembershipError,
    KeywordTooLongError,
    LabelNotOfferedError,
    LedgerWriteError,
    MalformedIdentityError,
    MalformedLedgerError,
    MalformedKeyFileError,
    MalformedReportError,
    MalformedSubscriptionError,
    PayloadTooLargeError,
    PepsiError,
    TooManyKeywordsError,
    TransportError,
    UsageError,
    VersionMismatchError,
)

_LAZY = {
    "core": ("Label", "Tag", "Report", "Subscription", "Delivery", "SeededEntropy", "SystemEntropy"),
    "parties": (
        "RegistrationAuthority", "RegistrationLedger", "NodeKey", "QuerierKey", "SystemParams",
        "Measurement", "MobileNode", "make_report", "Querier", "make_subscription",
        "decrypt_report", "SubscriptionTable",
    ),
    "services": ("ScenarioConfig", "ScenarioResult", "run_scenario", "bench_report", "bench_match"),
}
_PACKAGE_BY_NAME = {name: package for package, names in _LAZY.items() for name in names}


def __getattr__(name: str) -> Any:
    package = _PACKAGE_BY_NAME.get(name)
    if package is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(import_module(f".{package}", __name__), name)


__all__ = [
    "__version__",
    "PROTOCOL_VERSION",
    "ERRORS_BY_NAME",
    # 错误
    "PepsiError",
    "UsageError",
    "EmptyLabelError",
    "KeywordTooLongError",
    "TooManyKeywordsError",
    "MalformedIdentityError",
    "LedgerWriteError",
    "MalformedLedgerError",
    "MalformedKeyFileError",
    "VersionMismatchError",
    "GroupMembershipError",
    "LabelNotOfferedError",
    "PayloadTooLargeError",
    "EmptyPayloadError",
    "AuthenticationFailedError",
    "MalformedReportError",
    "MalformedSubscriptionError",
    "ConfigInvalidError",
    "TransportError",
    *sorted(_PACKAGE_BY_NAME),
]
