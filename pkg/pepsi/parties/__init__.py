"""
PEPSI 参与方

- registration_authority: 离线密钥颁发（主密钥、账本、密钥文件）
- mobile_node:            打标签 + 加密报告
- querier:                订阅 + 解密
- service_provider:       不经意 tag 匹配与转发

按需加载，导入 service_provider 不会拉入配对库。
"""

from importlib import import_module
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .mobile_node import Measurement, MobileNode, make_report, node_shared_secret
    from .querier import Querier, decrypt_report, make_subscription, querier_shared_secret
    from .registration_authority import (
        MasterSecret,
        NodeKey,
        QuerierKey,
        RegistrationAuthority,
        RegistrationLedger,
        SystemParams,
        export_key,
        import_key,
        register_node,
        register_querier,
        setup,
    )
    from .service_provider import ProviderStats, SubscriptionTable

_EXPORTS = {
    "registration_authority": (
        "SystemParams", "MasterSecret", "NodeKey", "QuerierKey", "RegistrationLedger",
        "RegistrationAuthority", "setup", "register_node", "register_querier",
        "export_key", "import_key",
    ),
    "mobile_node": ("Measurement", "MobileNode", "node_shared_secret", "make_report"),
    "querier": ("Querier", "querier_shared_secret", "make_subscription", "decrypt_report"),
    "service_provider": ("SubscriptionTable", "ProviderStats"),
}
_MODULE_BY_NAME = {name: module for module, names in _EXPORTS.items() for name in names}


def __getattr__(name: str) -> Any:
    module = _MODULE_BY_NAME.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(import_module(f".{module}", __name__), name)


__all__ = sorted(_MODULE_BY_NAME)
