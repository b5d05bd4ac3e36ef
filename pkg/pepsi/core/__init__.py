"""
PEPSI 核心层

- curves:  配对后端 (charm BN254 / py_ecc BLS12-381)
- pairing: 群元素、哈希到曲线、配对与 tag/key 派生
- labels:  关键词规范化与 identity 编码
- wire:    位精确帧编解码（不依赖密码学模块）

子模块按需加载：只用到 wire 的代码（如 Service Provider）不会导入配对库。
"""

from importlib import import_module
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .labels import Label, canonicalize, decode_identity, encode_identity, normalize_keyword
    from .pairing import (
        EntropySource,
        G1Element,
        G2Element,
        GTElement,
        Scalar,
        SeededEntropy,
        SymmetricKey,
        SystemEntropy,
        derive_key,
        derive_tag,
        hash_to_g1,
        hash_to_g2,
        pair,
        random_scalar,
        scalar_mul_g1,
        scalar_mul_g2,
    )
    from .wire import REPORT_OVERHEAD, Delivery, Report, Subscription, Tag

_EXPORTS = {
    "pairing": (
        "EntropySource", "SystemEntropy", "SeededEntropy", "Scalar", "G1Element", "G2Element",
        "GTElement", "SymmetricKey", "random_scalar", "hash_to_g1", "hash_to_g2", "pair",
        "scalar_mul_g1", "scalar_mul_g2", "derive_tag", "derive_key",
    ),
    "labels": ("Label", "canonicalize", "normalize_keyword", "encode_identity", "decode_identity"),
    "wire": ("Tag", "Report", "Subscription", "Delivery", "REPORT_OVERHEAD"),
}
_MODULE_BY_NAME = {name: module for module, names in _EXPORTS.items() for name in names}


def __getattr__(name: str) -> Any:
    module = _MODULE_BY_NAME.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(import_module(f".{module}", __name__), name)


__all__ = sorted(_MODULE_BY_NAME)
