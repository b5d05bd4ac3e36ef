"""
PEPSI 基础定义

所有参与方共享的常量、类型别名、枚举与错误体系。

- 协议版本与域分隔常量（位精确 ASCII）
- 各类尺寸上限（协议常量）
- PepsiError 错误层级，CLI 通过 exit_code 映射退出码
"""

from dataclasses import dataclass, field
from enum import IntEnum, StrEnum
from typing import Any, ClassVar

# Type Aliases
JSONData = dict[str, Any]
IdentityBytes = bytes
PartyID = str

# ============ 协议常量 ============

PROTOCOL_VERSION = 1
PROTOCOL_NAME = "PEPSI-v1"

MAX_KEYWORDS = 8
MAX_KEYWORD_BYTES = 128
MAX_PAYLOAD_BYTES = 4096


class DomainTag(StrEnum):
    """域分隔常量"""
    H1 = "PEPSI-v1-H1"
    H2 = "PEPSI-v1-H2"
    TAG = "PEPSI-v1-TAG"
    ENC = "PEPSI-v1-ENC"

    @property
    def dst(self) -> bytes:
        return self.value.encode("ascii")


class Role(IntEnum):
    """注册角色（密钥文件中的 role 字节）"""
    NODE = 0
    QUERIER = 1


# ============ 错误体系 ============

@dataclass(eq=False)
class PepsiError(Exception):
    """PEPSI 错误基类

    exit_code: 1 = 用法错误, 2 = 协议/格式错误
    """
    message: str
    details: JSONData = field(default_factory=dict)

    exit_code: ClassVar[int] = 2

    def __str__(self) -> str:
        if self.details:
            return f"[{type(self).__name__}] {self.message} - Details: {self.details}"
        return f"[{type(self).__name__}] {self.message}"


class UsageError(PepsiError):
    exit_code = 1


# labels
class EmptyLabelError(UsageError):
    """归一化后没有剩余关键词"""


class KeywordTooLongError(UsageError):
    """关键词超过 MAX_KEYWORD_BYTES"""


class TooManyKeywordsError(UsageError):
    """关键词数量超过 MAX_KEYWORDS"""


class MalformedIdentityError(PepsiError):
    """identity 字节无法解码为规范 Label"""


# registration authority
class LedgerWriteError(PepsiError):
    """注册账本持久化失败"""


class MalformedLedgerError(PepsiError):
    """注册账本中有无法解析的行"""


class MalformedKeyFileError(PepsiError):
    """密钥文件格式错误"""


class VersionMismatchError(PepsiError):
    """文件版本不是 PROTOCOL_VERSION"""


class GroupMembershipError(PepsiError):
    """点不在曲线上或不在素数阶子群中"""


class LabelNotOfferedError(UsageError):
    """RA 目录中没有该 Label"""


# mobile node / querier / service provider
class PayloadTooLargeError(PepsiError):
    """测量值超过 MAX_PAYLOAD_BYTES"""


class EmptyPayloadError(PepsiError):
    """测量值为空"""


class AuthenticationFailedError(PepsiError):
    """AEAD 校验失败：密钥不匹配或密文被篡改"""


class MalformedReportError(PepsiError):
    """报告帧格式错误"""


class MalformedSubscriptionError(PepsiError):
    """订阅帧格式错误"""


# harness
class ConfigInvalidError(UsageError):
    """场景配置无效"""


class TransportError(PepsiError):
    """模拟网络传输失败"""


# 名称 -> 错误类型（传输层 JSON 错误体还原用）
ERRORS_BY_NAME: dict[str, type[PepsiError]] = {
    cls.__name__: cls
    for cls in (
        PepsiError,
        UsageError,
        EmptyLabelError,
        KeywordTooLongError,
        TooManyKeywordsError,
        MalformedIdentityError,
        LedgerWriteError,
        MalformedLedgerError,
        MalformedKeyFileError,
        VersionMismatchError,
        GroupMembershipError,
        LabelNotOfferedError,
        PayloadTooLargeError,
        EmptyPayloadError,
        AuthenticationFailedError,
        MalformedReportError,
        MalformedSubscriptionError,
        ConfigInvalidError,
        TransportError,
    )
}
