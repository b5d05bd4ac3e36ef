"""
PEPSI 线格式 (wire format)

位精确的帧编解码，不依赖任何密码学模块：

- Report:       "PEPR" ‖ version u8 ‖ tag 20B ‖ nonce 12B ‖ payload-length u32 ‖ ciphertext
- Subscription: "PEPS" ‖ version u8 ‖ tag 20B ‖ endpoint-length u16 ‖ endpoint
- Delivery:     subscription-id u64 ‖ 原样 Report 帧
- Key file:     "PEPK" ‖ version u8 ‖ role u8 ‖ identity-length u16 ‖ identity ‖ 群元素编码（占满帧尾）

Service Provider 只依赖本模块（Tag 与帧结构），因此它在结构上看不到 Label、密钥或配对运算。
"""

import struct
from dataclasses import dataclass

from pepsi.base import (
    MAX_PAYLOAD_BYTES,
    PROTOCOL_VERSION,
    MalformedKeyFileError,
    MalformedReportError,
    MalformedSubscriptionError,
    Role,
    VersionMismatchError,
)

MAGIC_REPORT = b"PEPR"
MAGIC_SUBSCRIPTION = b"PEPS"
MAGIC_KEY = b"PEPK"

TAG_SIZE = 20
NONCE_SIZE = 12
AEAD_TAG_SIZE = 16

_REPORT_HEADER = struct.Struct(">4sB20s12sI")
_SUBSCRIPTION_HEADER = struct.Struct(">4sB20sH")
_KEY_HEADER = struct.Struct(">4sBBH")
_DELIVERY_HEADER = struct.Struct(">Q")

REPORT_HEADER_SIZE = _REPORT_HEADER.size
# magic 4 + version 1 + tag 20 + nonce 12 + length 4 + AEAD 16
REPORT_OVERHEAD = REPORT_HEADER_SIZE + AEAD_TAG_SIZE


@dataclass(frozen=True, slots=True)
class Tag:
    """160-bit 不透明匹配令牌，只按字节相等比较"""
    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != TAG_SIZE:
            raise ValueError(f"Tag must be exactly {TAG_SIZE} bytes")

    def __bytes__(self) -> bytes:
        return self.value

    def hex(self) -> str:
        return self.value.hex()


# ============ Report ============

@dataclass(frozen=True, slots=True)
class Report:
    """线上发布单元：tag + nonce + 认证密文"""
    tag: Tag
    nonce: bytes
    ciphertext: bytes

    def __post_init__(self) -> None:
        if len(self.nonce) != NONCE_SIZE:
            raise ValueError(f"nonce must be {NONCE_SIZE} bytes")
        if len(self.ciphertext) <= AEAD_TAG_SIZE:
            raise ValueError("ciphertext must carry a non-empty payload and the AEAD tag")

    @property
    def payload_length(self) -> int:
        return len(self.ciphertext) - AEAD_TAG_SIZE

    @property
    def associated_data(self) -> bytes:
        """AEAD 关联数据: tag ‖ nonce"""
        return self.tag.value + self.nonce

    def to_bytes(self) -> bytes:
        header = _REPORT_HEADER.pack(
            MAGIC_REPORT, PROTOCOL_VERSION, self.tag.value, self.nonce, self.payload_length
        )
        return header + self.ciphertext

    @classmethod
    def from_bytes(cls, frame: bytes) -> "Report":
        tag = peek_report_tag(frame)
        nonce = _REPORT_HEADER.unpack_from(frame)[3]
        return cls(tag=tag, nonce=bytes(nonce), ciphertext=bytes(frame[REPORT_HEADER_SIZE:]))


def peek_report_tag(frame: bytes) -> Tag:
    """校验 Report 帧并只取出 tag

    只检查 magic、版本、长度字段与总长度，不触碰密文。

    Raises:
        MalformedReportError: 帧结构不合法
    """
    if len(frame) < REPORT_HEADER_SIZE:
        raise MalformedReportError("report frame too short", {"length": len(frame)})
    magic, version, tag, _nonce, payload_length = _REPORT_HEADER.unpack_from(frame)
    if magic != MAGIC_REPORT:
        raise MalformedReportError("bad report magic", {"magic": magic.hex()})
    if version != PROTOCOL_VERSION:
        raise MalformedReportError("unsupported report version", {"version": version})
    if not 1 <= payload_length <= MAX_PAYLOAD_BYTES:
        raise MalformedReportError("payload length out of range", {"payload_length": payload_length})
    expected = REPORT_OVERHEAD + payload_length
    if len(frame) != expected:
        raise MalformedReportError(
            "report length does not match header",
            {"expected": expected, "actual": len(frame)},
        )
    return Tag(bytes(tag))


# ============ Subscription ============

@dataclass(frozen=True, slots=True)
class Subscription:
    """订阅：20 字节 tag + 不透明投递句柄，不含 Label 与密钥"""
    tag: Tag
    endpoint: bytes

    def __post_init__(self) -> None:
        if len(self.endpoint) > 0xFFFF:
            raise ValueError("endpoint longer than 65535 bytes")

    def to_bytes(self) -> bytes:
        header = _SUBSCRIPTION_HEADER.pack(
            MAGIC_SUBSCRIPTION, PROTOCOL_VERSION, self.tag.value, len(self.endpoint)
        )
        return header + self.endpoint

    @classmethod
    def from_bytes(cls, frame: bytes) -> "Subscription":
        """
        Raises:
            MalformedSubscriptionError: 帧结构不合法
        """
        if len(frame) < _SUBSCRIPTION_HEADER.size:
            raise MalformedSubscriptionError("subscription frame too short", {"length": len(frame)})
        magic, version, tag, endpoint_length = _SUBSCRIPTION_HEADER.unpack_from(frame)
        if magic != MAGIC_SUBSCRIPTION:
            raise MalformedSubscriptionError("bad subscription magic", {"magic": magic.hex()})
        if version != PROTOCOL_VERSION:
            raise MalformedSubscriptionError("unsupported subscription version", {"version": version})
        if len(frame) != _SUBSCRIPTION_HEADER.size + endpoint_length:
            raise MalformedSubscriptionError(
                "subscription length does not match header",
                {"expected": _SUBSCRIPTION_HEADER.size + endpoint_length, "actual": len(frame)},
            )
        return cls(tag=Tag(bytes(tag)), endpoint=bytes(frame[_SUBSCRIPTION_HEADER.size:]))


# ============ Delivery ============

@dataclass(frozen=True, slots=True)
class Delivery:
    """SP 的一次转发：订阅 ID + 原样 Report 帧"""
    subscription_id: int
    report: bytes
    endpoint: bytes = b""

    def to_bytes(self) -> bytes:
        return _DELIVERY_HEADER.pack(self.subscription_id) + self.report

    @classmethod
    def from_bytes(cls, frame: bytes) -> "Delivery":
        if len(frame) < _DELIVERY_HEADER.size:
            raise MalformedReportError("delivery frame too short", {"length": len(frame)})
        (subscription_id,) = _DELIVERY_HEADER.unpack_from(frame)
        report = bytes(frame[_DELIVERY_HEADER.size:])
        peek_report_tag(report)
        return cls(subscription_id=subscription_id, report=report)


# ============ Key file ============

@dataclass(frozen=True, slots=True)
class KeyFrame:
    """密钥文件的原始字段（群元素仍为压缩字节）"""
    role: Role
    identity: bytes
    point: bytes

    def to_bytes(self) -> bytes:
        header = _KEY_HEADER.pack(MAGIC_KEY, PROTOCOL_VERSION, int(self.role), len(self.identity))
        return header + self.identity + self.point

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyFrame":
        """
        Raises:
            MalformedKeyFileError: 结构不合法
            VersionMismatchError: 版本字节不是 1
        """
        if len(data) < _KEY_HEADER.size:
            raise MalformedKeyFileError("key file too short", {"length": len(data)})
        magic, version, role, identity_length = _KEY_HEADER.unpack_from(data)
        if magic != MAGIC_KEY:
            raise MalformedKeyFileError("bad key file magic", {"magic": magic.hex()})
        if version != PROTOCOL_VERSION:
            raise VersionMismatchError(
                "unsupported key file version", {"version": version, "expected": PROTOCOL_VERSION}
            )
        try:
            parsed_role = Role(role)
        except ValueError:
            raise MalformedKeyFileError("unknown key role", {"role": role}) from None
        # 群元素长度随曲线而定，精确长度由配对层解码时校验
        minimum = _KEY_HEADER.size + identity_length + 1
        if len(data) < minimum:
            raise MalformedKeyFileError(
                "key file shorter than header claims", {"minimum": minimum, "actual": len(data)}
            )
        offset = _KEY_HEADER.size
        identity = bytes(data[offset:offset + identity_length])
        point = bytes(data[offset + identity_length:])
        return cls(role=parsed_role, identity=identity, point=point)
