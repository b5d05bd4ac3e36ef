"""
配对核心 (pairing core)

非对称 (type-3) 双线性配对的值类型与运算，以及其它模块共用的哈希/KDF 原语。
群运算由 pepsi.core.curves 中选定的后端完成（默认 charm BN254，回退 py_ecc BLS12-381）。

- Scalar / G1Element / G2Element / GTElement: 不可变值类型，规范序列化可位精确往返
- hash_to_g1 / hash_to_g2: 带域分隔的 identity → 源群映射
- pair: e: G1 × G2 → GT
- derive_tag: SHA-256(TAG 域常量 ‖ GT 字节) 截断为 20 字节
- derive_key: HKDF-SHA256(GT 字节, info = ENC 域常量), 32 字节

注意: tag 截断 SHA-256 而不是 SHA-1，线上尺寸保持 160 bit。

所有函数都是纯函数，值对象构造后不可变，可在任意线程间共享。
"""

import hashlib
import secrets
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Protocol, Self

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from pepsi.base import DomainTag, GroupMembershipError
from pepsi.core.curves import PairingBackend, load_backend
from pepsi.core.wire import TAG_SIZE, Tag

BACKEND: PairingBackend = load_backend()
CURVE_ID = BACKEND.curve_id
curve_order = BACKEND.order

SCALAR_SIZE = 32
SYMMETRIC_KEY_SIZE = 32

# 64 字节均匀随机数再模 r，偏差可忽略
_SCALAR_SAMPLE_BYTES = 64


# ============ 熵源 ============

class EntropySource(Protocol):
    """随机字节来源"""

    def read(self, n: int) -> bytes: ...


class SystemEntropy:
    """操作系统 CSPRNG"""

    def read(self, n: int) -> bytes:
        return secrets.token_bytes(n)


class SeededEntropy:
    """可复现的熵源：SHAKE-256(seed ‖ counter) 计数器模式

    仅用于测试、带 --seed 的 CLI 与模拟。同一实例不应跨线程共享。
    """

    def __init__(self, seed: int | bytes | str) -> None:
        if isinstance(seed, int):
            if not 0 <= seed < 1 << 128:
                raise ValueError("integer seed must be in [0, 2**128)")
            seed = seed.to_bytes(16, "big")
        elif isinstance(seed, str):
            seed = seed.encode("utf-8")
        self._seed = bytes(seed)
        self._counter = 0
        self._buffer = b""

    def read(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.shake_256(
                b"PEPSI-v1-DRBG" + self._seed + self._counter.to_bytes(8, "big")
            ).digest(64)
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out


# ============ 值类型 ============

@dataclass(frozen=True, slots=True)
class Scalar:
    """模 r 的整数"""
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < curve_order:
            raise ValueError("scalar out of range [0, r)")

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_SIZE, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> Self:
        if len(data) != SCALAR_SIZE:
            raise ValueError(f"scalar encoding must be {SCALAR_SIZE} bytes")
        return cls(int.from_bytes(data, "big"))


@dataclass(frozen=True, eq=False)
class _GroupElement:
    """源群元素基类；相等与哈希基于后端的规范编码"""
    point: Any

    @cached_property
    def _encoded(self) -> bytes:
        return self._encode(self.point)

    @staticmethod
    def _encode(point: Any) -> bytes:
        raise NotImplementedError

    @staticmethod
    def _decode(data: bytes) -> Any:
        raise NotImplementedError

    def to_bytes(self) -> bytes:
        return self._encoded

    @classmethod
    def from_bytes(cls, data: bytes) -> Self:
        """解码并校验曲线与子群成员资格

        Raises:
            GroupMembershipError: 长度/类型不对、不在曲线上或不在素数阶子群中
        """
        if not data:
            raise GroupMembershipError("empty point encoding")
        return cls(cls._decode(bytes(data)))

    @property
    def is_identity(self) -> bool:
        return BACKEND.point_eq(self.point, self.identity().point)

    @classmethod
    def identity(cls) -> Self:
        raise NotImplementedError

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return BACKEND.point_eq(self.point, other.point)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._encoded))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._encoded.hex()[:16]}…)"


class G1Element(_GroupElement):

    @staticmethod
    def _encode(point: Any) -> bytes:
        return BACKEND.encode_g1(point)

    @staticmethod
    def _decode(data: bytes) -> Any:
        return BACKEND.decode_g1(data)

    @classmethod
    def generator(cls) -> "G1Element":
        return cls(BACKEND.g1_generator())

    @classmethod
    def identity(cls) -> "G1Element":
        return cls(BACKEND.g1_identity())


class G2Element(_GroupElement):

    @staticmethod
    def _encode(point: Any) -> bytes:
        return BACKEND.encode_g2(point)

    @staticmethod
    def _decode(data: bytes) -> Any:
        return BACKEND.decode_g2(data)

    @classmethod
    def generator(cls) -> "G2Element":
        return cls(BACKEND.g2_generator())

    @classmethod
    def identity(cls) -> "G2Element":
        return cls(BACKEND.g2_identity())


@dataclass(frozen=True, eq=False)
class GTElement:
    """配对目标群元素

    规范序列化由后端决定（py_ecc: 12 × 48 字节系数；charm: 类型前缀 + base64）。
    """
    value: Any

    @cached_property
    def _encoded(self) -> bytes:
        return BACKEND.encode_gt(self.value)

    def to_bytes(self) -> bytes:
        return self._encoded

    @classmethod
    def from_bytes(cls, data: bytes) -> "GTElement":
        return cls(BACKEND.decode_gt(bytes(data)))

    @classmethod
    def identity(cls) -> "GTElement":
        return cls(BACKEND.gt_one())

    @property
    def is_identity(self) -> bool:
        return self == GTElement.identity()

    def __mul__(self, other: "GTElement") -> "GTElement":
        return GTElement(BACKEND.gt_mul(self.value, other.value))

    def __pow__(self, exponent: int) -> "GTElement":
        return GTElement(BACKEND.gt_pow(self.value, exponent))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GTElement):
            return NotImplemented
        return self._encoded == other._encoded

    def __hash__(self) -> int:
        return hash(self._encoded)

    def __repr__(self) -> str:
        return f"GTElement({self._encoded.hex()[:16]}…)"


@dataclass(frozen=True, slots=True)
class SymmetricKey:
    """32 字节对称密钥；不进入任何线格式或日志"""
    secret: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.secret) != SYMMETRIC_KEY_SIZE:
            raise ValueError(f"symmetric key must be {SYMMETRIC_KEY_SIZE} bytes")


# ============ 运算 ============

def random_scalar(rng: EntropySource) -> Scalar:
    """均匀分布的非零标量"""
    while True:
        value = int.from_bytes(rng.read(_SCALAR_SAMPLE_BYTES), "big") % curve_order
        if value:
            return Scalar(value)


def hash_to_g1(identity: bytes, domain: DomainTag | str) -> G1Element:
    """identity → G1 (H1 映射)，对 (identity, domain) 确定"""
    return G1Element(BACKEND.hash_g1(bytes(identity), DomainTag(domain).dst))


def hash_to_g2(identity: bytes, domain: DomainTag | str) -> G2Element:
    """identity → G2 (H2 映射)"""
    return G2Element(BACKEND.hash_g2(bytes(identity), DomainTag(domain).dst))


def pair(a: G1Element, b: G2Element) -> GTElement:
    """e(a, b)；任一输入为单位元时返回 GT 单位元"""
    if a.is_identity or b.is_identity:
        return GTElement.identity()
    return GTElement(BACKEND.pair(a.point, b.point))


def scalar_mul_g1(k: Scalar, p: G1Element) -> G1Element:
    return G1Element(BACKEND.mul(p.point, k.value))


def scalar_mul_g2(k: Scalar, p: G2Element) -> G2Element:
    return G2Element(BACKEND.mul(p.point, k.value))


def tag_from_gt_bytes(encoded: bytes) -> Tag:
    digest = hashlib.sha256(DomainTag.TAG.dst + encoded).digest()
    return Tag(digest[:TAG_SIZE])


def key_from_gt_bytes(encoded: bytes) -> SymmetricKey:
    hkdf = HKDF(
        algorithm=hashes.SHA256(),
        length=SYMMETRIC_KEY_SIZE,
        salt=None,
        info=DomainTag.ENC.dst,
    )
    return SymmetricKey(hkdf.derive(encoded))


def derive_tag(shared: GTElement) -> Tag:
    """共享 GT 值 → 160-bit tag"""
    return tag_from_gt_bytes(shared.to_bytes())


def derive_key(shared: GTElement) -> SymmetricKey:
    """共享 GT 值 → AES-256 密钥"""
    return key_from_gt_bytes(shared.to_bytes())


__all__ = [
    "BACKEND",
    "CURVE_ID",
    "EntropySource",
    "SystemEntropy",
    "SeededEntropy",
    "Scalar",
    "G1Element",
    "G2Element",
    "GTElement",
    "SymmetricKey",
    "Tag",
    "random_scalar",
    "hash_to_g1",
    "hash_to_g2",
    "pair",
    "scalar_mul_g1",
    "scalar_mul_g2",
    "derive_tag",
    "derive_key",
    "tag_from_gt_bytes",
    "key_from_gt_bytes",
    "curve_order",
]
