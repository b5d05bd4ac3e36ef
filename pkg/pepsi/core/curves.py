"""
配对后端 (pairing backends)

pepsi.core.pairing 的值类型只持有后端原生对象，所有群运算经由这里的后端完成：

- CharmBackend: charm-crypto (PBC)，BN254，原生实现，默认后端
- PyEccBackend: py_ecc，BLS12-381，纯 Python，无原生依赖时的回退

选择顺序由环境变量 PEPSI_PAIRING_BACKEND 决定 ("auto" | "charm" | "py_ecc")，
auto 时优先 charm。两个后端的曲线不同，密钥与 tag 不能跨后端混用；
SystemParams.curve_id 记录所用曲线。
"""

import hashlib
import os
from functools import lru_cache
from typing import Any, Protocol

from loguru import logger

from pepsi.base import ConfigInvalidError, GroupMembershipError

ENV_BACKEND = "PEPSI_PAIRING_BACKEND"


class PairingBackend(Protocol):
    """一条 type-3 配对曲线上的全部原语"""

    name: str
    curve_id: str
    order: int

    def g1_generator(self) -> Any: ...
    def g2_generator(self) -> Any: ...
    def g1_identity(self) -> Any: ...
    def g2_identity(self) -> Any: ...
    def hash_g1(self, identity: bytes, dst: bytes) -> Any: ...
    def hash_g2(self, identity: bytes, dst: bytes) -> Any: ...
    def mul(self, point: Any, k: int) -> Any: ...
    def point_eq(self, a: Any, b: Any) -> bool: ...
    def encode_g1(self, point: Any) -> bytes: ...
    def encode_g2(self, point: Any) -> bytes: ...
    def decode_g1(self, data: bytes) -> Any: ...
    def decode_g2(self, data: bytes) -> Any: ...
    def pair(self, a: Any, b: Any) -> Any: ...
    def gt_one(self) -> Any: ...
    def gt_mul(self, a: Any, b: Any) -> Any: ...
    def gt_pow(self, a: Any, k: int) -> Any: ...
    def encode_gt(self, value: Any) -> bytes: ...
    def decode_gt(self, data: bytes) -> Any: ...


# ============ charm (BN254) ============

class CharmBackend:
    """
    charm-crypto PairingGroup 后端

    群运算使用乘法记号: 点乘为 `P ** k`，群运算为 `*`，单位元为 init(G, 1)。
    序列化为 charm 自带格式 "<type>:<base64>"，解码时检查类型前缀、子群成员资格
    并要求重新编码后逐字节一致（规范编码）。
    """

    name = "charm"

    def __init__(self, curve: str = "BN254") -> None:
        from charm.toolbox.pairinggroup import G1, G2, GT, ZR, PairingGroup, pair

        self._group = PairingGroup(curve)
        self._types = {"G1": G1, "G2": G2, "GT": GT, "ZR": ZR}
        self._pair = pair
        self.curve_id = curve
        self.order = int(self._group.order())
        # PBC 没有固定生成元：由固定字符串哈希得到
        self._g1 = self._group.hash("PEPSI-v1-G1-generator", G1)
        self._g2 = self._group.hash("PEPSI-v1-G2-generator", G2)

    def _zr(self, k: int) -> Any:
        return self._group.init(self._types["ZR"], k % self.order)

    def g1_generator(self) -> Any:
        return self._g1

    def g2_generator(self) -> Any:
        return self._g2

    def g1_identity(self) -> Any:
        return self._group.init(self._types["G1"], 1)

    def g2_identity(self) -> Any:
        return self._group.init(self._types["G2"], 1)

    @staticmethod
    def _message(identity: bytes, dst: bytes) -> str:
        # dst 是定长 ASCII 常量，hex(dst ‖ 0x00 ‖ identity) 对 identity 单射
        return (dst + b"\x00" + identity).hex()

    def hash_g1(self, identity: bytes, dst: bytes) -> Any:
        return self._group.hash(self._message(identity, dst), self._types["G1"])

    def hash_g2(self, identity: bytes, dst: bytes) -> Any:
        return self._group.hash(self._message(identity, dst), self._types["G2"])

    def mul(self, point: Any, k: int) -> Any:
        return point ** self._zr(k)

    def point_eq(self, a: Any, b: Any) -> bool:
        return bool(a == b)

    def _encode(self, value: Any) -> bytes:
        return bytes(self._group.serialize(value))

    def _decode(self, data: bytes, type_name: str) -> Any:
        prefix = f"{_CHARM_TYPE_IDS[type_name]}:".encode("ascii")
        if not data.startswith(prefix):
            raise GroupMembershipError("encoding is not a group element of the expected type", {"group": type_name})
        try:
            value = self._group.deserialize(bytes(data))
        except Exception as e:  # charm 解码失败时抛出未分类的异常
            raise GroupMembershipError("point is not on the curve", {"reason": str(e)}) from e
        if value is None:
            raise GroupMembershipError("point is not on the curve")
        if not self._group.ismember(value):
            raise GroupMembershipError("point is not in the prime-order subgroup")
        if self._encode(value) != data:
            raise GroupMembershipError("non-canonical point encoding")
        return value

    def encode_g1(self, point: Any) -> bytes:
        return self._encode(point)

    def encode_g2(self, point: Any) -> bytes:
        return self._encode(point)

    def decode_g1(self, data: bytes) -> Any:
        return self._decode(data, "G1")

    def decode_g2(self, data: bytes) -> Any:
        return self._decode(data, "G2")

    def pair(self, a: Any, b: Any) -> Any:
        return self._pair(a, b)

    def gt_one(self) -> Any:
        return self._group.init(self._types["GT"], 1)

    def gt_mul(self, a: Any, b: Any) -> Any:
        return a * b

    def gt_pow(self, a: Any, k: int) -> Any:
        return a ** self._zr(k)

    def encode_gt(self, value: Any) -> bytes:
        return self._encode(value)

    def decode_gt(self, data: bytes) -> Any:
        try:
            return self._decode(data, "GT")
        except GroupMembershipError as e:
            raise ValueError(e.message) from e


_CHARM_TYPE_IDS = {"ZR": 0, "G1": 1, "G2": 2, "GT": 3}


# ============ py_ecc (BLS12-381) ============

class PyEccBackend:
    """
    py_ecc 后端：BLS12-381，RFC 9380 SSWU hash-to-curve，ZCash 压缩编码

    GT 编码为 12 个 Fq 系数（库内顺序），每个 48 字节大端，共 576 字节。
    """

    name = "py_ecc"
    curve_id = "BLS12-381"

    FQ_SIZE = 48
    GT_SIZE = 12 * FQ_SIZE
    G1_SIZE = 48
    G2_SIZE = 96

    def __init__(self) -> None:
        from py_ecc.bls import g2_primitives, hash_to_curve
        from py_ecc.fields import optimized_bls12_381_FQ12
        from py_ecc import optimized_bls12_381 as curve

        self._curve = curve
        self._codec = g2_primitives
        self._h2c = hash_to_curve
        self._fq12 = optimized_bls12_381_FQ12
        self.order = int(curve.curve_order)

    def g1_generator(self) -> Any:
        return self._curve.G1

    def g2_generator(self) -> Any:
        return self._curve.G2

    def g1_identity(self) -> Any:
        return self._curve.Z1

    def g2_identity(self) -> Any:
        return self._curve.Z2

    def hash_g1(self, identity: bytes, dst: bytes) -> Any:
        return self._h2c.hash_to_G1(identity, dst, hashlib.sha256)

    def hash_g2(self, identity: bytes, dst: bytes) -> Any:
        return self._h2c.hash_to_G2(identity, dst, hashlib.sha256)

    def mul(self, point: Any, k: int) -> Any:
        return self._curve.multiply(point, k % self.order)

    def point_eq(self, a: Any, b: Any) -> bool:
        return bool(self._curve.eq(a, b))

    def encode_g1(self, point: Any) -> bytes:
        return bytes(self._codec.G1_to_pubkey(point))

    def encode_g2(self, point: Any) -> bytes:
        return bytes(self._codec.G2_to_signature(point))

    def _decode(self, data: bytes, size: int, decompress: Any) -> Any:
        if len(data) != size:
            raise GroupMembershipError(
                "compressed point has wrong length", {"expected": size, "actual": len(data)}
            )
        try:
            point = decompress(bytes(data))
        except (ValueError, ArithmeticError) as e:
            raise GroupMembershipError("point is not on the curve", {"reason": str(e)}) from e
        if not self._curve.is_inf(self._curve.multiply(point, self.order)):
            raise GroupMembershipError("point is not in the prime-order subgroup")
        return point

    def decode_g1(self, data: bytes) -> Any:
        return self._decode(data, self.G1_SIZE, self._codec.pubkey_to_G1)

    def decode_g2(self, data: bytes) -> Any:
        return self._decode(data, self.G2_SIZE, self._codec.signature_to_G2)

    def pair(self, a: Any, b: Any) -> Any:
        return self._curve.pairing(b, a)

    def gt_one(self) -> Any:
        return self._fq12.FQ12.one()

    def gt_mul(self, a: Any, b: Any) -> Any:
        return a * b

    def gt_pow(self, a: Any, k: int) -> Any:
        return a ** (k % self.order)

    def encode_gt(self, value: Any) -> bytes:
        modulus = self._curve.field_modulus
        return b"".join((int(c) % modulus).to_bytes(self.FQ_SIZE, "big") for c in value.coeffs)

    def decode_gt(self, data: bytes) -> Any:
        if len(data) != self.GT_SIZE:
            raise ValueError(f"GT encoding must be {self.GT_SIZE} bytes")
        coeffs = [int.from_bytes(data[i:i + self.FQ_SIZE], "big") for i in range(0, self.GT_SIZE, self.FQ_SIZE)]
        if any(c >= self._curve.field_modulus for c in coeffs):
            raise ValueError("GT coefficient not reduced")
        return self._fq12.FQ12(coeffs)


# ============ 选择 ============

BACKENDS: dict[str, type] = {"charm": CharmBackend, "py_ecc": PyEccBackend}


@lru_cache(maxsize=None)
def load_backend(name: str | None = None) -> PairingBackend:
    """
    按名称构造后端；name 为 None 时读 PEPSI_PAIRING_BACKEND（默认 auto）

    Raises:
        ConfigInvalidError: 名称未知，或显式指定的后端不可用
    """
    choice = (name or os.environ.get(ENV_BACKEND) or "auto").strip().lower()
    if choice == "auto":
        try:
            backend: PairingBackend = CharmBackend()
        except ImportError:
            logger.warning("charm-crypto not installed; falling back to pure-Python py_ecc pairings")
            backend = PyEccBackend()
    elif choice in BACKENDS:
        try:
            backend = BACKENDS[choice]()
        except ImportError as e:
            raise ConfigInvalidError("pairing backend is not installed", {"backend": choice}) from e
    else:
        raise ConfigInvalidError("unknown pairing backend", {"backend": choice, "known": sorted(BACKENDS)})
    logger.debug(f"Pairing backend: {backend.name} ({backend.curve_id})")
    return backend
