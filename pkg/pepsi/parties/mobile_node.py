"""
Mobile Node 报告流水线

    shared = e(NodeKey, H2(identity))            # = e(H1, H2)^z
    tag    = derive_tag(shared)
    key    = derive_key(shared)
    report = tag ‖ nonce ‖ AES-256-GCM(key, nonce, payload, aad = tag ‖ nonce)

共享秘密对每个 NodeKey 只算一次并缓存；此后每个报告只需一次哈希和一次对称加密。
cache=False 时每个报告都重新做配对（基准测试的冷路径）。
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from loguru import logger

from pepsi.base import MAX_PAYLOAD_BYTES, DomainTag, EmptyPayloadError, PayloadTooLargeError
from pepsi.core.labels import encode_identity
from pepsi.core.pairing import (
    EntropySource,
    GTElement,
    SymmetricKey,
    SystemEntropy,
    derive_key,
    derive_tag,
    hash_to_g2,
    pair,
)
from pepsi.core.wire import NONCE_SIZE, Report, Tag
from pepsi.parties.registration_authority import NodeKey, SystemParams, check_params


@dataclass(frozen=True, slots=True)
class Measurement:
    """上报的测量值（不透明字节，建议 UTF-8，如 "74 F"）"""
    payload: bytes

    def __post_init__(self) -> None:
        if not self.payload:
            raise EmptyPayloadError("measurement payload is empty")
        if len(self.payload) > MAX_PAYLOAD_BYTES:
            raise PayloadTooLargeError(
                "measurement payload too large",
                {"size": len(self.payload), "max": MAX_PAYLOAD_BYTES},
            )

    @classmethod
    def from_text(cls, text: str) -> "Measurement":
        return cls(text.encode("utf-8"))

    @property
    def text(self) -> str:
        return self.payload.decode("utf-8", errors="replace")


def node_shared_secret(nk: NodeKey, params: SystemParams | None = None) -> GTElement:
    """节点侧共享值 e(z·H1(id), H2(id))，确定且不缓存"""
    check_params(params)
    identity = encode_identity(nk.label)
    return pair(nk.key, hash_to_g2(identity, DomainTag.H2))


@lru_cache(maxsize=1024)
def cached_node_secret(nk: NodeKey) -> GTElement:
    return node_shared_secret(nk)


def seal(tag: Tag, key: SymmetricKey, m: Measurement, rng: EntropySource) -> Report:
    """用已派生的 tag/key 封装一个报告（新鲜 nonce）"""
    nonce = rng.read(NONCE_SIZE)
    aad = tag.value + nonce
    ciphertext = AESGCM(key.secret).encrypt(nonce, m.payload, aad)
    return Report(tag=tag, nonce=nonce, ciphertext=ciphertext)


def make_report(
    nk: NodeKey,
    m: Measurement,
    params: SystemParams | None = None,
    rng: EntropySource | None = None,
    *,
    cache: bool = True,
) -> Report:
    """
    打标签并加密一个测量值

    Raises:
        PayloadTooLargeError / EmptyPayloadError: 在构造 Measurement 时已检查
        VersionMismatchError: params 与本进程的协议版本或曲线不一致
    """
    check_params(params)
    shared = cached_node_secret(nk) if cache else node_shared_secret(nk, params)
    report = seal(derive_tag(shared), derive_key(shared), m, rng or SystemEntropy())
    logger.debug(f"Report sealed: tag={report.tag.hex()[:8]} payload={len(m.payload)}B")
    return report


class MobileNode:
    """
    持有一个 NodeKey 的有状态节点

    使用方法:
        node = MobileNode(nk)
        frame = node.report("74 F").to_bytes()
    """

    def __init__(
        self,
        key: NodeKey,
        params: SystemParams | None = None,
        rng: EntropySource | None = None,
    ) -> None:
        check_params(params)
        self.key = key
        self.params = params or SystemParams()
        self._rng = rng or SystemEntropy()
        self.reports_sent = 0

    @cached_property
    def _shared(self) -> GTElement:
        return cached_node_secret(self.key)

    @cached_property
    def tag(self) -> Tag:
        return derive_tag(self._shared)

    @cached_property
    def _key(self) -> SymmetricKey:
        return derive_key(self._shared)

    def report(self, measurement: Measurement | bytes | str) -> Report:
        if isinstance(measurement, str):
            measurement = Measurement.from_text(measurement)
        elif isinstance(measurement, bytes):
            measurement = Measurement(measurement)
        report = seal(self.tag, self._key, measurement, self._rng)
        self.reports_sent += 1
        return report
