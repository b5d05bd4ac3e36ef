"""
Querier 订阅与解密流水线

    shared       = e(H1(identity), QuerierKey)     # = e(H1, H2)^z，与节点侧位相同
    subscription = derive_tag(shared) ‖ endpoint
    measurement  = AES-256-GCM-Open(derive_key(shared), nonce, ciphertext, aad = tag ‖ nonce)

订阅只含 20 字节 tag 与投递句柄，不含 Label 文本或密钥材料。
"""

from functools import lru_cache

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from loguru import logger

from pepsi.base import AuthenticationFailedError, DomainTag, MalformedReportError
from pepsi.core.labels import Label, encode_identity
from pepsi.core.pairing import GTElement, derive_key, derive_tag, hash_to_g1, pair
from pepsi.core.wire import Delivery, Report, Subscription, Tag
from pepsi.parties.mobile_node import Measurement
from pepsi.parties.registration_authority import QuerierKey, SystemParams, check_params


def querier_shared_secret(qk: QuerierKey, params: SystemParams | None = None) -> GTElement:
    """查询方共享值 e(H1(id), z·H2(id))"""
    check_params(params)
    identity = encode_identity(qk.label)
    return pair(hash_to_g1(identity, DomainTag.H1), qk.key)


@lru_cache(maxsize=1024)
def _cached_querier_secret(qk: QuerierKey) -> GTElement:
    return querier_shared_secret(qk)


def subscription_tag(qk: QuerierKey) -> Tag:
    return derive_tag(_cached_querier_secret(qk))


def make_subscription(qk: QuerierKey, endpoint: bytes | str = b"") -> Subscription:
    """QuerierKey → 可上传到 SP 的订阅"""
    if isinstance(endpoint, str):
        endpoint = endpoint.encode("utf-8")
    return Subscription(tag=subscription_tag(qk), endpoint=endpoint)


def _as_report(r: Report | bytes) -> Report:
    if isinstance(r, Report):
        return r
    try:
        return Report.from_bytes(r)
    except ValueError as e:
        raise MalformedReportError("report frame violates field constraints", {"reason": str(e)}) from e


def decrypt_report(qk: QuerierKey, r: Report | bytes) -> Measurement:
    """
    解密一个已投递的报告

    Raises:
        MalformedReportError: 帧结构不合法
        AuthenticationFailedError: 密钥不匹配（Label 不同）或密文被篡改
    """
    report = _as_report(r)
    key = derive_key(_cached_querier_secret(qk))
    try:
        payload = AESGCM(key.secret).decrypt(report.nonce, report.ciphertext, report.associated_data)
    except InvalidTag as e:
        raise AuthenticationFailedError(
            "report failed authentication", {"tag": report.tag.hex()}
        ) from e
    return Measurement(payload)


class Querier:
    """
    持有若干 QuerierKey（每个 Label 一个）的查询方

    每个密钥对应一个订阅；解密按报告 tag 路由到对应密钥。

    使用方法:
        q = Querier([qk_temp], endpoint="querier-1")
        for sub in q.subscriptions():
            sp.subscribe(sub.to_bytes())
        m = q.decrypt(delivery_frame)
    """

    def __init__(self, keys: list[QuerierKey] | None = None, endpoint: bytes | str = b"") -> None:
        self.endpoint = endpoint.encode("utf-8") if isinstance(endpoint, str) else endpoint
        self._keys_by_tag: dict[Tag, QuerierKey] = {}
        for key in keys or []:
            self.add_key(key)

    def add_key(self, key: QuerierKey) -> Tag:
        tag = subscription_tag(key)
        self._keys_by_tag[tag] = key
        return tag

    @property
    def labels(self) -> list[Label]:
        return [key.label for key in self._keys_by_tag.values()]

    def subscriptions(self) -> list[Subscription]:
        return [Subscription(tag=tag, endpoint=self.endpoint) for tag in self._keys_by_tag]

    def key_for(self, tag: Tag) -> QuerierKey | None:
        return self._keys_by_tag.get(tag)

    def decrypt(self, frame: Report | Delivery | bytes) -> tuple[Label, Measurement]:
        """
        Raises:
            AuthenticationFailedError: 没有与 tag 对应的密钥，或认证失败
        """
        if isinstance(frame, Delivery):
            frame = frame.report
        report = _as_report(frame)
        key = self._keys_by_tag.get(report.tag)
        if key is None:
            raise AuthenticationFailedError("no key held for report tag", {"tag": report.tag.hex()})
        return key.label, decrypt_report(key, report)

    def trial_decrypt(self, frame: Report | bytes) -> tuple[tuple[Label, Measurement] | None, int]:
        """
        不看 tag，依次用每个密钥尝试解密（广播基线）

        Returns:
            (成功时的 (Label, Measurement) 或 None, 尝试次数)
        """
        report = _as_report(frame)
        attempts = 0
        for key in self._keys_by_tag.values():
            attempts += 1
            try:
                return (key.label, decrypt_report(key, report)), attempts
            except AuthenticationFailedError:
                continue
        logger.debug(f"Trial decryption exhausted {attempts} keys")
        return None, attempts
