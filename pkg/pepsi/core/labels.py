"""
Label 规范化与 identity 编码

关键词列表（如 "Temp", "Irvine, CA"）→ 规范 Label → identity 字节（哈希到群的输入）。

规范化规则：
- Unicode NFC，casefold，去首尾空白，内部连续空白折叠为一个空格
- 去重后按 UTF-8 字节排序（关键词视为无序集合）
- 1..=8 个关键词，每个 1..=128 字节

identity 编码（线上稳定格式，绑定 "PEPSI-v1"）：
    对每个关键词: u16 大端长度 ‖ UTF-8 字节，按列表顺序拼接
"""

import struct
import unicodedata
from collections.abc import Iterable
from dataclasses import dataclass

from pepsi.base import (
    MAX_KEYWORD_BYTES,
    MAX_KEYWORDS,
    EmptyLabelError,
    IdentityBytes,
    KeywordTooLongError,
    MalformedIdentityError,
    TooManyKeywordsError,
)

_LENGTH = struct.Struct(">H")

# casefold 与 NFC 交替直到不动点；实际两轮内收敛
_MAX_NORMALIZE_ROUNDS = 8


def normalize_keyword(raw: str) -> str:
    """单个关键词规范化（幂等）"""
    current = raw
    for _ in range(_MAX_NORMALIZE_ROUNDS):
        folded = unicodedata.normalize("NFC", unicodedata.normalize("NFC", current).casefold())
        collapsed = " ".join(folded.split())
        if collapsed == current:
            break
        current = collapsed
    return current


def _sort_key(keyword: str) -> bytes:
    return keyword.encode("utf-8")


@dataclass(frozen=True, slots=True)
class Label:
    """规范关键词集合，作为 IBE identity 使用"""
    keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.keywords, tuple):
            object.__setattr__(self, "keywords", tuple(self.keywords))
        _check_limits(self.keywords)
        canonical = tuple(sorted({normalize_keyword(k) for k in self.keywords}, key=_sort_key))
        if canonical != self.keywords:
            raise ValueError(f"label keywords are not canonical: {self.keywords!r}")

    @classmethod
    def of(cls, *raw_keywords: str) -> "Label":
        return canonicalize(raw_keywords)

    def __str__(self) -> str:
        return " + ".join(self.keywords)


def _check_limits(keywords: tuple[str, ...]) -> None:
    if not keywords:
        raise EmptyLabelError("label has no keywords")
    if len(keywords) > MAX_KEYWORDS:
        raise TooManyKeywordsError(
            "too many keywords", {"count": len(keywords), "max": MAX_KEYWORDS}
        )
    for keyword in keywords:
        size = len(keyword.encode("utf-8"))
        if size > MAX_KEYWORD_BYTES:
            raise KeywordTooLongError(
                "keyword too long", {"bytes": size, "max": MAX_KEYWORD_BYTES}
            )
        if size == 0:
            raise EmptyLabelError("empty keyword in label")


def canonicalize(raw_keywords: Iterable[str]) -> Label:
    """
    原始关键词 → 规范 Label

    Raises:
        EmptyLabelError: 规范化后没有关键词
        TooManyKeywordsError: 去重后超过 8 个
        KeywordTooLongError: 某关键词超过 128 字节

    Example:
        canonicalize(["Temp", "Irvine, CA"]).keywords == ("irvine, ca", "temp")
    """
    normalized = {normalize_keyword(raw) for raw in raw_keywords}
    normalized.discard("")
    keywords = tuple(sorted(normalized, key=_sort_key))
    _check_limits(keywords)
    return Label(keywords)


def encode_identity(label: Label) -> IdentityBytes:
    """Label → identity 字节（长度前缀保证单射）"""
    parts = []
    for keyword in label.keywords:
        raw = keyword.encode("utf-8")
        parts.append(_LENGTH.pack(len(raw)))
        parts.append(raw)
    return b"".join(parts)


def decode_identity(data: bytes) -> Label:
    """
    identity 字节 → Label

    Raises:
        MalformedIdentityError: 截断、非 UTF-8 或非规范
    """
    keywords: list[str] = []
    offset = 0
    while offset < len(data):
        if offset + _LENGTH.size > len(data):
            raise MalformedIdentityError("truncated keyword length", {"offset": offset})
        (size,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        if offset + size > len(data):
            raise MalformedIdentityError("truncated keyword", {"offset": offset, "size": size})
        try:
            keywords.append(data[offset:offset + size].decode("utf-8"))
        except UnicodeDecodeError as e:
            raise MalformedIdentityError("keyword is not UTF-8", {"offset": offset}) from e
        offset += size
    try:
        return Label(tuple(keywords))
    except (ValueError, EmptyLabelError, TooManyKeywordsError, KeywordTooLongError) as e:
        raise MalformedIdentityError("identity does not encode a canonical label", {"reason": str(e)}) from e
