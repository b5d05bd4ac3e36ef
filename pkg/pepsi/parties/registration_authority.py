"""
Registration Authority (离线可信方)

生成系统参数与主密钥 z，按 Label 颁发密钥：

- NodeKey    (grey key):   z · H1(identity) ∈ G1
- QuerierKey (yellow key): z · H2(identity) ∈ G2

双线性保证 e(z·H1, H2) = e(H1, z·H2)，两方用不同秘密算出同一个 tag。
该 z·H(id) 形式是根据"不同秘密得到相同 tag"重建的实例化。

RA 没有网络接口，只做基于文件的颁发；注册账本只追加、原子持久化。
"""

import os
import struct
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.pbkdf2 import PBKDF2HMAC
from loguru import logger

from pepsi.base import (
    PROTOCOL_VERSION,
    AuthenticationFailedError,
    DomainTag,
    GroupMembershipError,
    LabelNotOfferedError,
    LedgerWriteError,
    MalformedIdentityError,
    MalformedLedgerError,
    MalformedKeyFileError,
    PartyID,
    Role,
    VersionMismatchError,
)
from pepsi.core.labels import Label, decode_identity, encode_identity
from pepsi.core.pairing import (
    CURVE_ID,
    EntropySource,
    G1Element,
    G2Element,
    Scalar,
    SystemEntropy,
    hash_to_g1,
    hash_to_g2,
    random_scalar,
    scalar_mul_g1,
    scalar_mul_g2,
)
from pepsi.core.wire import KeyFrame

MAGIC_MASTER = b"PEPM"
_MASTER_HEADER = struct.Struct(">4sBI16s12s")
DEFAULT_KDF_ITERATIONS = 200_000


# ============ 数据类型 ============

@dataclass(frozen=True)
class SystemParams:
    """所有参与方共享的公开参数"""
    protocol_version: int = PROTOCOL_VERSION
    curve_id: str = CURVE_ID
    g1_generator: G1Element = field(default_factory=G1Element.generator)
    g2_generator: G2Element = field(default_factory=G2Element.generator)

    def __post_init__(self) -> None:
        check_params(self)


def check_params(params: SystemParams | None) -> None:
    """
    参数必须与本进程的协议版本和配对曲线一致；None 表示使用默认参数

    Raises:
        VersionMismatchError: 协议版本或曲线不一致
    """
    if params is None:
        return
    if params.protocol_version != PROTOCOL_VERSION:
        raise VersionMismatchError(
            "unsupported protocol version", {"version": params.protocol_version, "expected": PROTOCOL_VERSION}
        )
    if params.curve_id != CURVE_ID:
        raise VersionMismatchError(
            "system parameters are for another curve", {"curve": params.curve_id, "expected": CURVE_ID}
        )


@dataclass(frozen=True)
class MasterSecret:
    """RA 主密钥 z（非零）"""
    z: Scalar = field(repr=False)

    def __post_init__(self) -> None:
        if self.z.value == 0:
            raise ValueError("master secret must be nonzero")


@dataclass(frozen=True)
class NodeKey:
    """Mobile Node 的打标签密钥 (grey key)"""
    label: Label
    key: G1Element = field(repr=False)

    role = Role.NODE


@dataclass(frozen=True)
class QuerierKey:
    """Querier 的解密密钥 (yellow key)"""
    label: Label
    key: G2Element = field(repr=False)

    role = Role.QUERIER


@dataclass(frozen=True, slots=True)
class LedgerEntry:
    party_id: PartyID
    role: Role
    label: Label
    issued_at: int

    def to_line(self) -> str:
        role = "node" if self.role is Role.NODE else "querier"
        return f"{self.party_id}\t{role}\t{encode_identity(self.label).hex()}\t{self.issued_at}\n"

    @classmethod
    def from_line(cls, line: str) -> "LedgerEntry":
        """
        Raises:
            MalformedLedgerError: 字段数、角色、label-hex 或时间戳不合法
        """
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 4:
            raise MalformedLedgerError("ledger line must have 4 fields", {"fields": len(fields)})
        party_id, role, label_hex, issued_at = fields
        parsed_role = _ROLES_BY_NAME.get(role)
        if parsed_role is None:
            raise MalformedLedgerError("unknown ledger role", {"role": role})
        try:
            label = decode_identity(bytes.fromhex(label_hex))
        except ValueError as e:
            raise MalformedLedgerError("ledger label is not hex", {"reason": str(e)}) from e
        except MalformedIdentityError as e:
            raise MalformedLedgerError("ledger label is not a canonical identity", e.details) from e
        if not (issued_at.isascii() and issued_at.isdigit()):
            raise MalformedLedgerError("ledger timestamp is not an integer", {"issued_at": issued_at})
        return cls(party_id, parsed_role, label, int(issued_at))


_ROLES_BY_NAME = {"node": Role.NODE, "querier": Role.QUERIER}


class RegistrationLedger:
    """
    只追加的注册账本

    每行: party-id TAB role TAB label-hex TAB unix-time
    每条记录以追加方式写入并 fsync 后才进入内存状态；读者可并发取快照。
    崩溃留下的未终止尾行在加载时截掉。path 为 None 时只在内存中保存。
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._entries = self._load(self.path)

    @staticmethod
    def _load(path: Path) -> list[LedgerEntry]:
        """
        Raises:
            MalformedLedgerError: 某个已终止的行无法解析（details 带 1 起始的行号）
        """
        raw = path.read_bytes()
        terminated = raw.rfind(b"\n") + 1
        if terminated < len(raw):
            logger.warning(f"Dropping unterminated ledger line in {path}")
            with open(path, "r+b") as f:
                f.truncate(terminated)
        try:
            text = raw[:terminated].decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedLedgerError("ledger is not valid UTF-8", {"path": str(path), "offset": e.start}) from e
        entries = []
        for number, line in enumerate(text.split("\n"), start=1):
            if not line:
                continue
            try:
                entries.append(LedgerEntry.from_line(line))
            except MalformedLedgerError as e:
                raise MalformedLedgerError(
                    f"malformed ledger line {number}: {e.message}",
                    {"path": str(path), "line": number, **e.details},
                ) from e
        logger.info(f"Ledger loaded: {len(entries)} entries from {path}")
        return entries

    def __len__(self) -> int:
        return len(self._entries)

    def snapshot(self) -> tuple[LedgerEntry, ...]:
        return tuple(self._entries)

    def append(self, entry: LedgerEntry) -> None:
        """
        Raises:
            LedgerWriteError: 持久化失败（内存状态不变）
        """
        if any(ch in entry.party_id for ch in "\t\r\n"):
            raise LedgerWriteError("party id contains a separator", {"party_id": entry.party_id})
        with self._lock:
            if self.path is not None:
                self._persist(entry)
            self._entries = [*self._entries, entry]

    def _persist(self, entry: LedgerEntry) -> None:
        assert self.path is not None
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as f:
                f.write(entry.to_line().encode("utf-8"))
                f.flush()
                os.fsync(f.fileno())
        except OSError as e:
            raise LedgerWriteError("failed to persist ledger", {"path": str(self.path), "error": str(e)}) from e


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as tmp:
            tmp.write(payload)
            tmp.flush()
            os.fsync(tmp.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


# ============ 颁发运算 ============

def setup(rng: EntropySource | None = None) -> tuple[MasterSecret, SystemParams]:
    """生成主密钥与系统参数"""
    master = MasterSecret(random_scalar(rng or SystemEntropy()))
    return master, SystemParams()


def _record(ledger: RegistrationLedger | None, party_id: PartyID, role: Role, label: Label) -> None:
    if ledger is not None:
        ledger.append(LedgerEntry(party_id, role, label, int(time.time())))


def register_node(
    ms: MasterSecret,
    label: Label,
    node_id: PartyID,
    ledger: RegistrationLedger | None = None,
) -> NodeKey:
    """
    颁发 NodeKey = z · H1(identity)

    Raises:
        LedgerWriteError: 账本写入失败
    """
    key = scalar_mul_g1(ms.z, hash_to_g1(encode_identity(label), DomainTag.H1))
    _record(ledger, node_id, Role.NODE, label)
    logger.debug(f"Issued node key for {node_id}")
    return NodeKey(label=label, key=key)


def register_querier(
    ms: MasterSecret,
    label: Label,
    querier_id: PartyID,
    ledger: RegistrationLedger | None = None,
) -> QuerierKey:
    """颁发 QuerierKey = z · H2(identity)"""
    key = scalar_mul_g2(ms.z, hash_to_g2(encode_identity(label), DomainTag.H2))
    _record(ledger, querier_id, Role.QUERIER, label)
    logger.debug(f"Issued querier key for {querier_id}")
    return QuerierKey(label=label, key=key)


# ============ 密钥文件 ============

def encode_key(key: NodeKey | QuerierKey) -> bytes:
    return KeyFrame(role=key.role, identity=encode_identity(key.label), point=key.key.to_bytes()).to_bytes()


def decode_key(data: bytes) -> NodeKey | QuerierKey:
    """
    Raises:
        MalformedKeyFileError: 结构或 identity 不合法
        VersionMismatchError: 版本不是 1
        GroupMembershipError: 群元素不在子群中
    """
    frame = KeyFrame.from_bytes(data)
    try:
        label = decode_identity(frame.identity)
    except MalformedIdentityError as e:
        raise MalformedKeyFileError("key file identity is malformed", e.details) from e
    if frame.role is Role.NODE:
        point: G1Element | G2Element = G1Element.from_bytes(frame.point)
    else:
        point = G2Element.from_bytes(frame.point)
    if point.is_identity:
        raise GroupMembershipError("key is the group identity")
    if frame.role is Role.NODE:
        return NodeKey(label=label, key=point)
    return QuerierKey(label=label, key=point)


def export_key(key: NodeKey | QuerierKey, path: str | Path) -> None:
    _atomic_write(Path(path), encode_key(key))


def import_key(path: str | Path) -> NodeKey | QuerierKey:
    return decode_key(Path(path).read_bytes())


# ============ 主密钥静态加密 ============

def _passphrase_key(passphrase: str, salt: bytes, iterations: int) -> bytes:
    kdf = PBKDF2HMAC(algorithm=hashes.SHA256(), length=32, salt=salt, iterations=iterations)
    return kdf.derive(passphrase.encode("utf-8"))


def seal_master(
    ms: MasterSecret,
    passphrase: str,
    rng: EntropySource | None = None,
    iterations: int = DEFAULT_KDF_ITERATIONS,
) -> bytes:
    """MasterSecret → "PEPM" 加密文件内容"""
    rng = rng or SystemEntropy()
    salt = rng.read(16)
    nonce = rng.read(12)
    header = _MASTER_HEADER.pack(MAGIC_MASTER, PROTOCOL_VERSION, iterations, salt, nonce)
    sealed = AESGCM(_passphrase_key(passphrase, salt, iterations)).encrypt(nonce, ms.z.to_bytes(), header)
    return header + sealed


def open_master(data: bytes, passphrase: str) -> MasterSecret:
    """
    Raises:
        MalformedKeyFileError: 结构错误
        VersionMismatchError: 版本不是 1
        AuthenticationFailedError: 口令错误或文件被篡改
    """
    if len(data) < _MASTER_HEADER.size:
        raise MalformedKeyFileError("master key file too short", {"length": len(data)})
    magic, version, iterations, salt, nonce = _MASTER_HEADER.unpack_from(data)
    if magic != MAGIC_MASTER:
        raise MalformedKeyFileError("bad master key magic", {"magic": magic.hex()})
    if version != PROTOCOL_VERSION:
        raise VersionMismatchError("unsupported master key version", {"version": version})
    if iterations == 0:
        raise MalformedKeyFileError("zero KDF iterations")
    header, sealed = data[:_MASTER_HEADER.size], data[_MASTER_HEADER.size:]
    try:
        raw = AESGCM(_passphrase_key(passphrase, salt, iterations)).decrypt(nonce, sealed, header)
    except InvalidTag as e:
        raise AuthenticationFailedError("wrong passphrase or tampered master key file") from e
    try:
        return MasterSecret(Scalar.from_bytes(raw))
    except ValueError as e:
        raise MalformedKeyFileError("master key file holds an invalid scalar") from e


# ============ RA 门面 ============

class RegistrationAuthority:
    """
    离线 RA：持有主密钥、系统参数、账本与可选的 Label 目录

    使用方法:
        ra = RegistrationAuthority.create(ledger=RegistrationLedger("ledger.tsv"))
        nk = ra.register_node(Label.of("Temp", "Irvine, CA"), "node-1")
        qk = ra.register_querier(Label.of("Temp", "Irvine, CA"), "querier-1")
    """

    def __init__(
        self,
        master: MasterSecret,
        params: SystemParams | None = None,
        ledger: RegistrationLedger | None = None,
        catalog: frozenset[Label] | None = None,
    ) -> None:
        self._master = master
        self.params = params or SystemParams()
        self.ledger = ledger if ledger is not None else RegistrationLedger()
        self._catalog = catalog
        self._node_keys: dict[Label, NodeKey] = {}
        self._querier_keys: dict[Label, QuerierKey] = {}
        # 颁发串行化（单写者）
        self._issue_lock = threading.Lock()

    @classmethod
    def create(
        cls,
        rng: EntropySource | None = None,
        ledger: RegistrationLedger | None = None,
        catalog: frozenset[Label] | None = None,
    ) -> "RegistrationAuthority":
        master, params = setup(rng)
        logger.info(f"Registration authority set up on {params.curve_id}")
        return cls(master, params, ledger=ledger, catalog=catalog)

    def catalog(self) -> list[Label]:
        """可供注册的 Label 列表（无目录时为空列表，表示不限制）"""
        if self._catalog is None:
            return []
        return sorted(self._catalog, key=lambda label: label.keywords)

    def _check_offered(self, label: Label) -> None:
        if self._catalog is not None and label not in self._catalog:
            raise LabelNotOfferedError("label is not in the registration catalog", {"label": str(label)})

    def register_node(self, label: Label, node_id: PartyID) -> NodeKey:
        self._check_offered(label)
        with self._issue_lock:
            cached = self._node_keys.get(label)
            if cached is None:
                cached = register_node(self._master, label, node_id, self.ledger)
                self._node_keys[label] = cached
            else:
                _record(self.ledger, node_id, Role.NODE, label)
            return cached

    def register_querier(self, label: Label, querier_id: PartyID) -> QuerierKey:
        self._check_offered(label)
        with self._issue_lock:
            cached = self._querier_keys.get(label)
            if cached is None:
                cached = register_querier(self._master, label, querier_id, self.ledger)
                self._querier_keys[label] = cached
            else:
                _record(self.ledger, querier_id, Role.QUERIER, label)
            return cached

    def save(
        self,
        path: str | Path,
        passphrase: str,
        rng: EntropySource | None = None,
        iterations: int = DEFAULT_KDF_ITERATIONS,
    ) -> None:
        _atomic_write(Path(path), seal_master(self._master, passphrase, rng, iterations))

    @classmethod
    def load(
        cls,
        path: str | Path,
        passphrase: str,
        ledger: RegistrationLedger | None = None,
        catalog: frozenset[Label] | None = None,
    ) -> "RegistrationAuthority":
        master = open_master(Path(path).read_bytes(), passphrase)
        return cls(master, ledger=ledger, catalog=catalog)
