"""
Pytest 配置和共享 fixtures

配对在纯 Python 中很慢（单次约数百毫秒），RA 与密钥 fixture 都是 session 级，
各测试共享同一组密钥；需要 z = 1 的测试使用 unit_master。
"""

import pytest

from pepsi.core.labels import Label
from pepsi.core.pairing import Scalar, SeededEntropy
from pepsi.core.wire import AEAD_TAG_SIZE, NONCE_SIZE, TAG_SIZE, Report, Subscription, Tag
from pepsi.parties.registration_authority import MasterSecret, RegistrationAuthority

# 配置 pytest-asyncio
pytest_plugins = ('pytest_asyncio',)


# ============ 常量 ============

TEMP_KEYWORDS = ("Temp", "Irvine, CA")
HUMIDITY_KEYWORDS = ("Humidity", "Irvine, CA")


# ============ Labels ============

@pytest.fixture(scope="session")
def temp_label() -> Label:
    return Label.of(*TEMP_KEYWORDS)


@pytest.fixture(scope="session")
def humidity_label() -> Label:
    return Label.of(*HUMIDITY_KEYWORDS)


# ============ RA 与密钥 ============

@pytest.fixture(scope="session")
def ra() -> RegistrationAuthority:
    """固定种子的 RA（内存账本）"""
    return RegistrationAuthority.create(rng=SeededEntropy(1234))


@pytest.fixture(scope="session")
def other_ra() -> RegistrationAuthority:
    """独立的第二个 RA（不同主密钥）"""
    return RegistrationAuthority.create(rng=SeededEntropy(5678))


@pytest.fixture(scope="session")
def unit_master() -> MasterSecret:
    """z = 1"""
    return MasterSecret(Scalar(1))


@pytest.fixture(scope="session")
def node_key(ra, temp_label):
    return ra.register_node(temp_label, "node-1")


@pytest.fixture(scope="session")
def querier_key(ra, temp_label):
    return ra.register_querier(temp_label, "querier-1")


@pytest.fixture(scope="session")
def humidity_node_key(ra, humidity_label):
    return ra.register_node(humidity_label, "node-2")


@pytest.fixture(scope="session")
def humidity_querier_key(ra, humidity_label):
    return ra.register_querier(humidity_label, "querier-2")


# ============ 熵与帧 ============

@pytest.fixture
def rng() -> SeededEntropy:
    return SeededEntropy(42)


@pytest.fixture
def make_frame():
    """不依赖密码学的报告帧工厂（SP 测试用）"""
    counter = SeededEntropy("frames")

    def _make(tag: bytes | Tag | None = None, payload_size: int = 8) -> bytes:
        if tag is None:
            tag = counter.read(TAG_SIZE)
        if isinstance(tag, bytes):
            tag = Tag(tag)
        ciphertext = counter.read(payload_size + AEAD_TAG_SIZE)
        return Report(tag, counter.read(NONCE_SIZE), ciphertext).to_bytes()

    return _make


@pytest.fixture
def make_subscription_frame():
    def _make(tag: bytes | Tag, endpoint: bytes = b"q") -> bytes:
        if isinstance(tag, bytes):
            tag = Tag(tag)
        return Subscription(tag, endpoint).to_bytes()

    return _make
