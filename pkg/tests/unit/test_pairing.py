"""
Unit tests for the pairing core

大规模的性质检查以 pytest.param(..., marks=slow) 给出完整规模，默认只跑小规模。
"""
import hashlib

import pytest
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from pepsi.base import ConfigInvalidError, DomainTag, GroupMembershipError
from pepsi.core.curves import BACKENDS, PyEccBackend, load_backend
from pepsi.core.pairing import (
    BACKEND,
    CURVE_ID,
    G1Element,
    G2Element,
    GTElement,
    Scalar,
    SeededEntropy,
    SymmetricKey,
    SystemEntropy,
    curve_order,
    derive_key,
    derive_tag,
    hash_to_g1,
    hash_to_g2,
    pair,
    random_scalar,
    scalar_mul_g1,
    scalar_mul_g2,
)

IDENTITY = b"\x00\x0airvine, ca\x00\x04temp"


@pytest.fixture(scope="module")
def base_gt() -> GTElement:
    return pair(G1Element.generator(), G2Element.generator())


def gt_samples(base: GTElement, count: int) -> list[GTElement]:
    """base, base^2, ..., base^count（只用 GT 乘法，互不相同）"""
    out = [base]
    while len(out) < count:
        out.append(out[-1] * base)
    return out


class TestEntropy:

    @pytest.mark.unit
    def test_seeded_is_deterministic(self):
        assert SeededEntropy(7).read(100) == SeededEntropy(7).read(100)

    @pytest.mark.unit
    def test_seeds_differ(self):
        assert SeededEntropy(7).read(32) != SeededEntropy(8).read(32)
        assert SeededEntropy("a").read(32) != SeededEntropy(b"b").read(32)

    @pytest.mark.unit
    def test_stream_is_chunking_independent(self):
        a = SeededEntropy(1)
        b = SeededEntropy(1)
        assert a.read(10) + a.read(90) + a.read(3) == b.read(103)

    @pytest.mark.unit
    @pytest.mark.parametrize("seed", [-1, 1 << 128])
    def test_integer_seed_range(self, seed):
        with pytest.raises(ValueError):
            SeededEntropy(seed)

    @pytest.mark.unit
    def test_system_entropy_length(self):
        assert len(SystemEntropy().read(33)) == 33


class TestBackend:

    @pytest.mark.unit
    def test_active_backend(self):
        assert BACKEND.name in BACKENDS
        assert CURVE_ID == BACKEND.curve_id
        assert curve_order == BACKEND.order

    @pytest.mark.unit
    def test_unknown_backend(self):
        with pytest.raises(ConfigInvalidError):
            load_backend("relic")

    @pytest.mark.unit
    def test_explicit_py_ecc(self):
        backend = load_backend("py_ecc")
        assert backend.curve_id == "BLS12-381"
        assert load_backend("py_ecc") is backend


class TestScalar:

    @pytest.mark.unit
    def test_range(self):
        Scalar(0)
        Scalar(curve_order - 1)
        with pytest.raises(ValueError):
            Scalar(curve_order)
        with pytest.raises(ValueError):
            Scalar(-1)

    @pytest.mark.unit
    def test_bytes(self):
        s = Scalar(123456789)
        assert len(s.to_bytes()) == 32
        assert Scalar.from_bytes(s.to_bytes()) == s
        with pytest.raises(ValueError):
            Scalar.from_bytes(b"\x01" * 31)

    @pytest.mark.unit
    def test_random_scalar(self):
        a = random_scalar(SeededEntropy(3))
        assert a == random_scalar(SeededEntropy(3))
        assert a != random_scalar(SeededEntropy(4))
        assert 0 < a.value < curve_order


class TestGroupElements:

    @pytest.mark.unit
    def test_round_trip_generators(self):
        g1 = G1Element.generator()
        g2 = G2Element.generator()
        assert G1Element.from_bytes(g1.to_bytes()) == g1
        assert G2Element.from_bytes(g2.to_bytes()) == g2

    @pytest.mark.unit
    def test_identity(self):
        z1 = G1Element.identity()
        assert z1.is_identity
        assert not G1Element.generator().is_identity
        assert G2Element.identity().is_identity
        assert scalar_mul_g2(Scalar(0), G2Element.generator()) == G2Element.identity()

    @pytest.mark.unit
    def test_wrong_group_or_length(self):
        with pytest.raises(GroupMembershipError):
            G1Element.from_bytes(b"")
        with pytest.raises(GroupMembershipError):
            G1Element.from_bytes(G1Element.generator().to_bytes()[:-1])
        with pytest.raises(GroupMembershipError):
            G2Element.from_bytes(G1Element.generator().to_bytes())

    @pytest.mark.unit
    def test_garbage_rejected(self):
        with pytest.raises(GroupMembershipError):
            G1Element.from_bytes(b"\xff" * len(G1Element.generator().to_bytes()))

    @pytest.mark.unit
    def test_scalar_mul_matches_addition(self):
        g = G1Element.generator()
        two_g = scalar_mul_g1(Scalar(2), g)
        assert two_g != g
        assert scalar_mul_g1(Scalar(1), g) == g
        assert scalar_mul_g1(Scalar(0), g).is_identity
        assert scalar_mul_g2(Scalar(1), G2Element.generator()) == G2Element.generator()

    @pytest.mark.unit
    def test_hashable(self):
        assert len({G1Element.generator(), G1Element.generator()}) == 1

    @pytest.mark.unit
    @pytest.mark.parametrize("count", [20, pytest.param(1000, marks=pytest.mark.slow)])
    def test_serialization_round_trip_and_injective(self, count):
        rng = SeededEntropy("serialization")
        g1, g2 = G1Element.generator(), G2Element.generator()
        points = [scalar_mul_g1(random_scalar(rng), g1) for _ in range(count)]
        encoded = [p.to_bytes() for p in points]
        assert all(G1Element.from_bytes(e) == p for e, p in zip(encoded, points))
        assert len(set(encoded)) == len(set(points)) == count

        points2 = [scalar_mul_g2(random_scalar(rng), g2) for _ in range(count // 10 or 1)]
        encoded2 = [q.to_bytes() for q in points2]
        assert all(G2Element.from_bytes(e) == q for e, q in zip(encoded2, points2))
        assert len(set(encoded2)) == len(points2)


class TestPyEccEncoding:
    """BLS12-381 压缩编码的具体格式"""

    @pytest.fixture(scope="class")
    def backend(self) -> PyEccBackend:
        return PyEccBackend()

    @pytest.mark.unit
    def test_encoding_sizes(self, backend):
        assert len(backend.encode_g1(backend.g1_generator())) == 48
        assert len(backend.encode_g2(backend.g2_generator())) == 96

    @pytest.mark.unit
    def test_invalid_encoding(self, backend):
        # 未设置压缩标志
        with pytest.raises(GroupMembershipError):
            backend.decode_g1(b"\x00" * 48)
        # x 超出基域
        with pytest.raises(GroupMembershipError):
            backend.decode_g1(b"\x9f" + b"\xff" * 47)
        with pytest.raises(GroupMembershipError):
            backend.decode_g1(b"\x00" * 47)

    @pytest.mark.unit
    def test_identity_round_trip(self, backend):
        for encode, decode, point in (
            (backend.encode_g1, backend.decode_g1, backend.g1_identity()),
            (backend.encode_g2, backend.decode_g2, backend.g2_identity()),
        ):
            assert backend.point_eq(decode(encode(point)), point)

    @pytest.mark.unit
    def test_gt_encoding(self, backend):
        gt = backend.pair(backend.g1_generator(), backend.g2_generator())
        data = backend.encode_gt(gt)
        assert len(data) == 576
        assert backend.encode_gt(backend.decode_gt(data)) == data
        with pytest.raises(ValueError):
            backend.decode_gt(b"\x00" * 575)
        with pytest.raises(ValueError):
            backend.decode_gt(b"\xff" * 576)


class TestHashToCurve:

    @pytest.mark.unit
    def test_deterministic(self):
        assert hash_to_g1(IDENTITY, DomainTag.H1) == hash_to_g1(IDENTITY, "PEPSI-v1-H1")
        assert hash_to_g2(IDENTITY, DomainTag.H2) == hash_to_g2(IDENTITY, DomainTag.H2)

    @pytest.mark.unit
    def test_domain_separation(self):
        assert hash_to_g1(IDENTITY, DomainTag.H1) != hash_to_g1(IDENTITY, DomainTag.H2)

    @pytest.mark.unit
    def test_different_identities(self):
        assert hash_to_g1(IDENTITY, DomainTag.H1) != hash_to_g1(IDENTITY + b"x", DomainTag.H1)

    @pytest.mark.unit
    def test_output_in_subgroup(self):
        point = hash_to_g1(IDENTITY, DomainTag.H1)
        assert not point.is_identity
        assert G1Element.from_bytes(point.to_bytes()) == point

    @pytest.mark.unit
    def test_unknown_domain(self):
        with pytest.raises(ValueError):
            hash_to_g1(IDENTITY, "PEPSI-v2-H1")

    @pytest.mark.unit
    @pytest.mark.parametrize("count", [20, pytest.param(1000, marks=pytest.mark.slow)])
    def test_distinct_identities_give_distinct_points(self, count):
        identities = [f"sensor-{i}".encode() for i in range(count)]
        points = {hash_to_g1(identity, DomainTag.H1) for identity in identities}
        assert len(points) == count
        assert not any(p.is_identity for p in points)


class TestPairing:

    @pytest.mark.unit
    def test_gt_round_trip(self, base_gt):
        assert GTElement.from_bytes(base_gt.to_bytes()) == base_gt

    @pytest.mark.unit
    def test_non_degenerate(self, base_gt):
        assert not base_gt.is_identity

    @pytest.mark.unit
    def test_identity_input(self):
        assert pair(G1Element.identity(), G2Element.generator()).is_identity
        assert pair(G1Element.generator(), G2Element.identity()).is_identity

    @pytest.mark.unit
    def test_bilinear(self, base_gt):
        a, b = Scalar(5), Scalar(11)
        lhs = pair(scalar_mul_g1(a, G1Element.generator()), scalar_mul_g2(b, G2Element.generator()))
        assert lhs == base_gt ** (a.value * b.value)

    @pytest.mark.unit
    @pytest.mark.parametrize("cases", [3, pytest.param(100, marks=pytest.mark.slow)])
    def test_bilinear_random(self, cases):
        rng = SeededEntropy("bilinearity")
        g1, g2 = G1Element.generator(), G2Element.generator()
        for _ in range(cases):
            p = scalar_mul_g1(random_scalar(rng), g1)
            q = scalar_mul_g2(random_scalar(rng), g2)
            a, b = random_scalar(rng), random_scalar(rng)
            lhs = pair(scalar_mul_g1(a, p), scalar_mul_g2(b, q))
            assert lhs == pair(p, q) ** (a.value * b.value)

    @pytest.mark.unit
    def test_scalar_moves_between_groups(self):
        p = hash_to_g1(IDENTITY, DomainTag.H1)
        q = hash_to_g2(IDENTITY, DomainTag.H2)
        z = Scalar(987654321)
        assert pair(scalar_mul_g1(z, p), q) == pair(p, scalar_mul_g2(z, q))

    @pytest.mark.unit
    def test_gt_group_law(self, base_gt):
        assert base_gt * GTElement.identity() == base_gt
        assert base_gt ** curve_order == GTElement.identity()

    @pytest.mark.unit
    def test_gt_rejects_bad_encoding(self):
        with pytest.raises(ValueError):
            GTElement.from_bytes(b"\x00" * 7)


class TestDerivation:

    @pytest.mark.unit
    def test_tag_definition(self, base_gt):
        expected = hashlib.sha256(b"PEPSI-v1-TAG" + base_gt.to_bytes()).digest()[:20]
        assert derive_tag(base_gt).value == expected

    @pytest.mark.unit
    def test_key_definition(self, base_gt):
        hkdf = HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=b"PEPSI-v1-ENC")
        assert derive_key(base_gt).secret == hkdf.derive(base_gt.to_bytes())

    @pytest.mark.unit
    def test_tag_and_key_independent(self, base_gt):
        assert derive_key(base_gt).secret[:20] != derive_tag(base_gt).value

    @pytest.mark.unit
    @pytest.mark.parametrize("count", [50, pytest.param(1000, marks=pytest.mark.slow)])
    def test_tag_and_key_domains_separate(self, base_gt, count):
        tags, keys = set(), set()
        for gt in gt_samples(base_gt, count):
            tag = derive_tag(gt).value
            key = derive_key(gt).secret
            assert key[:20] != tag
            # 换用 ENC 域常量算出的摘要不等于 tag
            assert hashlib.sha256(b"PEPSI-v1-ENC" + gt.to_bytes()).digest()[:20] != tag
            tags.add(tag)
            keys.add(key)
        assert len(tags) == len(keys) == count
        assert not tags & {k[:20] for k in keys}

    @pytest.mark.unit
    @pytest.mark.parametrize("count", [200, pytest.param(10_000, marks=pytest.mark.slow)])
    def test_no_tag_collisions(self, base_gt, count):
        tags = {derive_tag(gt) for gt in gt_samples(base_gt, count)}
        assert len(tags) == count

    @pytest.mark.unit
    def test_different_inputs(self, base_gt):
        other = base_gt * base_gt
        assert derive_tag(other) != derive_tag(base_gt)
        assert derive_key(other) != derive_key(base_gt)

    @pytest.mark.unit
    def test_symmetric_key_redacted(self, base_gt):
        key = derive_key(base_gt)
        assert key.secret.hex() not in repr(key)
        with pytest.raises(ValueError):
            SymmetricKey(b"short")
