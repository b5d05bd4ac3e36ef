"""
Unit tests for the querier subscription and decryption pipeline
"""
from types import SimpleNamespace

import pytest

from pepsi.base import AuthenticationFailedError, MalformedReportError, VersionMismatchError
from pepsi.core.labels import encode_identity
from pepsi.core.pairing import CURVE_ID, SeededEntropy, hash_to_g1, hash_to_g2, pair
from pepsi.core.wire import Delivery, Report, Subscription
from pepsi.parties.mobile_node import Measurement, cached_node_secret, make_report
from pepsi.parties.querier import (
    Querier,
    decrypt_report,
    make_subscription,
    querier_shared_secret,
)
from pepsi.parties.registration_authority import register_querier


@pytest.fixture
def report(node_key) -> Report:
    return make_report(node_key, Measurement(b"74 F"), rng=SeededEntropy(77))


class TestSharedSecret:

    @pytest.mark.unit
    def test_unit_master(self, unit_master, temp_label):
        qk = register_querier(unit_master, temp_label, "q")
        identity = encode_identity(temp_label)
        expected = pair(hash_to_g1(identity, "PEPSI-v1-H1"), hash_to_g2(identity, "PEPSI-v1-H2"))
        assert querier_shared_secret(qk) == expected

    @pytest.mark.unit
    def test_equals_node_side(self, node_key, querier_key):
        assert querier_shared_secret(querier_key) == cached_node_secret(node_key)

    @pytest.mark.unit
    def test_independent_authorities_differ(self, querier_key, other_ra, temp_label):
        foreign = other_ra.register_querier(temp_label, "q")
        assert querier_shared_secret(foreign) != querier_shared_secret(querier_key)

    @pytest.mark.unit
    def test_foreign_params_rejected(self, querier_key):
        with pytest.raises(VersionMismatchError):
            querier_shared_secret(querier_key, SimpleNamespace(protocol_version=2, curve_id=CURVE_ID))
        with pytest.raises(VersionMismatchError):
            querier_shared_secret(querier_key, SimpleNamespace(protocol_version=1, curve_id="MNT224"))


class TestSubscription:

    @pytest.mark.unit
    def test_tag_matches_reports(self, querier_key, report):
        assert make_subscription(querier_key, b"q-1").tag == report.tag

    @pytest.mark.unit
    def test_deterministic(self, querier_key):
        assert make_subscription(querier_key) == make_subscription(querier_key)

    @pytest.mark.unit
    def test_frame_is_tag_plus_endpoint(self, querier_key):
        frame = make_subscription(querier_key, "q-1").to_bytes()
        assert len(frame) == 4 + 1 + 20 + 2 + len(b"q-1")

    @pytest.mark.unit
    def test_no_label_bytes_leak(self, querier_key, temp_label):
        frame = make_subscription(querier_key, b"").to_bytes()
        for keyword in temp_label.keywords:
            assert keyword.encode() not in frame
        assert encode_identity(temp_label) not in frame


class TestDecryptReport:

    @pytest.mark.unit
    def test_round_trip(self, querier_key, report):
        assert decrypt_report(querier_key, report).payload == b"74 F"
        assert decrypt_report(querier_key, report.to_bytes()).payload == b"74 F"

    @pytest.mark.unit
    def test_wrong_label(self, humidity_querier_key, report):
        with pytest.raises(AuthenticationFailedError):
            decrypt_report(humidity_querier_key, report)

    @pytest.mark.unit
    def test_flipped_ciphertext_byte(self, querier_key, report):
        frame = bytearray(report.to_bytes())
        frame[-5] ^= 0x01
        with pytest.raises(AuthenticationFailedError):
            decrypt_report(querier_key, bytes(frame))

    @pytest.mark.unit
    def test_retagged_report_rejected(self, querier_key, humidity_node_key, report):
        other_tag = make_report(humidity_node_key, Measurement(b"x"), rng=SeededEntropy(1)).tag
        forged = Report(other_tag, report.nonce, report.ciphertext)
        with pytest.raises(AuthenticationFailedError):
            decrypt_report(querier_key, forged)

    @pytest.mark.unit
    def test_malformed_frame(self, querier_key, report):
        with pytest.raises(MalformedReportError):
            decrypt_report(querier_key, report.to_bytes()[:-1])


class TestQuerier:

    @pytest.mark.unit
    def test_routes_by_tag(self, querier_key, humidity_querier_key, report, temp_label):
        querier = Querier([humidity_querier_key, querier_key], endpoint="q-1")
        label, measurement = querier.decrypt(report)
        assert label == temp_label
        assert measurement.payload == b"74 F"

    @pytest.mark.unit
    def test_one_subscription_per_key(self, querier_key, humidity_querier_key):
        querier = Querier([querier_key, humidity_querier_key], endpoint=b"q-1")
        subs = querier.subscriptions()
        assert len(subs) == 2
        assert all(isinstance(s, Subscription) and s.endpoint == b"q-1" for s in subs)
        assert len(querier.labels) == 2

    @pytest.mark.unit
    def test_decrypts_delivery(self, querier_key, report):
        delivery = Delivery(1, report.to_bytes())
        _, measurement = Querier([querier_key]).decrypt(delivery)
        assert measurement.payload == b"74 F"

    @pytest.mark.unit
    def test_unknown_tag(self, humidity_querier_key, report):
        with pytest.raises(AuthenticationFailedError):
            Querier([humidity_querier_key]).decrypt(report)

    @pytest.mark.unit
    def test_trial_decrypt(self, querier_key, humidity_querier_key, report, temp_label):
        querier = Querier([humidity_querier_key, querier_key])
        opened, attempts = querier.trial_decrypt(report)
        assert opened is not None
        assert opened[0] == temp_label
        assert attempts == 2

    @pytest.mark.unit
    def test_trial_decrypt_miss(self, humidity_querier_key, report):
        opened, attempts = Querier([humidity_querier_key]).trial_decrypt(report)
        assert opened is None
        assert attempts == 1
