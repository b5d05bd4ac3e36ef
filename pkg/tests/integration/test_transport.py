"""
模拟网络运营商集成测试

SP 挂在 httpx.MockTransport 后；检查帧原样转发、错误还原、重试与无身份元数据。
"""

import httpx
import pytest

from pepsi.base import MalformedReportError, MalformedSubscriptionError, TransportError
from pepsi.core.pairing import SeededEntropy
from pepsi.parties.mobile_node import Measurement, make_report
from pepsi.parties.querier import Querier
from pepsi.services.transport import NetworkClient, NetworkOperator

pytestmark = pytest.mark.integration

TAG_A = b"\xaa" * 20
TAG_B = b"\xbb" * 20


class TestOperatorRoutes:

    async def test_subscribe_publish_fetch(self, make_subscription_frame, make_frame):
        operator = NetworkOperator()
        async with NetworkClient(operator) as net:
            sid = await net.subscribe(make_subscription_frame(TAG_A, b"q-1"))
            assert sid == 1
            frame = make_frame(TAG_A)
            assert await net.publish(frame) == 1
            assert await net.publish(make_frame(TAG_B)) == 0
            (delivery,) = await net.fetch_deliveries(b"q-1")
            assert delivery.subscription_id == sid
            assert delivery.report == frame
            assert await net.fetch_deliveries(b"q-1") == []

    async def test_unsubscribe(self, make_subscription_frame, make_frame):
        async with NetworkClient(NetworkOperator()) as net:
            sid = await net.subscribe(make_subscription_frame(TAG_A))
            assert await net.unsubscribe(sid) is True
            assert await net.unsubscribe(sid) is False
            assert await net.publish(make_frame(TAG_A)) == 0

    async def test_stats(self, make_subscription_frame, make_frame):
        async with NetworkClient(NetworkOperator()) as net:
            await net.subscribe(make_subscription_frame(TAG_A))
            await net.publish(make_frame(TAG_A))
            stats = await net.stats()
            assert (stats.subs_active, stats.reports_seen, stats.matches_made) == (1, 1, 1)

    async def test_protocol_errors_are_typed(self, make_subscription_frame, make_frame):
        async with NetworkClient(NetworkOperator()) as net:
            with pytest.raises(MalformedReportError):
                await net.publish(make_frame(TAG_A)[:-1])
            with pytest.raises(MalformedSubscriptionError):
                await net.subscribe(make_subscription_frame(TAG_A)[:10])

    async def test_unknown_route(self):
        async with NetworkClient(NetworkOperator()) as net:
            with pytest.raises(TransportError):
                await net._request("GET", "/nowhere")


class TestRetries:

    async def test_recovers_from_transient_failures(self, make_subscription_frame):
        operator = NetworkOperator()
        operator.inject_failures(2)
        async with NetworkClient(operator, max_retries=3, backoff=0) as net:
            assert await net.subscribe(make_subscription_frame(TAG_A)) == 1

    async def test_gives_up(self, make_subscription_frame):
        operator = NetworkOperator()
        operator.inject_failures(10)
        async with NetworkClient(operator, max_retries=2, backoff=0) as net:
            with pytest.raises(TransportError) as exc_info:
                await net.subscribe(make_subscription_frame(TAG_A))
        assert exc_info.value.details["last_error"] == "HTTP 503"


class TestAnonymity:

    async def test_no_identity_metadata(self, make_frame, mocker):
        operator = NetworkOperator()
        seen: list[httpx.Request] = []
        original = operator.handle

        def spy(request: httpx.Request) -> httpx.Response:
            seen.append(request)
            return original(request)

        mocker.patch.object(operator, "handle", side_effect=spy)
        async with NetworkClient(operator) as net:
            await net.publish(make_frame(TAG_A))
        (request,) = seen
        allowed = {"host", "accept", "accept-encoding", "connection", "user-agent", "content-length", "content-type"}
        assert set(request.headers.keys()) <= allowed
        assert request.headers["content-type"] == "application/octet-stream"


class TestParallelPublish:

    async def test_parallel_execute(self, make_subscription_frame, make_frame):
        async with NetworkClient(NetworkOperator()) as net:
            await net.subscribe(make_subscription_frame(TAG_A, b"q"))
            frames = [make_frame(TAG_A) for _ in range(20)]
            results = await net.parallel_execute([net.publish(f) for f in frames], max_concurrent=4)
            assert results == [1] * 20
            delivered = {d.report for d in await net.fetch_deliveries(b"q")}
            assert delivered == set(frames)


class TestRealParties:

    async def test_node_to_querier_over_network(self, node_key, querier_key):
        querier = Querier([querier_key], endpoint="q-1")
        async with NetworkClient(NetworkOperator()) as net:
            for sub in querier.subscriptions():
                await net.subscribe(sub)
            report = make_report(node_key, Measurement(b"74 F"), rng=SeededEntropy(5))
            assert await net.publish(report) == 1
            (delivery,) = await net.fetch_deliveries(querier.endpoint)
        _, measurement = querier.decrypt(delivery)
        assert measurement.payload == b"74 F"
