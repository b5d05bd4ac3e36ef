"""
模拟网络运营商 (Network Operator)

Service Provider 挂在 httpx.MockTransport 之后，全程不打开真实套接字：

    POST   /subscriptions            body = "PEPS" 订阅帧      → {"subscription_id": n}
    DELETE /subscriptions/{id}                                → {"removed": bool}
    POST   /reports                  body = "PEPR" 报告帧      → {"deliveries": k}
    GET    /mailboxes/{endpoint-hex}                          → {"deliveries": [hex, ...]}（取走）
    GET    /stats                                             → 计数器

运营商只转发帧字节，不附带任何身份元数据（请求头一律丢弃）。
协议错误以 JSON 错误体返回 {"error": 类名, "message", "details"}，客户端还原为对应的 PepsiError。

特性（客户端）：
- 全异步，懒加载 httpx.AsyncClient
- 5xx 自动重试（指数退避）
- 并发受限的 parallel_execute
"""

import asyncio
import threading
from collections import defaultdict
from collections.abc import Coroutine
from typing import Any, Self

import httpx
from loguru import logger

from pepsi.base import ERRORS_BY_NAME, JSONData, PepsiError, TransportError
from pepsi.core.wire import Delivery, Report, Subscription
from pepsi.parties.service_provider import ProviderStats, SubscriptionTable

BASE_URL = "http://sp.pepsi.invalid"
FRAME_CONTENT_TYPE = "application/octet-stream"


# ============ 服务端（运营商 + SP） ============

class NetworkOperator:
    """
    进程内网络：把帧原样交给 SP，把投递放入各 endpoint 的邮箱

    使用方法:
        operator = NetworkOperator()
        async with NetworkClient(operator) as net:
            sid = await net.subscribe(sub)
    """

    def __init__(self, table: SubscriptionTable | None = None) -> None:
        self.table = table or SubscriptionTable()
        self._mailboxes: dict[bytes, list[bytes]] = defaultdict(list)
        self._mailbox_lock = threading.Lock()
        self._pending_failures = 0
        self.frames_carried = 0

    def inject_failures(self, count: int) -> None:
        """接下来 count 个请求返回 503（用于演练重试）"""
        self._pending_failures = count

    @property
    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)

    def handle(self, request: httpx.Request) -> httpx.Response:
        if self._pending_failures > 0:
            self._pending_failures -= 1
            return httpx.Response(503, json={"error": "TransportError", "message": "operator unavailable"})
        try:
            return self._route(request)
        except PepsiError as e:
            return httpx.Response(
                422, json={"error": type(e).__name__, "message": e.message, "details": e.details}
            )

    def _route(self, request: httpx.Request) -> httpx.Response:
        parts = request.url.path.strip("/").split("/")
        match request.method, parts:
            case "POST", ["subscriptions"]:
                subscription_id = self.table.subscribe(request.content)
                return httpx.Response(201, json={"subscription_id": subscription_id})
            case "DELETE", ["subscriptions", raw_id] if raw_id.isdigit():
                return httpx.Response(200, json={"removed": self.table.unsubscribe(int(raw_id))})
            case "POST", ["reports"]:
                self.frames_carried += 1
                deliveries = self.table.match_report(request.content)
                with self._mailbox_lock:
                    for delivery in deliveries:
                        self._mailboxes[delivery.endpoint].append(delivery.to_bytes())
                return httpx.Response(200, json={"deliveries": len(deliveries)})
            case "GET", ["mailboxes", endpoint_hex]:
                try:
                    endpoint = bytes.fromhex(endpoint_hex)
                except ValueError:
                    return httpx.Response(400, json={"error": "TransportError", "message": "bad endpoint"})
                with self._mailbox_lock:
                    frames = self._mailboxes.pop(endpoint, [])
                return httpx.Response(200, json={"deliveries": [f.hex() for f in frames]})
            case "GET", ["stats"]:
                return httpx.Response(200, json=self.table.stats().to_dict())
        return httpx.Response(404, json={"error": "TransportError", "message": f"no route {request.url.path}"})


# ============ 客户端 ============

class NetworkClient:
    """
    经模拟网络与 SP 通信的异步客户端

    只发送帧字节与 Content-Type，不携带任何节点或查询方标识。
    """

    __slots__ = ("operator", "max_retries", "backoff", "timeout", "_client", "_client_lock")

    def __init__(
        self,
        operator: NetworkOperator,
        max_retries: int = 3,
        backoff: float = 0.01,
        timeout: float = 30,
    ) -> None:
        self.operator = operator
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout

        # 延迟初始化的 httpx 客户端
        self._client: httpx.AsyncClient | None = None
        self._client_lock = asyncio.Lock()

    async def _get_client(self) -> httpx.AsyncClient:
        """获取或创建 httpx 异步客户端（懒加载）"""
        if self._client is None or self._client.is_closed:
            async with self._client_lock:
                if self._client is None or self._client.is_closed:
                    self._client = httpx.AsyncClient(
                        base_url=BASE_URL,
                        transport=self.operator.transport,
                        timeout=httpx.Timeout(self.timeout),
                    )
        return self._client

    async def close(self) -> None:
        if self._client and not self._client.is_closed:
            await self._client.aclose()
            self._client = None

    async def __aenter__(self) -> Self:
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb) -> None:
        await self.close()

    async def _request(self, method: str, endpoint: str, content: bytes | None = None) -> JSONData:
        """执行请求（5xx 与传输异常指数退避重试）

        Raises:
            PepsiError 子类: 服务端返回的协议错误
            TransportError: 重试耗尽
        """
        client = await self._get_client()
        headers = {"Content-Type": FRAME_CONTENT_TYPE} if content is not None else {}
        last_error: str | None = None

        for attempt in range(self.max_retries + 1):
            try:
                response = await client.request(method, endpoint, content=content, headers=headers)
            except httpx.RequestError as e:
                last_error = str(e)
                wait_time = min(self.backoff * 2 ** attempt, 1.0)
                logger.warning(f"Transport error: {e}, retrying in {wait_time}s")
                await asyncio.sleep(wait_time)
                continue

            if response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                wait_time = min(self.backoff * 2 ** attempt, 1.0)
                logger.warning(f"Operator error {response.status_code}, retrying in {wait_time}s (attempt {attempt + 1})")
                await asyncio.sleep(wait_time)
                continue

            body = response.json() if response.content else {}
            if not response.is_success:
                error_cls = ERRORS_BY_NAME.get(body.get("error", ""), TransportError)
                raise error_cls(body.get("message", f"request failed: {endpoint}"), body.get("details", {}))
            return body

        raise TransportError(
            f"Request failed after {self.max_retries + 1} attempts",
            {"endpoint": endpoint, "last_error": last_error},
        )

    # ============ SP 操作 ============

    async def subscribe(self, sub: Subscription | bytes) -> int:
        frame = sub.to_bytes() if isinstance(sub, Subscription) else sub
        body = await self._request("POST", "/subscriptions", content=frame)
        return int(body["subscription_id"])

    async def unsubscribe(self, subscription_id: int) -> bool:
        body = await self._request("DELETE", f"/subscriptions/{subscription_id}")
        return bool(body["removed"])

    async def publish(self, report: Report | bytes) -> int:
        """发布报告，返回 SP 产生的投递数"""
        frame = report.to_bytes() if isinstance(report, Report) else report
        body = await self._request("POST", "/reports", content=frame)
        return int(body["deliveries"])

    async def fetch_deliveries(self, endpoint: bytes) -> list[Delivery]:
        body = await self._request("GET", f"/mailboxes/{endpoint.hex()}")
        deliveries = []
        for frame_hex in body["deliveries"]:
            delivery = Delivery.from_bytes(bytes.fromhex(frame_hex))
            deliveries.append(Delivery(delivery.subscription_id, delivery.report, endpoint))
        return deliveries

    async def stats(self) -> ProviderStats:
        return ProviderStats(**await self._request("GET", "/stats"))

    # ============ 并行执行 ============

    @staticmethod
    async def parallel_execute(
        tasks: list[Coroutine[Any, Any, Any]],
        max_concurrent: int = 10,
    ) -> list[Any]:
        """
        并行执行多个协程（带并发限制）

        Returns:
            结果列表（按任务顺序，异常作为结果返回）

        Example:
            tasks = [net.publish(frame) for frame in frames]
            results = await net.parallel_execute(tasks, max_concurrent=8)
        """
        semaphore = asyncio.Semaphore(max_concurrent)

        async def limited_task(coro: Coroutine) -> Any:
            async with semaphore:
                return await coro

        return await asyncio.gather(
            *[limited_task(task) for task in tasks],
            return_exceptions=True,
        )
