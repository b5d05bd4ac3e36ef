"""
PEPSI 服务层

- transport:  模拟网络运营商（httpx.MockTransport 后的 SP）与异步客户端
- simulation: 端到端场景 + 明文 oracle
- bench:      每报告开销与 SP 规模基准
"""

from importlib import import_module
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .bench import BenchResult, MatchBenchPoint, bench_match, bench_report
    from .simulation import ScenarioConfig, ScenarioResult, plaintext_oracle, run_scenario
    from .transport import NetworkClient, NetworkOperator

_EXPORTS = {
    "transport": ("NetworkOperator", "NetworkClient"),
    "simulation": ("ScenarioConfig", "ScenarioResult", "run_scenario", "plaintext_oracle"),
    "bench": ("BenchResult", "MatchBenchPoint", "bench_report", "bench_match"),
}
_MODULE_BY_NAME = {name: module for module, names in _EXPORTS.items() for name in names}


def __getattr__(name: str) -> Any:
    module = _MODULE_BY_NAME.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(import_module(f".{module}", __name__), name)


__all__ = sorted(_MODULE_BY_NAME)
