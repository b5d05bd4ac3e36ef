"""
PEPSI 命令行

Usage:
    pepsi ra setup --out ra.key [--seed 42]
    pepsi ra register-node --master ra.key -k Temp -k "Irvine, CA" --id node-1 --out node.key
    pepsi ra register-querier --master ra.key -k Temp -k "Irvine, CA" --id q-1 --out q.key
    pepsi node report --key node.key --payload "74 F" --out report.bin
    pepsi querier subscribe --key q.key --endpoint q-1 --out sub.bin
    pepsi querier decrypt --key q.key --in report.bin
    pepsi sp run --subscriptions sub.bin --reports report.bin [--out-dir deliveries/]
    pepsi sim run --config scenario.toml
    pepsi bench report [--trials 100]
    pepsi bench match [--sizes 10000 100000]

退出码: 0 成功, 1 用法错误, 2 协议/格式错误
结果以 key=value 行输出到 stdout，诊断信息输出到 stderr。
"""

import argparse
import os
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import TYPE_CHECKING, TypeVar

from loguru import logger

from pepsi import __version__
from pepsi.base import PepsiError, UsageError

if TYPE_CHECKING:
    from pepsi.core.pairing import EntropySource
    from pepsi.parties.registration_authority import NodeKey, QuerierKey

_KeyT = TypeVar("_KeyT", "NodeKey", "QuerierKey")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PROTOCOL = 2

Handler = Callable[[argparse.Namespace], int]


class _Parser(argparse.ArgumentParser):
    """用法错误统一以退出码 1 结束"""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def configure_logging(verbose: bool = False) -> None:
    """单一 stderr sink；-v 为 DEBUG，否则取 PEPSI_LOG_LEVEL（默认 WARNING）"""
    level = "DEBUG" if verbose else os.environ.get("PEPSI_LOG_LEVEL", "WARNING").upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format="<level>{level: <8}</level> {message}")


def _emit(*lines: str) -> None:
    for line in lines:
        print(line)


def _passphrase(args: argparse.Namespace) -> str:
    passphrase = args.passphrase if args.passphrase is not None else os.environ.get("PEPSI_RA_PASSPHRASE")
    if passphrase is None:
        logger.warning("No passphrase given; master key file is sealed under an empty passphrase")
        return ""
    return passphrase


def _entropy(seed: int | None) -> "EntropySource":
    from pepsi.core.pairing import SeededEntropy, SystemEntropy

    return SeededEntropy(seed) if seed is not None else SystemEntropy()


# ============ ra ============

def _cmd_ra_setup(args: argparse.Namespace) -> int:
    from pepsi.parties.registration_authority import RegistrationAuthority

    rng = _entropy(args.seed)
    ra = RegistrationAuthority.create(rng=rng)
    ra.save(args.out, _passphrase(args), rng=rng, iterations=args.kdf_iterations)
    _emit(f"master={args.out}", f"curve={ra.params.curve_id}", f"protocol_version={ra.params.protocol_version}")
    return EXIT_OK


def _register(args: argparse.Namespace, role: str) -> int:
    from pepsi.core.labels import canonicalize
    from pepsi.parties.registration_authority import RegistrationAuthority, RegistrationLedger, export_key

    label = canonicalize(args.keyword)
    ledger = RegistrationLedger(args.ledger) if args.ledger else None
    ra = RegistrationAuthority.load(args.master, _passphrase(args), ledger=ledger)
    if role == "node":
        key = ra.register_node(label, args.id)
    else:
        key = ra.register_querier(label, args.id)
    export_key(key, args.out)
    _emit(f"key={args.out}", f"role={role}", f"label={label}")
    return EXIT_OK


def _cmd_ra_register_node(args: argparse.Namespace) -> int:
    return _register(args, "node")


def _cmd_ra_register_querier(args: argparse.Namespace) -> int:
    return _register(args, "querier")


def _load_key(path: str, expected: type[_KeyT]) -> _KeyT:
    from pepsi.parties.registration_authority import import_key

    key = import_key(path)
    if not isinstance(key, expected):
        raise UsageError(f"{path} does not hold a {expected.__name__}", {"path": path})
    return key


# ============ node / querier ============

def _cmd_node_report(args: argparse.Namespace) -> int:
    from pepsi.parties.mobile_node import Measurement, make_report
    from pepsi.parties.registration_authority import NodeKey

    nk = _load_key(args.key, NodeKey)
    payload = Path(args.payload_file).read_bytes() if args.payload_file else args.payload.encode("utf-8")
    report = make_report(nk, Measurement(payload), rng=_entropy(args.seed))
    frame = report.to_bytes()
    Path(args.out).write_bytes(frame)
    _emit(f"report={args.out}", f"tag={report.tag.hex()}", f"bytes={len(frame)}")
    return EXIT_OK


def _cmd_querier_subscribe(args: argparse.Namespace) -> int:
    from pepsi.parties.querier import make_subscription
    from pepsi.parties.registration_authority import QuerierKey

    qk = _load_key(args.key, QuerierKey)
    sub = make_subscription(qk, args.endpoint)
    Path(args.out).write_bytes(sub.to_bytes())
    _emit(f"subscription={args.out}", f"tag={sub.tag.hex()}")
    return EXIT_OK


def _cmd_querier_decrypt(args: argparse.Namespace) -> int:
    from pepsi.core.wire import MAGIC_REPORT, Delivery
    from pepsi.parties.querier import decrypt_report
    from pepsi.parties.registration_authority import QuerierKey

    qk = _load_key(args.key, QuerierKey)
    frame = Path(args.input).read_bytes()
    if not frame.startswith(MAGIC_REPORT):
        frame = Delivery.from_bytes(frame).report
    measurement = decrypt_report(qk, frame)
    if args.raw:
        sys.stdout.buffer.write(measurement.payload)
        sys.stdout.buffer.flush()
    else:
        _emit(f"label={qk.label}", f"measurement={measurement.text}")
    return EXIT_OK


# ============ sp ============

def _cmd_sp_run(args: argparse.Namespace) -> int:
    from pepsi.parties.service_provider import SubscriptionTable

    table = SubscriptionTable()
    for path in args.subscriptions:
        subscription_id = table.subscribe(Path(path).read_bytes())
        _emit(f"subscription={subscription_id}:{path}")
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for path in args.reports:
        for delivery in table.match_report(Path(path).read_bytes()):
            _emit(f"delivery={delivery.subscription_id}:{path}")
            if out_dir is not None:
                target = out_dir / f"{delivery.subscription_id}-{Path(path).name}"
                target.write_bytes(delivery.to_bytes())
    _emit(*(f"{name}={value}" for name, value in table.stats().to_dict().items()))
    return EXIT_OK


# ============ sim / bench ============

def _cmd_sim_run(args: argparse.Namespace) -> int:
    from pepsi.services.simulation import ScenarioConfig, run_scenario

    cfg = ScenarioConfig.from_toml(args.config)
    result = run_scenario(cfg)
    _emit(*result.to_lines())
    if not result.passed:
        logger.error("Scenario deliveries diverge from the plaintext oracle")
        return EXIT_PROTOCOL
    return EXIT_OK


def _cmd_bench_report(args: argparse.Namespace) -> int:
    from pepsi.services.bench import bench_report

    result = bench_report(trials=args.trials, payload_size=args.payload_size, cold=not args.warm, seed=args.seed)
    _emit(*result.to_lines())
    return EXIT_OK


def _cmd_bench_match(args: argparse.Namespace) -> int:
    from pepsi.services.bench import bench_match

    points = bench_match(sizes=args.sizes, probes=args.probes, seed=args.seed)
    for point in points:
        _emit(f"subscriptions={point.subscriptions} probes={point.probes} mean_us={point.mean_us:.3f}")
    if len(points) >= 2 and points[0].mean_us > 0:
        _emit(f"ratio={points[-1].mean_us / points[0].mean_us:.3f}")
    return EXIT_OK


# ============ 解析器 ============

def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


U64_MAX = 2**64 - 1


def _u64(raw: str) -> int:
    """种子参数：0 .. 2**64-1"""
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {raw!r}") from None
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_passphrase(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--passphrase", help="Master key passphrase (default: $PEPSI_RA_PASSPHRASE)")


def _add_label(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-k", "--keyword", action="append", required=True, help="Label keyword (repeat for each keyword)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pepsi", description="Privacy-enhanced participatory sensing toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    groups = parser.add_subparsers(dest="group", required=True)

    ra = groups.add_parser("ra", help="Registration authority").add_subparsers(dest="command", required=True)
    p = ra.add_parser("setup", help="Generate a master secret")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--kdf-iterations", type=_positive_int, default=200_000)
    _add_passphrase(p)
    p.set_defaults(handler=_cmd_ra_setup)
    for name, handler in (("register-node", _cmd_ra_register_node), ("register-querier", _cmd_ra_register_querier)):
        p = ra.add_parser(name, help=f"Issue a {name.split('-')[1]} key for a label")
        p.add_argument("--master", required=True)
        p.add_argument("--id", required=True, help="Party id recorded in the ledger")
        p.add_argument("--out", required=True)
        p.add_argument("--ledger", help="Append-only registration ledger file")
        _add_label(p)
        _add_passphrase(p)
        p.set_defaults(handler=handler)

    node = groups.add_parser("node", help="Mobile node").add_subparsers(dest="command", required=True)
    p = node.add_parser("report", help="Tag and encrypt a measurement")
    p.add_argument("--key", required=True)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--payload")
    source.add_argument("--payload-file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_u64, help="Deterministic nonce stream")
    p.set_defaults(handler=_cmd_node_report)

    querier = groups.add_parser("querier", help="Querier").add_subparsers(dest="command", required=True)
    p = querier.add_parser("subscribe", help="Build a subscription frame")
    p.add_argument("--key", required=True)
    p.add_argument("--endpoint", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_querier_subscribe)
    p = querier.add_parser("decrypt", help="Decrypt a report or delivery frame")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--raw", action="store_true", help="Write the payload bytes to stdout")
    p.set_defaults(handler=_cmd_querier_decrypt)

    sp = groups.add_parser("sp", help="Service provider").add_subparsers(dest="command", required=True)
    p = sp.add_parser("run", help="Match report frames against subscription frames")
    p.add_argument("--subscriptions", nargs="*", default=[])
    p.add_argument("--reports", nargs="*", default=[])
    p.add_argument("--out-dir")
    p.set_defaults(handler=_cmd_sp_run)

    sim = groups.add_parser("sim", help="End-to-end simulation").add_subparsers(dest="command", required=True)
    p = sim.add_parser("run", help="Run a scenario against the plaintext oracle")
    p.add_argument("--config", required=True)
    p.set_defaults(handler=_cmd_sim_run)

    bench = groups.add_parser("bench", help="Benchmarks").add_subparsers(dest="command", required=True)
    p = bench.add_parser("report", help="Per-report cost")
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--payload-size", type=_positive_int, default=16)
    p.add_argument("--warm", action="store_true", help="Reuse the cached shared secret")
    p.add_argument("--seed", type=_u64, default=0)
    p.set_defaults(handler=_cmd_bench_report)
    p = bench.add_parser("match", help="Service provider match latency by table size")
    p.add_argument("--sizes", type=_positive_int, nargs="+", default=[10_000, 100_000])
    p.add_argument("--probes", type=_positive_int, default=1_000)
    p.add_argument("--seed", type=_u64, default=0)
    p.set_defaults(handler=_cmd_bench_match)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.verbose)

    handler: Handler = args.handler
    try:
        return handler(args)
    except PepsiError as e:
        logger.error(str(e))
        return e.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        logger.error(f"Cannot access {e.filename}: {e.strerror}")
        return EXIT_USAGE
    except UnicodeDecodeError as e:
        logger.error(f"Input is not valid UTF-8: {e}")
        return EXIT_USAGE


cli = main


def run() -> None:
    """console script 入口"""
    sys.exit(main())


if __name__ == "__main__":
    run()
