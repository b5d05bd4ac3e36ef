#!/usr/bin/env python
"""
生成回归用的 golden 向量

Usage:
    python scripts/make_golden_vectors.py            # 把当前曲线的向量合并进 tests/data/golden_vectors.json
    python scripts/make_golden_vectors.py --check    # 与已有文件比对，不一致时退出码 1

向量:
- identity / derivation / frame: 与配对后端无关的已知答案
  （固定 576 字节 GT 编码 → tag / key，固定 nonce 种子下的完整报告帧）
- curves.<curve-id>.unit_master: z = 1 时 ["irvine, ca", "temp"] 的节点密钥、tag 与对称密钥
- curves.<curve-id>.end_to_end:  固定种子的 RA / 节点 nonce 流下的密钥文件与报告帧

曲线相关的部分按 curve-id 分节，两个后端的向量可以并存于同一文件。
"""

import argparse
import json
import sys
from pathlib import Path

from pepsi.core.labels import Label, encode_identity
from pepsi.core.pairing import (
    CURVE_ID,
    Scalar,
    SeededEntropy,
    derive_key,
    derive_tag,
    key_from_gt_bytes,
    tag_from_gt_bytes,
)
from pepsi.parties.mobile_node import Measurement, make_report, node_shared_secret, seal
from pepsi.parties.registration_authority import (
    MasterSecret,
    RegistrationAuthority,
    encode_key,
    register_node,
)

OUTPUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_vectors.json"

KEYWORDS = ["irvine, ca", "temp"]
RA_SEED = 2024
NONCE_SEED = 2025
PAYLOAD = "74 F"

# BLS12-381 Fq12 单位元的 12 × 48 字节编码
FIXED_GT = (b"\x00" * 47 + b"\x01" + b"\x00" * 48 * 11)


def build_common() -> dict:
    label = Label(tuple(KEYWORDS))
    tag = tag_from_gt_bytes(FIXED_GT)
    key = key_from_gt_bytes(FIXED_GT)
    report = seal(tag, key, Measurement.from_text(PAYLOAD), SeededEntropy(NONCE_SEED))
    return {
        "identity": {"keywords": KEYWORDS, "hex": encode_identity(label).hex()},
        "derivation": {"gt": FIXED_GT.hex(), "tag": tag.hex(), "key": key.secret.hex()},
        "frame": {
            "gt": FIXED_GT.hex(),
            "nonce_seed": NONCE_SEED,
            "payload": PAYLOAD,
            "nonce": report.nonce.hex(),
            "report": report.to_bytes().hex(),
        },
    }


def build_curve() -> dict:
    label = Label(tuple(KEYWORDS))

    unit_key = register_node(MasterSecret(Scalar(1)), label, "golden")
    unit_shared = node_shared_secret(unit_key)

    ra = RegistrationAuthority.create(rng=SeededEntropy(RA_SEED))
    nk = ra.register_node(label, "golden-node")
    qk = ra.register_querier(label, "golden-querier")
    report = make_report(nk, Measurement.from_text(PAYLOAD), rng=SeededEntropy(NONCE_SEED), cache=False)

    return {
        "unit_master": {
            "keywords": KEYWORDS,
            "node_key": unit_key.key.to_bytes().hex(),
            "tag": derive_tag(unit_shared).hex(),
            "key": derive_key(unit_shared).secret.hex(),
        },
        "end_to_end": {
            "keywords": KEYWORDS,
            "ra_seed": RA_SEED,
            "nonce_seed": NONCE_SEED,
            "payload": PAYLOAD,
            "node_key_file": encode_key(nk).hex(),
            "querier_key_file": encode_key(qk).hex(),
            "report": report.to_bytes().hex(),
        },
    }


def build_vectors(existing: dict | None = None) -> dict:
    """已有文件中其它曲线的分节原样保留"""
    vectors = build_common()
    curves = dict((existing or {}).get("curves", {}))
    curves[CURVE_ID] = build_curve()
    vectors["curves"] = curves
    return vectors


def main() -> int:
    parser = argparse.ArgumentParser(description="Generate golden regression vectors")
    parser.add_argument("--check", action="store_true", help="Compare against the committed file")
    parser.add_argument("--out", type=Path, default=OUTPUT)
    args = parser.parse_args()

    existing = json.loads(args.out.read_text(encoding="utf-8")) if args.out.exists() else None
    vectors = build_vectors(existing)
    if args.check:
        if existing is None:
            print(f"{args.out} does not exist", file=sys.stderr)
            return 1
        if existing != vectors:
            print(f"Golden vectors for {CURVE_ID} differ from the committed file", file=sys.stderr)
            return 1
        print(f"Golden vectors match ({CURVE_ID})")
        return 0

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(vectors, indent=2) + "\n", encoding="utf-8")
    print(f"Wrote {args.out} ({CURVE_ID})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
