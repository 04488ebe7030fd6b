"""Command-line surface.

Thin argument-parsing shims over the library; all real work happens in
the core modules. Exit codes are a stable scripting contract:

  0  success
  1  usage or validation error (bad flags, bad geometry)
  2  I/O failure or malformed input file (unparseable image/key/batch)
  3  a requested check failed
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .image import (
    FormatError,
    load_cifar10_batch,
    load_ppm,
    resize_nearest,
    save_ppm,
)
from .keys import (
    KeyFormatError,
    SplitMix64,
    fisher_yates,
    generate_key,
    parse_key,
    serialize_key,
)
from .keyspace import keyspace, keyspace_bits
from .metrics import ssim
from .cipher import encrypt, decrypt
from .vit import check_patch_order_invariance, init_toy_vit, run_equivariance_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CHECK = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for I/O
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_key(path: str):
    return parse_key(Path(path).read_text(encoding="utf-8"))


def _read_image(path: str):
    return load_ppm(Path(path).read_bytes())


def cmd_keygen(args) -> int:
    key = generate_key(args.seed, args.m, args.height, args.width)
    Path(args.out).write_text(serialize_key(key), encoding="utf-8", newline="\n")
    print(f"wrote {args.out} (K1: {key.n_blocks} entries, K2: {key.subblock_size})")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    key = _read_key(args.key)
    img = _read_image(args.input)
    Path(args.output).write_bytes(save_ppm(encrypt(img, key)))
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    key = _read_key(args.key)
    img = _read_image(args.input)
    Path(args.output).write_bytes(save_ppm(decrypt(img, key)))
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_keyspace(args) -> int:
    if args.bits:
        print(keyspace_bits(args.m, args.height, args.width))
    else:
        print(keyspace(args.m, args.height, args.width))
    return EXIT_OK


def cmd_ssim(args) -> int:
    score = ssim(_read_image(args.image_a), _read_image(args.image_b))
    print(f"{score:.3f}")
    return EXIT_OK


def cmd_cifar_export(args) -> int:
    records = load_cifar10_batch(Path(args.batch).read_bytes())
    key = _read_key(args.encrypt) if args.encrypt else None
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, (label, img) in enumerate(records):
        if args.resize > 1:
            img = resize_nearest(img, args.resize)
        if key is not None:
            img = encrypt(img, key)
        (out_dir / f"{index}_{label}.ppm").write_bytes(save_ppm(img))
    print(f"exported {len(records)} images to {out_dir}")
    return EXIT_OK


def cmd_check_vit(args) -> int:
    if args.break_pos_emb:
        # demonstration: run the invariance check with position embeddings
        # left in place, which the scheme relies on NOT doing
        model = init_toy_vit(
            args.seed, m=args.m, channels=args.channels, dim=args.dim,
            heads=args.heads, depth=args.depth, n_patches=args.patches,
        )
        rng = SplitMix64(args.seed ^ 0xA5A5A5A5A5A5A5A5)
        patch_dim = args.m * args.m * args.channels
        patches = np.array(
            [rng.uniform(0.0, 1.0) for _ in range(args.patches * patch_dim)]
        ).reshape(args.patches, patch_dim)
        perm = fisher_yates(args.patches, rng)
        dev = check_patch_order_invariance(model, patches, perm, positions="fixed")
        ok = dev <= args.invariance_tol
        print(
            f"patch-order invariance (positions fixed): max deviation {dev:.3e}  "
            f"{'PASS' if ok else 'FAIL'}"
        )
        return EXIT_OK if ok else EXIT_CHECK

    report = run_equivariance_suite(
        seed=args.seed, m=args.m, channels=args.channels, dim=args.dim,
        heads=args.heads, depth=args.depth, n_patches=args.patches,
        trials=args.trials,
    )
    rows = [
        ("patch-order invariance (positions off)", report.invariance_off,
         report.invariance_off <= args.invariance_tol, "max"),
        ("patch-order invariance (positions co-permuted)", report.invariance_copermuted,
         report.invariance_copermuted <= args.invariance_tol, "max"),
        ("fixed-position control (must break)", report.control_fixed_positions,
         report.control_fixed_positions > args.control_min, "min"),
        ("pixel-shuffle absorption (embedding)", report.embedding_dev,
         report.embedding_dev <= args.embedding_tol, "max"),
        ("pixel-shuffle absorption (full forward)", report.forward_dev,
         report.forward_dev <= args.forward_tol, "max"),
        ("wrong-key control (must break)", report.wrong_key_dev,
         report.wrong_key_dev > args.control_min, "min"),
    ]
    all_ok = True
    for name, dev, ok, kind in rows:
        all_ok &= ok
        print(f"{name}: {kind} deviation {dev:.3e}  {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all_ok else EXIT_CHECK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="vitcrypt",
        description="Keyed block-scramble + pixel-shuffle image encryption toolkit",
        epilog="exit codes: 0 ok, 1 usage/validation, 2 I/O or bad file, 3 check failed",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("keygen", help="derive a key file from a seed")
    p.add_argument("seed", type=int)
    p.add_argument("m", type=int, help="block size in pixels (even)")
    p.add_argument("height", type=int)
    p.add_argument("width", type=int)
    p.add_argument("out", help="key file path to write")
    p.set_defaults(func=cmd_keygen)

    for name, func, verb in (
        ("encrypt", cmd_encrypt, "encrypt"),
        ("decrypt", cmd_decrypt, "decrypt"),
    ):
        p = sub.add_parser(name, help=f"{verb} a PPM/PGM image with a key file")
        p.add_argument("key", help="key file path")
        p.add_argument("input", help="input image (binary PPM/PGM)")
        p.add_argument("output", help="output image path")
        p.set_defaults(func=func)

    p = sub.add_parser("keyspace", help="count distinct keys for a geometry")
    p.add_argument("m", type=int)
    p.add_argument("height", type=int)
    p.add_argument("width", type=int)
    p.add_argument("--bits", action="store_true",
                   help="print the count's binary digit count instead of the decimal")
    p.set_defaults(func=cmd_keyspace)

    p = sub.add_parser("ssim", help="structural similarity of two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_ssim)

    p = sub.add_parser("cifar-export",
                       help="unpack a CIFAR-10 binary batch into PPM files")
    p.add_argument("batch", help="binary batch file (3073-byte records)")
    p.add_argument("out_dir")
    p.add_argument("--resize", type=int, default=1, metavar="FACTOR",
                   help="integer nearest-neighbor upscale factor")
    p.add_argument("--encrypt", metavar="KEYFILE",
                   help="encrypt each exported image with this key")
    p.set_defaults(func=cmd_cifar_export)

    p = sub.add_parser("check-vit",
                       help="verify encoder patch-order invariance and shuffle absorption")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--patches", type=int, default=16)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--invariance-tol", type=float, default=1e-5)
    p.add_argument("--embedding-tol", type=float, default=1e-6)
    p.add_argument("--forward-tol", type=float, default=1e-5)
    p.add_argument("--control-min", type=float, default=1e-2)
    p.add_argument("--break-pos-emb", action="store_true",
                   help="demonstrate that fixed position embeddings break invariance")
    p.set_defaults(func=cmd_check_vit)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # raised by --help (0) and _Parser.error (1)
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FormatError, KeyFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
