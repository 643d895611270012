"""Command-line surface: decompose, loss, gradcheck, metrics, traindemo, bench.

Every command prints one key-sorted JSON line.  Exit codes: 0 success,
1 failed check, 2 usage or input error.  Image inputs may be binary PGM or
rank-2 real CWTN tensors (the latter are bit-exact for float data).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import loss as loss_mod
from . import metrics as metrics_mod
from . import pyramid, synthetic, tensorio
from .errors import CwmiError

GRADCHECK_LIMIT = 1e-4


def _emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def _parser():
    parser = argparse.ArgumentParser(
        prog="cwmi",
        description="Complex wavelet mutual information loss toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="write pyramid subbands and residues")
    p.add_argument("--input", required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--orients", type=int, default=4)
    p.add_argument("--mode", choices=("real", "complex"), default="complex")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("loss", help="evaluate the loss on a label/pred pair")
    p.add_argument("--label", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--variant", choices=loss_mod.VARIANTS, default="cwmi")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--orients", type=int, default=4)
    p.add_argument("--grad", default=None, help="write the gradient as CWTN")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--variant", choices=loss_mod.VARIANTS, default="cwmi")
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probes", type=int, default=50)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--orients", type=int, default=2)
    p.add_argument("--step", type=float, default=1e-4)

    p = sub.add_parser("metrics", help="evaluate segmentation metrics")
    p.add_argument("--label", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--threshold", type=float, default=0.5)

    p = sub.add_parser("traindemo", help="free-logit optimization demo")
    p.add_argument("--kind", choices=synthetic.KINDS, default="cells")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--variant", choices=loss_mod.VARIANTS, default="cwmi")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("bench", help="decompose+loss wall time per size")
    p.add_argument("--sizes", default="128,256,512")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--orients", type=int, default=4)
    return parser


def _cmd_decompose(args) -> int:
    image = tensorio.read_image(args.input)
    config = pyramid.PyramidConfig(args.levels, args.orients, args.mode)
    decomp = pyramid.decompose(image, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def save(stem, array):
        tensorio.write_tensor(out / f"{stem}.cwtn", array)
        mag = np.abs(array)
        peak = mag.max()
        tensorio.write_pgm(out / f"{stem}.pgm", mag / peak if peak > 0 else mag)

    save("high_residue", decomp.high_residue)
    save("low_residue", decomp.low_residue)
    count = 2
    for n, stack in enumerate(decomp.bands, start=1):
        for k in range(stack.shape[0]):
            save(f"band_l{n}_o{k + 1}", stack[k])
            count += 1
    _emit({"out_dir": str(out), "subbands": count, "mode": args.mode})
    return 0


def _loss_config(args) -> loss_mod.LossConfig:
    return loss_mod.LossConfig(
        levels=args.levels,
        orientations=args.orients,
        lam=getattr(args, "lam", 0.1),
        epsilon=getattr(args, "epsilon", 1e-5),
        variant=args.variant,
    )


def _cmd_loss(args) -> int:
    label = tensorio.read_image(args.label)
    pred = tensorio.read_image(args.pred)
    config = _loss_config(args)
    out = loss_mod.compute_loss(label, pred, config, want_gradient=bool(args.grad))
    if args.grad:
        tensorio.write_tensor(args.grad, out.gradient)
    _emit(
        {
            "ce_term": out.ce_term,
            "per_level": out.per_level_mi,
            "total": out.total,
            "variant": args.variant,
        }
    )
    return 0


def _cmd_gradcheck(args) -> int:
    label = synthetic.generate(
        synthetic.SyntheticSpec("cells", args.size, seed=args.seed, divisor=2**args.levels)
    )[1].astype(np.float64)
    rng = np.random.default_rng(args.seed + 1)
    pred = 0.5 + 0.4 * np.tanh(ndimage.gaussian_filter(rng.standard_normal(label.shape), 2.0) * 3.0)
    config = _loss_config(args)
    report = loss_mod.finite_difference_check(
        label, pred, config, step=args.step, probe_count=args.probes, seed=args.seed
    )
    _emit(
        {
            "checked": report.checked,
            "max_rel_error": report.max_rel_error,
            "mean_rel_error": report.mean_rel_error,
            "skipped": report.skipped,
            "variant": args.variant,
        }
    )
    return 0 if report.max_rel_error <= GRADCHECK_LIMIT else 1


def _cmd_metrics(args) -> int:
    label = tensorio.read_image(args.label)
    pred = tensorio.read_image(args.pred)
    report = metrics_mod.evaluate(
        np.rint(label).astype(np.uint8), pred, threshold=args.threshold
    )
    _emit(report.as_dict())
    return 0


def _cmd_traindemo(args) -> int:
    spec = synthetic.SyntheticSpec(args.kind, args.size, seed=args.seed)
    _, label = synthetic.generate(spec)
    config = loss_mod.LossConfig(variant=args.variant)
    history = synthetic.optimize_logits(
        label, config, steps=args.steps, eval_every=max(1, args.steps // 5)
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "history.jsonl", "w") as fh:
        for step, value in enumerate(history.losses, start=1):
            fh.write(json.dumps({"loss": value, "step": step}, sort_keys=True) + "\n")
        for step, report in history.evaluations:
            fh.write(
                json.dumps({"metrics": report.as_dict(), "step": step}, sort_keys=True)
                + "\n"
            )
    final = history.final_metrics
    if history.final_params:
        final_prob = synthetic._sigmoid(history.final_params[0])
        tensorio.write_pgm(out / "final_pred.pgm", final_prob, maxval=65535)
    tensorio.write_pgm(out / "label.pgm", label.astype(np.float64))
    _emit(
        {
            "digest": history.final_digest,
            "final_metrics": final.as_dict() if final else None,
            "out_dir": str(out),
            "steps": args.steps,
        }
    )
    return 0


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    config = loss_mod.LossConfig(levels=args.levels, orientations=args.orients)
    rng = np.random.default_rng(0)
    medians = {}
    for size in sizes:
        label = (rng.uniform(size=(size, size)) > 0.5).astype(np.float64)
        pred = rng.uniform(0.05, 0.95, size=(size, size))
        loss_mod.compute_loss(label, pred, config)  # warm-up (bank cache)
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            pyramid.decompose(pred, config.pyramid_config())
            loss_mod.compute_loss(label, pred, config)
            times.append(time.perf_counter() - t0)
        medians[str(size)] = float(np.median(times))
    ratios = {}
    for small, big in zip(sizes, sizes[1:]):
        ratios[f"{big}/{small}"] = medians[str(big)] / medians[str(small)]
    _emit({"median_seconds": medians, "ratios": ratios, "repeats": args.repeats})
    return 0


_COMMANDS = {
    "decompose": _cmd_decompose,
    "loss": _cmd_loss,
    "gradcheck": _cmd_gradcheck,
    "metrics": _cmd_metrics,
    "traindemo": _cmd_traindemo,
    "bench": _cmd_bench,
}


def cli_dispatch(argv) -> int:
    """Parse argv and run one subcommand; returns the process exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except (CwmiError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
