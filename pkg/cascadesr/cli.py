"""
Command line entry point: cascadesr <command> [options]

    degrade            simulate a shifted, blurred, decimated, noisy LR sequence
    register           estimate frame motions and rewrite the manifest
    sr                 bicubic, multi-frame (lorig) or single-frame network (erbpn) super-resolution
    train              train the network on patches of HR images
    cascade            two-stage super-resolution, mfsf or sfmf order
    evaluate           PSNR / SSIM of an image against a reference
    bench              benchmark a suite of images and methods
    gridsearch-lambda  choose the L0 weight of the multi-frame solver
"""
import os
import sys
import argparse
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
import numpy as np
import torch

from cascadesr import set_random_state, set_log_level, add_log_file
from cascadesr.errors import CascadeSRError, ParameterError
from cascadesr.cascade import CascadePlan, cascade_sr
from cascadesr.data.degradation import DegradationSpec, NOISE_SWEEP, simulate_sequence, save_sequence, load_sequence
from cascadesr.data.patches import build_training_pairs
from cascadesr.data.registration import register_sequence, REGISTRATION_MODES
from cascadesr.image.color import rgb_to_ycbcr, ycbcr_to_rgb, luminance
from cascadesr.image.io import read_image, write_image, list_images
from cascadesr.image.ops import resize_bicubic
from cascadesr.metrics.benchmark import BenchmarkSuite, benchmark
from cascadesr.metrics.quality import psnr, ssim, shave
from cascadesr.metrics.report import MetricsReport
from cascadesr.model.erbpn import erbpn_forward
from cascadesr.model.weights import load_weights, save_weights
from cascadesr.solver.lorig import LorigConfig, lorig_reconstruct, gridsearch_lambda
from cascadesr.training.trainer import add_train_args, train_erbpn
from cascadesr.utils import bool_flag, load_config

logger = logging.getLogger()

DEFAULT_SEED = 1


@contextmanager
def worker_pool(threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            yield executor
    else:
        yield None


def colorize(y, seq):
    """Colour output from a reconstructed luminance and the reference frame's chroma."""
    if not seq.is_color:
        return y
    cb, cr = seq.chroma[seq.reference_index]
    factor = y.shape[0] // cb.shape[0]
    return np.stack(ycbcr_to_rgb((y, resize_bicubic(cb, factor), resize_bicubic(cr, factor))), axis=-1)


def _load_registered(args, executor=None):
    seq = load_sequence(args.seq)
    return register_sequence(seq, mode=args.registration, executor=executor)


###################################################
# commands
###################################################


def run_degrade(args):
    img = read_image(args.input)
    chroma = None
    if img.ndim == 3:
        y, cb, cr = rgb_to_ycbcr((img[..., 0], img[..., 1], img[..., 2]))
        chroma = (cb, cr)
    else:
        y = img
    kernel = np.loadtxt(args.kernel, ndmin=2) if args.kernel else None
    spec = DegradationSpec(scale=args.scale, blur_sigma=args.sigma, blur_radius=args.radius,
                           noise_variance=args.noise, seed=args.seed, kernel=kernel)
    h, w = y.shape
    if h % args.scale or w % args.scale:
        logger.warning(f'cropping {y.shape} to a multiple of scale {args.scale}')
        y = y[:h - h % args.scale, :w - w % args.scale]
        if chroma is not None:
            chroma = tuple(c[:y.shape[0], :y.shape[1]] for c in chroma)
    with worker_pool(args.threads) as executor:
        seq = simulate_sequence(y, spec, args.frames, shift_mode=args.shift_mode, chroma=chroma,
                                executor=executor)
    save_sequence(seq, args.out)


def run_register(args):
    with worker_pool(args.threads) as executor:
        seq = _load_registered(args, executor)
    for k, (dx, dy) in enumerate(seq.motions):
        print(f'frame {k}: dx {dx:.4f} dy {dy:.4f}')
    save_sequence(seq, args.out or args.seq)


def run_sr(args):
    with worker_pool(args.threads) as executor:
        seq = _load_registered(args, executor)
        if args.method == 'bicubic':
            scale = args.scale or seq.spec.scale
            out = np.clip(resize_bicubic(seq.reference, scale), 0.0, 1.0)
        elif args.method == 'lorig':
            out = lorig_reconstruct(seq, LorigConfig.build(args), scale=args.scale,
                                    diagnostics=args.diagnostics, executor=executor)
        else:
            if not args.model:
                raise ParameterError('sr --method erbpn needs --model')
            model = load_weights(args.model)
            if args.scale and args.scale != model.scale:
                raise ParameterError(f'--scale {args.scale} differs from the network scale {model.scale}')
            out = erbpn_forward(seq.reference, model)
    write_image(args.out, colorize(out, seq))
    logger.info(f'{args.method}: {seq.lr_shape} -> {out.shape}, written to {args.out}')


def run_train(args):
    files = list_images(args.images)
    if not files:
        raise ParameterError(f'no training images in {args.images}')
    images = [luminance(read_image(f)) for f in files]
    spec = DegradationSpec(blur_sigma=args.sigma, blur_radius=args.radius, seed=args.seed)
    lorig_cfg = LorigConfig.from_dict(load_config(args.solver_config)) if args.solver_config else None
    pairs = build_training_pairs(images, args.scale, patch_size=args.patch_size,
                                 patches_per_image=args.patches_per_image, mode=args.mode, spec=spec,
                                 lorig_scale=args.lorig_scale, frames=args.frames,
                                 lorig_cfg=lorig_cfg, seed=args.seed)
    model = train_erbpn(pairs, args)
    save_weights(model, args.out)
    logger.info(f'Weights written to {args.out}')


def run_cascade(args):
    """--plan file first, then any flag given explicitly."""
    plan = CascadePlan.from_config(args.plan) if args.plan else CascadePlan()
    overrides = {k: getattr(args, k) for k in ('order', 'stage1_scale', 'stage2_scale')
                 if getattr(args, k) is not None}
    if args.model:
        overrides['model'] = load_weights(args.model)
    plan = dataclasses.replace(plan, lorig_cfg=LorigConfig.build(args, base=plan.lorig_cfg), **overrides)
    with worker_pool(args.threads) as executor:
        seq = _load_registered(args, executor)
        out = cascade_sr(seq, plan, executor=executor)
    write_image(args.out, colorize(out, seq))
    logger.info(f'{plan.order}: {seq.lr_shape} -> {out.shape}, written to {args.out}')


def run_evaluate(args):
    ref = shave(luminance(read_image(args.ref)), args.crop)
    test = shave(luminance(read_image(args.test)), args.crop)
    report = MetricsReport(metadata={'reference': os.path.basename(args.ref), 'crop': args.crop})
    name = os.path.splitext(os.path.basename(args.test))[0]
    report.add(name, args.method, args.scale, args.noise, psnr(ref, test), ssim(ref, test))
    for line in report.lines():
        print(line)
    if args.out:
        report.to_csv(args.out)


def run_bench(args):
    suite = BenchmarkSuite.from_file(args.suite)
    if args.seed_given:
        suite.seed = args.seed
    if args.noise_sweep:
        suite.noise_variances = [0.0, *NOISE_SWEEP]
    report = benchmark(suite, threads=args.threads)
    report.to_csv(args.out)
    for (method, noise), (p, s) in report.summary().items():
        logger.info(f'{method} noise {noise:g}: mean psnr {p:.4f} dB, mean ssim {s:.4f}')
    logger.info(f'Report written to {args.out}')


def run_gridsearch(args):
    hr = luminance(read_image(args.ref))
    with worker_pool(args.threads) as executor:
        seq = _load_registered(args, executor)
        best, rows = gridsearch_lambda(seq, hr, LorigConfig.build(args), scale=args.scale, executor=executor)
    with open(args.out, 'w', newline='') as wt:
        wt.write('lambda,psnr_db\n')
        for lam, value in rows:
            wt.write(f'{lam!r},{value:.6f}\n')
    print(f'best lambda {best!r}')


COMMANDS = {
    'degrade': run_degrade,
    'register': run_register,
    'sr': run_sr,
    'train': run_train,
    'cascade': run_cascade,
    'evaluate': run_evaluate,
    'bench': run_bench,
    'gridsearch-lambda': run_gridsearch,
}


###################################################
# parser
###################################################


def add_common_args(parser):
    parser.add_argument('--seed', type=int, default=None, help=f'Random seed (default {DEFAULT_SEED})')
    parser.add_argument('--threads', type=int, default=1, help='Worker threads')
    parser.add_argument('--log-level', type=str, default='info',
                        choices=['debug', 'info', 'warning', 'error'])
    parser.add_argument('--log-file', type=str, default=None)


def add_registration_args(parser):
    parser.add_argument('--seq', type=str, required=True, help='Sequence directory')
    parser.add_argument('--registration', type=str, default='ground_truth', choices=REGISTRATION_MODES,
                        help='ground_truth uses the manifest motions')


def build_parser():
    parser = argparse.ArgumentParser(prog='cascadesr', description='Cascaded multi-frame and single-frame super-resolution')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('degrade', help='Simulate an LR sequence')
    p.add_argument('--in', dest='input', type=str, required=True, help='HR image')
    p.add_argument('--frames', type=int, default=16)
    p.add_argument('--scale', type=int, default=4)
    p.add_argument('--sigma', type=float, default=1.5, help='Gaussian blur sigma in HR pixels')
    p.add_argument('--radius', type=int, default=4, help='Blur kernel radius')
    p.add_argument('--kernel', type=str, default=None, help='Text file with a custom blur kernel')
    p.add_argument('--noise', type=float, default=0.0, help='AWGN variance')
    p.add_argument('--shift-mode', type=str, default='grid', choices=['grid', 'random'])
    p.add_argument('--out', type=str, required=True, help='Output sequence directory')
    add_common_args(p)

    p = sub.add_parser('register', help='Estimate frame motions')
    p.add_argument('--seq', type=str, required=True)
    p.add_argument('--mode', dest='registration', type=str, default='estimate', choices=REGISTRATION_MODES)
    p.add_argument('--out', type=str, default=None, help='Output sequence directory (default: in place)')
    add_common_args(p)

    p = sub.add_parser('sr', help='Single-stage super-resolution')
    p.add_argument('--method', type=str, required=True, choices=['bicubic', 'lorig', 'erbpn'])
    add_registration_args(p)
    p.add_argument('--model', type=str, default=None, help='Network weights')
    p.add_argument('--scale', type=int, default=None, help='Output scale (default: the sequence scale)')
    LorigConfig.add_args(p)
    p.add_argument('--out', type=str, required=True)
    add_common_args(p)

    p = sub.add_parser('train', help='Train the single-frame network')
    p.add_argument('--images', type=str, required=True, help='Directory or comma separated HR images')
    p.add_argument('--out', type=str, required=True, help='Output weights')
    p.add_argument('--sigma', type=float, default=1.5)
    p.add_argument('--radius', type=int, default=4)
    p.add_argument('--lorig-scale', type=int, default=2, help='Solver scale of lorig training pairs')
    p.add_argument('--frames', type=int, default=16, help='Frames per sequence of lorig training pairs')
    p.add_argument('--solver-config', type=str, default=None)
    add_train_args(p)
    add_common_args(p)

    p = sub.add_parser('cascade', help='Two-stage super-resolution')
    add_registration_args(p)
    p.add_argument('--plan', type=str, default=None,
                   help='Plan file: order, stage1_scale, stage2_scale, solver_config, model')
    p.add_argument('--order', type=str, default=None, choices=['mfsf', 'sfmf'], help='Default mfsf')
    p.add_argument('--model', type=str, default=None, help='Network weights, required without --plan')
    p.add_argument('--stage1-scale', type=int, default=None, help='Default 2')
    p.add_argument('--stage2-scale', type=int, default=None, help='Default 2')
    LorigConfig.add_args(p)
    p.add_argument('--out', type=str, required=True)
    add_common_args(p)

    p = sub.add_parser('evaluate', help='PSNR / SSIM against a reference')
    p.add_argument('--ref', type=str, required=True)
    p.add_argument('--test', type=str, required=True)
    p.add_argument('--method', type=str, default='test')
    p.add_argument('--scale', type=int, default=4, help='Scale reported in the row')
    p.add_argument('--noise', type=float, default=0.0, help='Noise variance reported in the row')
    p.add_argument('--crop', type=int, default=0, help='Border pixels ignored')
    p.add_argument('--out', type=str, default=None, help='CSV report')
    add_common_args(p)

    p = sub.add_parser('bench', help='Benchmark a suite')
    p.add_argument('--suite', type=str, required=True)
    p.add_argument('--noise-sweep', type=bool_flag, default=False,
                   help=f'Replace the suite noise variances with 0 and {NOISE_SWEEP}')
    p.add_argument('--out', type=str, required=True)
    add_common_args(p)

    p = sub.add_parser('gridsearch-lambda', help='Grid search of the L0 weight')
    add_registration_args(p)
    p.add_argument('--ref', type=str, required=True, help='Ground truth HR image')
    p.add_argument('--scale', type=int, default=None)
    LorigConfig.add_args(p)
    p.add_argument('--out', type=str, required=True)
    add_common_args(p)
    return parser


def dispatch(argv):
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    set_log_level(args.log_level)
    if args.log_file:
        add_log_file(args.log_file, level=args.log_level.upper())
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = DEFAULT_SEED
    set_random_state(args.seed)
    # intra-op threads for training only
    torch.set_num_threads(max(1, args.threads) if args.command == 'train' else 1)
    logger.info(f'cascadesr {args.command}: ' + ', '.join(f'{k}={v}' for k, v in sorted(vars(args).items())))
    try:
        COMMANDS[args.command](args)
    except (CascadeSRError, OSError) as e:
        print(f'cascadesr {args.command}: error: {e}', file=sys.stderr)
        return 1
    logger.info(f'cascadesr {args.command} done')
    return 0


def main():
    sys.exit(dispatch(sys.argv[1:]))
