import argparse
import sys

from pathlib import Path
from pydantic import ValidationError
from typing import Callable, Dict, List, Optional, Sequence
from lstsr.datasets.patches import SplitTag, available_splits, build_dataset, load_dataset, save_dataset
from lstsr.evaluation.benchmark import benchmark
from lstsr.methods.baselines import AtprkMethod, BicubicMethod
from lstsr.methods.mrunet import MruNetMethod
from lstsr.metrics.report import evaluate_set
from lstsr.networks.checkpoint import load_checkpoint, save_checkpoint
from lstsr.raster.io import load_grid, store_grid
from lstsr.raster.patches import DEFAULT_PATCH_SIZE, extract_patches
from lstsr.resample.base import ResampleMethod, ResampleSpec
from lstsr.synth.base import FieldSpec, Generator, generate
from lstsr.training.config import TrainConfig
from lstsr.training.inference import TILE_OVERLAP, TILE_SIZE, super_resolve
from lstsr.training.trainer import evaluate, train
from lstsr.cli.render import dump_grayscale
from lstsr.utils.internal_data import InternalSeries, write_csv
from lstsr.utils.logs import console, print_dataframe, print_error, print_series, print_text

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

DEGRADE_METHODS = {'norml4': ResampleMethod.NORM_L4, 'area-weighted': ResampleMethod.AREA_WEIGHTED}


class UsageError(Exception):
    """Bad command line: unknown subcommand, missing or conflicting flags, invalid values."""

    def __init__(self, message: str, usage: str = ''):
        super().__init__(message)
        self.usage = usage


class CommandLineParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors to the caller instead of exiting."""

    def error(self, message: str):
        raise UsageError(message, self.format_usage())


def _synth(args: argparse.Namespace) -> None:
    generator = Generator(args.generator)
    if args.ndvi_out and generator != Generator.LINEAR_NDVI:
        raise UsageError('--ndvi-out is only produced by the linear_ndvi generator')
    try:
        spec = FieldSpec(
            generator=generator, seed=args.seed, size=args.size,
            pixel_size_m=args.pixel_size, corr_length=args.corr
        )
    except ValidationError as e:
        raise UsageError(f'invalid field recipe: {e}')
    lst, ndvi = generate(spec)
    store_grid(lst, args.out)
    if ndvi is not None and args.ndvi_out:
        store_grid(ndvi, args.ndvi_out)
    print_text(f'Wrote {spec.generator.value} field {lst.width}x{lst.height} to {args.out}')


def _dataset(args: argparse.Namespace) -> None:
    patches = []
    for path in args.inputs:
        patches.extend(extract_patches(load_grid(path), size=args.patch, stride=args.stride))
    splits = build_dataset(patches, ratio=args.ratio, split=args.split, seed=args.seed)
    for split in splits:
        save_dataset(split, args.out)
        split.info()
    print_text(f'Wrote {len(patches)} patch pairs to {args.out}')


def _degrade(args: argparse.Namespace) -> None:
    method = DEGRADE_METHODS[args.method]
    if method == ResampleMethod.NORM_L4 and not float(args.ratio).is_integer():
        raise UsageError(f'--method norml4 needs an integer --ratio, got {args.ratio}')
    coarse = ResampleSpec(ratio=args.ratio, method=method).apply_grid(load_grid(args.input))
    store_grid(coarse, args.out)
    print_text(f'Wrote {coarse.width}x{coarse.height} grid at {coarse.pixel_size_m:g} m to {args.out}')


def _train(args: argparse.Namespace) -> None:
    config = TrainConfig.from_file(args.config)
    config = TrainConfig.model_validate({**config.model_dump(), 'seed': args.seed})
    train_set = load_dataset(args.data, SplitTag.TRAIN)
    if train_set.ratio != config.ratio:
        raise ValueError(f'dataset was built for ratio {train_set.ratio}, config trains ratio {config.ratio}')
    test_set = load_dataset(args.data, SplitTag.TEST) if SplitTag.TEST in available_splits(args.data) else None
    net, history = train(train_set, test_set, config=config, checkpoint_path=args.out)
    save_checkpoint(net, args.out)
    if args.history:
        write_csv(history.records, args.history)
    console.print(history)
    print_text(f'Wrote checkpoint to {args.out}')


def _eval(args: argparse.Namespace) -> None:
    net = load_checkpoint(args.checkpoint)
    report = evaluate(net, load_dataset(args.data, args.split))
    console.print(report)
    if args.csv:
        report.to_csv(args.csv)


def _sr(args: argparse.Namespace) -> None:
    net = load_checkpoint(args.checkpoint)
    fine = super_resolve(net, load_grid(args.input), args.ratio, tile=args.tile, overlap=args.overlap, verbose=True)
    store_grid(fine, args.out)
    print_text(f'Wrote {fine.width}x{fine.height} grid at {fine.pixel_size_m:g} m to {args.out}')


def _atprk(args: argparse.Namespace) -> None:
    method = AtprkMethod(neighborhood=args.neighborhood, verbose=True)
    fine = method.super_resolve(load_grid(args.lst), args.ratio, load_grid(args.ndvi))
    store_grid(fine, args.out)
    if fine.metadata.get('kriging_jitter'):
        print_error('Kriging systems were regularized with a diagonal jitter')
    print_text(f'Wrote {fine.width}x{fine.height} grid at {fine.pixel_size_m:g} m to {args.out}')


def _metrics(args: argparse.Namespace) -> None:
    gt, pred = load_grid(args.gt), load_grid(args.pred)
    report = evaluate_set([(gt.values, pred.values)], ids=[Path(args.gt).stem])
    print_text(f'rmse={report.rmse:g}')
    print_series(InternalSeries(report.summary()))
    if args.csv:
        report.to_csv(args.csv)


def _benchmark(args: argparse.Namespace) -> None:
    if args.ndvi and len(args.ndvi) != len(args.gt):
        raise UsageError(f'--ndvi needs one grid per --gt grid, got {len(args.ndvi)} for {len(args.gt)}')
    methods = [BicubicMethod()]
    if args.ndvi:
        methods.append(AtprkMethod())
    if args.checkpoint:
        methods.append(MruNetMethod(net=load_checkpoint(args.checkpoint)))
    result = benchmark(
        [load_grid(p) for p in args.gt], methods, ratio=args.ratio,
        ndvi_grids=[load_grid(p) for p in args.ndvi] if args.ndvi else None
    )
    print_dataframe(result.table, num_rows=None, title='Benchmark')
    if args.csv:
        result.to_csv(args.csv)


def _render(args: argparse.Namespace) -> None:
    dump_grayscale(load_grid(args.input), args.out)
    print_text(f'Wrote {args.out}')


COMMANDS: Dict[str, Callable[[argparse.Namespace], None]] = {
    'synth': _synth,
    'dataset': _dataset,
    'degrade': _degrade,
    'train': _train,
    'eval': _eval,
    'sr': _sr,
    'atprk': _atprk,
    'metrics': _metrics,
    'benchmark': _benchmark,
    'render': _render,
}


def build_parser() -> CommandLineParser:
    parser = CommandLineParser(prog='lstsr', description='Land surface temperature super-resolution toolkit')
    commands = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    synth = commands.add_parser('synth', help='Generate a synthetic LST field')
    synth.add_argument('--generator', choices=[g.value for g in Generator], default=Generator.GRF.value)
    synth.add_argument('--corr', type=float, default=8.0, help='Correlation length (or checker cell) in pixels')
    synth.add_argument('--size', type=int, default=256)
    synth.add_argument('--pixel-size', type=float, default=1000.0, help='Pixel size in meters')
    synth.add_argument('--seed', type=int, required=True)
    synth.add_argument('--out', required=True)
    synth.add_argument('--ndvi-out', default=None, help='Where to store the NDVI of a linear_ndvi field')

    dataset = commands.add_parser('dataset', help='Build (ILR, HR) patch pairs from grids')
    dataset.add_argument('--inputs', nargs='+', required=True)
    dataset.add_argument('--ratio', type=int, default=4)
    dataset.add_argument('--patch', type=int, default=DEFAULT_PATCH_SIZE)
    dataset.add_argument('--stride', type=int, default=None)
    dataset.add_argument('--split', type=float, nargs='+', default=[0.75, 0.25],
                         help='Train/test(/validation) fractions')
    dataset.add_argument('--seed', type=int, required=True)
    dataset.add_argument('--out', required=True)

    degrade = commands.add_parser('degrade', help='Degrade a grid to a coarser resolution')
    degrade.add_argument('--input', required=True)
    degrade.add_argument('--ratio', type=float, default=4.0)
    degrade.add_argument('--method', choices=sorted(DEGRADE_METHODS), default='norml4')
    degrade.add_argument('--out', required=True)

    train_cmd = commands.add_parser('train', help='Train a Multi-residual U-Net')
    train_cmd.add_argument('--config', required=True, help='JSON file of TrainConfig fields')
    train_cmd.add_argument('--data', required=True, help='Dataset directory')
    train_cmd.add_argument('--out', required=True, help='Checkpoint path')
    train_cmd.add_argument('--seed', type=int, required=True)
    train_cmd.add_argument('--history', default=None, help='Where to write the per-epoch history CSV')

    eval_cmd = commands.add_parser('eval', help='Score a checkpoint on a dataset split')
    eval_cmd.add_argument('--checkpoint', required=True)
    eval_cmd.add_argument('--data', required=True)
    eval_cmd.add_argument('--split', choices=[t.value for t in SplitTag], default=SplitTag.TEST.value)
    eval_cmd.add_argument('--csv', default=None)

    sr = commands.add_parser('sr', help='Super-resolve a grid with a checkpoint')
    sr.add_argument('--checkpoint', required=True)
    sr.add_argument('--input', required=True)
    sr.add_argument('--ratio', type=int, default=4)
    sr.add_argument('--tile', type=int, default=TILE_SIZE)
    sr.add_argument('--overlap', type=int, default=TILE_OVERLAP)
    sr.add_argument('--out', required=True)

    atprk = commands.add_parser('atprk', help='Sharpen coarse LST with fine NDVI')
    atprk.add_argument('--lst', required=True)
    atprk.add_argument('--ndvi', required=True)
    atprk.add_argument('--ratio', type=int, default=4)
    atprk.add_argument('--neighborhood', type=int, default=5)
    atprk.add_argument('--out', required=True)

    metrics = commands.add_parser('metrics', help='Compare a prediction with its ground truth')
    metrics.add_argument('--gt', required=True)
    metrics.add_argument('--pred', required=True)
    metrics.add_argument('--csv', default=None)

    bench = commands.add_parser('benchmark', help='Compare methods on degraded ground truths')
    bench.add_argument('--gt', nargs='+', required=True)
    bench.add_argument('--ndvi', nargs='+', default=None, help='Fine NDVI per ground truth, enables ATPRK')
    bench.add_argument('--checkpoint', default=None, help='Adds the Multi-residual U-Net')
    bench.add_argument('--ratio', type=int, default=4)
    bench.add_argument('--csv', default=None)

    render = commands.add_parser('render', help='Write a grayscale .pgm or .png image of a grid')
    render.add_argument('--input', required=True)
    render.add_argument('--out', required=True)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse `argv` and run one subcommand.

    Returns:
        int: 0 on success, 1 on a usage error, 2 when the command failed.
    """
    parser = build_parser()
    command = None
    try:
        args = parser.parse_args(argv)
        command = args.command
        COMMANDS[command](args)
    except UsageError as e:
        print_error(e.usage or parser.format_usage())
        print_error(f'lstsr: error: {e}')
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except Exception as e:
        print_error(f'lstsr {command} failed: {type(e).__name__}: {e}')
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))
