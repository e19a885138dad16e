"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Results are
written as CSV/JSON; the report-style paths also render matplotlib
figures next to the delimited output.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import attacks as atk
from . import data as dt
from . import eqmodel as eq
from . import harness as hn
from . import report as rp
from . import surrogate as sg
from . import twirl
from .errors import EqmlError
from .ringgrid import build_grid


def _load_experiment_config(args) -> hn.ExperimentConfig:
    cfg = hn.ExperimentConfig()
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        known = {f.name for f in fields(hn.ExperimentConfig)}
        unknown = set(doc) - known
        if unknown:
            raise EqmlError(f"unknown config keys: {sorted(unknown)}")
        for key in ("seeds", "variants", "eps_grid"):
            if key in doc:
                doc[key] = tuple(doc[key])
        cfg = replace(cfg, **doc)
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(args) -> int:
    cfg = _load_experiment_config(args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    train, test = hn.make_datasets(cfg, seed)
    out = _out_dir(args)
    dt.save_dataset(train, out / "train.eqds")
    dt.save_dataset(test, out / "test.eqds")
    print(f"wrote {out / 'train.eqds'} ({len(train)} samples) and "
          f"{out / 'test.eqds'} ({len(test)} samples)")
    return 0


def cmd_encode(args) -> int:
    imageset = dt.ingest_idx(args.images, args.labels,
                             exclude_labels=args.exclude, limit=args.limit)
    height = imageset.images[0].height
    width = imageset.images[0].width
    grid = build_grid(args.n_rad, args.n_orb, height, width)
    ds = dt.encode_dataset(imageset, grid)
    out = _out_dir(args)
    path = out / "encoded.eqds"
    dt.save_dataset(ds, path)
    print(f"wrote {path} ({len(ds)} samples, grid {grid.n_rings}x{grid.n_angles})")
    return 0


def cmd_train_quantum(args) -> int:
    cfg = _load_experiment_config(args)
    ds = dt.load_dataset(args.data)
    model_cfg = eq.ModelConfig(ds.grid.n_rad, ds.grid.n_orb, cfg.depth,
                               cfg.n_classes, cfg.readout_mode, cfg.logit_scale)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    params, history = hn.train_quantum(model_cfg, ds, seed, cfg.epochs,
                                       cfg.batch_size, cfg.lr)
    out = _out_dir(args)
    eq.save_checkpoint(model_cfg, params, out / "quantum.ckpt.json")
    lines = ["epoch,loss,accuracy"] + [
        f"{i},{h['loss']!r},{h['accuracy']!r}" for i, h in enumerate(history)
    ]
    (out / "quantum_history.csv").write_text("\n".join(lines) + "\n")
    final = history[-1] if history else {"loss": float("nan"), "accuracy": float("nan")}
    print(f"trained depth={cfg.depth} seed={seed}: "
          f"final loss {final['loss']:.4f}, accuracy {final['accuracy']:.3f}")
    return 0


def cmd_train_surrogate(args) -> int:
    cfg = _load_experiment_config(args)
    ds = dt.load_dataset(args.data)
    cfg = replace(cfg, surrogate_kind=args.kind,
                  n_classes=int(ds.labels.max()) + 1)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    model = hn.train_surrogate_for(cfg, ds, seed)
    out = _out_dir(args)
    path = out / f"surrogate_{args.kind}.bin"
    sg.save_surrogate(model, path)
    acc = sg.accuracy(model, ds.flat(), ds.labels)
    print(f"wrote {path} (train accuracy {acc:.3f})")
    return 0


def cmd_attack(args) -> int:
    ds = dt.load_dataset(args.data)
    model = sg.load_surrogate(args.surrogate)
    acfg = atk.AttackConfig(kind=args.kind, epsilon=args.epsilon,
                            steps=args.steps,
                            clamp_range=None if args.no_clamp else (0.0, 1.0))
    x_adv = atk.attack(model, ds.flat(), ds.labels, acfg)
    meta = dict(ds.meta)
    meta["attack"] = {"kind": args.kind, "epsilon": args.epsilon,
                      "steps": args.steps, "clamp": not args.no_clamp,
                      "surrogate_sha256": _sha256(args.surrogate)}
    adv = dt.Dataset(ds.grid, x_adv.reshape(ds.values.shape), ds.labels, meta)
    out = _out_dir(args)
    path = out / f"adv_{args.kind}_{args.epsilon}.eqds"
    dt.save_dataset(adv, path)
    print(f"wrote {path}")
    return 0


def _sha256(path) -> str:
    import hashlib

    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_transform(args) -> int:
    ds = dt.load_dataset(args.data)
    seed = args.seed if args.seed is not None else 0
    out_ds = dt.apply_variant(ds, args.variant, seed=seed)
    out = _out_dir(args)
    path = out / f"{args.variant}.eqds"
    dt.save_dataset(out_ds, path)
    print(f"wrote {path}")
    return 0


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    if args.check == "twirl-identity":
        n_rad = args.qubits // 2
        n_orb = args.qubits - n_rad
        grid = build_grid(n_rad, n_orb, 16, 16)
        cfg = eq.ModelConfig(n_rad, n_orb, depth=4, n_classes=min(2, n_rad))
        rng = np.random.default_rng(args.seed or 0)
        max_gap = 0.0
        for _ in range(5):
            params = eq.ModelParams(rng.uniform(-np.pi, np.pi, (cfg.depth, n_rad, 3)))
            from .ringgrid import SampledImage

            x = SampledImage(grid, rng.uniform(0.05, 1.0, (grid.n_rings, grid.n_angles)))
            _, _, gap = twirl.twirl_identity_check(cfg, params, x)
            max_gap = max(max_gap, gap)
        print(f"twirl identity max gap over 5 random instances: {max_gap:.3e}")
        return 0
    if args.check == "correlations":
        ds = dt.load_dataset(args.data)
        x = ds.sample(args.sample)
        pairs = [(r, rp) for r in range(min(3, ds.grid.n_rings))
                 for rp in range(min(3, ds.grid.n_rings))]
        (out / "correlations.csv").write_text(rp_correlation(x, pairs))
        from .figures import render_correlation_figure

        render_correlation_figure(x, pairs, out / "correlations.png")
        print(f"wrote {out / 'correlations.csv'} and {out / 'correlations.png'}")
        return 0
    if args.check == "s-ring":
        model = sg.load_surrogate(args.surrogate)
        score = sg.ring_invariance_score(model, args.n_rad, args.n_orb)
        print(f"S_ring = {score:.3f}")
        return 0
    raise EqmlError(f"unknown check {args.check!r}")


def rp_correlation(x, pairs) -> str:
    return rp.correlation_export(x, pairs)


def cmd_protocol(args) -> int:
    cfg = _load_experiment_config(args)
    rows = hn.protocol_matrix(cfg)
    out = _out_dir(args)
    (out / "protocol_rows.csv").write_text(hn.rows_to_csv(rows))
    cells = rp.table1_panels(rows)
    (out / "protocol_panels.csv").write_text(rp.panels_to_csv(cells))
    summary = [
        {"panel": c.panel, "dataset": c.dataset, "variant": c.variant,
         "mean": c.mean, "std": c.std, "delta": c.delta}
        for c in cells
    ]
    (out / "protocol_summary.json").write_text(json.dumps(summary, indent=2))
    from .figures import render_panel_figure

    render_panel_figure(cells, out / "protocol_panels.png")
    for c in cells:
        print(f"panel {c.panel} {c.dataset} {c.variant}: {c.formatted()}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_experiment_config(args)
    rows = hn.sweep_experiment(cfg, threads=cfg.threads)
    out = _out_dir(args)
    (out / "sweep_rows.csv").write_text(hn.rows_to_csv(rows))
    series = rp.sweep_series(rows)
    (out / "sweep_series.csv").write_text(rp.series_to_csv(series))
    from .figures import render_sweep_figure

    render_sweep_figure(series, out / "sweep.png")
    print(f"wrote {out / 'sweep_rows.csv'}, {out / 'sweep_series.csv'}, {out / 'sweep.png'}")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.rows:
        rows.extend(hn.rows_from_csv(Path(path).read_text()))
    out = _out_dir(args)
    wrote = []
    panel_rows = [r for r in rows if r.surrogate == "none"]
    if panel_rows:
        cells = rp.table1_panels(panel_rows)
        (out / "panels.csv").write_text(rp.panels_to_csv(cells))
        from .figures import render_panel_figure

        render_panel_figure(cells, out / "panels.png")
        wrote += ["panels.csv", "panels.png"]
    sweep_rows = [r for r in rows if r.surrogate != "none"]
    if sweep_rows:
        series = rp.sweep_series(sweep_rows)
        (out / "series.csv").write_text(rp.series_to_csv(series))
        summary = [
            {"dataset": s.dataset, "train_variant": s.train_variant,
             "eval_variant": s.eval_variant, "surrogate": s.surrogate,
             "attack": s.attack,
             "points": [{"epsilon": e, "mean": m, "std": sd}
                        for e, m, sd in zip(s.epsilons, s.means, s.stds)]}
            for s in series
        ]
        (out / "series_summary.json").write_text(json.dumps(summary, indent=2))
        from .figures import render_sweep_figure

        render_sweep_figure(series, out / "series.png")
        wrote += ["series.csv", "series_summary.json", "series.png"]
    print(f"wrote {', '.join(wrote) if wrote else 'nothing (no rows)'} in {out}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eqml", description=__doc__)
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (EQML_THREADS overrides)")
    parser.add_argument("--desk-scale", action="store_true",
                        help="use the small desk-scale preset (the default config)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", help="generate the synthetic dataset").set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("encode", help="ingest IDX images and encode onto a ring grid")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--n-rad", type=int, default=4)
    p.add_argument("--n-orb", type=int, default=3)
    p.add_argument("--exclude", type=int, nargs="*", default=[])
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("train-quantum", help="train the equivariant model")
    p.add_argument("--data", required=True)
    p.set_defaults(fn=cmd_train_quantum)

    p = sub.add_parser("train-surrogate", help="train a classical surrogate")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", choices=("lc", "mlp"), default="lc")
    p.set_defaults(fn=cmd_train_surrogate)

    p = sub.add_parser("attack", help="craft an adversarial test set")
    p.add_argument("--data", required=True)
    p.add_argument("--surrogate", required=True)
    p.add_argument("--kind", choices=("fgsm", "pgd"), default="pgd")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--no-clamp", action="store_true")
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("transform", help="apply T1/T2/T3/adv to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=("clean", "t1", "t2", "t3"), required=True)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("analyze", help="twirl/correlation/S_ring diagnostics")
    p.add_argument("--check", choices=("twirl-identity", "correlations", "s-ring"),
                   required=True)
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--data")
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--surrogate")
    p.add_argument("--n-rad", type=int, default=4)
    p.add_argument("--n-orb", type=int, default=3)
    p.set_defaults(fn=cmd_analyze)

    sub.add_parser("protocol", help="run the train/test protocol matrix").set_defaults(
        fn=cmd_protocol
    )
    sub.add_parser("sweep", help="run the epsilon sweep").set_defaults(fn=cmd_sweep)

    p = sub.add_parser("report", help="aggregate raw result rows into tables and figures")
    p.add_argument("--rows", nargs="+", required=True)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except EqmlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
