"""Command-line interface.

Subcommands: generate, sample, select, evaluate, pipeline, serve. Every
stochastic step takes --seed; artifacts are plain JSON files. The data
directory for the service defaults to $CONCEPTSCOPE_DATA_DIR.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .datagen import (HexagonConfig, VitalsConfig, catalog_to_dict, gen_hexagon,
                      gen_vitals)
from .diversity import load_proposal_set, save_proposal_set
from .errors import ConceptScopeError, InputError
from .evaluate import method_table_markdown, save_report
from .hmc import HmcConfig, PinnedConcept, filter_predictive, load_pool, save_pool
from .model import PriorSpec, dataset_from_csv, load_dataset, save_dataset
from .pipeline import (PRESETS, PipelineConfig, preset_hmc, preset_search,
                       evaluate_selection, run_pipeline, select_from_pool)


def _add_seed(p):
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")


def _add_hmc_flags(p):
    p.add_argument("--step-size", type=float, default=0.001)
    p.add_argument("--leapfrog-steps", type=int, default=3)
    p.add_argument("--burn-in-steps", type=int, default=1000)
    p.add_argument("--samples-per-restart", type=int, default=100)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--std-theta", type=float, default=1.0)
    p.add_argument("--std-phi", type=float, default=1.0)
    p.add_argument("--init", choices=["search", "prior"], default="search")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="replace the sampler flags with a reproduction preset")


def _hmc_from_args(args) -> tuple[HmcConfig, dict]:
    if args.preset:
        return preset_hmc(args.preset, args.seed), preset_search(args.preset)
    cfg = HmcConfig(step_size=args.step_size, leapfrog_steps=args.leapfrog_steps,
                    burn_in_steps=args.burn_in_steps,
                    samples_per_restart=args.samples_per_restart,
                    restarts=args.restarts, seed=args.seed, thinning=args.thinning)
    return cfg, {}


def _load_any_dataset(path: str):
    if path.endswith(".csv"):
        return dataset_from_csv(path)
    return load_dataset(path)


def _pin_from_args(args, data):
    if getattr(args, "pin", None) is None:
        return None
    with open(args.pin) as fh:
        doc = json.load(fh)
    return PinnedConcept(column_index=int(doc.get("column_index", 0)),
                         values=np.array(doc["values"], dtype=np.float64))


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
    else:
        conf = {}
    try:
        if args.kind == "hexagon":
            cfg = HexagonConfig(seed=args.seed, **conf)
            data, catalog = gen_hexagon(cfg)
        else:
            cfg = VitalsConfig(seed=args.seed, **{k: v for k, v in conf.items()})
            data, catalog = gen_vitals(cfg)
    except TypeError as exc:
        print(f"error: invalid config field: {exc}", file=sys.stderr)
        return 2
    save_dataset(data, out / "dataset.json")
    with open(out / "catalog.json", "w") as fh:
        json.dump(catalog_to_dict(catalog), fh)
    print(f"dataset: N={data.n_points} D={data.n_features} -> {out / 'dataset.json'}")
    print(f"catalog: {catalog.n_concepts} concepts, "
          f"{len(catalog.valid_combinations)} valid combinations, "
          f"min_concepts={catalog.min_concepts}")
    return 0


def cmd_sample(args) -> int:
    data = _load_any_dataset(args.dataset)
    hmc, search = _hmc_from_args(args)
    from .hmc import run_restarts
    pin = _pin_from_args(args, data)
    pool = run_restarts(data, args.concepts, PriorSpec(args.std_theta, args.std_phi),
                        hmc, pinned=pin, init=args.init, **search)
    pool = filter_predictive(pool, args.t_acc)
    save_pool(pool, args.out)
    print(f"pool: {len(pool)} samples at accuracy >= {args.t_acc} -> {args.out}")
    return 0


def cmd_select(args) -> int:
    data = _load_any_dataset(args.dataset)
    pool = load_pool(args.pool, data)
    cfg = PipelineConfig(n_concepts=pool.provenance.get("n_concepts", 1) or 1,
                         hmc=HmcConfig(seed=args.seed), M=args.M,
                         method=args.method, metric=args.metric,
                         singles=args.singles)
    selection, _ = select_from_pool(pool, cfg)
    save_proposal_set(selection, args.out)
    print(f"selected {len(selection)} proposals ({args.method}/{args.metric}) "
          f"-> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    data = _load_any_dataset(args.dataset)
    if data.ground_truth is None:
        print("error: dataset has no ground-truth catalog to evaluate against",
              file=sys.stderr)
        return 2
    pool = load_pool(args.pool, data)
    selection = load_proposal_set(args.proposals)
    cfg = PipelineConfig(n_concepts=pool.provenance.get("n_concepts", 1) or 1,
                         hmc=HmcConfig(seed=selection.seed), M=selection.M,
                         method=selection.method, metric=selection.metric,
                         singles=args.singles, pin_concept=args.pin_concept)
    if args.singles:
        from .diversity import split_to_singles
        items = split_to_singles(pool)
        proposals = tuple(items[i].activation for i in selection.member_indices)
    else:
        proposals = tuple(pool.samples[i].activations for i in selection.member_indices)
    pinned = next((s.pinned for s in pool.samples if s.pinned is not None), None)
    report = evaluate_selection(proposals, data.ground_truth, cfg, pinned)
    save_report(report, args.out)
    print(f"{report.mode}: {report.found_count}/{report.found_total} -> {args.out}")
    return 0


def cmd_pipeline(args) -> int:
    data = _load_any_dataset(args.dataset)
    hmc, search = _hmc_from_args(args)
    cfg = PipelineConfig(n_concepts=args.concepts, hmc=hmc,
                         prior=PriorSpec(args.std_theta, args.std_phi),
                         t_acc=args.t_acc, M=args.M, method=args.method,
                         metric=args.metric, singles=args.singles,
                         pin_concept=args.pin_concept, init=args.init, **search)
    pin = _pin_from_args(args, data)
    result = run_pipeline(data, cfg, pinned=pin)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_pool(result.pool, out / "pool.json")
    save_proposal_set(result.selection, out / "proposals.json")
    with open(out / "request.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
    if result.report is not None:
        save_report(result.report, out / "report.json")
        rep = result.report
        with open(out / "report.md", "w") as fh:
            fh.write(method_table_markdown(
                [(cfg.method, cfg.metric, f"{rep.found_count}/{rep.found_total}")])
                + "\n\n" + rep.to_markdown() + "\n")
        print(f"{rep.mode}: {rep.found_count}/{rep.found_total}"
              + (f" (min M = {rep.min_M})" if rep.min_M is not None else ""))
    print(f"pool: {len(result.pool)} samples; proposals: {len(result.selection)}; "
          f"artifacts in {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    frontend = args.frontend or os.environ.get("CONCEPTSCOPE_FRONTEND")
    if frontend is None and Path("frontend/dist").is_dir():
        frontend = "frontend/dist"
    app = create_app(args.data_dir, workers=args.workers, frontend_dir=frontend)
    if frontend:
        print(f"serving UI from {frontend} at /ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conceptscope",
                                 description="Diverse concept-bottleneck explanations")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset + catalog")
    g.add_argument("kind", choices=["hexagon", "vitals"])
    g.add_argument("--config", help="JSON file with generator config fields")
    g.add_argument("--out", required=True)
    _add_seed(g)
    g.set_defaults(fn=cmd_generate)

    s = sub.add_parser("sample", help="draw the posterior proposal pool")
    s.add_argument("--dataset", required=True)
    s.add_argument("--concepts", "-K", type=int, required=True)
    s.add_argument("--t-acc", type=float, default=0.9)
    s.add_argument("--pin", help="JSON file {column_index, values} to condition on")
    s.add_argument("--out", required=True)
    _add_hmc_flags(s)
    _add_seed(s)
    s.set_defaults(fn=cmd_sample)

    se = sub.add_parser("select", help="pick a diverse subset from a pool")
    se.add_argument("--dataset", required=True)
    se.add_argument("--pool", required=True)
    se.add_argument("--method", choices=["greedy", "kmeans"], default="greedy")
    se.add_argument("--metric", default="euclidean",
                    choices=["euclidean", "cosine", "absolute", "percent"])
    se.add_argument("-M", type=int, default=20)
    se.add_argument("--singles", action="store_true")
    se.add_argument("--out", required=True)
    _add_seed(se)
    se.set_defaults(fn=cmd_select)

    ev = sub.add_parser("evaluate", help="match proposals against the catalog")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--pool", required=True)
    ev.add_argument("--proposals", required=True)
    ev.add_argument("--singles", action="store_true")
    ev.add_argument("--pin-concept", type=int)
    ev.add_argument("--out", required=True)
    _add_seed(ev)
    ev.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("pipeline", help="sample, filter, select and evaluate")
    p.add_argument("--dataset", required=True)
    p.add_argument("--concepts", "-K", type=int, required=True)
    p.add_argument("--t-acc", type=float, default=0.9)
    p.add_argument("--method", choices=["greedy", "kmeans"], default="greedy")
    p.add_argument("--metric", default="euclidean",
                   choices=["euclidean", "cosine", "absolute", "percent"])
    p.add_argument("-M", type=int, default=20)
    p.add_argument("--singles", action="store_true")
    p.add_argument("--pin", help="JSON file {column_index, values} to condition on")
    p.add_argument("--pin-concept", type=int,
                   help="catalog concept index to pin (needs ground truth)")
    p.add_argument("--out", required=True)
    _add_hmc_flags(p)
    _add_seed(p)
    p.set_defaults(fn=cmd_pipeline)

    sv = sub.add_parser("serve", help="run the HTTP JSON service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--data-dir",
                    default=os.environ.get("CONCEPTSCOPE_DATA_DIR", "./conceptscope-data"))
    sv.add_argument("--workers", type=int, default=1,
                    help="job worker threads (default 1, FIFO)")
    sv.add_argument("--frontend",
                    help="directory with the built web UI (served at /ui)")
    sv.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConceptScopeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
