"""Command-line front end: serve, repl, batch, grasp planning, lexicon ops."""

from __future__ import annotations

import argparse
import json
import sys

from . import lexicon as lexicon_mod
from .config import load_config
from .grasp import cem, cloud as cloud_io, planner, segmentation
from .kinematics import default_chain, load_chain
from .server import Service, run_batch
from .sim import default_world, load_world
from .transport import HttpServer, NdjsonServer


def _build_service(args) -> Service:
    config = load_config(getattr(args, "config", None))
    chain = load_chain(args.chain) if getattr(args, "chain", None) else default_chain()
    world = load_world(args.world, chain) if getattr(args, "world", None) \
        else default_world(chain)
    lex_path = getattr(args, "lexicon", None)
    lex = lexicon_mod.Lexicon.load(lex_path) if lex_path else lexicon_mod.Lexicon.default()
    return Service(world, lex, config, chain, lexicon_path=lex_path)


def cmd_serve(args) -> int:
    service = _build_service(args)
    if not args.fast:
        service.config.realtime = True  # operator-facing: pace ticks in real time
    ndjson = NdjsonServer(service, args.host, args.port)
    if args.http_port is not None:
        http_port = args.http_port
    else:
        http_port = args.port + 1 if args.port else 0  # 0: let the OS pick both
    http = HttpServer(service, args.host, http_port, static_dir=args.static)
    http.start()
    print(f"ndjson on {args.host}:{ndjson.port}  http/ws on {args.host}:{http.port}",
          flush=True)
    try:
        ndjson.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        ndjson.shutdown()
        http.shutdown()
    return 0


def cmd_repl(args) -> int:
    service = _build_service(args)
    session = service.create_session()
    print(f"session {session.id}; type commands, 'exit' to leave")
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            break
        if not line:
            continue
        if line in ("exit",):
            break
        ticks = 0
        last = None
        for kind, payload in service.process(session.id, line):
            if kind == "tick":
                ticks += 1
                last = payload
                for event in payload.get("events", []):
                    if event.get("type") != "completed":
                        print(f"  [{payload['time']:.2f}s] {event}")
            elif kind == "sdc_result":
                for item in payload["sdcs"]:
                    print(f"  sdc: {json.dumps(item)}")
            elif kind == "grasp_menu":
                print(f"  grasp menu for {payload['object']}:")
                for cand in payload["candidates"]:
                    print(f"    {cand['index']}: q={cand['q']:.3f} "
                          f"center=({cand['center'][0]:.3f},{cand['center'][1]:.3f}) "
                          f"angle={cand['angle']:.2f}")
                print("  say 'grasp number <i>' to execute one")
            elif kind == "error":
                print(f"  error[{payload['stage']}] {payload['error']}: "
                      f"{payload['detail']}")
            else:
                print(f"  {kind}: {json.dumps(payload)}")
        if last is not None:
            ee = last["ee"]["position"]
            print(f"  done: {ticks} ticks, ee at "
                  f"({ee[0]:.3f}, {ee[1]:.3f}, {ee[2]:.3f})")
    return 0


def cmd_batch(args) -> int:
    lex = lexicon_mod.Lexicon.load(args.lexicon) if args.lexicon \
        else lexicon_mod.Lexicon.default()
    report = run_batch(args.corpus, lex)
    for entry in report["results"]:
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"{status} line {entry['line']}: {entry['command']}")
        if not entry["pass"]:
            print(f"     expected {json.dumps(entry['expected'])}")
            print(f"     got      {json.dumps(entry['result'])}")
    print(f"{report['passed']}/{report['total']} passed "
          f"({report['annotated']} annotated)")
    return 0 if report["ok"] else 1


def cmd_grasp_plan(args) -> int:
    config = load_config(getattr(args, "config", None))
    load = cloud_io.load_csv if args.cloud.endswith(".csv") else cloud_io.load_ply
    cloud = load(args.cloud)
    _, above = segmentation.remove_plane(
        cloud, config.ransac_threshold, config.ransac_iterations, seed=args.seed)
    clusters = segmentation.euclidean_cluster(
        above, config.cluster_tolerance, config.cluster_min_size,
        config.cluster_max_size)
    if not clusters:
        print("no clusters above the plane", file=sys.stderr)
        return 1
    cluster = clusters[min(args.cluster, len(clusters) - 1)]
    candidates = planner.sample_candidates(cluster, n=args.samples, seed=args.seed)
    params = cem.CEMParams(config.cem.population, config.cem.elite_fraction,
                           config.cem.gmm_components, config.cem.iterations,
                           config.cem.init_cov_scale)
    candidates.append(cem.cem_refine(cluster, params, seed=args.seed))
    chosen = planner.select_diverse(candidates, args.eps, args.k,
                                    config.diversity_angle_weight)
    out = [c.to_wire(index=i) for i, c in enumerate(chosen, start=1)]
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_lexicon(args) -> int:
    if args.lexicon_op == "show":
        lex = lexicon_mod.Lexicon.load(args.file) if args.file \
            else lexicon_mod.Lexicon.default()
        for cat in lexicon_mod.CATEGORIES:
            print(cat)
            for name, entry in lex.categories[cat].items():
                flag = " (extension)" if entry.get("extension") else ""
                print(f"  {name}{flag}: {', '.join(entry['synonyms'])}")
        return 0
    if args.lexicon_op == "learn":
        lex = lexicon_mod.Lexicon.load(args.file) if args.file \
            else lexicon_mod.Lexicon.default()
        delta = lex.learn(args.new_word, args.target)
        print(f"{delta.category}.{delta.high_level} += {delta.synonym}")
        if args.file:
            lex.save(args.file)
        return 0
    if args.lexicon_op == "import":
        lex = lexicon_mod.Lexicon.load(args.file) if args.file \
            else lexicon_mod.Lexicon.default()
        added = lex.import_synonyms(args.synonyms)
        print(f"added {added} synonyms")
        if args.file:
            lex.save(args.file)
        return 0
    if args.lexicon_op == "diff":
        a = lexicon_mod.Lexicon.load(args.a)
        b = lexicon_mod.Lexicon.load(args.b) if args.b else lexicon_mod.Lexicon.default()
        result = lexicon_mod.diff(b, a)
        print(json.dumps(result, indent=2))
        return 0
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verbalarm",
        description="verbal robot programming: commands to SDCs, trajectories "
                    "and grasp menus on a simulated 7-DoF arm")
    parser.add_argument("--config", help="JSON config file (also VERBALARM_CONFIG)")
    sub = parser.add_subparsers(dest="op", required=True)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--world", help="world JSON file")
    p.add_argument("--lexicon", help="lexicon JSON file (learned words autosave here)")
    p.add_argument("--chain", help="kinematic chain JSON file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7470)
    p.add_argument("--http-port", type=int, default=None,
                   help="console/WebSocket port (default: port+1)")
    p.add_argument("--static", help="directory of built console assets")
    p.add_argument("--fast", action="store_true",
                   help="stream executions as fast as possible (no pacing)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("repl", help="interactive local session")
    p.add_argument("--world")
    p.add_argument("--lexicon")
    p.add_argument("--chain")
    p.set_defaults(fn=cmd_repl)

    p = sub.add_parser("batch", help="run a command corpus and check annotations")
    p.add_argument("corpus")
    p.add_argument("--lexicon")
    p.set_defaults(fn=cmd_batch)

    p = sub.add_parser("grasp", help="grasp planning utilities")
    gsub = p.add_subparsers(dest="grasp_op", required=True)
    g = gsub.add_parser("plan", help="plan a diverse grasp set on a point cloud")
    g.add_argument("cloud", help="ASCII PLY or CSV cloud")
    g.add_argument("--eps", type=float, default=0.05)
    g.add_argument("--k", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--samples", type=int, default=64)
    g.add_argument("--cluster", type=int, default=0,
                   help="cluster rank to plan on (0 = largest)")
    g.add_argument("--out", help="write the JSON menu here instead of stdout")
    g.set_defaults(fn=cmd_grasp_plan)

    p = sub.add_parser("lexicon", help="inspect or edit a lexicon file")
    lsub = p.add_subparsers(dest="lexicon_op", required=True)
    l = lsub.add_parser("show")
    l.add_argument("--file")
    l.set_defaults(fn=cmd_lexicon)
    l = lsub.add_parser("learn")
    l.add_argument("new_word")
    l.add_argument("target")
    l.add_argument("--file")
    l.set_defaults(fn=cmd_lexicon)
    l = lsub.add_parser("import")
    l.add_argument("synonyms", help="tab-separated synonym file")
    l.add_argument("--file")
    l.set_defaults(fn=cmd_lexicon)
    l = lsub.add_parser("diff")
    l.add_argument("a")
    l.add_argument("b", nargs="?")
    l.set_defaults(fn=cmd_lexicon)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
