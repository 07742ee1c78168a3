import sys, os, json, argparse, logging
from dataclasses import replace

from instance import GeneratorParams, InstanceParseError, InstanceValidationError, GeneratorParamsError
from instance import generate_instance, load_instance, save_instance, coverage_target
from gamma_lift import as_fraction, rounding_disagreements
from propagation import IncentiveSolution, PropagationDomainError, simulate_cascade, solution_cost
from milp_core import ModelError, SolverError
from solver import FORMULATIONS, solve_instance, report_to_dict, exit_code
from settings import load_settings, bench_defaults
import bench

__version__ = "1.0.0"
APP_NAME = "glcip"

log = logging.getLogger(APP_NAME)

EXIT_OK, EXIT_ERROR, EXIT_LIMIT = 0, 1, 2
LOG_FORMAT = "[glcip] %(levelname)s %(name)s: %(message)s"


class _Parser(argparse.ArgumentParser):
    """Gebruiksfouten geven exitcode 1 (argparse zelf kiest 2, en 2 betekent hier 'limiet')."""
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: fout: {message}\n")


def _setup_logging(verbose: bool):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format=LOG_FORMAT, stream=sys.stderr, force=True)


def _write_json(data, path: str = ""):
    text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)
    if not path or path == "-":
        sys.stdout.write(text + "\n")
        return
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text + "\n")


# ---------- Oplossingsbestanden ----------
def save_solution(sol: IncentiveSolution, path: str):
    _write_json({"incentives": list(sol.incentives)}, path)

def load_solution(path: str) -> IncentiveSolution:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict) or not isinstance(data.get("incentives"), list):
        raise ValueError(f"{path}: verwacht een object met een lijst 'incentives'")
    return IncentiveSolution(tuple(int(p) for p in data["incentives"]))


# ---------- Commando's ----------
def cmd_generate(args) -> int:
    params = GeneratorParams(n=args.n, k=args.k, beta=args.beta, seed=args.seed,
                             weight_range=(args.weight_min, args.weight_max),
                             alpha=as_fraction(args.alpha), gamma=as_fraction(args.gamma))
    inst = generate_instance(params)
    save_instance(inst, args.out)
    log.info("instantie geschreven naar %s (n=%d, m=%d)", args.out, inst.node_count, inst.arc_count)
    return EXIT_OK


def _load_with_overrides(args):
    inst = load_instance(args.instance)
    if args.alpha is not None:
        inst = replace(inst, alpha=as_fraction(args.alpha))
    if args.gamma is not None:
        inst = replace(inst, gamma=as_fraction(args.gamma))
    return inst


def cmd_solve(args) -> int:
    inst = _load_with_overrides(args)
    if args.verbose and inst.gamma != 1:
        log.info("%d afrondingsverschillen tussen afronden en geliftte eis", len(rounding_disagreements(inst)))
    report = solve_instance(inst, args.formulation, time_limit=args.time_limit, cutoff=args.cutoff,
                            node_limit=args.node_limit)
    doc = report_to_dict(report, inst, args.formulation, instance_path=args.instance, seed=args.seed,
                         timings=not args.no_timings)
    _write_json(doc, args.report)
    if args.out and report.solution is not None:
        save_solution(report.solution, args.out)
    return exit_code(report.status)


def cmd_verify(args) -> int:
    inst = _load_with_overrides(args)
    sol = load_solution(args.solution)
    sol.check(inst)
    cascade = simulate_cascade(inst, sol)
    target = coverage_target(inst)
    feasible = len(cascade.activated) >= target
    _write_json({
        "feasible": feasible,
        "cost": solution_cost(inst, sol),
        "activated": len(cascade.activated),
        "target": target,
        "rounds": max(cascade.rounds.values(), default=-1) + 1,
    })
    return EXIT_OK if feasible else EXIT_ERROR


def cmd_bench(args) -> int:
    if args.write_grid:
        rows = bench.grid_rows(full=args.full_grid, repeats=args.repeats)
        bench.write_manifest(rows, args.write_grid)
        log.info("manifest met %d regels geschreven naar %s", len(rows), args.write_grid)
        return EXIT_OK
    if not args.manifest:
        raise ValueError("geef een manifest of --write-grid")
    settings = load_settings()
    if args.time_limit is not None:
        settings["time_limit"] = args.time_limit
    results = bench.run_manifest(args.manifest, workers=args.workers, settings=settings)
    if not args.no_store:
        from models import get_engine
        bench.store_results(results, get_engine(args.db or bench_defaults(settings)["results_db"] or None))
    table = bench.aggregate(results)
    if args.out:
        bench.write_aggregate(table, args.out)
    else:
        sys.stdout.write(table.to_csv(index=False, float_format="%.2f"))
    failed = sum(1 for r in results if r["status"] == "error")
    if failed:
        log.warning("%d van %d manifestregels mislukt", failed, len(results))
    return EXIT_OK


# ---------- Parser ----------
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=APP_NAME, description="Exacte solver voor het gegeneraliseerde least cost influence problem.")
    p.add_argument("--version", action="version", version=f"{APP_NAME} {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="DEBUG-logging op stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="Watts-Strogatz-instantie genereren")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--beta", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--alpha", default="1")
    g.add_argument("--gamma", default="1")
    g.add_argument("--weight-min", type=int, default=1)
    g.add_argument("--weight-max", type=int, default=10)
    g.add_argument("--out", required=True, help=".json of tekstformaat")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="instantie exact oplossen")
    s.add_argument("instance")
    s.add_argument("--formulation", choices=FORMULATIONS, default="arc")
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--node-limit", type=int, default=None)
    s.add_argument("--cutoff", type=float, default=None)
    s.add_argument("--seed", type=int, default=None, help="alleen vastgelegd in het rapport")
    s.add_argument("--alpha", default=None)
    s.add_argument("--gamma", default=None)
    s.add_argument("--out", default="", help="incumbent als JSON-oplossingsbestand")
    s.add_argument("--report", default="", help="rapport naar bestand i.p.v. stdout")
    s.add_argument("--no-timings", action="store_true", help="tijden weglaten (byte-identieke rapporten)")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="oplossing controleren met de cascade")
    v.add_argument("instance")
    v.add_argument("solution")
    v.add_argument("--alpha", default=None)
    v.add_argument("--gamma", default=None)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="manifest draaien en per cel middelen")
    b.add_argument("manifest", nargs="?", default="")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--db", default="", help="resultatenbestand (SQLite) of database-URL")
    b.add_argument("--no-store", action="store_true")
    b.add_argument("--out", default="", help="CSV met gemiddelden")
    b.add_argument("--write-grid", default="", help="manifest voor het rooster schrijven en stoppen")
    b.add_argument("--full-grid", action="store_true", help="n in {50, 75, 100}, K in {4, 8, 12, 16}")
    b.add_argument("--repeats", type=int, default=5)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except (InstanceParseError, InstanceValidationError, GeneratorParamsError, PropagationDomainError) as e:
        print(f"{APP_NAME}: {e}", file=sys.stderr)
    except (ModelError, SolverError) as e:
        log.error("solver: %s", e)
    except (OSError, ValueError) as e:
        print(f"{APP_NAME}: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
