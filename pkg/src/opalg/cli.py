"""Command-line interface for opalg."""

import argparse
import os
import sys
import threading
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from typing import Any

from .complexes import DegreeWindow, betti_numbers
from .config import EngineConfig, load_config
from .differentials import cohomology, cotangent, cotangent_invariance, omega, relative_ses
from .enveloping import (
    EnvelopingAlgebra,
    check_coequalizer,
    check_prefix_colimit,
    derived_tensor,
    graded_formula_dims,
    trivial_module,
)
from .exactla import Field
from .exceptions import (
    ConfigurationError,
    FieldArithmeticError,
    OpalgError,
    ValidationError,
    VerificationError,
    WorkspaceParseError,
)
from .logging_config import PerformanceTimer, configure_logging, get_logger, log_performance
from .models import Certificate, TaskResult
from .operads import check_operad
from .reports import ReportDocument, ResolutionCache
from .resolutions import resolve
from .splittings import averaging_splitting, canonical_splitting, check_splitting
from .tangent import tangent, transport, transport_independence
from .workspace import TaskSpec, WorkspaceBuilder, WorkspaceFile, load_workspace

# Get logger for this module
logger = get_logger(__name__)

__version__ = "0.1.0"

OPERAD_TASKS = {"check-operad", "check-splitting"}
MAP_TASKS = {"transport"}

TASK_OPTIONS: dict[str, set[str]] = {
    "check-operad": {"arity"},
    "check-splitting": {"arity", "splitting", "slots"},
    "free": set(),
    "resolve": {"window", "mode"},
    "envelope": {"cap", "coequalizer", "colimit"},
    "omega": {"over"},
    "ses": {"prefixes"},
    "cotangent": {"window", "mode", "over", "invariance"},
    "cohomology": {"window", "mode", "over"},
    "tangent": {"window"},
    "transport": {"window", "independence"},
    "homology": {"window", "of"},
}


def parse_arguments(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="opalg",
        description="Exact computations with dg operads, their algebras, enveloping algebras and cotangent complexes",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run examples.opw
  %(prog)s run examples.opw --field f5 --report report.json
  %(prog)s run examples.opw --parallel -j 4 --cache ~/.opalg/cache
  %(prog)s clear-cache

Task commands (inside a workspace):
  check-operad, check-splitting, free, resolve, envelope, omega, ses,
  cotangent, cohomology, tangent, transport, homology
        """,
    )
    parser.add_argument("-V", "--version", action="version", version=f"%(prog)s {__version__}")

    # Logging and debugging options, shared by every command
    common = argparse.ArgumentParser(add_help=False)
    debug_group = common.add_argument_group("Logging and Debugging")
    debug_group.add_argument("-D", "--debug", action="store_true", help="Enable debug mode with detailed logging")
    debug_group.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    debug_group.add_argument(
        "-L",
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="WARNING",
        help="Set logging level (default: WARNING)",
    )
    debug_group.add_argument("-C", "--no-console-log", action="store_true", help="Disable console logging")
    debug_group.add_argument("-F", "--no-file-log", action="store_true", help="Disable file logging")

    cache_common = argparse.ArgumentParser(add_help=False)
    cache_group = cache_common.add_argument_group("Cache")
    cache_group.add_argument("--cache", metavar="DIR", help="Resolution cache directory")

    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    run = commands.add_parser("run", parents=[common, cache_common], help="Run the tasks of a workspace file")
    run.add_argument("workspace", metavar="WORKSPACE", help="Workspace file")
    engine_group = run.add_argument_group("Engine")
    engine_group.add_argument("--field", metavar="q|f<p>", help="Coefficient field (overrides the workspace)")
    engine_group.add_argument("--stage-cap", type=int, metavar="N", help="Maximum resolution stages")
    engine_group.add_argument("--parallel", action="store_true", help="Run independent tasks concurrently")
    engine_group.add_argument("-j", "--workers", type=int, metavar="N", help="Worker threads (with --parallel)")
    run.add_argument("--no-cache", action="store_true", help="Neither read nor write the resolution cache")
    run.add_argument("--report", metavar="PATH", help="Write the JSON report to PATH")

    commands.add_parser("clear-cache", parents=[common, cache_common], help="Delete cached resolutions")

    if not (argv if argv is not None else sys.argv[1:]):
        parser.print_help()
        sys.exit(0)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        sys.exit(0)
    return args


def validate_arguments(args: argparse.Namespace) -> None:
    """
    Validate command line arguments before processing.

    Raises:
        ValidationError: If any arguments are invalid
    """
    if args.command != "run":
        return
    if not os.path.isfile(args.workspace):
        raise ValidationError(
            f"Workspace file not found: {args.workspace}",
            field="workspace",
            value=args.workspace,
            suggestion="Pass the path of an existing workspace file",
        )
    if args.field:
        Field.from_spec(args.field)
    if args.workers is not None and args.workers < 1:
        raise ValidationError("Worker count must be at least 1", field="workers", value=str(args.workers))
    if args.stage_cap is not None and args.stage_cap < 1:
        raise ValidationError("Stage cap must be at least 1", field="stage_cap", value=str(args.stage_cap))


def print_configuration_summary(config: EngineConfig, doc: WorkspaceFile) -> None:
    print("📋 Configuration:")
    print(f"  Workspace: {doc.path} ({len(doc.tasks)} tasks)")
    print(f"  Field: {config.field}")
    print(f"  Default weight cap: {config.weight_cap}; degree floor: {config.degree_floor}; stages: {config.stage_cap}")
    print(f"  Workers: {config.workers}{' (parallel tasks)' if config.parallel else ''}")
    print(f"  Cache: {config.cache_dir if config.use_cache else 'disabled'}")
    print()


def _flag(value: Any) -> bool:
    return str(value).lower() in ("yes", "true", "on", "1")


class TaskRunner:
    """Runs the tasks of a workspace in declaration order and collects a report."""

    def __init__(self, doc: WorkspaceFile, config: EngineConfig, cache: ResolutionCache | None = None):
        self.doc = doc
        self.config = config
        self.cache = cache
        self.logger = get_logger(__name__)
        self.field = Field.from_spec(config.field)
        self.builder = WorkspaceBuilder(doc, self.field, config.weight_cap, config.workers)
        self._build_lock = threading.RLock()
        self.handlers: dict[str, Callable[[TaskSpec, TaskResult], None]] = {
            "check-operad": self._check_operad,
            "check-splitting": self._check_splitting,
            "free": self._free,
            "resolve": self._resolve,
            "envelope": self._envelope,
            "omega": self._omega,
            "ses": self._ses,
            "cotangent": self._cotangent,
            "cohomology": self._cohomology,
            "tangent": self._tangent,
            "transport": self._transport,
            "homology": self._homology,
        }
        self.logger.info(f"task runner initialized over {self.field.name} with {len(doc.tasks)} tasks")

    @log_performance("Workspace Run")
    def execute(self) -> ReportDocument:
        specs = list(enumerate(self.doc.tasks, start=1))
        if self.config.parallel and len(specs) > 1:
            with ThreadPoolExecutor(max_workers=self.config.max_workers) as pool:
                results = list(pool.map(lambda item: self.run_task(*item), specs))
        else:
            results = [self.run_task(i, spec) for i, spec in specs]
        return ReportDocument(__version__, self.doc.digest, self.field.spec, results)

    def run_task(self, index: int, spec: TaskSpec) -> TaskResult:
        result = TaskResult(index, spec.command, spec.target)
        try:
            self._validate_task(spec)
            with PerformanceTimer(f"task {index} {spec.command} {spec.target}", self.logger):
                self.handlers[spec.command](spec, result)
        except VerificationError as e:
            self.logger.warning(f"task {index} ({spec.command} {spec.target}) failed: {e.message}")
            result.status = "failed"
            result.message = e.message
        except OpalgError as e:
            self.logger.error(f"task {index} ({spec.command} {spec.target}) aborted: {e.message}")
            result.status = "error"
            result.message = e.message
        return result

    def _validate_task(self, spec: TaskSpec) -> None:
        if spec.command not in self.handlers:
            raise ValidationError(
                f"Unknown task command '{spec.command}' at line {spec.line}",
                field="command",
                value=spec.command,
                expected_format=", ".join(sorted(self.handlers)),
            )
        unknown = sorted(set(spec.options) - TASK_OPTIONS[spec.command])
        if unknown:
            raise ValidationError(
                f"Task '{spec.command}' does not take option(s) {', '.join(unknown)}",
                field="option",
                value=unknown[0],
                expected_format=", ".join(sorted(TASK_OPTIONS[spec.command])) or "no options",
            )
        if spec.command in OPERAD_TASKS:
            table, kind = self.doc.operads, "operad"
        elif spec.command in MAP_TASKS:
            table, kind = self.doc.maps, "map"
        else:
            table, kind = self.doc.algebras, "algebra"
        if spec.target not in table:
            raise ValidationError(f"Task '{spec.command}' needs an {kind}, got '{spec.target}'", field="target", value=spec.target)

    # -- shared helpers -------------------------------------------------------------------

    def _operad(self, name: str):
        with self._build_lock:
            return self.builder.operad(name)

    def _presentation(self, name: str):
        with self._build_lock:
            return self.builder.presentation(name)

    def _algebra(self, name: str):
        with self._build_lock:
            return self.builder.algebra(name, self.config.leibniz_samples)

    def _map(self, name: str):
        with self._build_lock:
            return self.builder.algebra_map(name)

    def _window(self, spec: TaskSpec) -> DegreeWindow:
        value = spec.options.get("window")
        if value is None:
            return DegreeWindow(self.config.degree_floor, 1)
        if not isinstance(value, tuple):
            raise ValidationError("Windows are written lo..hi", field="window", value=str(value), expected_format="lo..hi")
        return DegreeWindow(*value)

    def _int(self, spec: TaskSpec, key: str, default: int | None = None) -> int | None:
        value = spec.options.get(key, default)
        if value is not None and not isinstance(value, int):
            raise ValidationError(f"Option '{key}' takes an integer", field=key, value=str(value))
        return value

    def _mode(self, spec: TaskSpec) -> str:
        return str(spec.options.get("mode", "minimal"))

    @staticmethod
    def _record(result: TaskResult, name: str, cert: Certificate) -> None:
        result.tables[name] = cert.to_dict()
        if not cert.passed:
            result.status = "failed"
            result.message = result.message or f"{cert.name}: {cert.failure}"

    @staticmethod
    def _trusted(window: DegreeWindow, weight: int | None) -> dict[str, Any]:
        return {
            "window": [window.lo, window.hi],
            "degrees": list(window.trusted) if window.trusted else None,
            "weight": weight,
        }

    def _resolution(self, name: str, window: DegreeWindow, mode: str):
        b = self._algebra(name)
        key = None
        if self.cache is not None:
            key = self.cache.cache_key(b.presentation, window.lo, mode, self.config.stage_cap)
            cached = self.cache.get_cached_resolution(key, b, self.config.workers)
            if cached is not None:
                self.logger.info(f"using cached resolution of {name}")
                return cached
            self.logger.debug(f"cache miss for {name}")
        res = resolve(b, window.lo, mode, self.config.stage_cap, self.config.workers)
        if key is not None:
            self.cache.cache_resolution(key, res)
        return res

    # -- task commands --------------------------------------------------------------------

    def _check_operad(self, spec: TaskSpec, result: TaskResult) -> None:
        o = self._operad(spec.target)
        arity = min(self._int(spec, "arity", o.max_arity), o.max_arity)
        cert = check_operad(o, arity)
        result.trusted = {"max_arity": arity}
        result.tables["dims"] = {n: o.dim(n) for n in range(1, arity + 1)}
        self._record(result, "certificate", cert)

    def _check_splitting(self, spec: TaskSpec, result: TaskResult) -> None:
        o = self._operad(spec.target)
        arity = min(self._int(spec, "arity", o.max_arity), o.max_arity)
        kind = str(spec.options.get("splitting", "attached"))
        if kind == "attached":
            t = o.splitting if o.splitting is not None else averaging_splitting(o, arity)
        elif kind == "averaging":
            t = averaging_splitting(o, arity)
        elif kind == "canonical":
            t = canonical_splitting(o)
        else:
            raise ValidationError(
                f"Unknown splitting '{kind}'", field="splitting", value=kind, expected_format="attached, averaging or canonical"
            )
        cert = check_splitting(o, t, arity, all_slots=_flag(spec.options.get("slots", "no")))
        result.trusted = {"max_arity": cert.bounds["max_arity"]}
        self._record(result, "certificate", cert)

    def _free(self, spec: TaskSpec, result: TaskResult) -> None:
        a = self._algebra(spec.target)
        result.trusted = {"weight": a.trusted_weight}
        result.tables["weight_dims"] = a.weight_dims()
        result.tables["degree_dims"] = {n: a.complex.dim(n) for n in a.complex.support}
        result.tables["generators"] = a.presentation.generator_log()
        result.tables["leibniz_checks"] = a.leibniz_checks

    def _resolve(self, spec: TaskSpec, result: TaskResult) -> None:
        window = self._window(spec)
        res = self._resolution(spec.target, window, self._mode(spec))
        c = res.algebra
        result.trusted = self._trusted(window, c.trusted_weight)
        result.tables["generators"] = res.presentation.generator_log()
        result.tables["killed"] = [asdict(k) for k in res.killed]
        result.tables["betti"] = betti_numbers(c.complex, window, c.trusted_weight)
        if res.unresolved:
            result.tables["unresolved"] = res.unresolved
        self._record(result, "certificate", res.certificate)

    def _envelope(self, spec: TaskSpec, result: TaskResult) -> None:
        p = self._presentation(spec.target)
        cap = self._int(spec, "cap")
        u = EnvelopingAlgebra(p, cap, workers=self.config.workers)
        result.trusted = {"weight": u.trusted_weight}
        result.tables["weight_dims"] = u.weight_dims()
        result.tables["degree_dims"] = {n: u.complex.dim(n) for n in u.complex.support}
        self._record(result, "laws", u.check_laws())
        self._record(result, "filtration", u.check_filtration())
        if not p.relations:
            try:
                result.tables["formula_dims"] = graded_formula_dims(p, u.weight_cap)
            except FieldArithmeticError as e:
                result.tables["formula_dims"] = e.message
            else:
                formula = Certificate(f"graded formula for {u.name}", bounds={"weight_cap": u.weight_cap})
                if result.tables["formula_dims"] != u.weight_dims():
                    formula.fail("graded-formula", formula=result.tables["formula_dims"], basis=u.weight_dims())
                formula.count("weights", len(result.tables["formula_dims"]))
                self._record(result, "formula", formula)
            if _flag(spec.options.get("colimit", "no")):
                self._record(result, "colimit", check_prefix_colimit(p, cap))
        if _flag(spec.options.get("coequalizer", "no")):
            self._record(result, "coequalizer", check_coequalizer(p, cap))

    def _omega(self, spec: TaskSpec, result: TaskResult) -> None:
        p = self._presentation(spec.target)
        om = omega(p, self._int(spec, "over"))
        result.trusted = {"weight": om.module.trusted_weight}
        result.tables["generators"] = om.generator_log()
        result.tables["degree_dims"] = {n: om.module.complex.dim(n) for n in om.module.complex.support}

    def _ses(self, spec: TaskSpec, result: TaskResult) -> None:
        p = self._presentation(spec.target)
        prefixes = spec.options.get("prefixes")
        if not isinstance(prefixes, list) or len(prefixes) != 2:
            raise ValidationError("The sequence needs two prefix sizes", field="prefixes", expected_format="c,b")
        ses = relative_ses(p, prefixes[0], prefixes[1])
        result.trusted = {"weight": ses.middle.trusted_weight}
        result.tables["ranks"] = list(ses.ranks)
        self._record(result, "certificate", ses.certificate)

    def _cotangent_of(self, spec: TaskSpec, window: DegreeWindow):
        over = spec.options.get("over")
        return cotangent(
            self._algebra(spec.target),
            window,
            over=self._map(over) if over else None,
            mode=self._mode(spec),
            stage_cap=self.config.stage_cap,
            workers=self.config.workers,
        )

    def _cotangent(self, spec: TaskSpec, result: TaskResult) -> None:
        window = self._window(spec)
        cot = self._cotangent_of(spec, window)
        trusted = cot.module.trusted_weight
        result.trusted = self._trusted(window, trusted)
        result.tables["generators"] = cot.differentials.generator_log()
        result.tables["provenance"] = cot.provenance
        if cot.algebra.operad.dim(1) == 1:
            result.tables["indecomposables"] = betti_numbers(cot.indecomposables(), window, trusted)
        self._record(result, "resolution", cot.resolution.certificate)
        if _flag(spec.options.get("invariance", "no")):
            self._record(result, "invariance", cotangent_invariance(self._algebra(spec.target), window, self.config.stage_cap))

    def _cohomology(self, spec: TaskSpec, result: TaskResult) -> None:
        window = self._window(spec)
        h = cohomology(self._cotangent_of(spec, window), window)
        result.trusted = self._trusted(window, h.trusted_weight)
        result.tables["betti"] = h.betti
        result.tables["derivation_betti"] = h.derivation_betti
        self._record(result, "certificate", h.certificate)

    def _tangent(self, spec: TaskSpec, result: TaskResult) -> None:
        window = self._window(spec)
        a = self._algebra(spec.target)
        if a.presentation.relations:
            res = self._resolution(spec.target, window, "minimal")
            self._record(result, "resolution", res.certificate)
            a = res.algebra
        lie = tangent(a, window, self.config.workers)
        result.trusted = self._trusted(window, lie.trusted_weight)
        result.tables["degree_dims"] = {n: lie.complex.dim(n) for n in window.degrees()}
        result.tables["betti"] = {n: h.betti for n, h in lie.homology().items()}
        self._record(result, "certificate", lie.certificate)

    def _transport(self, spec: TaskSpec, result: TaskResult) -> None:
        window = self._window(spec)
        alpha = self._map(spec.target)
        tangents: dict = {}
        t = transport(alpha, window, tangents=tangents)
        result.trusted = self._trusted(window, min(t.source.trusted_weight, t.target.trusted_weight))
        result.tables["map"] = t.to_dict()
        result.tables["brackets"] = t.bracket_constants(t.target)
        self._record(result, "certificate", t.certificate)
        if _flag(spec.options.get("independence", "no")):
            self._record(result, "independence", transport_independence(alpha, window, tangents))

    def _homology(self, spec: TaskSpec, result: TaskResult) -> None:
        window = self._window(spec)
        of = str(spec.options.get("of", "algebra"))
        if of == "algebra":
            a = self._algebra(spec.target)
            result.trusted = self._trusted(window, a.trusted_weight)
            result.tables["betti"] = betti_numbers(a.complex, window, a.trusted_weight)
        elif of == "tor":
            u = EnvelopingAlgebra(self._presentation(spec.target), workers=self.config.workers)
            tor = derived_tensor(trivial_module(u.opposite()), trivial_module(u), window, stage_cap=self.config.stage_cap)
            result.trusted = self._trusted(window, tor.trusted_weight)
            result.tables["betti"] = tor.betti
        else:
            raise ValidationError(f"Unknown homology target '{of}'", field="of", value=of, expected_format="algebra or tor")


def _fail(kind: str, e: OpalgError) -> None:
    print(f"❌ {kind}: {e.message}", file=sys.stderr)
    if e.suggestion:
        print(f"💡 {e.suggestion}", file=sys.stderr)


def _effective_field(args: argparse.Namespace, doc: WorkspaceFile, config: EngineConfig) -> str:
    if getattr(args, "field", None):
        return config.field
    if doc.field:
        return Field.from_spec(doc.field).spec
    return config.field


def execute_command(args: argparse.Namespace) -> int:
    """
    Execute the requested operation based on CLI arguments.

    Returns:
        Process exit code: 0 when every task passed, 1 otherwise

    Raises:
        ValidationError: If arguments are invalid
        ConfigurationError: If configuration is invalid
        OpalgError: If the workspace cannot be loaded
    """
    configure_logging(
        level=args.log_level,
        console=not args.no_console_log,
        file_logging=not args.no_file_log,
        debug_mode=args.debug,
        verbose=args.verbose,
    )

    logger.info(f"Starting opalg {args.command}")
    logger.debug(f"Command line arguments: {vars(args)}")

    validate_arguments(args)
    config = load_config(args)
    logger.info("Configuration loaded successfully")

    if args.command == "clear-cache":
        removed = ResolutionCache(config.cache_dir, __version__).clear()
        print(f"🧹 Removed {removed} cached resolution(s) from {config.cache_dir}")
        return 0

    doc = load_workspace(args.workspace)
    config.field = _effective_field(args, doc, config)
    if args.verbose:
        print_configuration_summary(config, doc)

    cache = ResolutionCache(config.cache_dir, __version__) if config.use_cache else None
    runner = TaskRunner(doc, config, cache)
    report = runner.execute()

    print(report.render())
    if args.report:
        report.write(args.report)
    return 0 if report.passed else 1


def main(argv: list[str] | None = None) -> None:
    """
    Main CLI entry point for opalg.

    Exit codes:
        0: Success
        1: A task failed, or invalid input
        2: Configuration error
        130: Interrupted by user (SIGINT)
    """
    try:
        args = parse_arguments(argv)
        sys.exit(execute_command(args))

    except WorkspaceParseError as e:
        logger.error(f"Workspace error: {e}")
        _fail("Workspace Error", e)
        sys.exit(1)

    except ValidationError as e:
        logger.error(f"Validation error: {e}")
        _fail("Validation Error", e)
        sys.exit(1)

    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        _fail("Configuration Error", e)
        sys.exit(2)

    except OpalgError as e:
        logger.error(f"opalg error: {e}")
        _fail("Error", e)
        sys.exit(1)

    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        print("\n⚠️ Operation cancelled by user", file=sys.stderr)
        sys.exit(130)  # Standard exit code for SIGINT

    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        print(f"❌ Unexpected error: {e}", file=sys.stderr)
        print("💡 This is an unexpected error. Please report this issue with the error details.", file=sys.stderr)

        # Show debug info if available
        debug_info = getattr(e, "get_debug_info", None)
        if debug_info and callable(debug_info):
            print(f"🔍 Debug info: {debug_info()}", file=sys.stderr)

        sys.exit(1)
