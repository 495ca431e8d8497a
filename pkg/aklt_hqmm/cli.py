"""
Command line ของ aklt-hqmm

คำสั่ง: expect, correlate, converge, hqmm-verify, validate, spectrum

exit code:
    0 สำเร็จ
    1 verification ไม่ผ่าน
    2 อ่าน input ไม่ได้ (ConfigParseError)
    3 ค่าใน input หรือ flag ไม่ถูกต้อง
"""
from typing import Any, Callable, Dict, Optional, Sequence, Tuple
from dataclasses import dataclass
import argparse
import logging
import sys

import numpy as np

from .core.channels import power_limit, superoperator_spectrum
from .core.check import CheckStatus, SuitePolicy
from .core.linalg import EQUALITY_TOL
from .core.run_manager import RunManager
from .models.aklt import MAX_HAT_SITES, ObservableSpec, exact_oracle, finite_expectation, transfer_channel
from .models.fcs import (
    MAX_CORRELATOR_DISTANCE,
    MAX_FCS_FACTORS,
    MAX_PADDING,
    SweepSchedule,
    convergence_sweep,
    correlation_length,
    correlator,
    omega_closed_form,
    omega_fcs_form,
    omega_hat_form,
    omega_local,
)
from .models.hqmm import (
    HqmmModel,
    Ordering,
    OrderingError,
    aklt_causal_model,
    analytic_witness,
    find_architecture_witness,
    observation_process,
)
from .suites import build_acceptance_suite
from .utils.config_loader import ConfigLoader, ConfigParseError, ConfigValidationError
from .utils.reporting import Report, ReportFormat, ReportWriter, SuiteRenderer

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_VALIDATION_ERROR = 3

MAX_SEED = 2 ** 64 - 1
MAX_VERIFY_SITES = 6
MAX_VERIFY_TRIALS = 10_000
WITNESS_SEARCH_TRIALS = 64
DEFAULT_FAILURE_DUMP = "hqmm-verify-failure.json"

COMMANDS = ("expect", "correlate", "converge", "hqmm-verify", "validate", "spectrum")


@dataclass(frozen=True)
class RunConfig:
    """
    ค่าที่ใช้รันคำสั่งหนึ่งครั้ง (สร้างจาก argparse)

    seed กำหนดข้อมูลสุ่มทั้งหมด report จึงซ้ำได้ทุกครั้ง
    """
    command: str
    input_path: Optional[str] = None
    seed: int = 0
    tolerance: float = EQUALITY_TOL
    output_format: ReportFormat = ReportFormat.CSV
    out_path: Optional[str] = None
    workers: int = 4
    axis: str = "z"
    max_distance: int = 10
    n_sites: int = 3
    trials: int = 100
    m_max: int = 30
    p_max: int = 30
    schedule: SweepSchedule = SweepSchedule.SYMMETRIC
    witness_trials: int = WITNESS_SEARCH_TRIALS
    failure_dump: str = DEFAULT_FAILURE_DUMP
    policy: SuitePolicy = SuitePolicy.CONTINUE_ON_FAILURE

    def validate(self) -> None:
        """
        Raises:
            ConfigValidationError: ถ้าค่าใดอยู่นอกช่วงที่รองรับ
        """
        def require(condition: bool, message: str):
            if not condition:
                raise ConfigValidationError(message)

        require(self.command in COMMANDS, f"Unknown command '{self.command}'")
        require(0 <= self.seed <= MAX_SEED, f"seed must be in 0..2^64-1, got {self.seed}")
        require(self.tolerance > 0, f"tolerance must be positive, got {self.tolerance}")
        require(self.workers >= 1, f"workers must be at least 1, got {self.workers}")

        if self.command == "expect":
            require(self.input_path is not None, "expect needs --input")
        elif self.command == "correlate":
            require(1 <= self.max_distance <= MAX_CORRELATOR_DISTANCE,
                    f"max-distance must be in 1..{MAX_CORRELATOR_DISTANCE}, got {self.max_distance}")
        elif self.command == "converge":
            for name, bound in (("m-max", self.m_max), ("p-max", self.p_max)):
                require(0 <= bound <= MAX_PADDING, f"{name} must be in 0..{MAX_PADDING}, got {bound}")
        elif self.command == "hqmm-verify":
            require(1 <= self.n_sites <= MAX_VERIFY_SITES,
                    f"n-sites must be in 1..{MAX_VERIFY_SITES}, got {self.n_sites}")
            require(0 <= self.trials <= MAX_VERIFY_TRIALS,
                    f"trials must be in 0..{MAX_VERIFY_TRIALS}, got {self.trials}")
            require(self.witness_trials >= 0, f"witness-trials must be non-negative, got {self.witness_trials}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        extras = {}
        for name in ("axis", "max_distance", "n_sites", "trials", "m_max", "p_max",
                     "witness_trials", "failure_dump"):
            if hasattr(args, name):
                extras[name] = getattr(args, name)
        if hasattr(args, "schedule"):
            extras["schedule"] = SweepSchedule(args.schedule)
        if getattr(args, "stop_on_failure", False):
            extras["policy"] = SuitePolicy.REQUIRE_ALL
        return cls(
            command=args.command,
            input_path=args.input,
            seed=args.seed,
            tolerance=args.tol,
            output_format=ReportFormat(args.format),
            out_path=args.out,
            workers=args.workers,
            **extras,
        )


CommandResult = Tuple[Report, int]


def _value_row(report_table, path: str, value: complex) -> None:
    report_table.add_row(path, value.real, value.imag)


def cmd_expect(config: RunConfig, loader: ConfigLoader, manager: RunManager) -> CommandResult:
    """ค่า expectation ของ observable จากทุก path พร้อมผลต่างระหว่าง path ที่ต้องเท่ากัน"""
    y = loader.load_observable(config.input_path)
    if y.n_sites > MAX_HAT_SITES:
        raise ConfigValidationError(f"expect supports at most {MAX_HAT_SITES} sites, got {y.n_sites}")

    values: Dict[str, complex] = {}
    values["finite_chain"] = finite_expectation(y)
    values["finite_chain_normalized"] = values["finite_chain"] / finite_expectation(
        ObservableSpec.identity(y.n_sites)
    )
    values["infinite_volume"] = omega_local(y)
    if y.is_factored and y.n_sites <= MAX_FCS_FACTORS:
        values["fcs_form"] = omega_fcs_form(y.factors)
    values["hat_form"] = omega_hat_form(y)
    values["exact_oracle"] = exact_oracle(y)

    report = Report("expect")
    table = report.table("values", ["path", "value_re", "value_im"])
    for path, value in values.items():
        _value_row(table, path, value)

    pairs = [("finite_chain", "exact_oracle"), ("infinite_volume", "hat_form")]
    if "fcs_form" in values:
        pairs.append(("infinite_volume", "fcs_form"))
    deviations = report.table("deviations", ["left", "right", "abs_deviation"])
    worst = 0.0
    for left, right in pairs:
        deviation = abs(values[left] - values[right])
        worst = max(worst, deviation)
        deviations.add_row(left, right, deviation)

    report.summary.update({
        "n_sites": y.n_sites,
        "factored": y.is_factored,
        "max_deviation": worst,
        "tolerance": config.tolerance,
    })
    if worst >= config.tolerance:
        manager.logger.warning(f"expect: paths disagree by {worst:.3e} (tolerance {config.tolerance:g})")
        return report, EXIT_VERIFICATION_FAILED
    return report, EXIT_OK


def cmd_correlate(config: RunConfig, loader: ConfigLoader, manager: RunManager) -> CommandResult:
    report = Report("correlate")
    table = report.table("correlator", ["r", "value", "ratio_to_previous"])
    previous: Optional[float] = None
    ratio: Optional[float] = None
    for r in range(1, config.max_distance + 1):
        value = correlator(config.axis, r)
        ratio = None if previous is None else value / previous
        table.add_row(r, value, ratio)
        previous = value
    report.summary.update({
        "axis": config.axis,
        "max_distance": config.max_distance,
        "last_ratio": ratio,
        "correlation_length": correlation_length(),
    })
    return report, EXIT_OK


def cmd_converge(config: RunConfig, loader: ConfigLoader, manager: RunManager) -> CommandResult:
    """ความต่างระหว่าง chain ที่เติม site สองข้างกับค่า infinite volume"""
    if config.input_path is not None:
        y = loader.load_observable(config.input_path)
        source = config.input_path
    else:
        rng = np.random.default_rng(config.seed)
        y = ObservableSpec.random(rng, 2, factored=False)
        source = f"random(seed={config.seed})"

    sweep = convergence_sweep(y, config.m_max, config.p_max, config.schedule)
    report = Report("converge")
    table = report.table("sweep", ["m", "p", "value_re", "value_im", "abs_error_vs_omega"])
    for row in sweep.rows():
        table.add_row(*row)
    report.summary.update({
        "observable": source,
        "n_sites": y.n_sites,
        "schedule": config.schedule.value,
        "omega_re": sweep.omega.real,
        "omega_im": sweep.omega.imag,
        "rate_per_site": sweep.rate,
    })
    return report, EXIT_OK


def _observation_trial(model: HqmmModel) -> Callable[[ObservableSpec], Tuple[float, Dict[str, Any]]]:
    def trial(y: ObservableSpec) -> Tuple[float, Dict[str, Any]]:
        psi = observation_process(model, y)
        omega = omega_closed_form(y)
        return abs(psi - omega), {"psi": psi, "omega": omega}
    return trial


def cmd_hqmm_verify(config: RunConfig, loader: ConfigLoader, manager: RunManager) -> CommandResult:
    """
    เทียบ observation process ของ model กับ ω บน observable สุ่ม
    และหา input ที่ทำให้ block map แบบ conventional กับ causal ต่างกัน
    """
    model = loader.load_model(config.input_path) if config.input_path else aklt_causal_model()
    if model.ordering is not Ordering.CAUSAL:
        raise OrderingError("hqmm-verify evaluates the causal joint state; the model is conventional")
    rng = np.random.default_rng(config.seed)

    # สร้าง observable ตามลำดับจาก seed ก่อนส่งเข้า thread pool
    observables = [
        ObservableSpec.random(rng, config.n_sites, hermitian=i % 2 == 0)
        for i in range(config.trials)
    ]
    records = manager.run_trials(_observation_trial(model), observables, config.tolerance)

    report = Report("hqmm-verify")
    table = report.table("trials", [
        "index", "hermitian", "psi_re", "psi_im", "omega_re", "omega_im", "abs_deviation", "error"
    ])
    for record in records:
        psi = record.payload.get("psi", complex("nan"))
        omega = record.payload.get("omega", complex("nan"))
        table.add_row(record.index, record.index % 2 == 0, psi.real, psi.imag,
                      omega.real, omega.imag, record.deviation, record.error)

    searched = find_architecture_witness(
        rng, config.witness_trials, model if config.input_path else None
    )
    analytic = analytic_witness(model)
    witnesses = report.table("witness", ["source", "trials", "gap"])
    if searched is not None:
        witnesses.add_row("random_search", config.witness_trials, searched.gap)
    witnesses.add_row("analytic", 1, analytic.gap)
    best = max([w for w in (searched, analytic) if w is not None], key=lambda w: w.gap)

    worst_index = max(range(len(records)), key=lambda i: records[i].deviation, default=None)
    max_deviation = records[worst_index].deviation if worst_index is not None else 0.0
    report.summary.update({
        "n_sites": config.n_sites,
        "trials": config.trials,
        "ordering": model.ordering.value,
        "max_deviation": max_deviation,
        "tolerance": config.tolerance,
        "witness_gap": best.gap,
        "witness": best.to_dict(),
        **manager.get_stats(),
    })

    if worst_index is not None and not all(r.passed for r in records):
        loader.save_document(observables[worst_index].to_dict(), config.failure_dump)
        report.summary["failure_dump"] = config.failure_dump
        manager.logger.warning(
            f"hqmm-verify: trial {worst_index} deviates by {max_deviation:.3e}; "
            f"observable written to {config.failure_dump}"
        )
        return report, EXIT_VERIFICATION_FAILED
    return report, EXIT_OK


def cmd_validate(config: RunConfig, loader: ConfigLoader, manager: RunManager) -> CommandResult:
    """รัน acceptance suite ทั้งหมด"""
    suite = build_acceptance_suite(config.seed, config.policy)
    status = manager.run_suite(suite)
    renderer = SuiteRenderer()

    report = Report("validate")
    if config.output_format is ReportFormat.CSV:
        report.notes.append(renderer.create_ascii(suite))
    table = report.table("checks", ["path", "status", "deviation", "tolerance", "error"])
    for result in suite.results():
        table.add_row(result.path, result.status.name.lower(), result.deviation,
                      result.tolerance, result.error)
    report.summary.update({"seed": config.seed, "status": status.name.lower(),
                           **renderer.generate_metrics_report(suite)})
    return report, EXIT_OK if status is CheckStatus.PASSED else EXIT_VERIFICATION_FAILED


def cmd_spectrum(config: RunConfig, loader: ConfigLoader, manager: RunManager) -> CommandResult:
    """spectrum ของ transfer operator Φ และอัตราการลู่เข้าของ Φⁿ"""
    phi = transfer_channel()
    superop = phi.to_superoperator()
    eigenvalues = superoperator_spectrum(superop)
    limit = power_limit(phi)

    report = Report("spectrum")
    table = report.table("eigenvalues", ["index", "value_re", "value_im", "modulus"])
    for i, value in enumerate(eigenvalues):
        table.add_row(i, value.real, value.imag, abs(value))
    report.summary.update({
        "power_limit_rate": limit.rate,
        "power_limit_steps": limit.steps,
        "correlation_length": correlation_length(),
        "unital": phi.is_unital(),
        "trace_preserving": phi.is_trace_preserving(),
        "completely_positive": superop.is_completely_positive(),
    })
    return report, EXIT_OK


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig, ConfigLoader, RunManager], CommandResult]] = {
    "expect": cmd_expect,
    "correlate": cmd_correlate,
    "converge": cmd_converge,
    "hqmm-verify": cmd_hqmm_verify,
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", metavar="PATH", default=None,
                        help="observable or model file (.json / .yaml)")
    common.add_argument("--seed", type=int, default=0, help="seed for random trials (default = 0)")
    common.add_argument("--tol", type=float, default=EQUALITY_TOL,
                        help=f"verification tolerance (default = {EQUALITY_TOL:g})")
    common.add_argument("--format", choices=[f.value for f in ReportFormat], default=ReportFormat.CSV.value,
                        help="report format (default = csv)")
    common.add_argument("--out", metavar="PATH", default=None, help="report file (default = stdout)")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="log level, logs go to stderr (default = WARNING)")
    common.add_argument("--workers", type=int, default=4, help="worker threads for trials (default = 4)")

    parser = argparse.ArgumentParser(
        prog="aklt-hqmm",
        description="AKLT chain as a finitely correlated state and as a causal hidden quantum Markov model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("expect", parents=[common], help="expectation of an observable along every path")

    correlate = sub.add_parser("correlate", parents=[common], help="two-point spin correlator")
    correlate.add_argument("--axis", choices=["x", "y", "z"], default="z")
    correlate.add_argument("--max-distance", type=int, default=10,
                           help=f"largest distance r, 1..{MAX_CORRELATOR_DISTANCE} (default = 10)")

    converge = sub.add_parser("converge", parents=[common], help="finite padding vs infinite volume")
    converge.add_argument("--m-max", type=int, default=30)
    converge.add_argument("--p-max", type=int, default=30)
    converge.add_argument("--schedule", choices=[s.value for s in SweepSchedule],
                          default=SweepSchedule.SYMMETRIC.value)

    verify = sub.add_parser("hqmm-verify", parents=[common],
                            help="observation process against the infinite-volume state")
    verify.add_argument("--n-sites", type=int, default=3)
    verify.add_argument("--trials", type=int, default=100)
    verify.add_argument("--witness-trials", type=int, default=WITNESS_SEARCH_TRIALS,
                        help=f"random inputs tried by the witness search (default = {WITNESS_SEARCH_TRIALS})")
    verify.add_argument("--failure-dump", metavar="PATH", default=DEFAULT_FAILURE_DUMP,
                        help="where the worst observable is written on failure")

    validate = sub.add_parser("validate", parents=[common], help="run the acceptance suite")
    validate.add_argument("--stop-on-failure", action="store_true",
                          help="skip the remaining checks of a suite after the first failure")

    sub.add_parser("spectrum", parents=[common], help="spectrum of the transfer operator")
    return parser


_log_handler: Optional[logging.Handler] = None


def configure_logging(level: str) -> None:
    """log ทั้งหมดไปที่ stderr เพื่อให้ stdout มีแต่ report"""
    global _log_handler
    root = logging.getLogger()
    if _log_handler is not None:
        root.removeHandler(_log_handler)
    _log_handler = logging.StreamHandler(sys.stderr)
    _log_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    root.addHandler(_log_handler)
    root.setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse ใช้ exit code 2 กับ flag ที่ผิด ให้ถือเป็น validation error
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION_ERROR

    configure_logging(args.log_level)
    logger = logging.getLogger("aklt_hqmm.cli")

    try:
        config = RunConfig.from_args(args)
        config.validate()
        with RunManager(max_workers=config.workers) as manager:
            logger.info(f"Running '{config.command}' with seed {config.seed}")
            report, code = COMMAND_HANDLERS[config.command](config, ConfigLoader(), manager)
            timing = manager.get_timing()
        # render ทั้งหมดก่อนเขียน จึงไม่มี output บางส่วนถ้าเกิด error
        ReportWriter(config.output_format).write(report, config.out_path)
        logger.info(f"'{config.command}' finished with exit code {code}")
        # report ต้องไม่มีข้อมูลเวลา
        logger.info(
            f"Timing: {timing['average_trial_duration']:.4f}s per trial, "
            f"last {timing['last_trial_duration']:.4f}s, total {timing['uptime']:.3f}s"
        )
        return code
    except ConfigParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except (ConfigValidationError, ValueError) as e:
        # DimensionError, SiteRangeError, ModelError และ OrderingError เป็น ValueError
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    except OSError as e:
        # --out หรือ --failure-dump ที่เขียนไม่ได้
        print(f"error: cannot write {e.filename or 'output'}: {e.strerror or e}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR


if __name__ == "__main__":
    sys.exit(main())
