"""Experiment runner: sweeps over sizes, product states and filter widths"""
import functools
import itertools
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set, Tuple

import numpy as np
import structlog

from ..core.config import settings
from ..schemas.schemas import (
    ExperimentConfig,
    ExperimentKindEnum,
    FilterParams,
    PointStatusEnum,
    ProductStateKindEnum,
    ProductStateSpec,
    ResultsRecord,
    ScheduleSpec,
)
from .adiabatic_service import adiabatic_evolve, trotter_evolve
from .circuit_service import CIRCUIT_SUFFIX, decompose_parent, depth_report, export_circuit, schedule_layers
from .filter_service import (
    ParentFamily,
    discreteness_eta,
    filtered_state,
    gap_certificate,
    resolve_filter_center,
    runtime_bound,
    variance_theory,
)
from .operator_core import SparseOperator, StateVector, assemble, energy_moments, entanglement_entropy
from .results_writer import ResultsWriter, completed_keys
from .tfi_model import (
    build_tfi,
    classical_moments,
    product_state,
    projector_sum_terms,
    theta_energy_density,
)

logger = structlog.get_logger(__name__)


@dataclass
class RunSummary:
    kind: ExperimentKindEnum
    output_path: str
    rows_written: int = 0
    skipped: int = 0
    failed: int = 0
    gap_failures: int = 0

    @property
    def exit_code(self) -> int:
        return 3 if self.failed or self.gap_failures else 0

    def as_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value,
            "output_path": self.output_path,
            "rows_written": self.rows_written,
            "skipped": self.skipped,
            "failed": self.failed,
            "gap_failures": self.gap_failures,
            "exit_code": self.exit_code,
        }


@dataclass(frozen=True)
class ModelInstance:
    """Everything a sweep point needs for one (N, product state) pair"""
    spec: ProductStateSpec
    hamiltonian_terms: list
    projector_terms: list
    hamiltonian: SparseOperator
    psi: StateVector
    E0: float
    sigma0_sq: float
    E_F: float
    J: float

    @property
    def N(self) -> int:
        return self.spec.N


def build_instance(config: ExperimentConfig, n_sites: int, spec: ProductStateSpec) -> ModelInstance:
    tfi = config.tfi(n_sites)
    terms = build_tfi(tfi)
    hamiltonian = assemble(terms, n_sites)
    psi = product_state(spec)
    E0, sigma0_sq = classical_moments(spec, terms)
    E_F, _ = resolve_filter_center(hamiltonian, psi, config.filter.E_F)
    return ModelInstance(
        spec=spec,
        hamiltonian_terms=terms,
        projector_terms=projector_sum_terms(spec),
        hamiltonian=hamiltonian,
        psi=psi,
        E0=E0,
        sigma0_sq=sigma0_sq,
        E_F=E_F,
        J=tfi.J,
    )


Point = Tuple[ResultsRecord, Callable[[], Dict[str, object]]]


class ExperimentService:
    """Runs one ExperimentConfig and streams its rows to CSV"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.done: Set[Tuple[str, ...]] = set()
        self._lock = threading.Lock()

    # ===== ORCHESTRATION =====

    def run(self) -> RunSummary:
        exp = self.config.experiment
        output = self.config.output
        summary = RunSummary(kind=exp.kind, output_path=str(Path(output.path)))
        tasks = self._plan()
        counter = itertools.count()
        numbered = [[(next(counter), point) for point in points] for points in tasks]
        logger.info("Experiment started", kind=exp.kind.value, tasks=len(tasks),
                    points=sum(len(points) for points in numbered),
                    threads=exp.threads, output=summary.output_path)

        with ResultsWriter(output.path, resume=output.resume) as writer:
            self.done = completed_keys(writer.kept_rows)
            summary.skipped = len(self.done)
            with ThreadPoolExecutor(max_workers=exp.threads) as executor:
                futures = [executor.submit(self._run_points, points, writer, summary) for points in numbered]
                for future in as_completed(futures):
                    future.result()
            summary.rows_written = writer.rows_written

        logger.info("Experiment finished", **summary.as_dict())
        return summary

    def _run_points(self, points: List[Tuple[int, Point]], writer: ResultsWriter, summary: RunSummary) -> None:
        """Evaluate one task's points in order, handing each row to the writer as soon as it exists"""
        for index, (record, compute) in points:
            result = self._evaluate(record, compute)
            if result is not None:
                self._tally(summary, result)
            writer.submit(index, [result] if result is not None else [])

    def _tally(self, summary: RunSummary, record: ResultsRecord) -> None:
        with self._lock:
            if record.status == PointStatusEnum.FAILED:
                summary.failed += 1
            elif self.config.kind == ExperimentKindEnum.GAP_AUDIT and record.passed is False:
                summary.gap_failures += 1

    def _plan(self) -> List[List[Point]]:
        exp = self.config.experiment
        if exp.kind == ExperimentKindEnum.THETA_CURVE:
            sizes = exp.sizes or [None]
            return [self._theta_curve_task(n) for n in sizes]

        runners = {
            ExperimentKindEnum.VARIANCE_SWEEP: self._variance_task,
            ExperimentKindEnum.ENTROPY_SWEEP: self._entropy_task,
            ExperimentKindEnum.GAP_AUDIT: self._gap_task,
            ExperimentKindEnum.ADIABATIC_SWEEP: self._adiabatic_task,
            ExperimentKindEnum.DEPTH_AUDIT: self._depth_task,
        }
        runner = runners[exp.kind]
        return [
            runner(n, spec)
            for n in exp.sizes
            for spec in self.config.state.specs(n)
        ]

    def _record(self, spec: Optional[ProductStateSpec], n_sites: Optional[int],
                delta: Optional[float] = None, delta_inv: Optional[float] = None,
                steps: Optional[int] = None, theta: Optional[float] = None) -> ResultsRecord:
        if spec is not None:
            theta = spec.theta if spec.kind == ProductStateKindEnum.THETA else None
        return ResultsRecord(
            experiment=self.config.kind,
            N=n_sites,
            theta_or_afm=spec.label if spec is not None else ProductStateKindEnum.THETA.value,
            theta=theta,
            delta=delta,
            delta_inv=delta_inv,
            steps=steps,
        )

    def _evaluate(self, record: ResultsRecord, compute: Callable[[], Dict[str, object]]) -> Optional[ResultsRecord]:
        """Run one point; failures flag the row instead of aborting the sweep"""
        if record.key in self.done:
            return None
        start = time.perf_counter()
        try:
            values = compute()
        except Exception as exc:
            logger.error("Point failed", kind=self.config.kind.value, N=record.N,
                         delta_inv=record.delta_inv, steps=record.steps, error=str(exc))
            values = {"status": PointStatusEnum.FAILED, "message": f"{type(exc).__name__}: {exc}"}
        if self.config.output.record_wall_time:
            values["wall_time"] = time.perf_counter() - start
        return record.model_copy(update=values)

    # ===== SHARED COLUMNS =====

    def _state_columns(self, inst: ModelInstance) -> Dict[str, object]:
        values: Dict[str, object] = {
            "E0": inst.E0,
            "sigma0_sq": inst.sigma0_sq,
            "energy_density": inst.E0 / (inst.J * inst.N),
        }
        if inst.spec.kind == ProductStateKindEnum.THETA:
            values["energy_density_limit"] = theta_energy_density(
                inst.spec.theta, self.config.model.g, self.config.model.h
            )
        return values

    def _crosscheck(self, inst: ModelInstance) -> Optional[str]:
        if not self.config.crosscheck_enabled(inst.N):
            return None
        mean, variance = energy_moments(inst.hamiltonian, inst.psi)
        if abs(mean - inst.E0) > 1e-9 * max(1.0, abs(mean)) or \
                abs(variance - inst.sigma0_sq) > 1e-9 * max(1.0, variance):
            return (f"classical moments ({inst.E0:.12g}, {inst.sigma0_sq:.12g}) differ from "
                    f"vector moments ({mean:.12g}, {variance:.12g})")
        return None

    def _lazy_instance(self, n_sites: int, spec: ProductStateSpec) -> Callable[[], ModelInstance]:
        return functools.lru_cache(maxsize=1)(lambda: build_instance(self.config, n_sites, spec))

    # ===== EXPERIMENTS =====

    def _variance_task(self, n_sites: int, spec: ProductStateSpec) -> List[Point]:
        instance = self._lazy_instance(n_sites, spec)

        @functools.lru_cache(maxsize=1)
        def eta() -> Optional[float]:
            inst = instance()
            if inst.N > settings.DENSE_MAX_SITES:
                return None
            return discreteness_eta(inst.hamiltonian, inst.E_F, seed=self.config.experiment.seed)

        @functools.lru_cache(maxsize=1)
        def mismatch() -> Optional[str]:
            return self._crosscheck(instance())

        def point(delta: float) -> Dict[str, object]:
            inst = instance()
            fp = FilterParams(E_F=inst.E_F, delta=delta)
            phi = filtered_state(inst.hamiltonian, inst.psi, fp)
            _, sigma_l_sq = energy_moments(inst.hamiltonian, phi)
            values = self._state_columns(inst)
            values.update(
                sigma_L_sq_measured=sigma_l_sq,
                sigma_L_sq_theory=variance_theory(delta, inst.sigma0_sq),
                eta=eta(),
            )
            if mismatch():
                values.update(status=PointStatusEnum.FAILED, message=mismatch())
            return values

        return [
            (self._record(spec, n_sites, delta, a), functools.partial(point, delta))
            for delta, a in self.config.filter.points()
        ]

    def _entropy_task(self, n_sites: int, spec: ProductStateSpec) -> List[Point]:
        instance = self._lazy_instance(n_sites, spec)
        cut = self.config.experiment.cut or n_sites // 2

        def point(delta: float) -> Dict[str, object]:
            inst = instance()
            fp = FilterParams(E_F=inst.E_F, delta=delta)
            phi = filtered_state(inst.hamiltonian, inst.psi, fp)
            _, sigma_l_sq = energy_moments(inst.hamiltonian, phi)
            values = self._state_columns(inst)
            values.update(
                sigma_L_sq_measured=sigma_l_sq,
                sigma_L_sq_theory=variance_theory(delta, inst.sigma0_sq),
                entropy=entanglement_entropy(phi, cut),
            )
            return values

        return [
            (self._record(spec, n_sites, delta, a), functools.partial(point, delta))
            for delta, a in self.config.filter.points()
        ]

    def _family(self, instance: Callable[[], ModelInstance]) -> Callable[[], ParentFamily]:
        @functools.lru_cache(maxsize=1)
        def family() -> ParentFamily:
            inst = instance()
            projector_sum = assemble(inst.projector_terms, inst.N)
            return ParentFamily.from_operators(inst.hamiltonian, projector_sum, inst.E_F)
        return family

    def _gap_task(self, n_sites: int, spec: ProductStateSpec) -> List[Point]:
        instance = self._lazy_instance(n_sites, spec)
        family = self._family(instance)

        def point(delta: float) -> Dict[str, object]:
            inst = instance()
            fp = FilterParams(E_F=inst.E_F, delta=delta)
            ph = family().parent(fp)
            phi = filtered_state(inst.hamiltonian, inst.psi, fp)
            image = ph.raw.matvec(phi.amplitudes)
            residual = float(np.linalg.norm(image))
            energy = float(np.vdot(phi.amplitudes, image).real)
            cert = gap_certificate(ph, seed=self.config.experiment.seed)
            passed = bool(
                cert.passed
                and cert.smallest_nonzero >= 1.0 - settings.GAP_TOL
                and residual <= settings.PARENT_RESIDUAL_TOL
                and energy <= settings.PARENT_ENERGY_TOL
            )
            values = self._state_columns(inst)
            values.update(
                parent_energy=energy,
                gap_min_h2_minus_h=cert.min_eig_h2_minus_h,
                gap_smallest_nonzero=cert.smallest_nonzero,
                passed=passed,
                message=f"residual={residual:.3e}",
            )
            return values

        return [
            (self._record(spec, n_sites, delta, a), functools.partial(point, delta))
            for delta, a in self.config.filter.points()
        ]

    def _adiabatic_task(self, n_sites: int, spec: ProductStateSpec) -> List[Point]:
        instance = self._lazy_instance(n_sites, spec)
        family = self._family(instance)
        schedule = self.config.schedule

        @functools.lru_cache(maxsize=None)
        def target(delta: float) -> StateVector:
            inst = instance()
            return filtered_state(inst.hamiltonian, inst.psi, FilterParams(E_F=inst.E_F, delta=delta))

        @functools.lru_cache(maxsize=None)
        def decomposition(delta: float):
            inst = instance()
            fp = FilterParams(E_F=inst.E_F, delta=delta)
            return decompose_parent(inst.hamiltonian_terms, inst.projector_terms, fp)

        def point(delta: float, a: float, steps: int) -> Dict[str, object]:
            inst = instance()
            sched = ScheduleSpec.from_steps(a, schedule.tau, steps, schedule.shape)
            if schedule.trotter:
                trajectory = trotter_evolve(inst.psi, decomposition(delta), sched,
                                            family=family(), target=target(delta))
            else:
                trajectory = adiabatic_evolve(inst.psi, inst.hamiltonian_terms, inst.projector_terms,
                                              inst.E_F, sched, family=family(), target=target(delta))
            bound = runtime_bound(inst.N, a, inst.hamiltonian.norm_bound() + abs(inst.E_F))
            values = self._state_columns(inst)
            values.update(
                fidelity=trajectory.final_fidelity,
                parent_energy=trajectory.final_parent_energy,
                parent_energy_rescaled=trajectory.final_parent_energy_rescaled,
                T=sched.T,
                tau=sched.tau,
                message=f"gap_bound={bound.gap_lower_bound:.6g} time_bound={bound.time_bound:.6g}",
            )
            return values

        return [
            (self._record(spec, n_sites, delta, a, steps),
                           functools.partial(point, delta, a, steps))
            for delta, a in self.config.filter.points()
            for steps in schedule.steps
        ]

    def _depth_task(self, n_sites: int, spec: ProductStateSpec) -> List[Point]:
        instance = self._lazy_instance(n_sites, spec)
        schedule = self.config.schedule
        circuit_dir = self.config.output.circuit_dir

        @functools.lru_cache(maxsize=None)
        def layered(delta: float):
            inst = instance()
            fp = FilterParams(E_F=inst.E_F, delta=delta)
            dec = decompose_parent(inst.hamiltonian_terms, inst.projector_terms, fp)
            layers = schedule_layers(dec, schedule.tau)
            if circuit_dir:
                name = f"depth_N{n_sites}_{spec.label}_dinv{fp.delta_inverse:g}{CIRCUIT_SUFFIX}"
                export_circuit(layers, Path(circuit_dir) / name)
            return dec, layers

        def point(delta: float, a: float, steps: int) -> Dict[str, object]:
            inst = instance()
            dec, layers = layered(delta)
            sched = ScheduleSpec.from_steps(a, schedule.tau, steps, schedule.shape)
            report = depth_report(sched, dec, layers)
            values = self._state_columns(inst)
            values.update(
                depth=report.per_step_depth,
                total_depth=report.total_depth,
                T=sched.T,
                tau=sched.tau,
                message=f"strings={report.string_count} load={report.site_load} w={dec.w} v={dec.v}",
            )
            return values

        return [
            (self._record(spec, n_sites, delta, a, steps),
                           functools.partial(point, delta, a, steps))
            for delta, a in self.config.filter.points()
            for steps in schedule.steps
        ]

    def _theta_curve_task(self, n_sites: Optional[int]) -> List[Point]:
        model = self.config.model

        def point(theta: float) -> Dict[str, object]:
            values: Dict[str, object] = {
                "energy_density_limit": theta_energy_density(theta, model.g, model.h),
            }
            if n_sites is not None:
                spec = ProductStateSpec.uniform(n_sites, theta)
                E0, sigma0_sq = classical_moments(spec, build_tfi(self.config.tfi(n_sites)))
                values.update(E0=E0, sigma0_sq=sigma0_sq, energy_density=E0 / (model.J * n_sites))
            return values

        return [
            (self._record(None, n_sites, theta=theta), functools.partial(point, theta))
            for theta in self.config.experiment.thetas
        ]


def run_experiment(config: ExperimentConfig) -> RunSummary:
    return ExperimentService(config).run()
