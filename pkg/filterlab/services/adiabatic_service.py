"""Adiabatic preparation of filtered states along a delta^-1 schedule"""
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from ..core.config import settings
from ..schemas.schemas import FilterParams, ScheduleShapeEnum, ScheduleSpec
from .filter_service import ParentFamily, filtered_state
from .operator_core import Operator, PauliString, StateVector, apply_pauli, expm_apply

if TYPE_CHECKING:
    from .circuit_service import CircuitLayer, TermDecomposition

logger = logging.getLogger(__name__)


def schedule_value(shape: ScheduleShapeEnum, s: float, delta_inv_max: float) -> float:
    """delta^-1(s); default shape sin(pi/2 sin(s pi/2)^2)^2 delta^-1_max"""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"Schedule parameter s={s} outside [0, 1]")
    shape = ScheduleShapeEnum(shape)
    if shape == ScheduleShapeEnum.LINEAR:
        return s * delta_inv_max
    inner = math.sin(s * math.pi / 2) ** 2
    return math.sin(math.pi / 2 * inner) ** 2 * delta_inv_max


@dataclass(frozen=True)
class Checkpoint:
    step: int
    s: float
    delta_inv: float
    norm: float
    parent_energy_rescaled: float
    parent_energy: float
    fidelity: float
    state: Optional[StateVector] = None


@dataclass
class Trajectory:
    checkpoints: List[Checkpoint] = field(default_factory=list)
    final_state: Optional[StateVector] = None

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    @property
    def final_fidelity(self) -> float:
        return self.final.fidelity

    @property
    def final_parent_energy(self) -> float:
        return self.final.parent_energy

    @property
    def final_parent_energy_rescaled(self) -> float:
        return self.final.parent_energy_rescaled


def _expectation(op: Operator, x: np.ndarray) -> float:
    return float(np.vdot(x, op.matvec(x)).real)


class _Recorder:
    """Collects checkpoints against the final-delta parent and filtered state"""

    def __init__(self, family: ParentFamily, sched: ScheduleSpec, target: StateVector,
                 checkpoint_every: Optional[int], keep_states: bool):
        self.family = family
        self.sched = sched
        self.final_raw = family.operator(sched.delta_inv_max)
        self.target = target.amplitudes
        n = sched.n_steps
        self.every = checkpoint_every or max(1, n // settings.CHECKPOINT_COUNT)
        self.keep_states = keep_states
        self.trajectory = Trajectory()

    def due(self, step: int) -> bool:
        return step == 0 or step % self.every == 0 or step == self.sched.n_steps

    def record(self, step: int, delta_inv: float, generator: Operator, state: StateVector) -> None:
        x = state.amplitudes
        norm = float(np.linalg.norm(x))
        rescaled = _expectation(generator, x) / norm ** 2
        raw = _expectation(self.final_raw, x) / norm ** 2
        overlap = abs(np.vdot(self.target, x)) ** 2 / norm ** 2
        if rescaled < -1e-9:
            logger.warning(f"Negative parent energy {rescaled:.3e} at step {step}")
        self.trajectory.checkpoints.append(Checkpoint(
            step=step,
            s=step / self.sched.n_steps,
            delta_inv=delta_inv,
            norm=norm,
            parent_energy_rescaled=rescaled,
            parent_energy=raw,
            fidelity=float(min(1.0, overlap)),
            state=state if self.keep_states else None,
        ))

    def finish(self, state: StateVector) -> Trajectory:
        self.trajectory.final_state = state
        return self.trajectory


def _target_state(family: ParentFamily, psi: StateVector, sched: ScheduleSpec) -> StateVector:
    fp = FilterParams.from_inverse(family.E_F, sched.delta_inv_max)
    return filtered_state(family.hamiltonian, psi, fp)


def adiabatic_evolve(
    psi: StateVector,
    H_terms: Sequence[PauliString],
    projector_terms: Sequence[PauliString],
    E_F: float,
    sched: ScheduleSpec,
    checkpoint_every: Optional[int] = None,
    keep_states: bool = False,
    family: Optional[ParentFamily] = None,
    target: Optional[StateVector] = None,
) -> Trajectory:
    """Apply prod_l exp(-i tau H~(delta(l tau / T))) to psi.

    The generator at step l is the parent Hamiltonian rescaled by the
    scheduled 1/(1 + delta^-2(s)); each factor goes through expm_apply.
    """
    if family is None:
        family = ParentFamily.from_terms(H_terms, projector_terms, E_F, psi.n_sites)
    if target is None:
        target = _target_state(family, psi, sched)
    recorder = _Recorder(family, sched, target, checkpoint_every, keep_states)

    state = psi
    recorder.record(0, 0.0, family.operator(0.0, rescaled=True), state)
    n = sched.n_steps
    for step in range(1, n + 1):
        s = step / n
        a = schedule_value(sched.shape, s, sched.delta_inv_max)
        generator = family.operator(a, rescaled=True)
        state = expm_apply(generator, state, sched.tau, tol=settings.EXPM_TOL)
        if recorder.due(step):
            recorder.record(step, a, generator, state)
    logger.debug(
        f"adiabatic N={psi.n_sites} steps={n}: fidelity={recorder.trajectory.final_fidelity:.12g}"
    )
    return recorder.finish(state)


def rotation(string: PauliString, angle: float, amplitudes: np.ndarray) -> np.ndarray:
    """exp(-i angle P) x for a unit-coefficient Pauli string P"""
    unit = PauliString(string.factors)
    return math.cos(angle) * amplitudes - 1j * math.sin(angle) * apply_pauli(unit, amplitudes)


def trotter_step(terms: Sequence[PauliString], tau: float, state: StateVector, order: int = 1) -> StateVector:
    """One product-formula step for sum_k c_k P_k with real c_k.

    order 1 applies the factors in the given order; order 2 is the symmetric
    split (half steps forward then backward).
    """
    x = np.array(state.amplitudes)
    if order == 1:
        for term in terms:
            x = rotation(term, term.coefficient.real * tau, x)
    elif order == 2:
        for term in terms:
            x = rotation(term, 0.5 * term.coefficient.real * tau, x)
        for term in reversed(terms):
            x = rotation(term, 0.5 * term.coefficient.real * tau, x)
    else:
        raise ValueError(f"Unsupported Trotter order {order}")
    return StateVector(x)


def _term_order(dec: "TermDecomposition", layers: Optional[Sequence["CircuitLayer"]]) -> List[str]:
    if layers is None:
        return dec.term_order()
    return [rot.string.factors for layer in layers for rot in layer.rotations]


def trotter_evolve(
    psi: StateVector,
    dec: "TermDecomposition",
    sched: ScheduleSpec,
    order: int = 1,
    layers: Optional[Sequence["CircuitLayer"]] = None,
    checkpoint_every: Optional[int] = None,
    keep_states: bool = False,
    family: Optional[ParentFamily] = None,
    target: Optional[StateVector] = None,
) -> Trajectory:
    """Trotterized adiabatic evolution with the same diagnostics as adiabatic_evolve.

    Coefficients are regenerated at every step from the decomposition at the
    scheduled delta^-1 and rescaled by 1/(1 + delta^-2). The factor order is
    fixed: the decomposition order, or layer by layer when ``layers`` is given.
    """
    if family is None:
        family = ParentFamily.from_terms(dec.hamiltonian_terms, dec.projector_terms,
                                         dec.params.E_F, psi.n_sites)
    if target is None:
        target = _target_state(family, psi, sched)
    recorder = _Recorder(family, sched, target, checkpoint_every, keep_states)
    ordering = _term_order(dec, layers)

    state = psi
    recorder.record(0, 0.0, family.operator(0.0, rescaled=True), state)
    n = sched.n_steps
    for step in range(1, n + 1):
        s = step / n
        a = schedule_value(sched.shape, s, sched.delta_inv_max)
        coefficients = {t.factors: t.coefficient for t in dec.terms_at(a, rescale=True)}
        terms = [PauliString(f, coefficients.pop(f)) for f in ordering if f in coefficients]
        # strings pruned at the final delta but present here go last
        terms += [PauliString(f, c) for f, c in sorted(coefficients.items())]
        state = trotter_step(terms, sched.tau, state, order)
        if recorder.due(step):
            recorder.record(step, a, family.operator(a, rescaled=True), state)
    return recorder.finish(state)
