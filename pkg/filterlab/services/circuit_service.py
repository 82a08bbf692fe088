"""Pauli decomposition of the parent Hamiltonian and Trotter circuit layering"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..schemas.schemas import FilterParams, ScheduleSpec
from .operator_core import PauliString, collect_terms, commutator_sums, multiply_sums

logger = logging.getLogger(__name__)

CIRCUIT_SUFFIX = ".lfc"


def term_range(string: PauliString) -> int:
    """Width of the smallest contiguous window containing the support"""
    support = string.support
    return support[-1] - support[0] + 1 if support else 0


def locality(terms: Sequence[PauliString]) -> Tuple[int, int]:
    """(w, v): max term range and max number of terms acting on one site"""
    if not terms:
        return 0, 0
    w = max(term_range(t) for t in terms)
    per_site: Dict[int, int] = {}
    for term in terms:
        for site in term.support:
            per_site[site] = per_site.get(site, 0) + 1
    return w, max(per_site.values(), default=0)


def _force_real(terms: Sequence[PauliString], label: str) -> List[PauliString]:
    out = []
    for term in terms:
        if abs(term.coefficient.imag) > 1e-9 * max(1.0, abs(term.coefficient)):
            logger.warning(f"{label}: dropping imaginary part {term.coefficient.imag:.3e} of {term.label}")
        out.append(PauliString(term.factors, term.coefficient.real))
    return out


@dataclass(frozen=True)
class TermDecomposition:
    """Parent Hamiltonian split as P - (i/delta)[H, P] + delta^-2 (H-E) P (H-E).

    ``part2``/``part3`` hold the strings at the construction delta; the unit
    parts (delta^-1 = 1) let ``terms_at`` rebuild coefficients anywhere on an
    adiabatic path.
    """
    params: FilterParams
    hamiltonian_terms: Tuple[PauliString, ...]
    projector_terms: Tuple[PauliString, ...]
    part1: Tuple[PauliString, ...]
    part2: Tuple[PauliString, ...]
    part3: Tuple[PauliString, ...]
    unit_part2: Tuple[PauliString, ...]
    unit_part3: Tuple[PauliString, ...]
    w: int
    v: int

    @property
    def n_sites(self) -> int:
        return self.part1[0].n_sites

    def terms_at(self, delta_inverse: float, rescale: bool = False) -> List[PauliString]:
        a = delta_inverse
        terms = list(self.part1)
        if a != 0:
            terms += [t.scaled(a) for t in self.unit_part2]
            terms += [t.scaled(a * a) for t in self.unit_part3]
        collected = _force_real(collect_terms(terms), "terms_at")
        if rescale:
            scale = 1.0 / (1.0 + a * a)
            collected = [t.scaled(scale) for t in collected]
        return collected

    def all_terms(self) -> List[PauliString]:
        return self.terms_at(self.params.delta_inverse)

    def term_order(self) -> List[str]:
        """Fixed sequential order: part1, then part2, then part3"""
        seen: Dict[str, None] = {}
        for part in (self.part1, self.unit_part2, self.unit_part3):
            for term in part:
                seen.setdefault(term.factors, None)
        return list(seen)


def decompose_parent(H_terms: Sequence[PauliString], projector_terms: Sequence[PauliString],
                     fp: FilterParams) -> TermDecomposition:
    n = H_terms[0].n_sites
    shifted = collect_terms(list(H_terms) + [PauliString.identity(n, -fp.E_F)])
    projectors = collect_terms(projector_terms)

    commutator = commutator_sums(H_terms, projectors)
    unit2 = _force_real(collect_terms(t.scaled(-1j) for t in commutator), "part2")
    unit3 = _force_real(multiply_sums(multiply_sums(shifted, projectors), shifted), "part3")

    a = fp.delta_inverse
    part2 = [t.scaled(a) for t in unit2] if a != 0 else []
    part3 = [t.scaled(a * a) for t in unit3] if a != 0 else []
    w, v = locality(H_terms)
    logger.debug(
        f"decomposition N={n}: {len(projectors)} + {len(part2)} + {len(part3)} strings (w={w}, v={v})"
    )
    return TermDecomposition(
        params=fp,
        hamiltonian_terms=tuple(H_terms),
        projector_terms=tuple(projectors),
        part1=tuple(_force_real(projectors, "part1")),
        part2=tuple(part2),
        part3=tuple(part3),
        unit_part2=tuple(unit2),
        unit_part3=tuple(unit3),
        w=w,
        v=v,
    )


# ===== LAYERS =====

@dataclass(frozen=True)
class Rotation:
    """exp(-i angle P) for a unit-coefficient Pauli string P"""
    string: PauliString
    angle: float


@dataclass
class CircuitLayer:
    rotations: List[Rotation] = field(default_factory=list)
    occupied: int = 0

    def fits(self, string: PauliString) -> bool:
        return not (self.occupied & string.support_mask)

    def add(self, rotation: Rotation) -> None:
        self.occupied |= rotation.string.support_mask
        self.rotations.append(rotation)


def _layer_key(term: PauliString):
    support = term.support
    return (support[0] if support else -1, -len(support), term.factors)


def layer_terms(terms: Sequence[PauliString], tau: float) -> List[CircuitLayer]:
    """Greedy first-fit packing of rotations into disjoint-support layers"""
    layers: List[CircuitLayer] = []
    for term in sorted(terms, key=_layer_key):
        rot = Rotation(PauliString(term.factors), float(term.coefficient.real * tau))
        for layer in layers:
            if layer.fits(rot.string):
                layer.add(rot)
                break
        else:
            layer = CircuitLayer()
            layer.add(rot)
            layers.append(layer)
    return layers


def schedule_layers(dec: TermDecomposition, tau: float, rescale: bool = False) -> List[CircuitLayer]:
    """One Trotter step of the decomposed parent Hamiltonian, angle = coefficient * tau"""
    return layer_terms(dec.terms_at(dec.params.delta_inverse, rescale), tau)


@dataclass(frozen=True)
class DepthReport:
    per_step_depth: int
    total_depth: int
    steps: int
    string_count: int
    part_string_counts: Dict[str, int]
    part_layer_counts: Dict[str, int]
    # most strings sharing one site; no disjoint-support layering can beat it
    site_load: int = 0


def depth_report(sched: ScheduleSpec, dec: TermDecomposition,
                 layers: Optional[Sequence[CircuitLayer]] = None) -> DepthReport:
    if layers is None:
        layers = schedule_layers(dec, sched.tau)
    per_step = len(layers)
    strings = [rot.string for layer in layers for rot in layer.rotations]
    parts = {"part1": dec.part1, "part2": dec.part2, "part3": dec.part3}
    return DepthReport(
        per_step_depth=per_step,
        total_depth=per_step * sched.n_steps,
        steps=sched.n_steps,
        string_count=len(strings),
        part_string_counts={name: len(part) for name, part in parts.items()},
        part_layer_counts={name: len(layer_terms(part, sched.tau)) for name, part in parts.items()},
        site_load=locality(strings)[1],
    )


# ===== EXPORT =====

def export_circuit(layers: Sequence[CircuitLayer], path) -> Path:
    """Write ``ROT <angle> <site:symbol ...>`` lines, a blank line between layers"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blocks = []
    for layer in layers:
        lines = []
        for rot in layer.rotations:
            label = rot.string.label
            lines.append(f"ROT {rot.angle!r} {label}" if label else f"ROT {rot.angle!r}")
        blocks.append("\n".join(lines))
    text = "\n\n".join(blocks)
    path.write_text(text + "\n" if text else "", encoding="utf-8")
    logger.info(f"Circuit exported to {path} ({len(layers)} layers)")
    return path


def parse_circuit(path, n_sites: Optional[int] = None) -> List[CircuitLayer]:
    """Read a circuit written by export_circuit"""
    raw_layers: List[List[Tuple[float, Dict[int, str]]]] = []
    current: List[Tuple[float, Dict[int, str]]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            if current:
                raw_layers.append(current)
                current = []
            continue
        tokens = line.split()
        if tokens[0] != "ROT" or len(tokens) < 2:
            raise ValueError(f"{path}:{lineno}: expected 'ROT <angle> <site:symbol ...>'")
        sites = {}
        for token in tokens[2:]:
            site, symbol = token.split(":")
            sites[int(site)] = symbol
        current.append((float(tokens[1]), sites))
    if current:
        raw_layers.append(current)

    if n_sites is None:
        n_sites = 1 + max((s for layer in raw_layers for _, sites in layer for s in sites), default=0)
    layers = []
    for raw in raw_layers:
        layer = CircuitLayer()
        for angle, sites in raw:
            layer.add(Rotation(PauliString.from_sites(n_sites, sites), angle))
        layers.append(layer)
    return layers
