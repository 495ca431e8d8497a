from typing import Dict, List, Optional, Sequence, Tuple
from dataclasses import dataclass, field
from enum import Enum
import logging
import math

import numpy as np

from ..core.linalg import (
    ComplexMatrix,
    DimensionError,
    as_matrix,
    identity,
    max_abs_diff,
)
from ..core.channels import SuperOperator, superop_trace, superoperator_spectrum
from .aklt import (
    BOND_DIM,
    PHYSICAL_DIM,
    MAX_HAT_SITES,
    ObservableSpec,
    SiteRangeError,
    _check_sites,
    aklt_tensors,
    chain_products,
    hat_map,
    spin_axis,
    transfer_channel,
)

logger = logging.getLogger(__name__)

MAX_FCS_FACTORS = 12
MAX_EMBEDDED_SITES = 6
MAX_PADDING = 200
MAX_CORRELATOR_DISTANCE = 20
# error ต่ำกว่านี้เป็น round-off ไม่ใช้ในการ fit rate
ERROR_FIT_FLOOR = 1e-13


class ReferenceFunctional(Enum):
    """functional ρ บน auxiliary algebra"""
    TRACE = "trace"
    NORMALIZED_TRACE = "normalized_trace"


@dataclass(frozen=True)
class FcsTriple:
    """
    Finitely correlated state (ℬ, 𝔼, ρ)

    transition เก็บเป็น Kraus data {A_k} ขนาด (d_phys, aux_dim, aux_dim)
    โดย 𝔼(Y⊗X) = Σ_{k,k'} ⟨k'|Y|k⟩ A_k† X A_{k'}
    """
    aux_dim: int
    transition: np.ndarray
    reference_functional: ReferenceFunctional = ReferenceFunctional.NORMALIZED_TRACE
    unit_element: ComplexMatrix = field(default=None)

    def __post_init__(self):
        kraus = np.asarray(self.transition, dtype=complex)
        if kraus.ndim != 3 or kraus.shape[1:] != (self.aux_dim, self.aux_dim):
            raise DimensionError(
                f"Transition Kraus data must have shape (d, {self.aux_dim}, {self.aux_dim}), got {kraus.shape}"
            )
        kraus.setflags(write=False)
        object.__setattr__(self, "transition", kraus)
        if self.unit_element is None:
            object.__setattr__(self, "unit_element", identity(self.aux_dim))

    @classmethod
    def aklt(
        cls,
        reference_functional: ReferenceFunctional = ReferenceFunctional.NORMALIZED_TRACE
    ) -> "FcsTriple":
        return cls(BOND_DIM, aklt_tensors().stacked(), reference_functional)

    @property
    def physical_dim(self) -> int:
        return self.transition.shape[0]

    def expectation_map(self, y: ComplexMatrix, x: ComplexMatrix) -> ComplexMatrix:
        """𝔼_Y(X) = Σ_{k,k'} ⟨k'|Y|k⟩ A_k† X A_{k'}"""
        y = as_matrix(y, self.physical_dim, self.physical_dim)
        x = as_matrix(x, self.aux_dim, self.aux_dim)
        # Σ_{k'} Y[k',k] A_{k'} สำหรับแต่ละ k
        weighted = np.einsum("jk,jab->kab", y, self.transition)
        return np.einsum("kba,bc,kcd->ad", self.transition.conj(), x, weighted)

    def reference(self, x: ComplexMatrix) -> complex:
        value = complex(np.trace(x))
        if self.reference_functional is ReferenceFunctional.NORMALIZED_TRACE:
            value /= self.aux_dim
        return value

    def unit_deviation(self) -> float:
        """‖𝔼(𝕀⊗e) − e‖_max"""
        image = self.expectation_map(identity(self.physical_dim), self.unit_element)
        return max_abs_diff(image, self.unit_element)

    def evaluate(self, factors: Sequence[ComplexMatrix]) -> complex:
        """ρ(𝔼_{Y_1}∘···∘𝔼_{Y_m}(e))"""
        x = self.unit_element
        for factor in reversed(factors):
            x = self.expectation_map(factor, x)
        return self.reference(x)


def omega_local(y: ObservableSpec) -> complex:
    """
    ω(Y) = ½ Σ ⟨k|Y|ℓ⟩ Tr(A_{k_1}···A_{k_n} A_{ℓ_n}†···A_{ℓ_1}†)

    Y แบบ factored คำนวณจาก site ด้านในสุดออกมา โดยไม่สร้างตาราง 3ⁿ
    """
    _check_sites("omega_local", y.n_sites, 1, MAX_HAT_SITES)
    if y.is_factored:
        tensors = aklt_tensors().stacked()
        x = identity(BOND_DIM)
        for factor in reversed(y.factors):
            x = np.einsum("kl,kab,bc,ldc->ad", factor, tensors, x, tensors.conj())
        return complex(np.trace(x)) / BOND_DIM

    return omega_closed_form(y)


def omega_closed_form(y: ObservableSpec) -> complex:
    """
    ω(Y) จากผลรวมบนตาราง A_{k_1}···A_{k_n} ทุก multi-index โดยใช้ Y แบบเต็ม 3ⁿ × 3ⁿ

    ไม่ใช้ recursion ทีละ site
    """
    _check_sites("omega_closed_form", y.n_sites, 1, MAX_HAT_SITES)
    products = chain_products(y.n_sites).reshape(-1, BOND_DIM * BOND_DIM)
    weighted = y.to_full() @ products.conj()
    return complex(np.sum(products * weighted)) / BOND_DIM


def omega_hat_form(y: ObservableSpec) -> complex:
    """½·Tr(Ŷ(𝕀)) โดยใช้การเรียง Kraus factor แบบ Ŷ (daggered อยู่ทางซ้าย)"""
    image = hat_map(y).apply(identity(BOND_DIM))
    return complex(np.trace(image)) / BOND_DIM


def e_y_map(y: ComplexMatrix, triple: Optional[FcsTriple] = None) -> SuperOperator:
    """superoperator ของ 𝔼_Y บน auxiliary algebra"""
    triple = triple or FcsTriple.aklt()
    y = as_matrix(y, triple.physical_dim, triple.physical_dim)
    kraus = triple.transition
    d = triple.aux_dim
    matrix = np.einsum("jk,kba,jdc->acbd", y, kraus.conj(), kraus)
    return SuperOperator(d, matrix.reshape(d * d, d * d))


def omega_fcs_form(
    factors: Sequence[ComplexMatrix],
    triple: Optional[FcsTriple] = None
) -> complex:
    """
    ω(Y_1⊗···⊗Y_m) = ρ(𝔼_{Y_1}∘···∘𝔼_{Y_m}(𝕀))

    ใช้ NormalizedTrace เป็นค่า default เพื่อให้ ω(𝕀) = 1

    Raises:
        SiteRangeError: ถ้า m ไม่อยู่ในช่วง 1..12
    """
    _check_sites("omega_fcs_form", len(factors), 1, MAX_FCS_FACTORS)
    triple = triple or FcsTriple.aklt()
    return triple.evaluate(factors)


def embedded_expectation(y: ObservableSpec, m: int, p: int) -> complex:
    """Tr_so(Φ^p ∘ Ŷ ∘ Φ^m): observable ถูกฝังใน chain ที่มี m และ p site เพิ่มสองข้าง"""
    _check_sites("embedded_expectation", y.n_sites, 1, MAX_EMBEDDED_SITES)
    for name, padding in (("m", m), ("p", p)):
        if not 0 <= padding <= MAX_PADDING:
            raise SiteRangeError(f"embedded_expectation padding {name}", padding, 0, MAX_PADDING)
    phi = transfer_channel().to_superoperator()
    lifted = phi.power(p).compose(hat_map(y)).compose(phi.power(m))
    return superop_trace(lifted)


class SweepSchedule(Enum):
    SYMMETRIC = "symmetric"  # m = p
    GRID = "grid"            # ทุกคู่ (m, p)


@dataclass(frozen=True)
class SweepPoint:
    m: int
    p: int
    value: complex
    abs_error: float


@dataclass
class ConvergenceSweep:
    """ผลของ convergence_sweep"""
    omega: complex
    points: List[SweepPoint]
    rate: float

    def rows(self) -> List[Tuple[int, int, float, float, float]]:
        """แถวสำหรับ CSV: (m, p, value_re, value_im, abs_error_vs_omega)"""
        return [(pt.m, pt.p, pt.value.real, pt.value.imag, pt.abs_error) for pt in self.points]


def fit_padding_rate(points: Sequence[SweepPoint], floor: float = ERROR_FIT_FLOOR) -> float:
    """fit log(error) เทียบกับจำนวน site ที่เติมทั้งหมด (m+p) คืนค่า rate ต่อ site"""
    usable = [(pt.m + pt.p, pt.abs_error) for pt in points if pt.abs_error > floor]
    if len({x for x, _ in usable}) < 2:
        return 0.0
    x = np.array([u[0] for u in usable], dtype=float)
    y = np.log(np.array([u[1] for u in usable], dtype=float))
    return float(np.exp(np.polyfit(x, y, 1)[0]))


def convergence_sweep(
    y: ObservableSpec,
    m_max: int,
    p_max: int,
    schedule: SweepSchedule = SweepSchedule.SYMMETRIC
) -> ConvergenceSweep:
    """
    เทียบ embedded_expectation(Y, m, p) กับ omega_local(Y) บนชุดของ (m, p)
    """
    for name, bound in (("m_max", m_max), ("p_max", p_max)):
        if not 0 <= bound <= MAX_PADDING:
            raise SiteRangeError(f"convergence_sweep {name}", bound, 0, MAX_PADDING)
    _check_sites("convergence_sweep", y.n_sites, 1, MAX_EMBEDDED_SITES)

    omega = omega_local(y)
    phi = transfer_channel().to_superoperator()
    lifted = hat_map(y)

    # เก็บ Φ^k ไว้ใช้ซ้ำ
    powers: Dict[int, SuperOperator] = {0: phi.power(0)}
    for k in range(1, max(m_max, p_max) + 1):
        powers[k] = phi.compose(powers[k - 1])

    if schedule is SweepSchedule.SYMMETRIC:
        grid = [(k, k) for k in range(min(m_max, p_max) + 1)]
    else:
        grid = [(m, p) for m in range(m_max + 1) for p in range(p_max + 1)]

    points = []
    for m, p in grid:
        value = superop_trace(powers[p].compose(lifted).compose(powers[m]))
        error = abs(value - omega)
        logger.debug(f"sweep m={m} p={p}: value={value:.6g} error={error:.3e}")
        points.append(SweepPoint(m, p, value, error))

    return ConvergenceSweep(omega=omega, points=points, rate=fit_padding_rate(points))


def correlator(axis: str, r: int, tol: float = 1e-10) -> float:
    """
    ω(S^a ⊗ 𝕀^{⊗(r−1)} ⊗ S^a)

    Raises:
        SiteRangeError: ถ้า r ไม่อยู่ในช่วง 1..20
    """
    _check_sites("correlator", r, 1, MAX_CORRELATOR_DISTANCE)
    spin = spin_axis(axis)
    factors = [spin] + [identity(PHYSICAL_DIM)] * (r - 1) + [spin]
    value = FcsTriple.aklt().evaluate(factors)
    if abs(value.imag) > tol:
        logger.warning(f"correlator({axis}, {r}) has imaginary residue {value.imag:.3e}")
    return float(value.real)


def correlation_length() -> float:
    """−1/ln|λ₂| จาก spectrum ของ Φ"""
    spectrum = superoperator_spectrum(transfer_channel().to_superoperator())
    subleading = abs(spectrum[1])
    if subleading == 0.0:
        return 0.0
    return -1.0 / math.log(subleading)
