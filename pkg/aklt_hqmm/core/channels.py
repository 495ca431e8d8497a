from typing import Callable, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass
import logging

import numpy as np

from .linalg import (
    ComplexMatrix,
    DimensionError,
    STRUCTURE_TOL,
    as_matrix,
    dagger,
    identity,
    max_abs_diff,
    require_square,
)

logger = logging.getLogger(__name__)

MAX_POWER_STEPS = 10_000
RATE_FIT_WINDOW = 10


class ChannelError(ValueError):
    """channel ไม่ตรงตามเงื่อนไขของ operation (เช่น ไม่ unital)"""
    pass


class LinearityError(ValueError):
    """map ที่ส่งเข้ามาไม่เป็น linear map"""
    pass


class ConvergenceError(RuntimeError):
    """power iteration ไม่ลู่เข้า (channel ไม่ primitive)"""
    pass


def vec(z: ComplexMatrix) -> np.ndarray:
    """vectorize แบบ row-major ตามลำดับ matrix unit E_ij"""
    return np.asarray(z, dtype=complex).reshape(-1)


def unvec(v: np.ndarray, d: int) -> ComplexMatrix:
    return np.asarray(v, dtype=complex).reshape(d, d)


@dataclass(frozen=True)
class KrausChannel:
    """
    Completely positive map ในรูป Kraus: Z -> Σ_k K_k Z K_k†

    Attributes:
        kraus: Kraus operators ทั้งหมด ขนาด dim_out × dim_in เท่ากัน
    """
    kraus: Tuple[ComplexMatrix, ...]

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus)
        if not ops:
            raise DimensionError("A Kraus channel needs at least one operator")
        shape = ops[0].shape
        for i, k in enumerate(ops):
            if k.shape != shape:
                raise DimensionError(
                    f"Kraus operator {i} has shape {k.shape}, expected {shape}"
                )
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @classmethod
    def from_list(cls, kraus: Sequence[ComplexMatrix]) -> "KrausChannel":
        return cls(tuple(kraus))

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, z: ComplexMatrix) -> ComplexMatrix:
        """Σ_k K_k z K_k†"""
        d = require_square(np.asarray(z), "z")
        if d != self.dim_in:
            raise DimensionError(f"Channel expects {self.dim_in}x{self.dim_in} input, got {d}x{d}")
        return sum(k @ z @ dagger(k) for k in self.kraus)

    def dual_apply(self, rho: ComplexMatrix) -> ComplexMatrix:
        """Hilbert–Schmidt dual: Σ_k K_k† ρ K_k"""
        d = require_square(np.asarray(rho), "rho")
        if d != self.dim_out:
            raise DimensionError(f"Dual expects {self.dim_out}x{self.dim_out} input, got {d}x{d}")
        return sum(dagger(k) @ rho @ k for k in self.kraus)

    def is_unital(self, tol: float = STRUCTURE_TOL) -> bool:
        gram = sum(k @ dagger(k) for k in self.kraus)
        return max_abs_diff(gram, identity(self.dim_out)) <= tol

    def is_trace_preserving(self, tol: float = STRUCTURE_TOL) -> bool:
        gram = sum(dagger(k) @ k for k in self.kraus)
        return max_abs_diff(gram, identity(self.dim_in)) <= tol

    def is_bistochastic(self, tol: float = STRUCTURE_TOL) -> bool:
        return self.is_unital(tol) and self.is_trace_preserving(tol)

    def compose(self, other: "KrausChannel") -> "KrausChannel":
        """self ∘ other (other ทำงานก่อน)"""
        if other.dim_out != self.dim_in:
            raise DimensionError(
                f"Cannot compose: inner output {other.dim_out} != outer input {self.dim_in}"
            )
        return KrausChannel(tuple(k2 @ k1 for k1 in other.kraus for k2 in self.kraus))

    def to_superoperator(self) -> "SuperOperator":
        if self.dim_in != self.dim_out:
            raise DimensionError(
                f"Superoperator form needs a square channel, got {self.dim_out}x{self.dim_in} Kraus operators"
            )
        # vec(K Z K†) = (K ⊗ conj(K)) vec(Z) สำหรับ vec แบบ row-major
        matrix = sum(np.kron(k, np.conj(k)) for k in self.kraus)
        return SuperOperator(self.dim_in, matrix)

    def dual(self) -> "KrausChannel":
        return KrausChannel(tuple(dagger(k) for k in self.kraus))


@dataclass(frozen=True)
class SuperOperator:
    """
    linear map บน operator ขนาด d×d ในรูป matrix d²×d²

    column (i,j) คือ vec(F(E_ij)) โดย vec เป็นแบบ row-major
    """
    dim: int
    matrix: ComplexMatrix

    def __post_init__(self):
        m = as_matrix(self.matrix, self.dim ** 2, self.dim ** 2)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, z: ComplexMatrix) -> ComplexMatrix:
        d = require_square(np.asarray(z), "z")
        if d != self.dim:
            raise DimensionError(f"Superoperator acts on {self.dim}x{self.dim}, got {d}x{d}")
        return unvec(self.matrix @ vec(z), self.dim)

    def compose(self, other: "SuperOperator") -> "SuperOperator":
        """self ∘ other"""
        if other.dim != self.dim:
            raise DimensionError(f"Cannot compose superoperators on {self.dim} and {other.dim}")
        return SuperOperator(self.dim, self.matrix @ other.matrix)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        return self.compose(other)

    def power(self, n: int) -> "SuperOperator":
        if n < 0:
            raise ValueError(f"Superoperator power must be non-negative, got {n}")
        return SuperOperator(self.dim, np.linalg.matrix_power(self.matrix, n))

    def spectrum(self) -> np.ndarray:
        return superoperator_spectrum(self)

    def choi_matrix(self) -> ComplexMatrix:
        """Choi matrix C = Σ_ij E_ij ⊗ F(E_ij)"""
        d = self.dim
        return self.matrix.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)

    def is_completely_positive(self, tol: float = 1e-9) -> bool:
        choi = self.choi_matrix()
        if max_abs_diff(choi, dagger(choi)) > STRUCTURE_TOL:
            return False
        return bool(np.min(np.linalg.eigvalsh(0.5 * (choi + dagger(choi)))) >= -tol)


def identity_superoperator(d: int) -> SuperOperator:
    return SuperOperator(d, np.eye(d * d, dtype=complex))


def to_superoperator(
    f: Union[KrausChannel, Callable[[ComplexMatrix], ComplexMatrix]],
    dim: Optional[int] = None,
    linearity_tol: float = 1e-8
) -> SuperOperator:
    """
    สร้าง SuperOperator จาก Kraus family หรือ callable บน operator d×d

    Raises:
        LinearityError: ถ้า callable ไม่ผ่านการสุ่มตรวจ linearity
    """
    if isinstance(f, KrausChannel):
        return f.to_superoperator()
    if dim is None:
        raise DimensionError("dim is required when f is a callable")

    d = dim
    columns: List[np.ndarray] = []
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            image = np.asarray(f(unit), dtype=complex)
            if image.shape != (d, d):
                raise DimensionError(f"Map returned shape {image.shape}, expected {(d, d)}")
            columns.append(vec(image))
    result = SuperOperator(d, np.stack(columns, axis=1))

    # สุ่มตรวจ linearity ด้วย seed คงที่
    rng = np.random.default_rng(0x5EED)
    for _ in range(3):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        y = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        alpha, beta = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        lhs = np.asarray(f(alpha * x + beta * y), dtype=complex)
        rhs = alpha * np.asarray(f(x)) + beta * np.asarray(f(y))
        deviation = max_abs_diff(lhs, rhs)
        if deviation > linearity_tol:
            raise LinearityError(f"Map is not linear: deviation {deviation:.3e} on a random combination")
        # round-trip ผ่าน matrix ต้องตรงกับ f
        deviation = max_abs_diff(result.apply(x), np.asarray(f(x)))
        if deviation > linearity_tol:
            raise LinearityError(f"Map is not linear: superoperator round-trip deviates by {deviation:.3e}")
    return result


def superop_trace(s: SuperOperator, basis: Optional[ComplexMatrix] = None) -> complex:
    """
    Tr_so(F) = Σ_{α,β} ⟨α|F(|α⟩⟨β|)|β⟩

    Args:
        basis: unitary ที่ column เป็น orthonormal basis {|α⟩}; ค่า default คือ basis มาตรฐาน
    """
    if basis is None:
        return complex(np.trace(s.matrix))
    u = as_matrix(basis, s.dim, s.dim)
    total = 0j
    for a in range(s.dim):
        for b in range(s.dim):
            ket_a, ket_b = u[:, a], u[:, b]
            image = s.apply(np.outer(ket_a, np.conj(ket_b)))
            total += np.conj(ket_a) @ image @ ket_b
    return complex(total)


def superoperator_spectrum(s: SuperOperator) -> np.ndarray:
    """eigenvalues เรียงตามขนาดจากมากไปน้อย"""
    values = np.linalg.eigvals(s.matrix)
    order = np.lexsort((-values.real, -np.abs(values)))
    return values[order]


@dataclass(frozen=True)
class PowerLimit:
    """ผลลัพธ์ของ power_limit"""
    limit: SuperOperator
    rate: float
    steps: int


def _fit_geometric_rate(errors: Sequence[float]) -> float:
    points = [(i, e) for i, e in enumerate(errors) if e > 0.0]
    if len(points) < 2:
        return 0.0
    x = np.array([p[0] for p in points], dtype=float)
    y = np.log(np.array([p[1] for p in points], dtype=float))
    slope = np.polyfit(x, y, 1)[0]
    return float(np.exp(slope))


def power_limit(
    ch: KrausChannel,
    tol: float = 1e-12,
    max_steps: int = MAX_POWER_STEPS
) -> PowerLimit:
    """
    หา lim Φⁿ โดยคูณ superoperator ซ้ำจนผลต่างระหว่างรอบ < tol (max-entry norm)

    อัตราการลู่เข้าคำนวณจาก least-squares slope ของ log ‖Φ^{n+1} − Φⁿ‖
    ใน RATE_FIT_WINDOW รอบสุดท้ายก่อนลู่เข้า

    Raises:
        ChannelError: ถ้า channel ไม่ unital, tol <= 0 หรือ max_steps < 1
        ConvergenceError: ถ้าไม่ลู่เข้าภายใน max_steps
    """
    if tol <= 0:
        raise ChannelError(f"tol must be positive, got {tol}")
    if max_steps < 1:
        raise ChannelError(f"max_steps must be at least 1, got {max_steps}")
    if not ch.is_unital():
        raise ChannelError("power_limit requires a unital channel")

    step_matrix = ch.to_superoperator().matrix
    current = step_matrix
    differences: List[float] = []

    for step in range(1, max_steps + 1):
        following = current @ step_matrix
        difference = max_abs_diff(following, current)
        logger.debug(f"power_limit step {step}: successive difference {difference:.3e}")
        if difference < tol:
            rate = _fit_geometric_rate(differences[-RATE_FIT_WINDOW:])
            return PowerLimit(SuperOperator(ch.dim_in, following), rate, step)
        differences.append(difference)
        current = following

    raise ConvergenceError(
        f"Powers did not converge within {max_steps} steps "
        f"(last successive difference {differences[-1]:.3e}); channel is not primitive"
    )
