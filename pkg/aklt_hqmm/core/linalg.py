from typing import Any, List, Optional, Sequence, Tuple
from functools import reduce
import logging

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

# ComplexMatrix คือ ndarray 2 มิติ dtype complex128
ComplexMatrix = np.ndarray

STRUCTURE_TOL = 1e-10
EQUALITY_TOL = 1e-9

logger = logging.getLogger(__name__)


class DimensionError(ValueError):
    """ข้อผิดพลาดจากขนาดของ matrix ที่ไม่สอดคล้องกัน"""
    pass


class HermiticityError(ValueError):
    """ข้อผิดพลาดเมื่อ matrix ไม่เป็น Hermitian ภายใน tolerance"""

    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"Matrix is not Hermitian: max |m - m†| = {deviation:.3e} "
            f"exceeds tolerance {tol:.1e}"
        )


def _frozen(data: Any) -> ComplexMatrix:
    m = np.array(data, dtype=complex)
    m.setflags(write=False)
    return m


# basis ของ ℋ½: (|↑⟩, |↓⟩) -> (0, 1)
IDENTITY_2 = _frozen(np.eye(2))
PAULI_X = _frozen([[0, 1], [1, 0]])
PAULI_Y = _frozen([[0, -1j], [1j, 0]])
PAULI_Z = _frozen([[1, 0], [0, -1]])
SIGMA_PLUS = _frozen([[0, 1], [0, 0]])    # |↑⟩⟨↓|
SIGMA_MINUS = _frozen([[0, 0], [1, 0]])   # |↓⟩⟨↑|


def as_matrix(
    data: Any,
    rows: Optional[int] = None,
    cols: Optional[int] = None
) -> ComplexMatrix:
    """
    แปลงข้อมูลเป็น ComplexMatrix และตรวจสอบขนาด

    Raises:
        DimensionError: ถ้าไม่ใช่ 2 มิติ หรือขนาดไม่ตรงกับที่กำหนด
    """
    m = np.array(data, dtype=complex)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"Expected a non-empty 2-D matrix, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise DimensionError(f"Expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"Expected {cols} columns, got {m.shape[1]}")
    return m


def require_square(m: ComplexMatrix, name: str = "matrix") -> int:
    """คืนค่ามิติของ matrix จัตุรัส"""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m.shape[0]


def identity(d: int) -> ComplexMatrix:
    return np.eye(d, dtype=complex)


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.transpose(m))


def kron(*factors: ComplexMatrix) -> ComplexMatrix:
    """
    Kronecker product ตามลำดับ factor (factor แรกเปลี่ยนช้าที่สุด)

    entry ((i1·b.rows+i2), (j1·b.cols+j2)) = a[i1,j1]·b[i2,j2]
    """
    if not factors:
        raise DimensionError("kron needs at least one factor")
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def trace(m: ComplexMatrix) -> complex:
    require_square(m)
    return complex(np.trace(m))


def hs_inner(x: ComplexMatrix, y: ComplexMatrix) -> complex:
    """Hilbert–Schmidt inner product ⟨x, y⟩ = Tr(x† y)"""
    dx = require_square(x, "x")
    dy = require_square(y, "y")
    if dx != dy:
        raise DimensionError(f"hs_inner dimension mismatch: {dx} vs {dy}")
    # Tr(x† y) = Σ conj(x_ij) y_ij
    return complex(np.vdot(x, y))


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b - b @ a


def max_abs_diff(a: ComplexMatrix, b: ComplexMatrix) -> float:
    """max entrywise |a - b|"""
    if np.shape(a) != np.shape(b):
        raise DimensionError(f"Shape mismatch: {np.shape(a)} vs {np.shape(b)}")
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0))


def hermitian_deviation(m: ComplexMatrix) -> float:
    require_square(m)
    return max_abs_diff(m, dagger(m))


def is_hermitian(m: ComplexMatrix, tol: float = STRUCTURE_TOL) -> bool:
    return hermitian_deviation(m) <= tol


def eig_hermitian(
    m: ComplexMatrix,
    tol: float = STRUCTURE_TOL
) -> Tuple[np.ndarray, ComplexMatrix]:
    """
    แยกค่าเฉพาะของ Hermitian matrix

    Returns:
        (eigenvalues เรียงจากน้อยไปมาก, eigenvectors เป็น column)

    Raises:
        HermiticityError: ถ้า max |m - m†| เกิน tol
    """
    deviation = hermitian_deviation(m)
    if deviation > tol:
        raise HermiticityError(deviation, tol)
    # ใช้ส่วน Hermitian เพื่อตัด noise ระดับ round-off
    values, vectors = scipy.linalg.eigh(0.5 * (m + dagger(m)))
    return np.asarray(values, dtype=float), np.asarray(vectors, dtype=complex)


def random_complex_matrix(
    rng: np.random.Generator,
    rows: int,
    cols: Optional[int] = None,
    hermitian: bool = False
) -> ComplexMatrix:
    """
    สุ่ม matrix ที่มี entry เป็น standard complex Gaussian

    Args:
        hermitian: ถ้า True จะคืน (M + M†)/2
    """
    cols = rows if cols is None else cols
    m = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    if hermitian:
        if rows != cols:
            raise DimensionError("Hermitian random matrix must be square")
        m = 0.5 * (m + dagger(m))
    return m


def random_density_matrix(rng: np.random.Generator, d: int) -> ComplexMatrix:
    g = random_complex_matrix(rng, d)
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, d: int) -> ComplexMatrix:
    return np.asarray(unitary_group.rvs(d, random_state=rng), dtype=complex)


def matrix_to_json(m: ComplexMatrix) -> List[List[List[float]]]:
    """แปลง matrix เป็น nested list ของคู่ [re, im]"""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def matrix_from_json(data: Sequence[Sequence[Sequence[float]]]) -> ComplexMatrix:
    """แปลง nested list ของคู่ [re, im] กลับเป็น matrix"""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DimensionError(
            f"Complex matrix must be nested [re, im] pairs, got array shape {arr.shape}"
        )
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])
