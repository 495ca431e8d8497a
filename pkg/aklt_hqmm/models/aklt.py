from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple
from dataclasses import dataclass
from functools import lru_cache, reduce
import logging
import math

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..core.linalg import (
    ComplexMatrix,
    DimensionError,
    PAULI_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    as_matrix,
    dagger,
    eig_hermitian,
    identity,
    kron,
    matrix_from_json,
    matrix_to_json,
    max_abs_diff,
    random_complex_matrix,
)
from ..core.channels import KrausChannel, SuperOperator, superop_trace

logger = logging.getLogger(__name__)

BOND_DIM = 2
PHYSICAL_DIM = 3

# ขอบเขตจำนวน site ของแต่ละ operation
MAX_STATE_SITES = 10
MAX_HAT_SITES = 8
MIN_HAMILTONIAN_SITES = 2
MAX_HAMILTONIAN_SITES = 8
DENSE_DIAGONALIZATION_SITES = 6


class SiteRangeError(ValueError):
    """จำนวน site อยู่นอกช่วงที่ operation รองรับ"""

    def __init__(self, operation: str, n: int, low: int, high: int):
        self.operation = operation
        self.n = n
        super().__init__(f"{operation} requires {low} <= n <= {high}, got n={n}")


def _check_sites(operation: str, n: int, low: int, high: int):
    if not isinstance(n, (int, np.integer)) or not low <= n <= high:
        raise SiteRangeError(operation, n, low, high)


@dataclass(frozen=True)
class AkltTensors:
    """
    MPS tensors ของ AKLT chain: A_k ∈ M_2(ℂ) สำหรับ k ∈ (+, 0, −)
    """
    a_plus: ComplexMatrix
    a_zero: ComplexMatrix
    a_minus: ComplexMatrix

    def as_list(self) -> List[ComplexMatrix]:
        """ลำดับตาม basis ของ ℋ1: (|+⟩, |0⟩, |−⟩)"""
        return [self.a_plus, self.a_zero, self.a_minus]

    def stacked(self) -> np.ndarray:
        return np.stack(self.as_list())

    def channel(self) -> KrausChannel:
        return KrausChannel(tuple(self.as_list()))

    def gauge_deviation(self) -> float:
        """max deviation ของ Σ A A† = 𝕀 และ Σ A† A = 𝕀"""
        left = sum(a @ dagger(a) for a in self.as_list())
        right = sum(dagger(a) @ a for a in self.as_list())
        return max(max_abs_diff(left, identity(BOND_DIM)),
                   max_abs_diff(right, identity(BOND_DIM)))


@lru_cache(maxsize=1)
def aklt_tensors() -> AkltTensors:
    tensors = AkltTensors(
        a_plus=math.sqrt(2.0 / 3.0) * SIGMA_PLUS,
        a_zero=math.sqrt(1.0 / 3.0) * PAULI_Z,
        a_minus=-math.sqrt(2.0 / 3.0) * SIGMA_MINUS,
    )
    for a in tensors.as_list():
        a.setflags(write=False)
    return tensors


def transfer_channel() -> KrausChannel:
    """transfer channel Φ(Z) = Σ_k A_k Z A_k†"""
    return aklt_tensors().channel()


def chain_products(n: int) -> np.ndarray:
    """
    ตาราง A_{k_1}···A_{k_n} ทุก multi-index

    Returns:
        array ขนาด (3ⁿ, 2, 2) เรียงตาม basis ของ chain (site 1 เปลี่ยนช้าที่สุด)
    """
    if n < 1:
        raise SiteRangeError("chain_products", n, 1, MAX_STATE_SITES)
    single = aklt_tensors().stacked()
    products = single
    for _ in range(n - 1):
        products = np.einsum("kab,jbc->kjac", products, single).reshape(-1, BOND_DIM, BOND_DIM)
    return products


@dataclass(frozen=True)
class ObservableSpec:
    """
    observable บน n site ติดกัน

    เก็บได้สองแบบ: full (matrix 3ⁿ×3ⁿ) หรือ factors (3×3 ต่อ site)
    มีแบบใดแบบหนึ่งเท่านั้น
    """
    n_sites: int
    full: Optional[ComplexMatrix] = None
    factors: Optional[Tuple[ComplexMatrix, ...]] = None

    def __post_init__(self):
        if self.n_sites < 1:
            raise DimensionError(f"n_sites must be positive, got {self.n_sites}")
        if (self.full is None) == (self.factors is None):
            raise DimensionError("ObservableSpec needs exactly one of 'full' or 'factors'")

        if self.full is not None:
            dim = PHYSICAL_DIM ** self.n_sites
            m = as_matrix(self.full)
            if m.shape != (dim, dim):
                raise DimensionError(
                    f"Full observable on {self.n_sites} sites must be {dim}x{dim}, got {m.shape[0]}x{m.shape[1]}"
                )
            m.setflags(write=False)
            object.__setattr__(self, "full", m)
        else:
            factors = tuple(as_matrix(f) for f in self.factors)
            if len(factors) != self.n_sites:
                raise DimensionError(
                    f"Factored observable declares {self.n_sites} sites but has {len(factors)} factors"
                )
            for i, f in enumerate(factors):
                if f.shape != (PHYSICAL_DIM, PHYSICAL_DIM):
                    raise DimensionError(f"Factor {i} must be 3x3, got {f.shape[0]}x{f.shape[1]}")
                f.setflags(write=False)
            object.__setattr__(self, "factors", factors)

    @classmethod
    def from_full(cls, matrix: ComplexMatrix, n_sites: Optional[int] = None) -> "ObservableSpec":
        m = as_matrix(matrix)
        if n_sites is None:
            n_sites = int(round(math.log(m.shape[0], PHYSICAL_DIM)))
        return cls(n_sites=n_sites, full=m)

    @classmethod
    def from_factors(cls, factors: Sequence[ComplexMatrix]) -> "ObservableSpec":
        return cls(n_sites=len(factors), factors=tuple(factors))

    @classmethod
    def identity(cls, n: int) -> "ObservableSpec":
        return cls.from_factors([identity(PHYSICAL_DIM)] * n)

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        n: int,
        hermitian: bool = False,
        factored: bool = True
    ) -> "ObservableSpec":
        """สุ่ม observable ด้วย standard complex Gaussian entries"""
        if factored:
            return cls.from_factors([
                random_complex_matrix(rng, PHYSICAL_DIM, hermitian=hermitian) for _ in range(n)
            ])
        dim = PHYSICAL_DIM ** n
        return cls(n_sites=n, full=random_complex_matrix(rng, dim, hermitian=hermitian))

    @property
    def is_factored(self) -> bool:
        return self.factors is not None

    @property
    def dim(self) -> int:
        return PHYSICAL_DIM ** self.n_sites

    def to_full(self) -> ComplexMatrix:
        if self.full is not None:
            return self.full
        return kron(*self.factors)

    def require_factors(self) -> Tuple[ComplexMatrix, ...]:
        if self.factors is None:
            raise DimensionError("Operation requires a factored observable")
        return self.factors

    def tensor(self, other: "ObservableSpec") -> "ObservableSpec":
        """Y ⊗ Z บน block ที่ต่อกัน (Y อยู่ทางซ้าย)"""
        if self.is_factored and other.is_factored:
            return ObservableSpec.from_factors(self.factors + other.factors)
        return ObservableSpec(self.n_sites + other.n_sites, full=kron(self.to_full(), other.to_full()))

    def adjoint(self) -> "ObservableSpec":
        if self.is_factored:
            return ObservableSpec.from_factors([dagger(f) for f in self.factors])
        return ObservableSpec(self.n_sites, full=dagger(self.full))

    def to_dict(self) -> Dict[str, Any]:
        if self.is_factored:
            return {"n_sites": self.n_sites, "factors": [matrix_to_json(f) for f in self.factors]}
        return {"n_sites": self.n_sites, "full": matrix_to_json(self.full)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ObservableSpec":
        n_sites = data["n_sites"]
        if "factors" in data:
            return cls(n_sites=n_sites, factors=tuple(matrix_from_json(f) for f in data["factors"]))
        return cls(n_sites=n_sites, full=matrix_from_json(data["full"]))


@dataclass(frozen=True)
class MpsState:
    """state vector (ยังไม่ normalize) ของ AKLT chain ขนาด n site"""
    n_sites: int
    amplitudes: np.ndarray

    def amplitude(self, indices: Sequence[int]) -> complex:
        """amplitude ที่ multi-index (k_1, …, k_n) โดย k ∈ {0: +, 1: 0, 2: −}"""
        if len(indices) != self.n_sites:
            raise DimensionError(f"Expected {self.n_sites} indices, got {len(indices)}")
        flat = np.ravel_multi_index(tuple(indices), (PHYSICAL_DIM,) * self.n_sites)
        return complex(self.amplitudes[flat])

    def squared_norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def apply_observable(self, y: ObservableSpec) -> np.ndarray:
        """Y|ψ⟩ โดยไม่สร้าง full matrix เมื่อ Y เป็นแบบ factored"""
        if y.n_sites != self.n_sites:
            raise DimensionError(f"Observable acts on {y.n_sites} sites, state has {self.n_sites}")
        if not y.is_factored:
            return y.full @ self.amplitudes
        tensor = self.amplitudes.reshape((PHYSICAL_DIM,) * self.n_sites)
        for site, factor in enumerate(y.factors):
            tensor = np.moveaxis(np.tensordot(factor, tensor, axes=([1], [site])), 0, site)
        return tensor.reshape(-1)


def build_mps_state(n: int) -> MpsState:
    """|ψ⟩ = Σ Tr(A_{k_1}···A_{k_n}) |k_1···k_n⟩"""
    _check_sites("build_mps_state", n, 1, MAX_STATE_SITES)
    amplitudes = np.einsum("kaa->k", chain_products(n))
    amplitudes.setflags(write=False)
    return MpsState(n_sites=n, amplitudes=amplitudes)


def _hat_full(y: ComplexMatrix, n: int) -> SuperOperator:
    products = chain_products(n)
    # weighted[k] = Σ_ℓ Y[k,ℓ] P_ℓ
    weighted = (y @ products.reshape(-1, BOND_DIM * BOND_DIM)).reshape(-1, BOND_DIM, BOND_DIM)
    # Ŷ(M)[a,c] = Σ_k Σ_{b,d} conj(P_k[b,a]) M[b,d] weighted_k[d,c]
    matrix = np.einsum("kba,kdc->acbd", products.conj(), weighted)
    return SuperOperator(BOND_DIM, matrix.reshape(BOND_DIM ** 2, BOND_DIM ** 2))


def hat_map_composed(factors: Sequence[ComplexMatrix]) -> SuperOperator:
    """
    Ŷ ของ Y_1⊗···⊗Y_n จากการ compose map ของแต่ละ site

    (Y⊗Z)^ = Ẑ ∘ Ŷ ดังนั้น site แรกทำงานก่อน
    """
    result: Optional[SuperOperator] = None
    for factor in factors:
        site_map = _hat_full(as_matrix(factor, PHYSICAL_DIM, PHYSICAL_DIM), 1)
        result = site_map if result is None else site_map.compose(result)
    if result is None:
        raise DimensionError("hat_map_composed needs at least one factor")
    return result


def hat_map(y: ObservableSpec) -> SuperOperator:
    """
    M -> Σ_{k,ℓ} ⟨k|Y|ℓ⟩ A_{k_n}†···A_{k_1}† M A_{ℓ_1}···A_{ℓ_n}

    Raises:
        SiteRangeError: ถ้า n_sites > 8
    """
    _check_sites("hat_map", y.n_sites, 1, MAX_HAT_SITES)
    if y.is_factored:
        return hat_map_composed(y.factors)
    return _hat_full(y.full, y.n_sites)


def finite_expectation(y: ObservableSpec) -> complex:
    """⟨ψ⁽ⁿ⁾|Y|ψ⁽ⁿ⁾⟩ = Tr_so(Ŷ) บน state ที่ยังไม่ normalize"""
    return superop_trace(hat_map(y))


def normalized_expectation(y: ObservableSpec) -> complex:
    return finite_expectation(y) / finite_expectation(ObservableSpec.identity(y.n_sites))


def exact_oracle(y: ObservableSpec) -> complex:
    """
    คำนวณ ⟨ψ|Y|ψ⟩ ตรงจาก state vector โดยไม่ผ่าน transfer operator
    """
    _check_sites("exact_oracle", y.n_sites, 1, MAX_HAT_SITES)
    state = build_mps_state(y.n_sites)
    return complex(np.vdot(state.amplitudes, state.apply_observable(y)))


class SpinOperators(NamedTuple):
    sx: ComplexMatrix
    sy: ComplexMatrix
    sz: ComplexMatrix


@lru_cache(maxsize=1)
def spin1_operators() -> SpinOperators:
    """spin-1 matrices ใน basis (|+⟩, |0⟩, |−⟩)"""
    s_plus = math.sqrt(2.0) * np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    s_minus = dagger(s_plus)
    operators = SpinOperators(
        sx=(s_plus + s_minus) / 2.0,
        sy=(s_plus - s_minus) / 2.0j,
        sz=np.diag([1.0, 0.0, -1.0]).astype(complex),
    )
    for op in operators:
        op.setflags(write=False)
    return operators


def spin_axis(axis: str) -> ComplexMatrix:
    """S^a สำหรับ axis ∈ {x, y, z}"""
    try:
        return getattr(spin1_operators(), f"s{axis}")
    except AttributeError:
        raise ValueError(f"Unknown spin axis '{axis}', expected one of x, y, z") from None


def _site_operator(op: ComplexMatrix, site: int, n: int) -> scipy.sparse.csr_matrix:
    left = scipy.sparse.identity(PHYSICAL_DIM ** site, dtype=complex, format="csr")
    right = scipy.sparse.identity(PHYSICAL_DIM ** (n - site - 1), dtype=complex, format="csr")
    return scipy.sparse.kron(scipy.sparse.kron(left, scipy.sparse.csr_matrix(op)), right, format="csr")


def bond_list(n: int, periodic: bool) -> List[Tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    return bonds


def sparse_aklt_hamiltonian(n: int, periodic: bool) -> scipy.sparse.csr_matrix:
    """H = Σ_bonds S_i·S_j + (S_i·S_j)²/3 ในรูป sparse"""
    _check_sites("aklt_hamiltonian", n, MIN_HAMILTONIAN_SITES, MAX_HAMILTONIAN_SITES)
    spins = spin1_operators()
    site_ops = [[_site_operator(op, site, n) for op in spins] for site in range(n)]

    dim = PHYSICAL_DIM ** n
    hamiltonian = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    for i, j in bond_list(n, periodic):
        heisenberg = reduce(lambda acc, pair: acc + pair[0] @ pair[1],
                            zip(site_ops[i], site_ops[j]),
                            scipy.sparse.csr_matrix((dim, dim), dtype=complex))
        hamiltonian = hamiltonian + heisenberg + (heisenberg @ heisenberg) / 3.0
    logger.debug(f"Assembled AKLT Hamiltonian: n={n}, periodic={periodic}, nnz={hamiltonian.nnz}")
    return hamiltonian


def aklt_hamiltonian(n: int, periodic: bool) -> ComplexMatrix:
    """
    AKLT Hamiltonian เป็น dense matrix 3ⁿ×3ⁿ

    bond set คือ (i, i+1) และเพิ่ม (n, 1) ถ้า periodic
    (สำหรับ n=2 แบบ periodic จึงมี bond เดียวกันสองครั้ง)
    """
    return sparse_aklt_hamiltonian(n, periodic).toarray()


def ground_state_energy(n: int, periodic: bool) -> float:
    """ค่า eigenvalue ต่ำสุดจาก exact diagonalization"""
    if n <= DENSE_DIAGONALIZATION_SITES:
        values, _ = eig_hermitian(aklt_hamiltonian(n, periodic))
        return float(values[0])
    values = scipy.sparse.linalg.eigsh(sparse_aklt_hamiltonian(n, periodic), k=1, which="SA",
                                       return_eigenvectors=False)
    return float(np.min(values.real))
