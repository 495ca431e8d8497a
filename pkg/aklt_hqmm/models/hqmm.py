from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence, Tuple
from dataclasses import dataclass
from enum import Enum
import logging
import math

import numpy as np

from ..core.linalg import (
    ComplexMatrix,
    DimensionError,
    PAULI_Z,
    STRUCTURE_TOL,
    as_matrix,
    dagger,
    identity,
    kron,
    matrix_from_json,
    matrix_to_json,
    max_abs_diff,
    random_complex_matrix,
)
from .aklt import (
    BOND_DIM,
    PHYSICAL_DIM,
    MAX_HAT_SITES,
    ObservableSpec,
    _check_sites,
    aklt_tensors,
    chain_products,
)

logger = logging.getLogger(__name__)

MAX_JOINT_STEPS = 12


class OrderingError(ValueError):
    """เรียก operation ที่ต้องใช้ causal ordering กับ model แบบ conventional"""
    pass


class ModelError(ValueError):
    """HQMM model ไม่ตรงตามเงื่อนไข (เช่น initial state ไม่ positive)"""
    pass


class Ordering(Enum):
    """ลำดับการ compose ใน block map หนึ่งขั้น"""
    CONVENTIONAL = "conventional"  # ℱ: emission ก่อน แล้วจึง hidden transition
    CAUSAL = "causal"              # 𝒢: hidden transition ก่อน แล้วจึง emission


class TransitionExpectation(ABC):
    """
    Transition expectation ℰ: ℬ(ℋ_A) ⊗ ℬ(ℋ_B) → ℬ(ℋ_out)

    subclass กำหนดรูปแบบการแทน (Kraus family, rank-one trace, isometry conjugation)
    """

    def __init__(self, in_dims: Tuple[int, int], out_dim: int):
        self.in_dims = (int(in_dims[0]), int(in_dims[1]))
        self.out_dim = int(out_dim)
        self.logger = logging.getLogger(self.__class__.__name__)

    def apply(self, x: ComplexMatrix, z: ComplexMatrix) -> ComplexMatrix:
        """ℰ(x ⊗ z)"""
        x = as_matrix(x, self.in_dims[0], self.in_dims[0])
        z = as_matrix(z, self.in_dims[1], self.in_dims[1])
        return self._apply(x, z)

    @abstractmethod
    def _apply(self, x: ComplexMatrix, z: ComplexMatrix) -> ComplexMatrix:
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    def unit_deviation(self) -> float:
        image = self.apply(identity(self.in_dims[0]), identity(self.in_dims[1]))
        return max_abs_diff(image, identity(self.out_dim))

    def is_unital(self, tol: float = STRUCTURE_TOL) -> bool:
        return self.unit_deviation() <= tol

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "TransitionExpectation":
        if "kraus_pairs" in data:
            pairs = [(matrix_from_json(k), matrix_from_json(l)) for k, l in data["kraus_pairs"]]
            return KrausFamilyExpectation(pairs)
        if "rank_one_trace" in data:
            return RankOneTraceExpectation(float(data["rank_one_trace"]), int(data.get("dim", BOND_DIM)))
        if "isometry" in data:
            isometries = [matrix_from_json(data["isometry"])]
        elif "kraus" in data:
            isometries = [matrix_from_json(v) for v in data["kraus"]]
        else:
            raise ModelError(
                "Transition expectation needs one of 'kraus_pairs', 'rank_one_trace', 'isometry', 'kraus'"
            )
        in_dims = tuple(data["in_dims"]) if "in_dims" in data else None
        return ConjugationExpectation(isometries, in_dims, bool(data.get("swap_inputs", False)))


class KrausFamilyExpectation(TransitionExpectation):
    """
    ℰ(X ⊗ Y) = Σ_{k,ℓ} ⟨k|Y|ℓ⟩ K_k X L_ℓ†

    K_k, L_ℓ มีขนาด out × d_A และจำนวนคู่เท่ากับ d_B
    ถ้า K = L ทุกคู่ map นี้ completely positive
    """

    def __init__(self, pairs: Sequence[Tuple[ComplexMatrix, ComplexMatrix]]):
        if not pairs:
            raise DimensionError("Kraus family needs at least one pair")
        left = np.stack([as_matrix(k) for k, _ in pairs])
        right = np.stack([as_matrix(l) for _, l in pairs])
        if left.shape != right.shape:
            raise DimensionError(f"Kraus pair shapes differ: {left.shape[1:]} vs {right.shape[1:]}")
        super().__init__((left.shape[2], left.shape[0]), left.shape[1])
        self.left = left
        self.right = right

    @classmethod
    def from_kraus(cls, kraus: Sequence[ComplexMatrix]) -> "KrausFamilyExpectation":
        return cls([(k, k) for k in kraus])

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.left, self.right))

    def _apply(self, x: ComplexMatrix, z: ComplexMatrix) -> ComplexMatrix:
        return np.einsum("kl,kab,bc,ldc->ad", z, self.left, x, self.right.conj())

    def to_dict(self) -> Dict[str, Any]:
        return {"kraus_pairs": [[matrix_to_json(k), matrix_to_json(l)]
                                for k, l in zip(self.left, self.right)]}


class RankOneTraceExpectation(TransitionExpectation):
    """ℰ(X ⊗ Z) = scale·Tr(X)·Z"""

    def __init__(self, scale: float, dim: int = BOND_DIM):
        if dim < 1:
            raise DimensionError(f"dim must be positive, got {dim}")
        super().__init__((dim, dim), dim)
        self.scale = scale

    def _apply(self, x: ComplexMatrix, z: ComplexMatrix) -> ComplexMatrix:
        return self.scale * np.trace(x) * z

    def to_dict(self) -> Dict[str, Any]:
        return {"rank_one_trace": self.scale, "dim": self.out_dim}


class ConjugationExpectation(TransitionExpectation):
    """
    ℰ(X ⊗ Z) = Σ_i V_i† (X ⊗ Z) V_i

    swap_inputs=True จะใช้ (Z ⊗ X) แทน
    """

    def __init__(
        self,
        isometries: Sequence[ComplexMatrix],
        in_dims: Optional[Tuple[int, int]] = None,
        swap_inputs: bool = False
    ):
        if not isometries:
            raise DimensionError("Conjugation family needs at least one operator")
        ops = np.stack([as_matrix(v) for v in isometries])
        rows = ops.shape[1]
        if in_dims is None:
            side = math.isqrt(rows)
            if side * side != rows:
                raise DimensionError(f"Cannot split {rows} rows into two equal factors; give in_dims")
            in_dims = (side, side)
        if in_dims[0] * in_dims[1] != rows:
            raise DimensionError(f"in_dims {tuple(in_dims)} do not multiply to {rows}")
        super().__init__(in_dims, ops.shape[2])
        self.isometries = ops
        self.swap_inputs = swap_inputs

    def _apply(self, x: ComplexMatrix, z: ComplexMatrix) -> ComplexMatrix:
        joint = kron(z, x) if self.swap_inputs else kron(x, z)
        return sum(dagger(v) @ joint @ v for v in self.isometries)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"in_dims": list(self.in_dims), "swap_inputs": self.swap_inputs}
        if len(self.isometries) == 1:
            data["isometry"] = matrix_to_json(self.isometries[0])
        else:
            data["kraus"] = [matrix_to_json(v) for v in self.isometries]
        return data


class InitialStateKind(Enum):
    TRACE = "trace"
    NORMALIZED_TRACE = "normalized_trace"
    DENSITY = "density"


@dataclass(frozen=True)
class InitialState:
    """functional φ_{H,1} บน hidden algebra"""
    kind: InitialStateKind = InitialStateKind.NORMALIZED_TRACE
    density: Optional[ComplexMatrix] = None

    def __post_init__(self):
        if (self.kind is InitialStateKind.DENSITY) != (self.density is not None):
            raise ModelError("A density matrix is required exactly when kind is 'density'")
        if self.density is not None:
            rho = as_matrix(self.density)
            rho.setflags(write=False)
            object.__setattr__(self, "density", rho)

    def __call__(self, x: ComplexMatrix) -> complex:
        if self.kind is InitialStateKind.TRACE:
            return complex(np.trace(x))
        if self.kind is InitialStateKind.NORMALIZED_TRACE:
            return complex(np.trace(x)) / x.shape[0]
        return complex(np.trace(self.density @ x))

    def to_json(self) -> Any:
        if self.kind is InitialStateKind.DENSITY:
            return {"density": matrix_to_json(self.density)}
        return self.kind.value

    @classmethod
    def from_json(cls, data: Any) -> "InitialState":
        if isinstance(data, dict):
            return cls(InitialStateKind.DENSITY, matrix_from_json(data["density"]))
        return cls(InitialStateKind(data))


@dataclass(frozen=True)
class HqmmModel:
    """
    generative triple (φ_{H,1}, ℰ_H, ℰ_{H,O}) พร้อม ordering

    ℰ_H: ℬ_H ⊗ ℬ_H → ℬ_H และ ℰ_{H,O}: ℬ_H ⊗ ℬ_O → ℬ_H
    """
    initial_state: InitialState
    hidden: TransitionExpectation
    emission: TransitionExpectation
    ordering: Ordering = Ordering.CAUSAL

    def __post_init__(self):
        d_h = self.hidden.out_dim
        if self.hidden.in_dims != (d_h, d_h):
            raise DimensionError(
                f"Hidden expectation must map {d_h}x{d_h} ⊗ {d_h}x{d_h} to {d_h}x{d_h}, "
                f"got inputs {self.hidden.in_dims}"
            )
        if self.emission.in_dims[0] != d_h or self.emission.out_dim != d_h:
            raise DimensionError(
                f"Emission expectation must map hidden dimension {d_h} to itself, "
                f"got input {self.emission.in_dims[0]} and output {self.emission.out_dim}"
            )
        if self.initial_state.density is not None and self.initial_state.density.shape != (d_h, d_h):
            raise DimensionError(f"Initial density must be {d_h}x{d_h}")
        unit_value = self.initial_state(identity(d_h))
        if not unit_value.real > 0:
            raise ModelError(f"Initial state must be strictly positive on the identity, got {unit_value}")

    @property
    def hidden_dim(self) -> int:
        return self.hidden.out_dim

    @property
    def output_dim(self) -> int:
        return self.emission.in_dims[1]

    def conventional_block_map(self, a: ComplexMatrix, b: ComplexMatrix, x: ComplexMatrix) -> ComplexMatrix:
        """ℱ_{a,b}(x) = ℰ_H(ℰ_{H,O}(a ⊗ b) ⊗ x)"""
        return self.hidden.apply(self.emission.apply(a, b), x)

    def causal_block_map(self, a: ComplexMatrix, b: ComplexMatrix, x: ComplexMatrix) -> ComplexMatrix:
        """𝒢_{a,b}(x) = ℰ_{H,O}(ℰ_H(a ⊗ x) ⊗ b)"""
        return self.emission.apply(self.hidden.apply(a, x), b)

    def block_map(self, a: ComplexMatrix, b: ComplexMatrix, x: ComplexMatrix) -> ComplexMatrix:
        if self.ordering is Ordering.CAUSAL:
            return self.causal_block_map(a, b, x)
        return self.conventional_block_map(a, b, x)

    def with_ordering(self, ordering: Ordering) -> "HqmmModel":
        return HqmmModel(self.initial_state, self.hidden, self.emission, ordering)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial_state": self.initial_state.to_json(),
            "hidden": self.hidden.to_dict(),
            "emission": self.emission.to_dict(),
            "ordering": self.ordering.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HqmmModel":
        return cls(
            initial_state=InitialState.from_json(data.get("initial_state", "normalized_trace")),
            hidden=TransitionExpectation.from_dict(data["hidden"]),
            emission=TransitionExpectation.from_dict(data["emission"]),
            ordering=Ordering(data.get("ordering", "causal")),
        )


def _aklt_emission() -> KrausFamilyExpectation:
    return KrausFamilyExpectation.from_kraus(aklt_tensors().as_list())


def _aklt_hidden() -> RankOneTraceExpectation:
    return RankOneTraceExpectation(0.5, BOND_DIM)


def e_hidden(x: ComplexMatrix, z: ComplexMatrix) -> ComplexMatrix:
    """ℰ_H(X ⊗ Z) = ½Tr(X)·Z"""
    return _aklt_hidden().apply(x, z)


def e_emission(x: ComplexMatrix, y: ComplexMatrix) -> ComplexMatrix:
    """ℰ_{O,H}(X ⊗ Y) = Σ ⟨k|Y|ℓ⟩ A_k X A_ℓ†"""
    return _aklt_emission().apply(x, y)


def aklt_causal_model() -> HqmmModel:
    return HqmmModel(InitialState(), _aklt_hidden(), _aklt_emission(), Ordering.CAUSAL)


def block_map_conventional(a: ComplexMatrix, b: ComplexMatrix, x: ComplexMatrix) -> ComplexMatrix:
    return aklt_causal_model().conventional_block_map(a, b, x)


def block_map_causal(a: ComplexMatrix, b: ComplexMatrix, x: ComplexMatrix) -> ComplexMatrix:
    return aklt_causal_model().causal_block_map(a, b, x)


def _check_pairs(operation: str, pairs: Sequence[Tuple[ComplexMatrix, ComplexMatrix]], high: int):
    _check_sites(operation, len(pairs), 1, high)


def joint_state(model: HqmmModel, pairs: Sequence[Tuple[ComplexMatrix, ComplexMatrix]]) -> complex:
    """
    Ψ_{H,O}(⊗_m (a_m ⊗ b_m)) ด้วย recursion T_0 = 𝕀, T_{k+1} = 𝒢_{a_{n−k}, b_{n−k}}(T_k)

    Raises:
        OrderingError: ถ้า model ไม่ใช่ causal
    """
    if model.ordering is not Ordering.CAUSAL:
        raise OrderingError(
            "joint_state evaluates the causal recursion; use conventional_state "
            "(composition of conventional block maps) for a conventional model"
        )
    _check_pairs("joint_state", pairs, MAX_JOINT_STEPS)
    t = identity(model.hidden_dim)
    for a, b in reversed(pairs):
        t = model.causal_block_map(a, b, t)
    return model.initial_state(t)


def conventional_state(model: HqmmModel, pairs: Sequence[Tuple[ComplexMatrix, ComplexMatrix]]) -> complex:
    """φ(ℱ_{a_1,b_1}∘···∘ℱ_{a_n,b_n}(𝕀)) ไม่ขึ้นกับ ordering ของ model"""
    _check_pairs("conventional_state", pairs, MAX_JOINT_STEPS)
    t = identity(model.hidden_dim)
    for a, b in reversed(pairs):
        t = model.conventional_block_map(a, b, t)
    return model.initial_state(t)


def model_state(model: HqmmModel, pairs: Sequence[Tuple[ComplexMatrix, ComplexMatrix]]) -> complex:
    if model.ordering is Ordering.CAUSAL:
        return joint_state(model, pairs)
    return conventional_state(model, pairs)


def closed_form_joint_state(pairs: Sequence[Tuple[ComplexMatrix, ComplexMatrix]]) -> complex:
    """
    Kraus expansion แบบปิดของ AKLT causal model

    ½^{n+1}·Π Tr(a_m)·Σ ⟨k|b_1⊗···⊗b_n|ℓ⟩ Tr(A_{k_1}···A_{k_n} A_{ℓ_n}†···A_{ℓ_1}†)
    """
    _check_pairs("closed_form_joint_state", pairs, MAX_HAT_SITES)
    n = len(pairs)
    hidden_factor = np.prod([np.trace(as_matrix(a, BOND_DIM, BOND_DIM)) for a, _ in pairs])
    outputs = kron(*[as_matrix(b, PHYSICAL_DIM, PHYSICAL_DIM) for _, b in pairs])
    products = chain_products(n)
    kraus_sum = np.einsum("kl,kab,lab->", outputs, products, products.conj())
    return complex(0.5 ** (n + 1) * hidden_factor * kraus_sum)


def observation_process(model: HqmmModel, y: ObservableSpec) -> complex:
    """ψ_O(Y) = Ψ_{H,O} ที่ hidden slot ทุกตัวเป็น 𝕀"""
    factors = y.require_factors()
    _check_sites("observation_process", y.n_sites, 1, MAX_HAT_SITES)
    unit = identity(model.hidden_dim)
    return joint_state(model, [(unit, b) for b in factors])


def hidden_marginal(model: HqmmModel, hidden_ops: Sequence[ComplexMatrix]) -> complex:
    """ψ_H: output slot ทุกตัวเป็น 𝕀"""
    unit = identity(model.output_dim)
    return model_state(model, [(a, unit) for a in hidden_ops])


def isometry_v() -> ComplexMatrix:
    """V|↑⟩ = ψ⁻, V|↓⟩ = ψ⁺ บน ℋ½ ⊗ ℋ½"""
    s = 1.0 / math.sqrt(2.0)
    # basis ของ ℋ½⊗ℋ½: ↑↑, ↑↓, ↓↑, ↓↓
    singlet = np.array([0.0, s, -s, 0.0])
    triplet = np.array([0.0, s, s, 0.0])
    return np.stack([singlet, triplet], axis=1).astype(complex)


def aklt_isometry_model(ordering: Ordering) -> HqmmModel:
    """
    model ที่ใช้ ℰ_H(X) = V†XV

    แบบ causal ใช้ V†(x ⊗ a)V คือ hidden state อยู่ factor แรก
    """
    hidden = ConjugationExpectation([isometry_v()], (BOND_DIM, BOND_DIM),
                                    swap_inputs=ordering is Ordering.CAUSAL)
    return HqmmModel(InitialState(), hidden, _aklt_emission(), ordering)


def block_map_isometry(
    ordering: Ordering,
    a: ComplexMatrix,
    b: ComplexMatrix,
    x: ComplexMatrix
) -> ComplexMatrix:
    """
    Conventional: Σ ⟨k|b|ℓ⟩ V†(A_k a A_ℓ† ⊗ x)V
    Causal:       Σ ⟨k|b|ℓ⟩ A_k V†(x ⊗ a)V A_ℓ†
    """
    return aklt_isometry_model(ordering).block_map(a, b, x)


@dataclass(frozen=True)
class ArchitectureWitness:
    """input (a, b, x) ที่ ℱ และ 𝒢 ให้ผลต่างกัน"""
    a: ComplexMatrix
    b: ComplexMatrix
    x: ComplexMatrix
    gap: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "a": matrix_to_json(self.a),
            "b": matrix_to_json(self.b),
            "x": matrix_to_json(self.x),
            "gap": self.gap,
        }


def architecture_gap(
    a: ComplexMatrix,
    b: ComplexMatrix,
    x: ComplexMatrix,
    model: Optional[HqmmModel] = None
) -> float:
    """‖ℱ_{a,b}(x) − 𝒢_{a,b}(x)‖_max; ถ้าไม่ระบุ model จะเทียบ isometry model ทั้งสองแบบ"""
    if model is None:
        conventional = block_map_isometry(Ordering.CONVENTIONAL, a, b, x)
        causal = block_map_isometry(Ordering.CAUSAL, a, b, x)
    else:
        conventional = model.conventional_block_map(a, b, x)
        causal = model.causal_block_map(a, b, x)
    return max_abs_diff(conventional, causal)


def find_architecture_witness(
    rng: np.random.Generator,
    trials: int,
    model: Optional[HqmmModel] = None
) -> Optional[ArchitectureWitness]:
    """สุ่ม (a, b, x) แล้วคืนตัวที่ให้ gap มากที่สุด"""
    hidden_dim = BOND_DIM if model is None else model.hidden_dim
    output_dim = PHYSICAL_DIM if model is None else model.output_dim
    best: Optional[ArchitectureWitness] = None
    for trial in range(trials):
        a = random_complex_matrix(rng, hidden_dim)
        b = random_complex_matrix(rng, output_dim)
        x = random_complex_matrix(rng, hidden_dim)
        gap = architecture_gap(a, b, x, model)
        if best is None or gap > best.gap:
            best = ArchitectureWitness(a, b, x, gap)
    if best is not None:
        logger.debug(f"Best architecture witness over {trials} trials: gap {best.gap:.3e}")
    return best


def analytic_witness(model: Optional[HqmmModel] = None) -> ArchitectureWitness:
    """witness a = 𝕀, b = 𝕀, x = σ_z"""
    hidden_dim = BOND_DIM if model is None else model.hidden_dim
    output_dim = PHYSICAL_DIM if model is None else model.output_dim
    a, b, x = identity(hidden_dim), identity(output_dim), np.array(PAULI_Z)
    return ArchitectureWitness(a, b, x, architecture_gap(a, b, x, model))
