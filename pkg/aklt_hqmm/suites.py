"""
ชุด acceptance check ของ aklt-hqmm (ใช้โดยคำสั่ง validate)

ทุก check ใช้ random generator ตัวเดียวกันตามลำดับ ผลลัพธ์จึงขึ้นกับ seed เท่านั้น
"""
from typing import Any, Dict, List, Tuple
import logging

import numpy as np

from .core.check import CheckSuite, FunctionCheck, SuitePolicy
from .core.channels import power_limit, superop_trace, superoperator_spectrum
from .core.linalg import (
    IDENTITY_2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    identity,
    max_abs_diff,
    random_complex_matrix,
    random_density_matrix,
    random_unitary,
)
from .models.aklt import (
    ObservableSpec,
    aklt_hamiltonian,
    aklt_tensors,
    build_mps_state,
    exact_oracle,
    finite_expectation,
    ground_state_energy,
    hat_map,
    spin1_operators,
    transfer_channel,
)
from .models.fcs import (
    convergence_sweep,
    correlator,
    embedded_expectation,
    omega_closed_form,
    omega_local,
)
from .models.hqmm import (
    Ordering,
    aklt_causal_model,
    analytic_witness,
    closed_form_joint_state,
    find_architecture_witness,
    joint_state,
    observation_process,
)

logger = logging.getLogger(__name__)

THIRD = 1.0 / 3.0


def _transfer_checks(rng: np.random.Generator) -> CheckSuite:
    suite = CheckSuite("transfer_channel")
    phi = transfer_channel()
    superop = phi.to_superoperator()

    suite.add_child(FunctionCheck("gauge_relations", lambda: aklt_tensors().gauge_deviation(), 1e-14))

    def fixed_points() -> float:
        deviations = [max_abs_diff(phi.apply(IDENTITY_2), IDENTITY_2)]
        deviations += [max_abs_diff(phi.apply(p), -THIRD * p) for p in (PAULI_X, PAULI_Y, PAULI_Z)]
        return max(deviations)

    def spectrum() -> Tuple[float, Dict[str, Any]]:
        values = np.sort(superoperator_spectrum(superop).real)
        expected = np.array([-THIRD, -THIRD, -THIRD, 1.0])
        return float(np.max(np.abs(values - expected))), {"eigenvalues": values.tolist()}

    def convergence_rate() -> Tuple[float, Dict[str, Any]]:
        result = power_limit(phi, 1e-12)
        return abs(result.rate - THIRD), {"rate": result.rate, "steps": result.steps}

    def basis_independence() -> float:
        rotated = superop_trace(superop, random_unitary(rng, 2))
        return abs(rotated - superop_trace(superop))

    def dual_pairing() -> float:
        worst = 0.0
        for _ in range(20):
            rho = random_density_matrix(rng, 2)
            x = random_complex_matrix(rng, 2)
            lhs = np.trace(phi.dual_apply(rho) @ x)
            rhs = np.trace(rho @ phi.apply(x))
            worst = max(worst, abs(lhs - rhs))
        return worst

    suite.add_child(FunctionCheck("lemma_fixed_points", fixed_points, 1e-12))
    suite.add_child(FunctionCheck("superoperator_spectrum", spectrum, 1e-10))
    suite.add_child(FunctionCheck("power_limit_rate", convergence_rate, 0.01))
    suite.add_child(FunctionCheck("trace_basis_independence", basis_independence, 1e-10))
    suite.add_child(FunctionCheck("dual_pairing", dual_pairing, 1e-10))
    suite.add_child(FunctionCheck(
        "choi_positivity",
        lambda: 0.0 if superop.is_completely_positive() else 1.0,
        0.5,
    ))
    return suite


def _finite_chain_checks(rng: np.random.Generator) -> CheckSuite:
    suite = CheckSuite("finite_chain")

    def hat_trace_vs_oracle() -> float:
        worst = 0.0
        for n in (2, 3, 4):
            for trial in range(50):
                y = ObservableSpec.random(rng, n, hermitian=trial % 2 == 0, factored=False)
                worst = max(worst, abs(finite_expectation(y) - exact_oracle(y)))
        return worst

    def block_composition() -> float:
        worst = 0.0
        for n in (1, 2):
            for m in (1, 2):
                y = ObservableSpec.random(rng, n, factored=False)
                z = ObservableSpec.random(rng, m, factored=False)
                direct = hat_map(y.tensor(z))
                composed = hat_map(z).compose(hat_map(y))
                worst = max(worst, max_abs_diff(direct.matrix, composed.matrix))
        return worst

    def ground_state() -> Tuple[float, Dict[str, Any]]:
        worst = 0.0
        energies = {}
        for n in (3, 4, 5, 6):
            psi = build_mps_state(n).amplitudes
            energy = ground_state_energy(n, periodic=True)
            residual = aklt_hamiltonian(n, periodic=True) @ psi - energy * psi
            worst = max(worst, float(np.linalg.norm(residual) / np.linalg.norm(psi)),
                        abs(energy + 2.0 * n / 3.0))
            energies[str(n)] = energy
        return worst, {"ground_energies": energies}

    def szsz_pinned() -> Tuple[float, Dict[str, Any]]:
        sz = spin1_operators().sz
        y = ObservableSpec.from_factors([sz, sz])
        raw = exact_oracle(y)
        normalized = raw / exact_oracle(ObservableSpec.identity(2))
        deviation = max(abs(raw + 8.0 / 9.0), abs(normalized + 2.0 / 3.0))
        return deviation, {"unnormalized": raw.real, "normalized": normalized.real}

    suite.add_child(FunctionCheck("hat_trace_equals_oracle", hat_trace_vs_oracle, 1e-9))
    suite.add_child(FunctionCheck("block_composition_order", block_composition, 1e-10,
                                  properties={"order": "hat(Y⊗Z) = hat(Z)∘hat(Y)"}))
    suite.add_child(FunctionCheck("periodic_ground_state", ground_state, 1e-9))
    suite.add_child(FunctionCheck("two_site_szsz", szsz_pinned, 1e-12))
    return suite


def _infinite_volume_checks(rng: np.random.Generator) -> CheckSuite:
    suite = CheckSuite("infinite_volume")

    def normalization() -> float:
        return max(abs(omega_local(ObservableSpec.identity(n)) - 1.0) for n in range(1, 7))

    y = ObservableSpec.random(rng, 2, factored=False)
    sweep_holder: List[Any] = []

    def sweep():
        if not sweep_holder:
            sweep_holder.append(convergence_sweep(y, 30, 30))
        return sweep_holder[0]

    def limit_rate() -> Tuple[float, Dict[str, Any]]:
        return abs(sweep().rate - THIRD), {"rate_per_site": sweep().rate}

    def limit_error() -> float:
        return next(pt.abs_error for pt in sweep().points if pt.m == 25)

    def correlator_decay() -> Tuple[float, Dict[str, Any]]:
        values = [correlator("z", r) for r in range(1, 12)]
        ratios = [values[i + 1] / values[i] for i in range(10)]
        deviation = max(max(abs(r + THIRD) for r in ratios), abs(values[0] + 4.0 / 9.0))
        return deviation, {"correlator_z_1": values[0]}

    def szsz_embedded() -> float:
        sz = spin1_operators().sz
        return abs(embedded_expectation(ObservableSpec.from_factors([sz, sz]), 50, 50) + 4.0 / 9.0)

    suite.add_child(FunctionCheck("normalization", normalization, 1e-12))
    suite.add_child(FunctionCheck("thermodynamic_limit_rate", limit_rate, 0.02))
    suite.add_child(FunctionCheck("thermodynamic_limit_error_m25", limit_error, 1e-10))
    suite.add_child(FunctionCheck("correlator_decay", correlator_decay, 1e-9))
    suite.add_child(FunctionCheck("szsz_embedded_limit", szsz_embedded, 1e-10))
    return suite


def _hqmm_checks(rng: np.random.Generator) -> CheckSuite:
    suite = CheckSuite("hqmm")
    model = aklt_causal_model()
    sz = spin1_operators().sz

    def observation_equals_omega() -> float:
        worst = 0.0
        for n in (1, 2, 3, 4):
            for trial in range(100):
                y = ObservableSpec.random(rng, n, hermitian=trial % 2 == 0)
                worst = max(worst, abs(observation_process(model, y) - omega_closed_form(y)))
        return worst

    def analytic_values() -> float:
        unit = abs(observation_process(model, ObservableSpec.identity(3)) - 1.0)
        szsz = abs(observation_process(model, ObservableSpec.from_factors([sz, sz])) + 4.0 / 9.0)
        return max(unit, szsz)

    def recursion_vs_closed_form() -> float:
        worst = 0.0
        for trial in range(30):
            n = 1 + trial % 4
            pairs = [(random_complex_matrix(rng, 2), random_complex_matrix(rng, 3)) for _ in range(n)]
            worst = max(worst, abs(joint_state(model, pairs) - closed_form_joint_state(pairs)))
        return worst

    def unitality_chain() -> float:
        worst = 0.0
        unit_h, unit_o = identity(2), identity(3)
        for variant in (model, model.with_ordering(Ordering.CONVENTIONAL)):
            x = unit_h
            for _ in range(6):
                x = variant.block_map(unit_h, unit_o, x)
            worst = max(worst, max_abs_diff(x, unit_h))
        return worst

    def analytic_gap() -> Tuple[float, Dict[str, Any]]:
        witness = analytic_witness(model)
        return abs(witness.gap - 4.0 / 3.0), {"gap": witness.gap}

    def random_gap() -> Tuple[float, Dict[str, Any]]:
        witness = find_architecture_witness(rng, 32)
        return witness.gap, {"witness": witness.to_dict()}

    suite.add_child(FunctionCheck("observation_equals_omega", observation_equals_omega, 1e-9))
    suite.add_child(FunctionCheck("observation_analytic_values", analytic_values, 1e-12))
    suite.add_child(FunctionCheck("recursion_equals_closed_form", recursion_vs_closed_form, 1e-10))
    suite.add_child(FunctionCheck("unitality_chain", unitality_chain, 1e-10))
    suite.add_child(FunctionCheck("analytic_architecture_gap", analytic_gap, 1e-12))
    suite.add_child(FunctionCheck("isometry_architecture_witness", random_gap, 1e-3, require_above=True))
    return suite


def build_acceptance_suite(seed: int, policy: SuitePolicy = SuitePolicy.CONTINUE_ON_FAILURE) -> CheckSuite:
    rng = np.random.default_rng(seed)
    root = CheckSuite("acceptance", policy, properties={"seed": seed})
    for builder in (_transfer_checks, _finite_chain_checks, _infinite_volume_checks, _hqmm_checks):
        root.add_child(builder(rng))
    return root
