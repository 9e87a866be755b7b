"""Concrete attack strategies for the session engine.

Three attackers are provided:

* :class:`CircuitAttack` — the single-ancilla-qubit gate attack: H on the
  transit qubit B, CNOT from B onto the ancilla, then per-case decoding
  circuits that announce detection outcomes and read Alice's key bits with
  zero error.
* :class:`HelstromAttack` — a measurement-optimal attacker driven by an
  arbitrary realizable :class:`~hbbqss.attack.AttackSpec`; it realises the
  interaction as an explicit unitary and answers with minimum-error
  (Helstrom) measurements.
* :class:`InterceptResend` — a naive baseline that measures the transit
  qubit in a random basis and forwards an eigenstate, which is detectable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qmath
from .attack import (
    AttackSpec,
    Case,
    SpecError,
    _mixture,
    _set_mixture_and_priors,
    alice_priors,
    branch_vectors,
    conditional_states,
    is_realizable,
)
from .hbb import RespondContext, Role, required_announcement
from .qstate import (
    PROTOCOL_BASES,
    Basis,
    Outcome,
    Sign,
    StateVector,
    apply_gate,
    apply_operator,
    basis_ket,
    basis_kets,
    gate_matrix,
    insert_register,
    measure_qubit,
    sign_from_bit,
)

#: Alias matching the (i), (ii), (iii), (iv) case numbering of the decoders.
CaseId = Case
CASE_ROMAN = {Case.XX: "i", Case.XY: "ii", Case.YX: "iii", Case.YY: "iv"}

# Decoder gate choices per case. U reads the information qubit in Alice's
# basis, V is Bob's readout transform, W reads the detection qubit in the
# basis Charlie must announce (H maps z to x, SH maps z to y).
DECODER_GATES: dict[Case, tuple[str, str, str]] = {
    Case.XX: ("H", "H", "H"),
    Case.XY: ("H", "SH", "SH"),
    Case.YX: ("SH", "H", "SH"),
    Case.YY: ("SH", "SH", "H"),
}

# Computational-basis outcome pairs (qubits C, E) mapped to the announced
# bit on detection rounds...
ANNOUNCEMENT_MAP: dict[Case, dict[int, tuple[str, str]]] = {
    Case.XX: {0: ("10", "01"), 1: ("00", "11")},
    Case.XY: {0: ("10", "11"), 1: ("00", "01")},
    Case.YX: {0: ("10", "01"), 1: ("00", "11")},
    Case.YY: {0: ("10", "11"), 1: ("00", "01")},
}

# ...and to Alice's secret bit on information rounds.
SECRET_MAP: dict[Case, dict[int, tuple[str, str]]] = {
    Case.XX: {0: ("00", "11"), 1: ("10", "01")},
    Case.XY: {0: ("00", "11"), 1: ("10", "01")},
    Case.YX: {0: ("10", "01"), 1: ("00", "11")},
    Case.YY: {0: ("10", "01"), 1: ("00", "11")},
}


@dataclass(frozen=True)
class DecoderConfig:
    """Gate assignment (U, V, W) for one basis case."""

    case: Case
    u: str
    v: str
    w: str

    @classmethod
    def for_case(cls, case: Case) -> "DecoderConfig":
        u, v, w = DECODER_GATES[case]
        return cls(case, u, v, w)


def example_spec() -> AttackSpec:
    """The one-ancilla-qubit attack realised by :func:`entangle_circuit`."""
    a = 0.5 * np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex)
    return AttackSpec(2, a, np.eye(4, dtype=complex))


def entangle_circuit(psi: StateVector) -> StateVector:
    """Couple the ancilla: H on qubit B, then CNOT from B onto E.

    Expects the four-qubit register layout (A, B, C, E) holding the GHZ
    triplet joined with a fresh ancilla.
    """
    if psi.labels != ("A", "B", "C", "E") or psi.dims != (2, 2, 2, 2):
        raise ValueError(
            f"expected qubit registers (A, B, C, E), got {psi.labels} with dims {psi.dims}"
        )
    out = apply_gate(psi, "H", "B")
    return apply_gate(out, "CNOT", ("B", "E"))


def _outcome_index(label: str) -> int:
    return int(label, 2)


def _decode(phi, case: Case, table, transform, rng: np.random.Generator | None) -> int:
    out = transform @ qmath.as_vector(phi)
    probs = np.abs(out) ** 2
    total = probs.sum()
    if total <= 1e-12:
        raise ValueError("cannot decode the zero vector")
    probs = probs / total
    mass = {
        bit: sum(probs[_outcome_index(lbl)] for lbl in labels)
        for bit, labels in table[case].items()
    }
    if rng is None:
        return 0 if mass[0] >= mass[1] else 1
    idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    idx = min(idx, 3)
    return 0 if f"{idx >> 1}{idx & 1}" in table[case][0] else 1


def _detection_transform(case: Case) -> np.ndarray:
    w = gate_matrix(DECODER_GATES[case][2])
    return np.kron(w.conj().T, np.eye(2)) @ gate_matrix("CNOT")


def _info_transform(case: Case) -> np.ndarray:
    u = gate_matrix(DECODER_GATES[case][0])
    return np.kron(u.conj().T, np.eye(2))


def detection_decode(phi, case: Case, rng: np.random.Generator | None = None) -> int:
    """Announcement bit for a check round: CNOT from C onto E, read C in the
    announced basis and E in the computational basis, map via ANNOUNCEMENT_MAP."""
    return _decode(phi, case, ANNOUNCEMENT_MAP, _detection_transform(case), rng)


def info_decode(phi, case: Case, rng: np.random.Generator | None = None) -> int:
    """Alice's secret bit for a key round: read C in Alice's basis and E in
    the computational basis, map via SECRET_MAP."""
    return _decode(phi, case, SECRET_MAP, _info_transform(case), rng)


def _qubit_zero(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


def _forged_basis(rng: np.random.Generator) -> Basis:
    return PROTOCOL_BASES[int(rng.integers(0, 2))]


class CircuitAttack:
    """Gate-level attacker achieving zero detection error and full key recovery."""

    name = "hbb-circuit"
    ancilla_dim = 2

    def ancilla_state(self) -> np.ndarray:
        return _qubit_zero(2)

    def intercept(self, state: StateVector, rng: np.random.Generator) -> StateVector:
        return entangle_circuit(state)

    def announce_basis(self, round_id: int, rng: np.random.Generator) -> Basis:
        return _forged_basis(rng)

    def respond(self, ctx: RespondContext, rng: np.random.Generator) -> Outcome | int:
        case = Case.from_bases(ctx.alice_basis, ctx.bob_basis)
        phi = ctx.state.vec
        if ctx.role is Role.CHECK:
            bit = detection_decode(phi, case, rng)
            return Outcome(sign_from_bit(bit), ctx.own_basis)
        return info_decode(phi, case, rng)


def full_attack_strategy() -> CircuitAttack:
    return CircuitAttack()


class InterceptResend:
    """Baseline attacker: measure B in a random basis, forward the eigenstate.

    On sifted rounds the stored B result is only informative when the guessed
    basis matches Bob's, so announcements and key guesses degrade to coin
    flips half the time; the induced check error rate is far above zero.
    """

    name = "intercept-resend"
    ancilla_dim = 1

    def __init__(self, rng: np.random.Generator | None = None):
        self._rng = rng
        self._probe_basis: Basis | None = None
        self._probe_bit = 0

    def ancilla_state(self) -> np.ndarray:
        return _qubit_zero(1)

    def intercept(self, state: StateVector, rng: np.random.Generator) -> StateVector:
        rng = rng if rng is not None else self._rng
        self._probe_basis = _forged_basis(rng)
        outcome, rest = measure_qubit(state, "B", self._probe_basis, rng)
        self._probe_bit = outcome.bit
        return insert_register(rest, "B", basis_ket(outcome), 1)

    def announce_basis(self, round_id: int, rng: np.random.Generator) -> Basis:
        return _forged_basis(rng)

    def respond(self, ctx: RespondContext, rng: np.random.Generator) -> Outcome | int:
        out_c, _ = measure_qubit(ctx.state, "C", ctx.own_basis, rng)
        parity = _probe_parity(self._probe_basis, self._probe_bit, ctx.alice_basis, ctx.own_basis)
        alice_estimate = out_c.bit ^ parity
        if ctx.role is Role.KEY:
            return alice_estimate
        all_x = {ctx.alice_basis, ctx.bob_basis, ctx.own_basis} == {Basis.X}
        target_parity = 0 if all_x else 1
        announce = target_parity ^ alice_estimate ^ self._probe_bit
        return Outcome(sign_from_bit(announce), ctx.own_basis)


def _probe_parity(probe_basis: Basis, probe_bit: int, alice_basis: Basis, own_basis: Basis) -> int:
    """Deterministic Alice-Charlie outcome parity left after measuring B.

    Measuring B collapses A, C to a Bell-type pair; when the (Alice, Charlie)
    bases are the correlated ones for that pair the parity is certain,
    otherwise 0 is returned as an uninformative default.
    """
    probe_ket = basis_kets(probe_basis)[probe_bit]
    pair = np.zeros(4, dtype=complex)
    pair[0] = np.conj(probe_ket[0])
    pair[3] = np.conj(probe_ket[1])
    pair /= np.sqrt((np.abs(pair) ** 2).sum())
    kets_a = basis_kets(alice_basis)
    kets_c = basis_kets(own_basis)
    even = 0.0
    for m in (0, 1):
        for n in (0, 1):
            amp = np.vdot(np.kron(kets_a[m], kets_c[n]), pair)
            if (m ^ n) == 0:
                even += abs(amp) ** 2
    if even >= 1.0 - 1e-9:
        return 0
    if even <= 1e-9:
        return 1
    return 0


def intercept_resend_strategy(rng: np.random.Generator | None = None) -> InterceptResend:
    return InterceptResend(rng)


def build_interaction_unitary(spec: AttackSpec) -> np.ndarray:
    """Explicit unitary on B, C, E mapping GHZ x ancilla to the spec state.

    Exists iff the spec is realizable; built by completing the two branch
    images to an orthonormal basis.
    """
    ok, diag = is_realizable(spec)
    if not ok:
        raise SpecError(f"spec admits no unitary interaction: {diag}")
    dim = 4 * spec.ancilla_dim
    v0, v1 = branch_vectors(spec)
    targets = [np.sqrt(2.0) * v0, np.sqrt(2.0) * v1]
    src0 = np.zeros(dim, dtype=complex)
    src0[0] = 1.0  # |0>_B |0>_C |0...0>_E
    src1 = np.zeros(dim, dtype=complex)
    src1[3 * spec.ancilla_dim] = 1.0  # |1>_B |1>_C |0...0>_E
    s_basis = qmath.orthonormal_completion([src0, src1], dim)
    t_basis = qmath.orthonormal_completion(targets, dim)
    return t_basis @ s_basis.conj().T


def _positive_projector(delta: np.ndarray) -> np.ndarray:
    w, v = qmath.hermitian_eigen(delta)
    cols = v[:, w > 1e-12]
    return cols @ cols.conj().T


class HelstromAttack:
    """Spec-driven attacker answering with minimum-error measurements.

    Check rounds discriminate the two announcement sets (their supports are
    orthogonal exactly when the spec passes the detection constraints); key
    rounds discriminate the two Alice-outcome mixtures at the Helstrom bound.
    """

    name = "spec-helstrom"

    def __init__(self, spec: AttackSpec):
        self.spec = spec
        self.ancilla_dim = spec.ancilla_dim
        self.unitary = build_interaction_unitary(spec)
        self._povm: dict[Case, tuple[np.ndarray, np.ndarray]] = {}

    def ancilla_state(self) -> np.ndarray:
        return _qubit_zero(self.ancilla_dim)

    def _projectors(self, case: Case) -> tuple[np.ndarray, np.ndarray]:
        if case not in self._povm:
            table = conditional_states(self.spec, case)
            rho_s, rho_d, p_s, p_d = _set_mixture_and_priors(table)
            check_proj = _positive_projector(p_s * rho_s - p_d * rho_d)
            p_plus, p_minus = alice_priors(table)
            key_proj = _positive_projector(
                p_plus * _mixture(table, Sign.PLUS) - p_minus * _mixture(table, Sign.MINUS)
            )
            self._povm[case] = (check_proj, key_proj)
        return self._povm[case]

    def intercept(self, state: StateVector, rng: np.random.Generator) -> StateVector:
        return apply_operator(state, self.unitary, ("B", "C", "E"))

    def announce_basis(self, round_id: int, rng: np.random.Generator) -> Basis:
        return _forged_basis(rng)

    def respond(self, ctx: RespondContext, rng: np.random.Generator) -> Outcome | int:
        case = Case.from_bases(ctx.alice_basis, ctx.bob_basis)
        check_proj, key_proj = self._projectors(case)
        phi = ctx.state.vec
        if ctx.role is Role.CHECK:
            p_same = float(np.real(np.vdot(phi, check_proj @ phi)))
            same = _sample(p_same, rng)
            bob_sign = Sign.PLUS if same else Sign.MINUS
            required = required_announcement(
                Outcome(Sign.PLUS, ctx.alice_basis), Outcome(bob_sign, ctx.bob_basis)
            )
            return Outcome(required.sign, ctx.own_basis)
        p_plus = float(np.real(np.vdot(phi, key_proj @ phi)))
        return 0 if _sample(p_plus, rng) else 1


def _sample(p: float, rng: np.random.Generator) -> bool:
    if p >= 1.0 - 1e-12:
        return True
    if p <= 1e-12:
        return False
    return rng.random() < p


def spec_attack_strategy(spec: AttackSpec) -> HelstromAttack:
    return HelstromAttack(spec)
