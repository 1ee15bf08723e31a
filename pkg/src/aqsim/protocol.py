"""Three-party arbitrated-signature protocol over an in-process channel.

Parties: Alice (signer), Bob (recipient), and the trusted arbitrator. One run
covers the three phases:

  initial      - shared keys K_a, K_b; one fresh GHZ triple per message qubit,
                 qubit order (Alice, Bob, arbitrator).
  signing      - Alice Bell-measures (message copy, her GHZ share) -> M_a,
                 builds the keyed signature state, packages both under K_a.
  verification - Bob x-measures his share -> M_b and forwards everything to
                 the arbitrator under K_b; the arbitrator runs the state
                 comparison (gamma), produces M_t, and Bob issues the verdict.

Every step the underlying scheme leaves ambiguous is an explicit
ProtocolVariant field; there is no default variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import comparison, crypto, qsim
from .comparison import Verdict as CompareVerdict
from .crypto import (
    KeyMaterial,
    OwnerPair,
    SignaturePackage,
    SigningModel,
    SigningTransform,
)
from .qsim import BellOutcome, PauliOp, StateVector, XOutcome


class RPrimeSource(Enum):
    """Where the arbitrator's second comparison state comes from."""

    FROM_MESSAGE_P = "message"  # transform applied to the message Bob forwarded
    FROM_GHZ_PARTICLE = "ghz"  # transform applied to his corrected GHZ share


class MtMode(Enum):
    MEASURE_X = "measure-x"
    FORWARD_PARTICLE = "forward-particle"


class MessageKnowledge(Enum):
    KNOWN_TO_ALL = "all"  # Bob can mint fresh copies of the true message
    ALICE_ONLY = "alice-only"


class ComparisonMode(Enum):
    PER_QUBIT = "per-qubit"
    WHOLE_REGISTER = "whole-register"


@dataclass(frozen=True)
class ProtocolVariant:
    r_prime_source: RPrimeSource
    m_t_mode: MtMode
    message_knowledge: MessageKnowledge
    key_model: SigningModel
    comparison_mode: ComparisonMode


@dataclass(frozen=True)
class RunConfig:
    n: int
    variant: ProtocolVariant
    # When True the comparison acts on copies and leaves the compared states
    # undisturbed (the idealization under which the reference failure rates
    # hold). When False the post-measurement states flow onward.
    idealized_comparison: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("message needs at least one qubit")


class Verdict(Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Message:
    """An n-qubit message register, with single-qubit factors when it is a product."""

    register: StateVector
    factors: tuple[StateVector, ...] | None = None

    @property
    def n(self) -> int:
        return self.register.qubit_count

    @staticmethod
    def from_factors(factors) -> "Message":
        factors = tuple(factors)
        reg = factors[0]
        for f in factors[1:]:
            reg = qsim.tensor(reg, f)
        return Message(reg, factors)

    @staticmethod
    def from_register(register: StateVector) -> "Message":
        return Message(register, None)

    def require_factors(self) -> tuple[StateVector, ...]:
        if self.factors is not None:
            return self.factors
        return qsim.product_factors(self.register)


def haar_product_message(n: int, rng: np.random.Generator) -> Message:
    """Independent Haar single-qubit factors, the product form the scheme signs."""
    return Message.from_factors(qsim.haar_random_state(1, rng) for _ in range(n))


# ---------------------------------------------------------------------------
# Pauli frame


@dataclass(frozen=True)
class PauliFrame:
    """(Bell outcome, x outcome) -> Pauli correction for the arbitrator's share.

    Built by brute force: every entry is solved against random probe messages
    at construction, so a convention mismatch anywhere upstream fails loudly
    rather than silently corrupting corrections.
    """

    table: dict[tuple[BellOutcome, XOutcome], PauliOp]

    def correction(self, m_a: BellOutcome, m_b: XOutcome) -> PauliOp:
        return self.table[(m_a, m_b)]


def _solve_correction(m_a: BellOutcome, m_b: XOutcome, probes) -> PauliOp:
    for pauli in PauliOp:
        ok = True
        for p in probes:
            joint = qsim.tensor(p, qsim.ghz_state())
            prob, phi = qsim.project_bell(joint, 0, 1, m_a)
            if prob < 1e-12:
                ok = False
                break
            prob, particle = qsim.project_x(phi, 0, m_b)
            if prob < 1e-12 or particle is None:
                ok = False
                break
            if qsim.fidelity(qsim.apply_pauli(particle, pauli, 0), p) < 1.0 - qsim.ATOL:
                ok = False
                break
        if ok:
            return pauli
    raise RuntimeError(f"no single Pauli corrects outcome pair ({m_a}, {m_b})")


def build_pauli_frame(probe_count: int = 3, probe_seed: int = 2024) -> PauliFrame:
    rng = np.random.default_rng(probe_seed)
    probes = [qsim.haar_random_state(1, rng) for _ in range(probe_count)]
    table = {
        (m_a, m_b): _solve_correction(m_a, m_b, probes)
        for m_a in BellOutcome
        for m_b in XOutcome
    }
    frame = PauliFrame(table)
    if frame.correction(BellOutcome.PSI_MINUS, XOutcome.PLUS_X) is not PauliOp.Z:
        raise RuntimeError("Pauli frame convention broken: (psi-, +x) must map to Z")
    return frame


_FRAME: PauliFrame | None = None


def pauli_frame() -> PauliFrame:
    global _FRAME
    if _FRAME is None:
        _FRAME = build_pauli_frame()
    return _FRAME


# ---------------------------------------------------------------------------
# Wire bundles and transcript


@dataclass(frozen=True)
class EncryptedYb:
    """Bob -> arbitrator bundle, all fields padded from disjoint K_b slices."""

    mb_bits: np.ndarray
    sig: SignaturePackage  # the K_a-encrypted package, rewrapped under K_b
    msg_state: StateVector  # quantum-padded received message register
    n: int


@dataclass(frozen=True)
class EncryptedYtb:
    """Arbitrator -> Bob bundle."""

    ma_bits: np.ndarray
    mb_bits: np.ndarray
    mt_bits: np.ndarray | None  # MeasureX mode
    gamma_bit: np.ndarray  # 1 padded bit
    sig: SignaturePackage
    particles: tuple[StateVector, ...] | None  # ForwardParticle mode, padded
    n: int


@dataclass
class Transcript:
    """Full record of one protocol run."""

    seed: int
    n: int
    variant: ProtocolVariant
    m_a: tuple[BellOutcome, ...] | None = None
    m_b: tuple[XOutcome, ...] | None = None
    m_t: tuple[XOutcome, ...] | None = None
    gamma: int | None = None
    y_b: EncryptedYb | None = None
    y_tb: EncryptedYtb | None = None
    verdict: Verdict | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class Channel:
    """Ordered in-process message log; the tap models an attacker in transit."""

    log: list = field(default_factory=list)
    tap: object = None  # callable (message, sig, rng) -> (message, sig)

    def send(self, sender: str, receiver: str, payload) -> object:
        self.log.append((sender, receiver, payload))
        return payload


# ---------------------------------------------------------------------------
# Phases


def initialize(n: int, seed: int, variant: ProtocolVariant):
    """Initial phase: fresh keys and one GHZ triple per message qubit."""
    if n < 1:
        raise ValueError("message needs at least one qubit")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xA0,)))
    k_a = KeyMaterial.random(
        crypto.ka_bits_required(n, variant.key_model), OwnerPair.ALICE_ARBITRATOR, rng
    )
    k_b = KeyMaterial.random(crypto.kb_bits_required(n), OwnerPair.BOB_ARBITRATOR, rng)
    ghz_triples = tuple(qsim.ghz_state() for _ in range(n))
    stub = Transcript(seed=seed, n=n, variant=variant)
    return k_a, k_b, ghz_triples, stub


def alice_sign(
    message: Message,
    k_a: KeyMaterial,
    ghz_triples,
    variant: ProtocolVariant,
    rng: np.random.Generator,
):
    """Signing phase.

    Per qubit: Bell-measure (fresh message copy, Alice's GHZ share), leaving
    Bob and the arbitrator their correlated pair. The signature state is the
    keyed transform of another fresh copy. Returns
    (SignaturePackage, message to transmit, M_a, shared Bob/arbitrator pairs).
    """
    factors = message.require_factors()
    if len(factors) != len(ghz_triples):
        raise ValueError("message size does not match GHZ share count")
    m_a = []
    shared_pairs = []
    for p_i, ghz in zip(factors, ghz_triples):
        joint = qsim.tensor(p_i, ghz)
        outcome, residual = qsim.bell_measure(joint, 0, 1, rng)
        m_a.append(outcome)
        shared_pairs.append(residual)  # qubits (Bob, arbitrator)
    transform = crypto.derive_signing_transform(k_a, message.n, variant.key_model)
    r = crypto.sign_state(message.register, transform)
    sig = crypto.make_signature(tuple(m_a), r, k_a, variant.key_model)
    return sig, message, tuple(m_a), tuple(shared_pairs)


def bob_receive_and_forward(
    p_received: Message,
    sig: SignaturePackage,
    shared_pairs,
    k_b: KeyMaterial,
    rng: np.random.Generator,
):
    """Bob's half of verification: measure his shares in x, bundle under K_b.

    Returns (y_b, M_b, arbitrator particles).
    """
    if len(shared_pairs) != p_received.n:
        raise ValueError("GHZ share count does not match message size")
    n = p_received.n
    layout = crypto.kb_layout(n)
    m_b = []
    particles = []
    for pair in shared_pairs:
        outcome, particle = qsim.measure_x(pair, 0, rng)
        m_b.append(outcome)
        particles.append(particle)
    mb_bits = crypto.classical_encrypt(
        np.array([o.bit for o in m_b], dtype=np.uint8), k_b.slice(*layout["yb_mb_pad"])
    )
    wrapped_sig = SignaturePackage(
        crypto.classical_encrypt(sig.enc_bell, k_b.slice(*layout["yb_sig_bell_pad"])),
        crypto.qotp_encrypt(sig.enc_state, k_b.slice(*layout["yb_sig_state_pad"])),
        n,
    )
    msg_state = crypto.qotp_encrypt(p_received.register, k_b.slice(*layout["yb_msg_state_pad"]))
    y_b = EncryptedYb(mb_bits, wrapped_sig, msg_state, n)
    return y_b, tuple(m_b), tuple(particles)


def _signature_reference(
    r: StateVector,
    p_received: Message,
    particles,
    m_a,
    m_b,
    transform: SigningTransform,
    variant: ProtocolVariant,
):
    """Build the arbitrator's comparison candidate R' per the variant."""
    frame = pauli_frame()
    if variant.r_prime_source is RPrimeSource.FROM_MESSAGE_P:
        if variant.key_model is SigningModel.PER_QUBIT_PRODUCT:
            factors = p_received.require_factors()
            r_factors = tuple(transform.apply_factor(f, i) for i, f in enumerate(factors))
            return Message.from_factors(r_factors)
        return Message.from_register(transform.apply(p_received.register))
    corrected = tuple(
        qsim.apply_pauli(t, frame.correction(a, b), 0)
        for t, a, b in zip(particles, m_a, m_b)
    )
    if variant.key_model is SigningModel.PER_QUBIT_PRODUCT:
        return Message.from_factors(
            transform.apply_factor(c, i) for i, c in enumerate(corrected)
        )
    return Message.from_register(transform.apply(Message.from_factors(corrected).register))


def arbitrator_verify(
    y_b: EncryptedYb,
    particles,
    k_a: KeyMaterial,
    k_b: KeyMaterial,
    config: RunConfig,
    rng: np.random.Generator,
):
    """Arbitrator's forgery test: gamma, M_t, and the y_tb bundle.

    `particles` are the arbitrator's GHZ shares after Bob's x-measurements.
    Returns (gamma, m_t or None, y_tb).
    """
    variant = config.variant
    n = y_b.n
    layout = crypto.kb_layout(n)
    mb_bits = crypto.classical_decrypt(y_b.mb_bits, k_b.slice(*layout["yb_mb_pad"]))
    m_b = tuple(XOutcome.from_bit(int(b)) for b in mb_bits)
    sig = SignaturePackage(
        crypto.classical_decrypt(y_b.sig.enc_bell, k_b.slice(*layout["yb_sig_bell_pad"])),
        crypto.qotp_decrypt(y_b.sig.enc_state, k_b.slice(*layout["yb_sig_state_pad"])),
        n,
    )
    p_received = Message.from_register(
        crypto.qotp_decrypt(y_b.msg_state, k_b.slice(*layout["yb_msg_state_pad"]))
    )
    m_a, r = crypto.open_signature(sig, k_a, variant.key_model)
    transform = crypto.derive_signing_transform(k_a, n, variant.key_model)
    r_prime = _signature_reference(r, p_received, particles, m_a, m_b, transform, variant)

    post_particles = particles
    if variant.comparison_mode is ComparisonMode.PER_QUBIT:
        r_factors = qsim.product_factors(r)
        rp_factors = r_prime.require_factors()
        gamma = 1
        disturbed = []
        for i, (fa, fb) in enumerate(zip(r_factors, rp_factors)):
            result = comparison.swap_test(fa, fb, rng)
            if result.verdict is CompareVerdict.DEFINITELY_DIFFERENT:
                gamma = 0
            disturbed.append(result.post_state)
        if not config.idealized_comparison and variant.r_prime_source is RPrimeSource.FROM_GHZ_PARTICLE:
            post_particles = _recover_particles(disturbed, transform, m_a, m_b, variant)
    else:
        result = comparison.swap_test(r, r_prime.register, rng)
        gamma = 1 if result.verdict is CompareVerdict.POSSIBLY_SAME else 0
        if not config.idealized_comparison and variant.r_prime_source is RPrimeSource.FROM_GHZ_PARTICLE:
            raise ValueError(
                "non-idealized comparison with whole-register GHZ-sourced R' "
                "leaves the particles entangled with the discarded register"
            )

    m_t = None
    out_particles = None
    if variant.m_t_mode is MtMode.MEASURE_X:
        m_t = tuple(_measure_particle_x(t, rng) for t in post_particles)
    else:
        if post_particles is not particles:
            raise ValueError(
                "non-idealized comparison cannot forward disturbed GHZ particles"
            )
        out_particles = particles

    ma_bits = crypto.bell_outcomes_to_bits(m_a)
    y_tb = EncryptedYtb(
        ma_bits=crypto.classical_encrypt(ma_bits, k_b.slice(*layout["ytb_ma_pad"])),
        mb_bits=crypto.classical_encrypt(mb_bits, k_b.slice(*layout["ytb_mb_pad"])),
        mt_bits=None
        if m_t is None
        else crypto.classical_encrypt(
            np.array([o.bit for o in m_t], dtype=np.uint8), k_b.slice(*layout["ytb_mt_pad"])
        ),
        gamma_bit=crypto.classical_encrypt(
            np.array([gamma], dtype=np.uint8), k_b.slice(*layout["ytb_gamma_pad"])
        ),
        sig=SignaturePackage(
            crypto.classical_encrypt(sig.enc_bell, k_b.slice(*layout["ytb_sig_bell_pad"])),
            crypto.qotp_encrypt(sig.enc_state, k_b.slice(*layout["ytb_sig_state_pad"])),
            n,
        ),
        particles=None
        if out_particles is None
        else tuple(
            crypto.qotp_encrypt(t, k_b.bits[_particle_pad(layout, i)])
            for i, t in enumerate(out_particles)
        ),
        n=n,
    )
    return gamma, m_t, y_tb


def _particle_pad(layout, i):
    start, _ = layout["ytb_particle_pad"]
    return slice(start + 2 * i, start + 2 * i + 2)


def _recover_particles(disturbed_joints, transform, m_a, m_b, variant):
    """After a disturbing per-qubit comparison, undo the transform and the
    Pauli correction on the particle half of each post-measurement pair.

    The particle stays entangled with the discarded comparison register; its
    x-measurement statistics are obtained by measuring inside the joint state.
    """
    frame = pauli_frame()
    out = []
    for i, (joint, a, b) in enumerate(zip(disturbed_joints, m_a, m_b)):
        undone = qsim.apply_one_qubit(joint, transform.unitaries[i].conj().T, 1)
        undone = qsim.apply_pauli(undone, frame.correction(a, b), 1)
        out.append(_JointParticle(undone))
    return tuple(out)


class _JointParticle:
    """Particle embedded in a 2-qubit post-comparison register (qubit 1)."""

    def __init__(self, joint: StateVector):
        self.joint = joint


def _measure_particle_x(particle, rng):
    if isinstance(particle, _JointParticle):
        return qsim.measure_x(particle.joint, 1, rng)[0]
    return qsim.measure_x(particle, 0, rng)[0]


def bob_final_verify(
    y_tb: EncryptedYtb,
    k_b: KeyMaterial,
    reference: Message | None,
    config: RunConfig,
    rng: np.random.Generator,
):
    """Bob's final test.

    Returns (verdict, candidate Message or None). In MeasureX mode no faithful
    reconstruction of the message from (M_a, M_b, M_t) exists; the candidate
    records the best x-basis guess so its failure can be quantified, and the
    verdict reduces to the gamma gate. In ForwardParticle mode Bob corrects the
    forwarded particles and SWAP-tests them against the reference.
    """
    variant = config.variant
    n = y_tb.n
    layout = crypto.kb_layout(n)
    frame = pauli_frame()
    ma_bits = crypto.classical_decrypt(y_tb.ma_bits, k_b.slice(*layout["ytb_ma_pad"]))
    m_a = crypto.bits_to_bell_outcomes(ma_bits)
    mb_bits = crypto.classical_decrypt(y_tb.mb_bits, k_b.slice(*layout["ytb_mb_pad"]))
    m_b = tuple(XOutcome.from_bit(int(b)) for b in mb_bits)
    gamma = int(
        crypto.classical_decrypt(y_tb.gamma_bit, k_b.slice(*layout["ytb_gamma_pad"]))[0]
    )
    if gamma == 0:
        return Verdict.REJECTED, None

    if variant.m_t_mode is MtMode.MEASURE_X:
        mt_bits = crypto.classical_decrypt(y_tb.mt_bits, k_b.slice(*layout["ytb_mt_pad"]))
        m_t = tuple(XOutcome.from_bit(int(b)) for b in mt_bits)
        candidate = Message.from_factors(
            qsim.apply_pauli(qsim.x_state(t), frame.correction(a, b), 0)
            for t, a, b in zip(m_t, m_a, m_b)
        )
        # M_t only tells Bob the particle was not orthogonal to one x state;
        # there is nothing more to test against, so the gamma gate decides.
        return Verdict.ACCEPTED, candidate

    particles = tuple(
        crypto.qotp_decrypt(t, k_b.bits[_particle_pad(layout, i)])
        for i, t in enumerate(y_tb.particles)
    )
    p_prime = Message.from_factors(
        qsim.apply_pauli(t, frame.correction(a, b), 0)
        for t, a, b in zip(particles, m_a, m_b)
    )
    if reference is None:
        raise ValueError("final comparison needs a reference message")
    if variant.comparison_mode is ComparisonMode.PER_QUBIT:
        verdict_cmp = comparison.compare_product(
            p_prime.register, reference.register, n, rng
        )
    else:
        verdict_cmp = comparison.swap_test(p_prime.register, reference.register, rng).verdict
    verdict = (
        Verdict.ACCEPTED if verdict_cmp is CompareVerdict.POSSIBLY_SAME else Verdict.REJECTED
    )
    return verdict, p_prime


# ---------------------------------------------------------------------------
# Driver


def run_protocol(
    config: RunConfig,
    seed: int,
    message: Message | None = None,
    channel_tap=None,
) -> Transcript:
    """Execute one full run; deterministic given (config, seed, message).

    `channel_tap`, when given, intercepts the Alice -> Bob transmission:
    callable (message, sig, rng) -> (message, sig).
    """
    variant = config.variant
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xB0,)))
    k_a, k_b, ghz_triples, transcript = initialize(config.n, seed, variant)
    if message is None:
        message = haar_product_message(config.n, rng)
    channel = Channel(tap=channel_tap)

    sig, p_out, m_a, shared_pairs = alice_sign(message, k_a, ghz_triples, variant, rng)
    transcript.m_a = m_a
    if channel_tap is not None:
        p_out, sig = channel_tap(p_out, sig, rng)
    channel.send("alice", "bob", (p_out, sig))

    y_b, m_b, particles = bob_receive_and_forward(p_out, sig, shared_pairs, k_b, rng)
    transcript.m_b = m_b
    channel.send("bob", "arbitrator", y_b)

    gamma, m_t, y_tb = arbitrator_verify(y_b, particles, k_a, k_b, config, rng)
    transcript.gamma = gamma
    transcript.m_t = m_t
    transcript.y_b = y_b
    transcript.y_tb = y_tb
    channel.send("arbitrator", "bob", y_tb)

    if variant.message_knowledge is MessageKnowledge.KNOWN_TO_ALL:
        reference = message  # Bob mints fresh copies from the known description
    else:
        reference = p_out  # all Bob ever held is what arrived on the channel
    verdict, candidate = bob_final_verify(y_tb, k_b, reference, config, rng)
    transcript.verdict = verdict

    if candidate is not None:
        true_factors = message.require_factors()
        cand_factors = candidate.require_factors()
        per_qubit = [qsim.fidelity(c, t) for c, t in zip(cand_factors, true_factors)]
        transcript.extras["candidate_fidelity"] = float(np.prod(per_qubit))
        transcript.extras["candidate_fidelity_per_qubit"] = per_qubit
    transcript.extras["message_fidelity"] = qsim.fidelity(
        p_out.register, message.register
    )
    return transcript
