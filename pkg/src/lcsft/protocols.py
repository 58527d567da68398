"""End-to-end procedures: branching EC/gate gadgets and memory experiments.

Gadgets are simulated with packed Pauli frames.  Every stage is a separate
circuit on a common register; the branch decision (trivial or not) is taken per
shot from that stage's detectors, and later stages act on the frames left by the
earlier ones.  The same machinery runs exhaustive single-fault injection by
forcing one fault per shot instead of sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as cartesian

import numpy as np

from .circuit import Circuit, depolarize_layer, with_noise, with_strength
from .code import StabilizerCode
from .decoding import (DecodingError, Decoder, LookupTable, model_from_counts,
                       signature_counts, weight_one_table)
from .encoder import LOGICAL_STATES, parse_state_spec, perfect_encoder, state_stabilizers
from .faults import ALL_TERMS, elementary_faults
from .frame import BLOCK, FrameSimulator, frame_sample, rows_to_ints
from .pauli import PauliOperator
from .synth import (GateSpec, conjugate_circuit, remaining_generators, synth_logical,
                    synth_syndrome_extraction)

P_REF = 1e-3       # placeholder channel strength; simulators override it


# vectorized Pauli helpers ------------------------------------------------------------------

def _masks(paulis) -> tuple[np.ndarray, np.ndarray]:
    return (np.array([p.x for p in paulis], dtype=np.uint64),
            np.array([p.z for p in paulis], dtype=np.uint64))


def _commutation_bits(x: np.ndarray, z: np.ndarray, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
    """Bit i of the result is the symplectic product with Pauli i (for every shot)."""
    out = np.zeros(len(x), dtype=np.uint64)
    for i in range(len(px)):
        bit = np.bitwise_count((x & pz[i]) ^ (z & px[i])) & np.uint64(1)
        out |= bit.astype(np.uint64) << np.uint64(i)
    return out


def _widen(c: Circuit, n: int) -> Circuit:
    return Circuit(n, list(c.instructions))


# gadget protocols --------------------------------------------------------------------------

@dataclass
class ProtocolOutcome:
    branch: str
    detectors: dict[str, int]
    correction: PauliOperator
    logical_failure: bool
    accepted: bool = True


@dataclass
class _Stage:
    name: str
    circuit: Circuit
    sim: FrameSimulator | None = None

    def simulator(self) -> FrameSimulator:
        if self.sim is None:
            self.sim = FrameSimulator(self.circuit)
        return self.sim


class GadgetProtocol:
    """Flag-based 1-FT error correction (``spec=None``) or gate gadget.

    Stages: ``first`` is the input noise layer followed by the flagged syndrome
    round (EC) or the flagged gate; a nontrivial outcome is followed by an
    unflagged round ``u1`` and a table lookup.  For gates a trivial outcome is
    followed by the EC gadget (``ec`` then, if nontrivial, ``u2``).
    """

    def __init__(self, code: StabilizerCode, spec: GateSpec | None = None) -> None:
        self.code = code
        self.spec = spec
        n = code.n
        flagged = synth_syndrome_extraction(code, True)
        plain = synth_syndrome_extraction(code, False)
        gate = synth_logical(code, spec).circuit if spec is not None else None
        width = max(c.n_qubits for c in (flagged, plain, gate) if c is not None)
        self.width = width
        noisy = lambda c: _widen(with_noise(c, P_REF), width)  # noqa: E731
        layer = depolarize_layer(width, range(n), P_REF)
        head = layer + noisy(gate if gate is not None else flagged)
        self.stages = {"first": _Stage("first", head), "u1": _Stage("u1", noisy(plain))}
        if gate is not None:
            self.stages["ec"] = _Stage("ec", noisy(flagged))
            self.stages["u2"] = _Stage("u2", noisy(plain))
        self.gx, self.gz = _masks(code.generators)
        self.lx, self.lz = _masks(code.logicals)
        self._build_tables()

    # tables ----------------------------------------------------------------
    def _faults(self, circuit: Circuit):
        t = elementary_faults(circuit, range(self.code.n), ALL_TERMS)
        return [(e.detectors, PauliOperator(self.code.n, e.x, e.z)) for e in t.effects]

    def _build_tables(self) -> None:
        code = self.code
        first = self.stages["first"].circuit
        n1 = first.num_detectors
        self.t1 = LookupTable(code)
        self.t2 = LookupTable(code)
        final: dict[int, PauliOperator] = {0: PauliOperator.identity(code.n)}
        self.t1.add((0, 0), PauliOperator.identity(code.n))
        for d, r in self._faults(first):
            if d:
                self.t1.add((d, code.syndrome_int(r.x, r.z)), r)
        tail = first
        if "ec" in self.stages:
            tail = first + self.stages["ec"].circuit
            mask1 = (1 << n1) - 1
            for d, r in self._faults(tail):
                if d & mask1:
                    continue
                d2 = d >> n1
                if d2:
                    self.t2.add((d2, code.syndrome_int(r.x, r.z)), r)
        for d, r in self._faults(tail):
            if d == 0:
                s = code.syndrome_int(r.x, r.z)
                have = final.get(s)
                if have is None or r.weight < have.weight:
                    if have is not None and not code.is_stabilizer_equivalent(have, r):
                        raise DecodingError(f"trivial-signature residuals {have} and {r} collide")
                    final[s] = r
        for s, e in weight_one_table(code).items():
            final.setdefault(s, e)
        self.final = final
        self.fallback = weight_one_table(code)

    # vectorized execution --------------------------------------------------
    def _lookup(self, table: LookupTable, d: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cx = np.zeros(len(d), dtype=np.uint64)
        cz = np.zeros(len(d), dtype=np.uint64)
        if len(d) == 0:
            return cx, cz
        keys = np.stack([d, s], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        ux = np.zeros(len(uniq), dtype=np.uint64)
        uz = np.zeros(len(uniq), dtype=np.uint64)
        for j, (dk, sk) in enumerate(uniq):
            corr = table.lookup((int(dk), int(sk)))
            if corr is None:
                corr = self.fallback.get(int(sk), PauliOperator.identity(self.code.n))
            ux[j], uz[j] = corr.x, corr.z
        return ux[inv], uz[inv]

    def _data(self, X: np.ndarray, Z: np.ndarray, shots: int) -> tuple[np.ndarray, np.ndarray]:
        n = self.code.n
        return rows_to_ints(X[:n], shots), rows_to_ints(Z[:n], shots)

    def _run_stage(self, name: str, shots: int, X, Z, rng, forced):
        st = self.stages[name].simulator()
        rec, X2, Z2 = st.run_block(shots, rng, X, Z, forced.get(name) if forced else None)
        d = rows_to_ints(st.combine(rec, st.det_rows), shots)
        return d, X2, Z2

    def run_block(self, shots: int, rngs: dict | None, forced: dict | None = None) -> dict[str, np.ndarray]:
        """One batch of shots; ``rngs`` maps stage name to a Generator (None: noiseless)."""
        get = (lambda k: rngs.get(k)) if rngs else (lambda k: None)
        code = self.code
        d1, X, Z = self._run_stage("first", shots, None, None, get("first"), forced)
        x, z = self._data(X, Z, shots)
        nontrivial = d1 != 0
        branch = np.where(nontrivial, 1, 0)
        d2 = np.zeros(shots, dtype=np.uint64)
        if nontrivial.any():
            du, XU, ZU = self._run_stage("u1", shots, X, Z, get("u1"), forced)
            xu, zu = self._data(XU, ZU, shots)
            su = du
            cx, cz = self._lookup(self.t1, d1[nontrivial], su[nontrivial])
            x[nontrivial] = xu[nontrivial] ^ cx
            z[nontrivial] = zu[nontrivial] ^ cz
        if "ec" in self.stages:
            triv = ~nontrivial
            if triv.any():
                d2, XE, ZE = self._run_stage("ec", shots, X, Z, get("ec"), forced)
                xe, ze = self._data(XE, ZE, shots)
                x[triv], z[triv] = xe[triv], ze[triv]
                second = triv & (d2 != 0)
                branch = np.where(second, 2, branch)
                if second.any():
                    du, XU, ZU = self._run_stage("u2", shots, XE, ZE, get("u2"), forced)
                    xu, zu = self._data(XU, ZU, shots)
                    cx, cz = self._lookup(self.t2, d2[second], du[second])
                    x[second] = xu[second] ^ cx
                    z[second] = zu[second] ^ cz
        # perfect final correction, then compare with all logical operators
        syn = _commutation_bits(x, z, self.gx, self.gz)
        uniq, inv = np.unique(syn, return_inverse=True)
        fx = np.array([self.final.get(int(s), PauliOperator.identity(code.n)).x for s in uniq], dtype=np.uint64)
        fz = np.array([self.final.get(int(s), PauliOperator.identity(code.n)).z for s in uniq], dtype=np.uint64)
        x = x ^ fx[inv.reshape(-1)]
        z = z ^ fz[inv.reshape(-1)]
        fail = _commutation_bits(x, z, self.lx, self.lz) != 0
        return {"fail": fail, "branch": branch, "d1": d1, "d2": d2}

    # sampling --------------------------------------------------------------
    def sample(self, p: float, shots: int, seed: int) -> tuple[int, int, np.ndarray]:
        """Monte Carlo at strength ``p``: (failures, shots, shots per branch)."""
        for st in self.stages.values():
            st.sim = FrameSimulator(st.circuit, p)
        fails = 0
        branches = np.zeros(3, dtype=np.int64)
        done = 0
        block = 0
        while done < shots:
            m = min(BLOCK, shots - done)
            rngs = {name: np.random.default_rng(np.random.SeedSequence([seed, block, j]))
                    for j, name in enumerate(("first", "u1", "ec", "u2"))}
            out = self.run_block(m, rngs)
            fails += int(out["fail"].sum())
            branches += np.bincount(out["branch"], minlength=3)
            done += m
            block += 1
        return fails, shots, branches

    def fault_list(self) -> list[tuple[str, int, int, int]]:
        """Every elementary fault as (stage, instruction index, group, term code)."""
        out = []
        for name, st in self.stages.items():
            for idx, ins in enumerate(st.circuit.instructions):
                if ins.name.startswith("DEPOLARIZE"):
                    k = ins.arity
                    for g in range(len(ins.groups())):
                        out.extend((name, idx, g, t) for t in range(1, 4 ** k))
        return out

    def inject_all(self) -> tuple[int, int, list]:
        """Run every single elementary fault once; returns (faults, failures, failing faults)."""
        for st in self.stages.values():
            st.sim = FrameSimulator(st.circuit)
        faults = self.fault_list()
        failing = []
        for start in range(0, len(faults), BLOCK):
            chunk = faults[start:start + BLOCK]
            forced: dict = {}
            for pos, (name, idx, g, t) in enumerate(chunk):
                forced.setdefault(name, {}).setdefault(idx, ([], [], []))
                a, b, c = forced[name][idx]
                a.append(g)
                b.append(pos)
                c.append(t)
            forced = {name: {idx: tuple(np.array(v, dtype=np.int64) for v in lists)
                             for idx, lists in per.items()} for name, per in forced.items()}
            out = self.run_block(len(chunk), None, forced)
            failing.extend(chunk[i] for i in np.nonzero(out["fail"])[0])
        return len(faults), len(failing), failing


@lru_cache(maxsize=None)
def _gadget(code_key: str, spec: GateSpec | None) -> GadgetProtocol:
    return GadgetProtocol(_CODES[code_key], spec)


_CODES: dict[str, StabilizerCode] = {}


def gadget(code: StabilizerCode, spec: GateSpec | None = None) -> GadgetProtocol:
    """Cached protocol object (table construction is the expensive part)."""
    key = code.name + ":" + str(hash(tuple((g.x, g.z) for g in code.generators)))
    _CODES.setdefault(key, code)
    return _gadget(key, spec)


def _single_shot(code: StabilizerCode, spec: GateSpec | None, p: float, seed: int) -> ProtocolOutcome:
    proto = gadget(code, spec)
    for st in proto.stages.values():
        st.sim = FrameSimulator(st.circuit, p)
    rngs = {name: np.random.default_rng(np.random.SeedSequence([seed, j]))
            for j, name in enumerate(("first", "u1", "ec", "u2"))}
    out = proto.run_block(1, rngs)
    b = int(out["branch"][0])
    names = {0: "trivial", 1: "first-nontrivial", 2: "ec-nontrivial"}
    dets = {"first": int(out["d1"][0])}
    if "ec" in proto.stages and b != 1:
        dets["ec"] = int(out["d2"][0])
    return ProtocolOutcome(names[b], dets, PauliOperator.identity(code.n), bool(out["fail"][0]))


def ft_ec(code: StabilizerCode, p: float, seed: int = 0) -> ProtocolOutcome:
    """One run of the flag-based EC gadget on a noisy encoded input."""
    return _single_shot(code, None, p, seed)


def ft_gate_gadget(code: StabilizerCode, spec: GateSpec, p: float, seed: int = 0) -> ProtocolOutcome:
    if spec.kind not in ("H", "S", "CX") or spec.flavor != "flagged_with_stabs":
        raise ValueError("gate gadgets need a flagged_with_stabs Clifford gate")
    return _single_shot(code, spec, p, seed)


def gadget_failure_rate(code: StabilizerCode, spec: GateSpec | None, p: float, shots: int,
                        seed: int) -> tuple[int, int]:
    fails, shots, _ = gadget(code, spec).sample(p, shots, seed)
    return fails, shots


# memory experiments -----------------------------------------------------------------------

def input_states(code: StabilizerCode, spec: GateSpec | None) -> list[list[str]]:
    """All Pauli eigenstates on the addressed logical qubits, others in |0>."""
    targets = (0,) if spec is None else spec.targets
    out = []
    for combo in cartesian(list(LOGICAL_STATES), repeat=len(targets)):
        labels = ["0"] * code.k
        for t, s in zip(targets, combo):
            labels[t] = s
        out.append(labels)
    return out


@dataclass
class MemoryCircuit:
    circuit: Circuit              # noisy, with detectors and observables
    labels: list[str]
    observables: list[PauliOperator] = field(default_factory=list)


def memory_circuit(code: StabilizerCode, spec: GateSpec | None, input_state, p: float = P_REF,
                   flavor: str | None = None) -> MemoryCircuit:
    """Noise-free encoding, one data noise layer, the noisy gate (or a flagged
    syndrome round when ``spec`` is None), the noisy remaining syndrome round,
    then noiseless readout of all generators (detectors) and of the images of
    the addressed input logicals (observables)."""
    labels = parse_state_spec(input_state, code.k)
    n = code.n
    if spec is not None and flavor is not None and flavor != spec.flavor:
        spec = GateSpec(spec.kind, spec.targets, flavor)
    if spec is None:
        body = [synth_syndrome_extraction(code, True)]
        targets: tuple[int, ...] = (0,)
    else:
        gate = synth_logical(code, spec)
        body = [gate.circuit]
        if spec.flavor == "flagged_with_stabs":
            body.append(synth_syndrome_extraction(code, False, generators=remaining_generators(code, gate)))
        else:
            body.append(synth_syndrome_extraction(code, False))
        targets = spec.targets
    width = max(c.n_qubits for c in body)
    c = perfect_encoder(code, labels, width)
    c = c + depolarize_layer(width, range(n), p)
    for part in body:
        c = c + _widen(with_noise(part, p), width)
    m0 = c.num_measurements
    c.measure_pauli(list(code.generators))
    for j in range(code.n_generators):
        c.detector(m0 + j)
    signed = state_stabilizers(code, labels)
    images = []
    unitary = body[0] if spec is not None else Circuit(width)
    for t in targets:
        img = conjugate_circuit(unitary, signed[t].embed(width))
        images.append(PauliOperator(n, img.x, img.z, img.phase))
    m1 = c.num_measurements
    c.measure_pauli(images)
    for j in range(len(images)):
        c.observable(j, [m1 + j])
    return MemoryCircuit(c, labels, images)


_TEMPLATES: dict = {}


def _memory_template(code: StabilizerCode, spec: GateSpec | None, labels: tuple[str, ...]):
    """Memory circuit at the reference strength and its fault signature counts (cached)."""
    key = (tuple(str(g) for g in code.generators), spec, labels)
    hit = _TEMPLATES.get(key)
    if hit is None:
        mc = memory_circuit(code, spec, list(labels), P_REF)
        hit = (mc.circuit, signature_counts(mc.circuit))
        if len(_TEMPLATES) > 512:
            _TEMPLATES.clear()
        _TEMPLATES[key] = hit
    return hit


@lru_cache(maxsize=64)
def _memory_decoder(key, p: float) -> Decoder:
    circuit, counts = _TEMPLATES[key]
    return Decoder(model_from_counts(counts, p, circuit.num_detectors, len(circuit.observables)))


def memory_experiment(code: StabilizerCode, spec: GateSpec | None, input_state, p: float, shots: int,
                      seed: int, jobs: int = 1) -> tuple[float, float, int]:
    """Logical failure rate, its standard error and the failure count."""
    if p == 0:
        return 0.0, 0.0, 0
    labels = tuple(parse_state_spec(input_state, code.k))
    template, _ = _memory_template(code, spec, labels)
    circuit = with_strength(template, p)
    dec = _memory_decoder((tuple(str(g) for g in code.generators), spec, labels), p)
    batch = frame_sample(circuit, None, shots, seed, jobs)
    pred = dec.decode_batch(batch.detector_ints())
    fails = int(np.count_nonzero(pred != batch.observable_ints()))
    rate = fails / shots
    return rate, float(np.sqrt(rate * (1 - rate) / shots)), fails
