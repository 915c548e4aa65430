"""Event-driven simulation of 4-phase handshaking pipelines.

The engine is a single-queue discrete-event simulator.  Gate evaluation
separates internal state from the visible output: an input change
updates the hysteresis state immediately and the output net follows
after the gate's propagation delay (transport semantics).  Events with
equal timestamps apply in insertion order, so a run is a pure function
of (system, vectors, delays).

The environment is infinitely fast: the producer answers the first
bank's request and the consumer acknowledges word completion in the
same timestep they are observed.
"""
import random
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .netlist import FormatError
from .pipeline import PipelineSystem


class SimulationError(RuntimeError):
    pass


class DeadlockError(SimulationError):
    """Queue drained before the protocol finished."""

    def __init__(self, stalled_net: str, detail: str):
        super().__init__(f"deadlock waiting on {stalled_net}: {detail}")
        self.stalled_net = stalled_net
        self.detail = detail


class EventLimitError(SimulationError):
    pass


Delay = Union[int, Tuple[int, int]]


@dataclass(frozen=True)
class DelayAssignment:
    """Per-instance propagation delays in picoseconds.

    A plain int is used for both edges; a (rise, fall) pair splits them.
    """

    default: Delay = 1
    per_gate: Mapping[str, Delay] = field(default_factory=dict)

    def __post_init__(self):
        for d in (self.default, *self.per_gate.values()):
            lo = min(d) if isinstance(d, tuple) else d
            if lo <= 0:
                raise ValueError("gate delays must be positive")

    def delay_for(self, name: str, value: int) -> int:
        d = self.per_gate.get(name, self.default)
        if isinstance(d, tuple):
            return d[0] if value else d[1]
        return d

    @classmethod
    def uniform_random(cls, names: Iterable[str], rng: random.Random,
                       lo: int = 1, hi: int = 20) -> "DelayAssignment":
        return cls(per_gate={n: rng.randint(lo, hi) for n in names})


@dataclass(frozen=True)
class Wave:
    """One DATA/NULL round trip observed at the primary outputs."""

    index: int
    t_applied: int
    t_data_complete: int
    t_null_complete: int
    bits: Mapping[str, int]
    value: int                       # bits packed LSB-first in output port order
    arrivals: Mapping[str, int]      # per-output time the bit turned DATA

    @property
    def output_skew(self) -> int:
        if not self.arrivals:
            return 0
        times = list(self.arrivals.values())
        return max(times) - min(times)


@dataclass
class Trace:
    records: List[Tuple[int, str, int]]
    waves: List[Wave]
    completed: bool
    vector_count: int
    net_class: Dict[str, str]

    def to_tsv(self) -> str:
        lines = ["time\tnet\tvalue"]
        lines += [f"{t}\t{n}\t{v}" for t, n, v in self.records]
        return "\n".join(lines) + "\n"

    def transition_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for _, net, _ in self.records:
            counts[net] = counts.get(net, 0) + 1
        return counts

    def words(self) -> List[int]:
        return [w.value for w in self.waves]


@dataclass(frozen=True)
class Report:
    forward_latencies: Tuple[int, ...]
    worst_forward_latency: Optional[int]
    cycle_times: Tuple[int, ...]
    avg_cycle_time: Optional[float]
    output_skews: Tuple[int, ...]
    worst_output_skew: Optional[int]
    transitions_by_class: Mapping[str, int]
    total_transitions: int
    words: Tuple[int, ...]


def measure(trace: Trace) -> Report:
    if not trace.completed:
        raise SimulationError("incomplete trace")
    lat = tuple(w.t_data_complete - w.t_applied for w in trace.waves)
    completions = [w.t_data_complete for w in trace.waves]
    cycles = tuple(b - a for a, b in zip(completions, completions[1:]))
    skews = tuple(w.output_skew for w in trace.waves)
    by_class: Dict[str, int] = {}
    for net, n in trace.transition_counts().items():
        cls = trace.net_class.get(net, "other")
        by_class[cls] = by_class.get(cls, 0) + n
    return Report(
        forward_latencies=lat,
        worst_forward_latency=max(lat) if lat else None,
        cycle_times=cycles,
        avg_cycle_time=sum(cycles) / len(cycles) if cycles else None,
        output_skews=skews,
        worst_output_skew=max(skews) if skews else None,
        transitions_by_class=by_class,
        total_transitions=len(trace.records),
        words=tuple(trace.words()),
    )


def _as_bit_vectors(system: PipelineSystem, vectors) -> List[Dict[str, int]]:
    out = []
    names = [p.name for p in system.inputs]
    for k, vec in enumerate(vectors):
        if isinstance(vec, int):
            if vec < 0 or vec >= (1 << len(names)):
                raise ValueError(f"vector {k} out of range for {len(names)} inputs")
            out.append({n: (vec >> i) & 1 for i, n in enumerate(names)})
        else:
            missing = [n for n in names if n not in vec]
            if missing:
                raise ValueError(f"vector {k} missing bits for {missing}")
            out.append({n: 1 if vec[n] else 0 for n in names})
    return out


def simulate(system: PipelineSystem, data_vectors: Sequence,
             delays: Optional[DelayAssignment] = None,
             max_events: Optional[int] = None) -> Trace:
    """Push ``data_vectors`` through the pipeline and record every transition.

    The producer presents vector k when the first bank requests DATA and
    NULL when it requests otherwise; the consumer acknowledges each full
    output word.  The run ends when the last NULL wavefront has drained.
    """
    delays = delays or DelayAssignment()
    vectors = _as_bit_vectors(system, data_vectors)
    nl = system.netlist

    names = list(nl.nets)
    known = set(names)
    for out in system.inverters:
        if out not in known:
            names.append(out)
    idx = {n: i for i, n in enumerate(names)}

    # compiled gate rows: (name, input ids, output id, products as id tuples)
    gates = []
    readers: List[List[int]] = [[] for _ in names]
    for g in nl.gates:
        gi = len(gates)
        ins = tuple(idx[n] for n in g.ins)
        products = tuple(tuple(ins[i] for i in p) for p in nl.spec(g.kind).products)
        gates.append((g.name, ins, idx[g.out], products))
        for i in dict.fromkeys(ins):
            readers[i].append(gi)
    inv_map = {idx[src]: idx[out] for out, src in system.inverters.items()}

    values = [0] * len(names)
    for n, v in system.reset_state().items():
        values[idx[n]] = v
    state = [values[row[2]] for row in gates]

    req = idx[system.request_net]
    ack = idx[system.ack_net]
    in_names = [p.name for p in system.inputs]
    in_rails = [(idx[p.rail1], idx[p.rail0]) for p in system.inputs]
    out_names = [p.name for p in system.outputs]
    out_rails = [(idx[p.rail1], idx[p.rail0]) for p in system.outputs]

    heap: List[Tuple[int, int, int, int]] = []
    seq = 0

    def push(t: int, net: int, v: int) -> None:
        nonlocal seq
        heappush(heap, (t, seq, net, v))
        seq += 1

    records: List[Tuple[int, str, int]] = []
    waves: List[Wave] = []
    prod_next = 0                 # next vector to present
    prod_phase = "data"           # what the producer will present next
    cons_phase = "data"           # what the consumer is waiting for
    t_applied: List[int] = []
    arrivals: Dict[str, int] = {}
    pending: Optional[Tuple[int, int, int, Dict[str, int], int, Dict[str, int]]] = None

    def run_env(t: int) -> None:
        nonlocal prod_next, prod_phase, cons_phase, pending
        if prod_phase == "data" and prod_next < len(vectors) and values[req] == 1:
            bits = vectors[prod_next]
            for name, (r1, r0) in zip(in_names, in_rails):
                b = bits[name]
                if values[r1] != b:
                    push(t, r1, b)
                if values[r0] != 1 - b:
                    push(t, r0, 1 - b)
            t_applied.append(t)
            prod_phase = "null"
        elif prod_phase == "null" and values[req] == 0:
            for r1, r0 in in_rails:
                if values[r1]:
                    push(t, r1, 0)
                if values[r0]:
                    push(t, r0, 0)
            prod_next += 1
            prod_phase = "data"
        pairs = [(values[r1], values[r0]) for r1, r0 in out_rails]
        if cons_phase == "data":
            for n, (a, b) in zip(out_names, pairs):
                if a != b and n not in arrivals:
                    arrivals[n] = t
            if all(a != b for a, b in pairs):
                bits = {n: a for n, (a, _) in zip(out_names, pairs)}
                value = sum(b << i for i, b in enumerate(bits.values()))
                pending = (len(waves), t_applied[len(waves)], t, bits, value, dict(arrivals))
                arrivals.clear()
                push(t, ack, 0)
                cons_phase = "null"
        elif cons_phase == "null" and all(a == 0 and b == 0 for a, b in pairs):
            k, t0, t_data, bits, value, arr = pending
            waves.append(Wave(k, t0, t_data, t, bits, value, arr))
            pending = None
            push(t, ack, 1)
            cons_phase = "data"

    limit = max_events if max_events is not None else 50 * (len(vectors) + 2) * max(len(names), 1)
    popped = 0

    run_env(0)
    while heap:
        t = heap[0][0]
        while heap and heap[0][0] == t:
            _, _, net, v = heappop(heap)
            popped += 1
            if popped > limit:
                raise EventLimitError(f"exceeded {limit} events at t={t}; circuit is live-locked")
            if values[net] == v:
                continue
            values[net] = v
            records.append((t, names[net], v))
            for gi in readers[net]:
                name, ins, out, products = gates[gi]
                if any(all(values[i] for i in p) for p in products):
                    nxt = 1
                elif not any(values[i] for i in ins):
                    nxt = 0
                else:
                    nxt = state[gi]
                if nxt != state[gi]:
                    state[gi] = nxt
                    push(t + delays.delay_for(name, nxt), out, nxt)
            if net in inv_map:
                push(t, inv_map[net], 1 - v)
        run_env(t)

    done = (prod_next == len(vectors) and prod_phase == "data"
            and cons_phase == "data" and len(waves) == len(vectors))
    if not done:
        if prod_phase == "null":
            raise DeadlockError(system.request_net,
                                f"producer holding vector {prod_next}, request stuck at {values[req]}")
        if prod_next < len(vectors):
            raise DeadlockError(system.request_net,
                                f"producer has {len(vectors) - prod_next} vectors left, "
                                f"request stuck at {values[req]}")
        for n, (r1, r0) in zip(out_names, out_rails):
            a, b = values[r1], values[r0]
            if (cons_phase == "data" and a == b) or (cons_phase == "null" and (a or b)):
                raise DeadlockError(n, f"consumer waiting for {cons_phase.upper()} word, "
                                       f"output rails at ({a},{b})")
        raise DeadlockError(system.ack_net, "handshake never returned to idle")

    return Trace(records=records, waves=waves, completed=True,
                 vector_count=len(vectors), net_class=dict(system.net_class))


@dataclass(frozen=True)
class DIReport:
    passed: bool
    n_trials: int
    words: Tuple[int, ...]
    counterexample: Optional[DelayAssignment] = None
    detail: str = ""


def check_delay_insensitivity(system: PipelineSystem, data_vectors: Sequence,
                              n_trials: int = 100, seed: int = 0) -> DIReport:
    """Re-run under random positive per-gate delays; outputs must not move."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    rng = random.Random(seed)
    gate_names = [g.name for g in system.netlist.gates]
    try:
        baseline = simulate(system, data_vectors)
    except SimulationError as err:
        return DIReport(False, 0, (), DelayAssignment(), f"baseline run failed: {err}")
    expect = tuple(baseline.words())
    for trial in range(n_trials):
        assignment = DelayAssignment.uniform_random(gate_names, rng)
        try:
            got = tuple(simulate(system, data_vectors, assignment).words())
        except SimulationError as err:
            return DIReport(False, trial + 1, expect, assignment, f"trial {trial}: {err}")
        if got != expect:
            return DIReport(False, trial + 1, expect, assignment,
                            f"trial {trial}: outputs {got} != {expect}")
    return DIReport(True, n_trials, expect)


def parse_vectors(text: str) -> List[int]:
    """One input word per line, decimal or 0b-prefixed binary."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            value = int(line, 2) if line.startswith(("0b", "0B")) else int(line, 10)
        except ValueError:
            raise FormatError(lineno, f"bad vector {line!r}") from None
        if value < 0:
            raise FormatError(lineno, "vectors must be non-negative")
        out.append(value)
    return out


def load_vectors(path) -> List[int]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_vectors(fh.read())
