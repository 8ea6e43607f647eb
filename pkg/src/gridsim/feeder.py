"""Radial feeder model and forward-backward sweep power flow.

All electrical quantities inside the solver are per-unit on the feeder's
three-phase kVA base. The built-in feeder is a balanced per-phase reduction of
the IEEE 13-node test feeder.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidTopology, NonConvergence

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50


@dataclass(frozen=True)
class Branch:
    name: str
    from_node: str
    to_node: str
    r: float
    x: float

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)


@dataclass(frozen=True)
class FeederModel:
    """Radial network with one monitored service transformer and one regulator.

    ``load_weights`` maps node id to its share of the system base load.
    ``regulator_branch`` names the branch whose receiving end carries the
    regulator's voltage ratio; ``regulated_node`` is where it senses voltage.
    """

    nodes: tuple[str, ...]
    branches: tuple[Branch, ...]
    source: str
    load_weights: Mapping[str, float]
    transformer_node: str
    transformer_kva: float
    base_kva: float
    base_kv: Mapping[str, float] = field(default_factory=dict)
    source_voltage: float = 1.0
    regulator_branch: str | None = None
    regulated_node: str | None = None
    peak_base_kw: float = 3000.0
    power_factor: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "load_weights", dict(self.load_weights))
        object.__setattr__(self, "base_kv", dict(self.base_kv))

    # -- derived topology -------------------------------------------------

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    @cached_property
    def branch_index(self) -> dict[str, int]:
        return {b.name: i for i, b in enumerate(self.branches)}

    @cached_property
    def _topology(self):
        """BFS order from the source plus parent links; raises on non-trees."""
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise InvalidTopology("duplicate node ids")
        if self.source not in self.index:
            raise InvalidTopology(f"source node {self.source!r} not in node list")
        if len(self.branches) != n - 1:
            raise InvalidTopology(f"a tree over {n} nodes needs {n - 1} branches, got {len(self.branches)}")
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for k, b in enumerate(self.branches):
            if b.from_node not in self.index or b.to_node not in self.index:
                raise InvalidTopology(f"branch {b.name!r} references an unknown node")
            i, j = self.index[b.from_node], self.index[b.to_node]
            if i == j:
                raise InvalidTopology(f"branch {b.name!r} is a self-loop")
            adj[i].append((j, k))
            adj[j].append((i, k))
        src = self.index[self.source]
        parent = [-1] * n
        parent_branch = [-1] * n
        seen = [False] * n
        seen[src] = True
        order = [src]
        head = 0
        while head < len(order):
            i = order[head]
            head += 1
            for j, k in adj[i]:
                if k == parent_branch[i]:
                    continue
                if seen[j]:
                    raise InvalidTopology(f"cycle through branch {self.branches[k].name!r}")
                seen[j] = True
                parent[j] = i
                parent_branch[j] = k
                order.append(j)
        if len(order) != n:
            missing = [self.nodes[i] for i in range(n) if not seen[i]]
            raise InvalidTopology(f"nodes not connected to source: {missing}")
        return tuple(order), tuple(parent), tuple(parent_branch)

    @property
    def order(self) -> tuple[int, ...]:
        return self._topology[0]

    @property
    def parent(self) -> tuple[int, ...]:
        return self._topology[1]

    @property
    def parent_branch(self) -> tuple[int, ...]:
        return self._topology[2]

    @property
    def transformer_branch(self) -> int:
        """Index of the branch feeding the monitored transformer node."""
        return self.parent_branch[self.index[self.transformer_node]]

    @property
    def regulator_branch_index(self) -> int | None:
        if self.regulator_branch is None:
            return None
        return self.branch_index[self.regulator_branch]

    def validate(self) -> None:
        """Check every model invariant; raises InvalidTopology or ValueError."""
        _ = self._topology
        problems = []
        for b in self.branches:
            if not (math.isfinite(b.r) and math.isfinite(b.x)) or b.r < 0:
                problems.append(f"branch {b.name!r}: resistance must be finite and >= 0")
        if len(self.branch_index) != len(self.branches):
            problems.append("duplicate branch names")
        if not self.transformer_kva > 0:
            problems.append("transformer rating must be > 0")
        if self.transformer_node not in self.index or self.transformer_node == self.source:
            problems.append("transformer must sit on a non-source node")
        if not self.base_kva > 0:
            problems.append("system kVA base must be > 0")
        if not self.peak_base_kw > 0:
            problems.append("peak base load must be > 0")
        if not 0 < self.power_factor <= 1:
            problems.append("power factor must be in (0, 1]")
        unknown = [n for n in self.load_weights if n not in self.index]
        if unknown:
            problems.append(f"load weights on unknown nodes: {unknown}")
        if any(w < 0 for w in self.load_weights.values()):
            problems.append("load weights must be nonnegative")
        if abs(sum(self.load_weights.values()) - 1.0) > 1e-9:
            problems.append(f"load weights sum to {sum(self.load_weights.values())!r}, expected 1")
        if self.regulator_branch is not None and self.regulator_branch not in self.branch_index:
            problems.append(f"regulator branch {self.regulator_branch!r} does not exist")
        if self.regulated_node is not None and self.regulated_node not in self.index:
            problems.append(f"regulated node {self.regulated_node!r} does not exist")
        if problems:
            raise ValueError("; ".join(problems))

    def weight_vector(self) -> np.ndarray:
        w = np.zeros(len(self.nodes))
        for node, weight in self.load_weights.items():
            w[self.index[node]] = weight
        return w

    # -- JSON document ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n, "base_kv": self.base_kv.get(n)} for n in self.nodes],
            "branches": [{"name": b.name, "from": b.from_node, "to": b.to_node, "r": b.r, "x": b.x}
                         for b in self.branches],
            "source": {"node": self.source, "voltage": self.source_voltage},
            "loads": [{"node": n, "weight": w} for n, w in self.load_weights.items()],
            "transformer": {"node": self.transformer_node, "rated_kva": self.transformer_kva},
            "regulator": {"branch": self.regulator_branch, "regulated_node": self.regulated_node},
            "bases": {"kva": self.base_kva},
            "peak_base_kw": self.peak_base_kw,
            "power_factor": self.power_factor,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FeederModel":
        try:
            nodes = [n["id"] if isinstance(n, Mapping) else n for n in doc["nodes"]]
            base_kv = {n["id"]: n["base_kv"] for n in doc["nodes"]
                       if isinstance(n, Mapping) and n.get("base_kv") is not None}
            branches = [
                Branch(b.get("name") or f"{b['from']}-{b['to']}", str(b["from"]), str(b["to"]),
                       float(b["r"]), float(b["x"]))
                for b in doc["branches"]
            ]
            source = doc["source"]
            reg = doc.get("regulator") or {}
            model = cls(
                nodes=tuple(str(n) for n in nodes),
                branches=tuple(branches),
                source=str(source["node"] if isinstance(source, Mapping) else source),
                source_voltage=float(source.get("voltage", 1.0)) if isinstance(source, Mapping) else 1.0,
                load_weights={str(l["node"]): float(l["weight"]) for l in doc["loads"]},
                transformer_node=str(doc["transformer"]["node"]),
                transformer_kva=float(doc["transformer"]["rated_kva"]),
                base_kva=float(doc["bases"]["kva"]),
                base_kv=base_kv,
                regulator_branch=reg.get("branch"),
                regulated_node=reg.get("regulated_node"),
                peak_base_kw=float(doc.get("peak_base_kw", 3000.0)),
                power_factor=float(doc.get("power_factor", 0.95)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed feeder document: missing or bad field {exc}") from exc
        model.validate()
        return model

    @classmethod
    def load(cls, path: str | Path) -> "FeederModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PowerFlowSolution:
    voltage: np.ndarray          # complex pu per node, model node order
    branch_flow: np.ndarray      # complex pu at each branch's sending end
    branch_current: np.ndarray   # complex pu on each branch's sending side
    losses: complex              # total series losses, pu
    injection: complex           # power injected at the source, pu
    residual: float              # |injection - loads - losses|, pu
    iterations: int
    mismatch: float              # last max successive voltage change, pu
    mismatch_history: tuple[float, ...] = ()

    @property
    def vm(self) -> np.ndarray:
        return np.abs(self.voltage)

    @property
    def va(self) -> np.ndarray:
        return np.angle(self.voltage)


# IEEE 13-node line data reduced to positive sequence. Ohm/mile per config.
_CONFIG_Z = {
    "601": (0.1859, 0.5968),
    "602": (0.5920, 0.7602),
    "603": (1.3294, 1.3471),
    "604": (1.3294, 1.3471),
    "605": (1.3292, 1.3475),
    "606": (0.4960, 0.2777),
    "607": (1.3425, 0.5124),
}
_LINES = [
    # from, to, config, feet
    ("650", "632", "601", 2000),
    ("632", "633", "602", 500),
    ("632", "645", "603", 500),
    ("645", "646", "603", 300),
    ("632", "671", "601", 2000),
    ("671", "684", "604", 300),
    ("684", "611", "605", 300),
    ("684", "652", "607", 800),
    ("671", "680", "601", 1000),
    ("692", "675", "606", 500),
]
# Spot kW plus the 632-671 distributed load split evenly between its ends.
_SPOT_KW = {
    "634": 400.0, "645": 170.0, "646": 230.0, "652": 128.0, "671": 1155.0 + 100.0,
    "675": 843.0, "692": 170.0, "611": 170.0, "632": 100.0,
}


def build_builtin_feeder() -> FeederModel:
    """Per-phase radial equivalent of the IEEE 13-node test feeder.

    4.16 kV, 5000 kVA base. The 500 kVA XFM-1 unit (633-634) is the monitored
    service transformer and the substation regulator on 650-632 senses node 671.
    Spot loads are rescaled so the system peak base load is 3000 kW.
    """
    base_kva, base_kv = 5000.0, 4.16
    z_base = base_kv ** 2 / (base_kva / 1000.0)
    branches = []
    for frm, to, cfg, feet in _LINES:
        r, x = _CONFIG_Z[cfg]
        miles = feet / 5280.0
        branches.append(Branch(f"{frm}-{to}", frm, to, r * miles / z_base, x * miles / z_base))
    # XFM-1: 500 kVA, 1.1% + j2% on own base.
    branches.append(Branch("633-634", "633", "634", 0.011 * base_kva / 500.0, 0.02 * base_kva / 500.0))
    # Closed switch 671-692.
    branches.append(Branch("671-692", "671", "692", 1e-5, 0.0))
    nodes = ("650", "632", "633", "634", "645", "646", "671", "692", "675", "684", "611", "652", "680")
    total = sum(_SPOT_KW.values())
    weights = {n: kw / total for n, kw in _SPOT_KW.items()}
    kv = {n: base_kv for n in nodes}
    kv["634"] = 0.48
    model = FeederModel(
        nodes=nodes,
        branches=tuple(branches),
        source="650",
        load_weights=weights,
        transformer_node="634",
        transformer_kva=500.0,
        base_kva=base_kva,
        base_kv=kv,
        regulator_branch="650-632",
        regulated_node="671",
        peak_base_kw=3000.0,
        power_factor=0.95,
    )
    model.validate()
    return model


def solve_power_flow(
    model: FeederModel,
    nodal_load: Sequence[complex] | Mapping[str, complex],
    regulator_ratio: float = 1.0,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PowerFlowSolution:
    """Forward-backward sweep with constant-power loads.

    ``nodal_load`` is complex pu demand per node (sequence in model order, or a
    mapping by node id). ``regulator_ratio`` scales the receiving-end voltage of
    the regulator branch as an ideal autotransformer.
    """
    order, parent, parent_branch = model._topology
    n = len(model.nodes)
    if isinstance(nodal_load, Mapping):
        load = [0j] * n
        for node, s in nodal_load.items():
            load[model.index[node]] = complex(s)
    else:
        load = [complex(s) for s in nodal_load]
        if len(load) != n:
            raise ValueError(f"expected {n} nodal loads, got {len(load)}")
    if not all(math.isfinite(s.real) and math.isfinite(s.imag) for s in load):
        raise ValueError("nodal loads must be finite")

    z = [b.z for b in model.branches]
    ratio = [1.0] * len(z)
    reg = model.regulator_branch_index
    if reg is not None:
        ratio[reg] = float(regulator_ratio)
    src = order[0]
    downstream = order[1:]
    upstream = downstream[::-1]
    v_src = complex(model.source_voltage)

    v = [v_src] * n
    i_br = [0j] * len(z)
    history = []
    mismatch = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        acc = [(s / vk).conjugate() for s, vk in zip(load, v)]
        for j in upstream:
            k = parent_branch[j]
            ib = acc[j] * ratio[k]
            i_br[k] = ib
            acc[parent[j]] += ib
        v_new = [0j] * n
        v_new[src] = v_src
        for j in downstream:
            k = parent_branch[j]
            v_new[j] = ratio[k] * (v_new[parent[j]] - z[k] * i_br[k])
        mismatch = max(abs(a - b) for a, b in zip(v_new, v))
        v = v_new
        history.append(mismatch)
        if not math.isfinite(mismatch) or min(abs(vk) for vk in v) < 1e-3:
            raise NonConvergence("sweep diverged (voltage collapse)", it, mismatch)
        if mismatch < tol:
            break
    else:
        raise NonConvergence(f"no convergence in {max_iter} iterations", max_iter, mismatch)

    # Refresh currents at the converged voltages so flows and losses are consistent.
    acc = [(s / vk).conjugate() for s, vk in zip(load, v)]
    for j in upstream:
        k = parent_branch[j]
        ib = acc[j] * ratio[k]
        i_br[k] = ib
        acc[parent[j]] += ib
    flows = [0j] * len(z)
    losses = 0j
    for j in downstream:
        k = parent_branch[j]
        flows[k] = v[parent[j]] * i_br[k].conjugate()
        losses += z[k] * abs(i_br[k]) ** 2
    injection = v_src * acc[src].conjugate()
    residual = abs(injection - sum(load) - losses)
    return PowerFlowSolution(
        voltage=np.array(v),
        branch_flow=np.array(flows),
        branch_current=np.array(i_br),
        losses=losses,
        injection=injection,
        residual=residual,
        iterations=it,
        mismatch=mismatch,
        mismatch_history=tuple(history),
    )


def loading_factor(solution: PowerFlowSolution, model: FeederModel) -> float:
    """Transformer load factor K = |s| / s_R from the branch feeding its node."""
    s_pu = abs(solution.branch_flow[model.transformer_branch])
    return float(s_pu * model.base_kva / model.transformer_kva)


def transformer_kva(solution: PowerFlowSolution, model: FeederModel) -> float:
    return float(abs(solution.branch_flow[model.transformer_branch]) * model.base_kva)


def load_to_pu(p_kw: np.ndarray, model: FeederModel) -> np.ndarray:
    """Real power in kW per node to complex pu demand at the model power factor."""
    tan_phi = math.tan(math.acos(model.power_factor))
    p = np.asarray(p_kw, dtype=float) / model.base_kva
    return p + 1j * p * tan_phi
