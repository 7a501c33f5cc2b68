"""Analytic n-qubit GHZ fidelity predictions with and without readout.

Exact density-matrix evolution is out of reach beyond a few qubits, so the
multi-qubit forecast composes the two-qubit error budget at first order:
every qubit pays initialization once, the first qubit pays the superposition
pulse once, every subsequent qubit pays one conditional-NOT core, and the
readout stage charges each qubit its confusion error plus one tomography
rotation pulse. The n = 2 row of the curve must agree with the exact
gate-model/tomography pipeline within the stated tolerance, which anchors the
model; a multiplicative accumulation mode is available behind a flag.

GHZ construction order does not matter at this order: a nearest-neighbor
chain of conditional NOTs and a star with a single control carry identical
budgets, which the curve builder asserts explicitly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .gates import GateParams
from .readout import ConfusionMatrix
from .tomography import ROTATION_ERROR_DEFAULT, default_confusion


@dataclass(frozen=True)
class ScalingParams:
    """Per-step error constants feeding the first-order GHZ budget."""

    n_max: int = 10
    gate: GateParams = field(default_factory=GateParams)
    readout_error_per_qubit: float = -1.0   # <0: derive from `confusion`
    tomography_pulse_error: float = ROTATION_ERROR_DEFAULT
    accumulation: str = "additive"
    confusion: ConfusionMatrix = field(default_factory=default_confusion)

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")
        if self.accumulation not in ("additive", "product"):
            raise ValueError("accumulation must be 'additive' or 'product'")
        if not 0.0 <= self.tomography_pulse_error <= 1.0:
            raise ValueError("tomography_pulse_error must lie in [0, 1]")
        if self.readout_error_per_qubit < 0:
            object.__setattr__(self, "readout_error_per_qubit", self.confusion.average_error())
        if not 0.0 <= self.readout_error_per_qubit <= 1.0:
            raise ValueError("readout_error_per_qubit must lie in [0, 1]")

    def replace(self, **changes) -> "ScalingParams":
        return dataclasses.replace(self, **changes)


def superposition_error(gate: GateParams) -> float:
    """Budget of the initial half pulse: bit plus phase flip at the gate error."""
    return 2 * gate.p_single_qubit_gate


def cnot_core_error(gate: GateParams) -> float:
    """Budget of one conditional NOT, excluding initialization and the first
    half pulse (both are charged once per GHZ state, not per gate)."""
    return (
        2 * gate.p_transfer                 # excitation pulse
        + 2 * gate.p_single_qubit_gate      # target NOT
        + gate.damping_gamma() / 2          # control decay on an entangled state
        + gate.damping_gamma_target() / 2   # target transit decay
        + 2 * gate.p_transfer               # de-excitation pulse
    )


def chain_schedule(n: int) -> list:
    """Nearest-neighbor conditional-NOT order: k controls k+1."""
    return [(k, k + 1) for k in range(n - 1)]


def star_schedule(n: int) -> list:
    """Single-control order: qubit 0 controls every other qubit."""
    return [(0, k) for k in range(1, n)]


def _coherent_error(n: int, gate: GateParams, schedule) -> float:
    per_gate = cnot_core_error(gate)
    return n * gate.p_init + superposition_error(gate) + sum(per_gate for _ in schedule(n))


def ghz_fidelity_curve(params: ScalingParams) -> list:
    """Rows of (n, fidelity without readout, fidelity with readout) for n = 2..n_max.

    Raises if the chain and star schedules ever disagree, since schedule
    independence is part of the model's contract.
    """
    gate = params.gate
    readout_per_qubit = params.readout_error_per_qubit + params.tomography_pulse_error
    rows = []
    for n in range(2, params.n_max + 1):
        eps_chain = _coherent_error(n, gate, chain_schedule)
        eps_star = _coherent_error(n, gate, star_schedule)
        if eps_chain != eps_star:
            raise AssertionError(f"chain and star schedules disagree at n={n}: {eps_chain} vs {eps_star}")
        if params.accumulation == "additive":
            f_no = 1.0 - eps_chain
            f_with = 1.0 - eps_chain - n * readout_per_qubit
        else:
            f_no = _product_form(n, gate)
            f_with = f_no * (1.0 - params.readout_error_per_qubit) ** n \
                * (1.0 - params.tomography_pulse_error) ** n
        rows.append((n, max(0.0, min(1.0, f_no)), max(0.0, min(1.0, f_with))))
    return rows


def _product_form(n: int, gate: GateParams) -> float:
    f = (1.0 - gate.p_init) ** n * (1.0 - superposition_error(gate))
    return f * (1.0 - cnot_core_error(gate)) ** (n - 1)


def curve_to_csv(rows, path, provenance: str = "") -> None:
    """CSV with columns n,f_no_readout,f_with_readout (plus a provenance comment)."""
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append("n,f_no_readout,f_with_readout")
    for n, f_no, f_with in rows:
        lines.append(f"{n},{f_no!r},{f_with!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
