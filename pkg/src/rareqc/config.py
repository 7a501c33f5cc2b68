"""Experiment configuration: one INI-style file drives every command.

Each section mirrors one module's parameter set. Parsing is strict: a missing
section or an unknown section/key aborts with a diagnostic naming the
offender, and a written file parses back to an identical configuration
(floats are serialized with ``repr`` so the round trip is exact). The
canonical serialized text is also what gets hashed into every output file for
provenance.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass, field, fields

from . import chain as chain_mod
from . import readout as readout_mod
from .gates import GateParams
from .readout import ConfusionMatrix, ReadoutParams
from .scaling import ScalingParams
from .tomography import READOUT_ERROR_DEFAULT, ROTATION_ERROR_DEFAULT


class ConfigError(Exception):
    """Invalid configuration file; the message names the offending key."""


@dataclass(frozen=True)
class RunSection:
    seed: int = 1
    out_dir: str = "results"
    trials: int = 100_000


@dataclass(frozen=True)
class ReadoutSection:
    t1_qubit: float = readout_mod.T1_EU_DEFAULT
    tau_readout_native: float = readout_mod.TAU_READOUT_NATIVE_DEFAULT
    purcell_factor: float = 1e4
    tau_eff: float = readout_mod.TAU_EFF_DEFAULT
    eta: float = 0.01
    background_rate: float = readout_mod.CALIBRATED_BACKGROUND_RATE
    t_det: float = 0.15 * readout_mod.T1_EU_DEFAULT
    n_reps: int = 10
    p_transfer_err: float = readout_mod.TRANSFER_PULSE_ERROR
    t_pulse: float = readout_mod.TRANSFER_PULSE_DURATION
    t_excited_per_rep: float = 2 * readout_mod.TRANSFER_PULSE_DURATION
    decay_branching_to_dark: float = 0.5
    emission_saturation: float = 2.0
    reset_time: float = 1e-5
    # Second operating point (high collection efficiency, fewer repetitions).
    eta_alt: float = 0.10
    n_reps_alt: int = 3
    t_det_alt: float = 0.025 * readout_mod.T1_EU_DEFAULT
    # Detection-time scan.
    scan_t_min_frac: float = 0.01
    scan_t_max_frac: float = 0.5
    scan_points: int = 18
    scan_trials: int = 40_000
    calibration_target: float = 0.93


@dataclass(frozen=True)
class GateSection:
    p_init: float = 4e-4
    p_transfer: float = 4e-4
    p_single_qubit_gate: float = 8e-4
    t_excited_control: float = 1.6e-6
    t_excited_target: float = 8e-7
    t1_qubit: float = readout_mod.T1_EU_DEFAULT
    half_pulse_axis: str = "x"
    error_split: str = "sequential"


@dataclass(frozen=True)
class TomographySection:
    rot_err: float = ROTATION_ERROR_DEFAULT
    confusion_p_read1_given0: float = READOUT_ERROR_DEFAULT
    confusion_p_read0_given1: float = 0.0
    shots: int = 0   # 0 means exact outcome probabilities


@dataclass(frozen=True)
class ScalingSection:
    n_max: int = 10
    accumulation: str = "additive"
    readout_error_per_qubit: float = -1.0   # <0: derive from the confusion matrix
    tomography_pulse_error: float = ROTATION_ERROR_DEFAULT


@dataclass(frozen=True)
class CrystalSection:
    region_x: float = chain_mod.REGION_DEFAULT[0]
    region_y: float = chain_mod.REGION_DEFAULT[1]
    region_z: float = chain_mod.REGION_DEFAULT[2]
    site_density: float = chain_mod.SITE_DENSITY_DEFAULT
    doping: float = chain_mod.DOPING_DEFAULT
    trace_readout_density: float = chain_mod.TRACE_READOUT_DENSITY_DEFAULT
    c_dipole: float = chain_mod.C_DIPOLE_DEFAULT
    blockade_cutoff: float = chain_mod.CALIBRATED_BLOCKADE_CUTOFF
    target_chain_length: int = 2
    degree_seeds: int = 100
    target_degree: float = 5.0


_SECTIONS = {
    "run": RunSection,
    "readout": ReadoutSection,
    "gate": GateSection,
    "tomography": TomographySection,
    "scaling": ScalingSection,
    "crystal": CrystalSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    readout: ReadoutSection = field(default_factory=ReadoutSection)
    gate: GateSection = field(default_factory=GateSection)
    tomography: TomographySection = field(default_factory=TomographySection)
    scaling: ScalingSection = field(default_factory=ScalingSection)
    crystal: CrystalSection = field(default_factory=CrystalSection)

    # -- parameter-object adapters ------------------------------------------

    def readout_params(self, alt: bool = False) -> ReadoutParams:
        r = self.readout
        base = dict(
            t1_qubit=r.t1_qubit, tau_readout_native=r.tau_readout_native,
            purcell_factor=r.purcell_factor, tau_eff=r.tau_eff, eta=r.eta,
            background_rate=r.background_rate, t_det=r.t_det, n_reps=r.n_reps,
            p_transfer_err=r.p_transfer_err, t_pulse=r.t_pulse,
            t_excited_per_rep=r.t_excited_per_rep,
            decay_branching_to_dark=r.decay_branching_to_dark,
            emission_saturation=r.emission_saturation, reset_time=r.reset_time,
        )
        if alt:
            base.update(eta=r.eta_alt, n_reps=r.n_reps_alt, t_det=r.t_det_alt)
        return ReadoutParams(**base)

    def gate_params(self) -> GateParams:
        g = self.gate
        return GateParams(
            p_init=g.p_init, p_transfer=g.p_transfer,
            p_single_qubit_gate=g.p_single_qubit_gate,
            t_excited_control=g.t_excited_control,
            t_excited_target=g.t_excited_target,
            t1_qubit=g.t1_qubit, half_pulse_axis=g.half_pulse_axis,
            error_split=g.error_split,
        )

    def confusion(self) -> ConfusionMatrix:
        t = self.tomography
        return ConfusionMatrix(t.confusion_p_read1_given0, t.confusion_p_read0_given1)

    def scaling_params(self) -> ScalingParams:
        s = self.scaling
        return ScalingParams(
            n_max=s.n_max, gate=self.gate_params(),
            readout_error_per_qubit=s.readout_error_per_qubit,
            tomography_pulse_error=s.tomography_pulse_error,
            accumulation=s.accumulation, confusion=self.confusion(),
        )

    def crystal_region(self):
        c = self.crystal
        return (c.region_x, c.region_y, c.region_z)

    # -- serialization --------------------------------------------------------

    def canonical_string(self) -> str:
        parser = configparser.ConfigParser()
        for name, section in self._section_items():
            parser[name] = {f.name: _format_value(getattr(section, f.name))
                            for f in fields(section)}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_string().encode()).hexdigest()[:16]

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.canonical_string())

    def replace_values(self, section: str, **changes) -> "ExperimentConfig":
        updated = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: updated})

    def _section_items(self):
        return [(name, getattr(self, name)) for name in _SECTIONS]

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
        kwargs = {}
        for name, section_cls in _SECTIONS.items():
            if name not in parser:
                raise ConfigError(f"missing section [{name}]")
            known = {f.name: f for f in fields(section_cls)}
            values = {}
            for key, raw in parser[name].items():
                if key not in known:
                    raise ConfigError(f"unknown key '{key}' in section [{name}]")
                values[key] = _parse_value(raw, known[key].type, name, key)
            kwargs[name] = section_cls(**values)
        return cls(**kwargs)


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw: str, type_name, section: str, key: str):
    type_name = type_name if isinstance(type_name, str) else type_name.__name__
    try:
        if type_name == "int":
            return int(raw)
        if type_name == "float":
            return float(raw)
        if type_name == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(
            f"invalid value '{raw}' for key '{key}' in section [{section}]"
        ) from exc


def default_config() -> ExperimentConfig:
    return ExperimentConfig()
