"""Platform topology profiles: dataclass schema plus YAML loading.

Built-in profiles (``x11ssl-cf``, ``x12dpi-nt6``, ``e3c246d4i-2t``) ship as
YAML files next to this module; user profiles load from arbitrary paths
with the same schema.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import UnknownProfile

BUILTIN_PROFILES = ("x11ssl-cf", "x12dpi-nt6", "e3c246d4i-2t")


@dataclass(frozen=True)
class MasterSpec:
    name: str
    buses: dict[int, int]  # local bus id -> physical bus id
    requires_jumper: str | None = None


@dataclass(frozen=True)
class DeviceSpec:
    bus: int  # physical bus id
    address: int
    kind: str  # "vrm" | "dummy"
    vendor: str = "mps"
    initial_vid: int = 0xD8
    rail_page: int = 0
    temperature_raw: int = 0x0019
    ocp_limit_a: int = 100
    page1_vout: int = 0x0001
    requires_jumpers: tuple[str, ...] = ()
    write_masters: tuple[str, ...] | None = None


@dataclass(frozen=True)
class BmcSpec:
    generation: str  # "X11" | "X12"
    credentials: dict[str, str]
    validation_policy: str = "none"  # "none" | "rsa-signed"
    i2c_passthrough_filtered: bool = False


@dataclass(frozen=True)
class FaultModelSpec:
    v_fault_mv: int = 845
    v_crash_mv: int = 800
    v_abs_max_mv: int = 1600
    p_fault_max: float = 0.05
    brick_events_needed: int = 2
    stray_fault_weight: float = 5.3


@dataclass(frozen=True)
class ProfileConfig:
    name: str
    buses: tuple[int, ...]
    jumpers: dict[str, bool]
    masters: tuple[MasterSpec, ...]
    devices: tuple[DeviceSpec, ...]
    bmc: BmcSpec
    fault_model: FaultModelSpec = FaultModelSpec()
    nominal_load_a: float = 60.0

    def vrm_specs(self) -> tuple[DeviceSpec, ...]:
        return tuple(d for d in self.devices if d.kind == "vrm")


def _parse_profile(doc: dict) -> ProfileConfig:
    masters = tuple(
        MasterSpec(
            name=name,
            buses={int(k): int(v) for k, v in spec.get("buses", {}).items()},
            requires_jumper=spec.get("requires_jumper"),
        )
        for name, spec in doc["masters"].items()
    )
    devices = tuple(
        DeviceSpec(
            bus=int(d["bus"]),
            address=int(d["address"]),
            kind=d["kind"],
            vendor=d.get("vendor", "mps"),
            initial_vid=int(d.get("initial_vid", 0xD8)),
            rail_page=int(d.get("rail_page", 0)),
            temperature_raw=int(d.get("temperature_raw", 0x0019)),
            ocp_limit_a=int(d.get("ocp_limit_a", 100)),
            page1_vout=int(d.get("page1_vout", 0x0001)),
            requires_jumpers=tuple(d.get("requires_jumpers", ())),
            write_masters=tuple(d["write_masters"]) if "write_masters" in d else None,
        )
        for d in doc.get("devices", ())
    )
    bmc_doc = doc["bmc"]
    bmc = BmcSpec(
        generation=bmc_doc["generation"],
        credentials=dict(bmc_doc.get("credentials", {})),
        validation_policy=bmc_doc.get("validation_policy", "none"),
        i2c_passthrough_filtered=bool(bmc_doc.get("i2c_passthrough_filtered", False)),
    )
    fm = FaultModelSpec(**doc.get("fault_model", {}))
    return ProfileConfig(
        name=doc["name"],
        buses=tuple(int(b) for b in doc.get("buses", ())),
        jumpers={k: v == "connected" if isinstance(v, str) else bool(v) for k, v in doc.get("jumpers", {}).items()},
        masters=masters,
        devices=devices,
        bmc=bmc,
        fault_model=fm,
        nominal_load_a=float(doc.get("nominal_load_a", 60.0)),
    )


def load_profile_file(path: str | Path) -> ProfileConfig:
    return _parse_profile(yaml.safe_load(Path(path).read_text()))


def load_profile(name: str) -> ProfileConfig:
    """Built-in profile by name, or any YAML file path."""
    if name in BUILTIN_PROFILES:
        text = (
            importlib.resources.files("pmbus_sim").joinpath(f"profiles/{name}.yaml").read_text()
        )
        return _parse_profile(yaml.safe_load(text))
    if Path(name).exists():
        return load_profile_file(name)
    raise UnknownProfile(name)
