"""BMC management surfaces: LAN/KCS channels, firmware upgrade, IPMI I2C.

X11-generation policy accepts any firmware image whose magic and CRCs
check out; X12 additionally requires a valid RSA signature and filters
IPMI I2C writes aimed at VRM addresses. A root shell (obtained by
installing a firmware image whose SMASH shell was swapped for /bin/sh)
unlocks raw bus mastering that bypasses the IPMI-level filter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.asymmetric import rsa

from . import firmware as fw
from .errors import (
    AuthFailure,
    FilteredByPolicy,
    FirmwareError,
    NoRootShell,
    Unauthorized,
)
from .fabric import BusReply, Fabric
from .protocol import Direction, Transaction


class ChannelKind(enum.Enum):
    LAN = "lan"
    KCS = "kcs"


@dataclass
class Channel:
    kind: ChannelKind
    authenticated: bool = False
    host_root: bool = False


@dataclass(frozen=True)
class UpgradeResult:
    accepted: bool
    reason: str | None = None  # BadMagic | BadCrc | BadSignature | Unauthorized


class Bmc:
    def __init__(
        self,
        fabric: Fabric,
        generation: str,
        credentials: dict[str, str],
        firmware_key: fw.KeyMaterial,
        vrm_addresses: frozenset[int],
        signing_pubkey: rsa.RSAPublicKey | None = None,
    ):
        if generation == "X12" and signing_pubkey is None:
            raise ValueError("X12 BMC requires the vendor signing public key")
        self.fabric = fabric
        self.generation = generation
        self.credentials = dict(credentials)
        self.firmware_key = firmware_key
        self.vrm_addresses = frozenset(vrm_addresses)
        self.signing_pubkey = signing_pubkey
        self.installed_digest: str | None = None
        self.root_shell = False

    @property
    def validation_rsa(self) -> bool:
        return self.generation == "X12"

    @property
    def i2c_passthrough_filtered(self) -> bool:
        return self.generation == "X12"

    # -- channels ----------------------------------------------------------------

    def authenticate(self, channel: Channel, user: str, password: str) -> Channel:
        if channel.kind is not ChannelKind.LAN:
            raise ValueError("only LAN channels authenticate with credentials")
        if self.credentials.get(user) != password:
            raise AuthFailure(user)
        channel.authenticated = True
        return channel

    def _authorized(self, channel: Channel) -> bool:
        if channel.kind is ChannelKind.LAN:
            return channel.authenticated
        return channel.host_root

    # -- firmware ----------------------------------------------------------------

    def upgrade_firmware(self, channel: Channel, package_bytes: bytes) -> UpgradeResult:
        if not self._authorized(channel):
            return UpgradeResult(False, "Unauthorized")
        try:
            pkg = fw.parse_package(package_bytes, self.firmware_key)
        except FirmwareError:
            return UpgradeResult(False, "BadMagic")
        report = fw.verify(pkg, self.signing_pubkey if self.validation_rsa else None)
        if not all(report.section_crc.values()) or not report.half_crc_ok:
            return UpgradeResult(False, "BadCrc")
        if self.validation_rsa and report.signature != "pass":
            return UpgradeResult(False, "BadSignature")
        self.installed_digest = pkg.digest
        self.root_shell = fw.has_root_shell(pkg, self.firmware_key)
        return UpgradeResult(True)

    # -- I2C surfaces ------------------------------------------------------------

    def ipmi_i2c(
        self, channel: Channel, bus: int, addr_byte: int, payload: bytes, read_len: int = 0
    ) -> BusReply:
        """ipmitool-style passthrough: addr_byte carries (address<<1)|rw."""
        if not self._authorized(channel):
            raise Unauthorized(f"{channel.kind.value} channel")
        address = addr_byte >> 1
        direction = Direction(addr_byte & 1)
        if not payload:
            raise ValueError("payload must carry at least the command byte")
        if (
            self.i2c_passthrough_filtered
            and direction is Direction.WRITE
            and address in self.vrm_addresses
        ):
            raise FilteredByPolicy(f"write to VRM 0x{address:02X}")
        t = Transaction(address, direction, payload[0], bytes(payload[1:]))
        reply = self.fabric.master_transfer("bmc", bus, t)
        if read_len and reply.ok:
            return BusReply(reply.status, reply.data[:read_len])
        return reply

    def raw_master(self, bus: int, t: Transaction) -> BusReply:
        """Direct register-level bus mastering; needs code execution on the BMC."""
        if not self.root_shell:
            raise NoRootShell("install a patched firmware image first")
        return self.fabric.master_transfer("bmc", bus, t)
