"""BMC channel authorization, firmware upgrade policy and I2C surfaces."""

import pytest

from pmbus_sim import firmware as fw
from pmbus_sim import protocol as pm
from pmbus_sim.bmc import Channel, ChannelKind
from pmbus_sim.errors import AuthFailure, FilteredByPolicy, NoRootShell, Unauthorized
from pmbus_sim.protocol import Direction, Transaction


def lan(platform):
    channel = Channel(ChannelKind.LAN)
    user, password = next(iter(platform.config.bmc.credentials.items()))
    return platform.bmc.authenticate(channel, user, password)


def kcs():
    return Channel(ChannelKind.KCS, host_root=True)


def patched_image(platform):
    key = platform.firmware_key
    pkg = fw.parse_package(platform.build_stock_firmware(), key)
    return fw.repack(fw.enable_root_shell(pkg, key), key)


def test_lan_requires_valid_credentials(x11):
    with pytest.raises(AuthFailure):
        x11.bmc.authenticate(Channel(ChannelKind.LAN), "ADMIN", "wrong")
    with pytest.raises(AuthFailure):
        x11.bmc.authenticate(Channel(ChannelKind.LAN), "root", "JPDKXF3BQZ")
    assert lan(x11).authenticated


def test_kcs_never_authenticates_with_credentials(x11):
    with pytest.raises(ValueError):
        x11.bmc.authenticate(kcs(), "ADMIN", "JPDKXF3BQZ")


@pytest.mark.parametrize("make_channel", [lambda p: lan(p), lambda p: kcs()])
def test_upgrade_over_either_channel(x11, make_channel):
    result = x11.bmc.upgrade_firmware(make_channel(x11), patched_image(x11))
    assert result.accepted and x11.bmc.root_shell


def test_unauthorized_channels_refused(x11):
    img = x11.build_stock_firmware()
    assert x11.bmc.upgrade_firmware(Channel(ChannelKind.LAN), img).reason == "Unauthorized"
    assert x11.bmc.upgrade_firmware(Channel(ChannelKind.KCS), img).reason == "Unauthorized"
    with pytest.raises(Unauthorized):
        x11.bmc.ipmi_i2c(Channel(ChannelKind.KCS), 2, 0x40, b"\x8b")


def test_upgrade_rejects_garbage_and_bitrot(x11):
    assert x11.bmc.upgrade_firmware(kcs(), b"not a firmware image").reason == "BadMagic"
    img = bytearray(x11.build_stock_firmware())
    img[10] ^= 0xFF
    assert x11.bmc.upgrade_firmware(kcs(), bytes(img)).reason == "BadCrc"
    assert not x11.bmc.root_shell


def test_stock_firmware_grants_no_shell(x11):
    assert x11.bmc.upgrade_firmware(kcs(), x11.build_stock_firmware()).accepted
    assert not x11.bmc.root_shell


def test_x12_demands_vendor_signature(x12):
    assert x12.bmc.upgrade_firmware(kcs(), patched_image(x12)).reason == "BadSignature"
    assert x12.bmc.upgrade_firmware(kcs(), x12.build_stock_firmware()).accepted


def test_x12_rejects_corrupted_signature(x12):
    img = bytearray(x12.build_stock_firmware())
    img[-20] ^= 0x01  # inside the signature trailer
    assert x12.bmc.upgrade_firmware(kcs(), bytes(img)).reason == "BadSignature"


def test_ipmi_i2c_addressing(x11):
    reply = x11.bmc.ipmi_i2c(kcs(), 2, (0x20 << 1) | 1, bytes([pm.CMD_READ_VOUT]))
    assert reply.ok and reply.data == b"\xd8\x00"
    trimmed = x11.bmc.ipmi_i2c(kcs(), 2, (0x20 << 1) | 1, bytes([pm.CMD_READ_VOUT]), read_len=1)
    assert trimmed.data == b"\xd8"
    with pytest.raises(ValueError):
        x11.bmc.ipmi_i2c(kcs(), 2, 0x40, b"")


def test_ipmi_i2c_write_reaches_vrm(x11):
    assert x11.bmc.ipmi_i2c(kcs(), 2, 0x20 << 1, bytes([pm.CMD_VOUT_COMMAND, 0x6E, 0x00])).ok
    assert x11.main_vrm.registers[0][pm.CMD_VOUT_COMMAND] == 0x6E


def test_x12_filters_vrm_writes_but_not_reads(x12):
    with pytest.raises(FilteredByPolicy):
        x12.bmc.ipmi_i2c(kcs(), 2, 0x30 << 1, bytes([pm.CMD_VOUT_COMMAND, 0x6E, 0x00]))
    assert x12.bmc.ipmi_i2c(kcs(), 2, (0x30 << 1) | 1, bytes([pm.CMD_READ_VOUT])).ok


def test_raw_master_needs_root_shell(x11):
    t = Transaction(0x20, Direction.WRITE, pm.CMD_OPERATION, b"\x02")
    with pytest.raises(NoRootShell):
        x11.bmc.raw_master(2, t)
    x11.bmc.upgrade_firmware(kcs(), patched_image(x11))
    assert x11.bmc.raw_master(2, t).ok


def test_root_shell_bypasses_x12_ipmi_filter(x12):
    """The IPMI-level filter stops passthrough, not code running on the BMC."""
    x12.bmc.root_shell = True  # as if installed via a signed-but-patched image
    t = Transaction(0x30, Direction.WRITE, pm.CMD_VOUT_COMMAND, b"\x6e\x00")
    assert x12.bmc.raw_master(2, t).ok
