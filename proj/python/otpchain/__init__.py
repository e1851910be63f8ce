"""Python bindings for the otpchain simulator."""

import json as _json
from pathlib import Path as _Path

from ._otpchain import (
    DEPLOY_GAS,
    INSERT_OTP_GAS,
    OTP_WIDTH,
    MerkleProof,
    MerkleTree,
    MnemonicError,
    OtpchainError,
    ScenarioParseError,
    World,
    chain_profiles,
    derive_otps,
    max_auth_per_second,
    mnemonic_decode,
    mnemonic_encode,
    otp_from_precursor,
    precursor,
    prf,
    sha256,
    state_storage_bytes,
    verify_proof,
)
from . import _otpchain


class ScenarioRun:
    """Result of running a scenario: exit status, parsed JSON and text transcript."""

    def __init__(self, exit_status, json_text, text):
        self.exit_status = exit_status
        self.json_text = json_text
        self.text = text

    @property
    def data(self):
        return _json.loads(self.json_text)


def run_scenario(source, seed=None):
    """Runs a scenario given as a path or as the file contents."""
    if isinstance(source, _Path) or (isinstance(source, str) and "\n" not in source):
        path = _Path(source)
        return ScenarioRun(*_otpchain._run_scenario(path.read_text(), path.stem, seed))
    return ScenarioRun(*_otpchain._run_scenario(source, "scenario", seed))


def cost_report(text):
    """Gas, throughput and storage figures for a scenario's configuration."""
    return _json.loads(_otpchain._cost_report(text))


__all__ = [name for name in dir() if not name.startswith("_")]
