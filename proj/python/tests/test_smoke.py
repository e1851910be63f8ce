import os
from pathlib import Path

import pytest

import otpchain

SCENARIOS = Path(os.environ.get("OTPCHAIN_SCENARIO_DIR", Path(__file__).resolve().parents[2] / "scenarios"))


def test_otp_chain_relation():
    seed = bytes(range(32))
    pre = otpchain.precursor(seed, 3)
    assert len(pre) == otpchain.OTP_WIDTH
    assert otpchain.otp_from_precursor(pre) == otpchain.derive_otps(seed, 4)[2]
    assert otpchain.sha256(b"abc").hex().startswith("ba7816bf")


def test_mnemonic_roundtrip_and_error():
    payload = bytes(range(16))
    words = otpchain.mnemonic_encode(payload)
    assert len(words.split()) == 12
    assert otpchain.mnemonic_decode(words.upper()) == payload
    broken = words.split()
    broken[0] = "zoo" if broken[0] != "zoo" else "abandon"
    with pytest.raises(ValueError):
        otpchain.mnemonic_decode(" ".join(broken))


def test_merkle_proofs():
    otps = otpchain.derive_otps(bytes(32), 8)
    tree = otpchain.MerkleTree(otps)
    for i, otp in enumerate(otps):
        proof = tree.prove(i)
        assert otpchain.verify_proof(tree.root, otp, proof, 8)
        assert not otpchain.verify_proof(tree.root, otps[(i + 1) % 8], proof, 8)


def test_costs():
    assert otpchain.DEPLOY_GAS == 292_000
    assert otpchain.INSERT_OTP_GAS == 48_000
    assert otpchain.max_auth_per_second("mainnet-like") == 52
    assert otpchain.state_storage_bytes(1_000_000) == 16_000_000


def test_world_honest_and_stolen_client():
    world = otpchain.World(seed=5, n_otps=8)
    world.bootstrap("alice")
    first = world.authenticate("alice")
    assert first["kind"] == "granted"
    assert world.check_misuse("alice") is None
    attack = world.attack_stolen_client("alice")
    assert not attack["authenticated"]
    assert attack["detected"]
    assert world.check_misuse("alice") is not None


def test_world_stolen_authenticator_rejected_at_signature():
    world = otpchain.World(seed=9, n_otps=8)
    world.bootstrap("bob")
    attack = world.attack_stolen_authenticator("bob")
    assert not attack["authenticated"]
    assert attack["steps_reached"] == 0


def test_scenario_files_pass():
    files = sorted(SCENARIOS.glob("*.scn"))
    assert files
    for path in files:
        run = otpchain.run_scenario(path)
        assert run.exit_status == 0, path.name
        assert run.data["format"] == "otpchain-transcript"


def test_scenario_deterministic():
    path = SCENARIOS / "honest-3-sessions.scn"
    assert otpchain.run_scenario(path).json_text == otpchain.run_scenario(path).json_text


def test_scenario_parse_error_has_line():
    with pytest.raises(otpchain.ScenarioParseError, match="line 3"):
        otpchain.run_scenario("otpchain-scenario v1\nusers = a\nbogus line here\n")
