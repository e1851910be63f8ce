#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otpchain/attack.hpp"
#include "otpchain/scenario.hpp"

namespace py = pybind11;
using namespace otpchain;

namespace {

Bytes to_bytes(const py::bytes& b)
{
    const std::string_view s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes to_py(ByteView v)
{
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

template <typename T>
T fixed(const py::bytes& b)
{
    return T::from(to_bytes(b));
}

py::dict outcome_dict(const ProtocolOutcome& o)
{
    py::dict d;
    d["kind"] = std::string(to_string(o.kind));
    d["step"] = o.step;
    d["index"] = o.index;
    d["reason"] = o.reason;
    d["evidence_tx"] = o.evidence ? py::object(py::str(to_hex(o.evidence->tx_id))) : py::object(py::none());
    return d;
}

py::dict attack_dict(const AttackOutcome& o)
{
    py::dict d;
    d["name"] = o.name;
    d["authenticated"] = o.authenticated;
    d["detected"] = o.detected;
    d["steps_reached"] = o.steps_reached;
    d["evidence_tx"] = o.evidence ? py::object(py::str(to_hex(o.evidence->tx_id))) : py::object(py::none());
    d["evidence_height"] = o.evidence ? py::object(py::int_(o.evidence->block_height)) : py::object(py::none());
    return d;
}

ReinitMode reinit_mode(const std::string& s)
{
    if (s == "fresh_identity") return ReinitMode::fresh_identity;
    if (s == "rekey" || s == "rekey_signed_by_old") return ReinitMode::rekey_signed_by_old;
    throw py::value_error("mode must be 'fresh_identity' or 'rekey'");
}

}  // namespace

PYBIND11_MODULE(_otpchain, m)
{
    m.doc() = "OTP registry authentication: primitives, simulation and scenario runner";

    static py::exception<Error> error(m, "OtpchainError", PyExc_RuntimeError);
    py::register_exception<MnemonicError>(m, "MnemonicError", PyExc_ValueError);
    py::register_exception<ScenarioParseError>(m, "ScenarioParseError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const MnemonicError&) {
            throw;
        } catch (const ScenarioParseError&) {
            throw;
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.attr("DEPLOY_GAS") = kDeployGas;
    m.attr("INSERT_OTP_GAS") = kInsertOtpGas;
    m.attr("OTP_WIDTH") = OtpValue::size;

    m.def("sha256", [](const py::bytes& data) { return to_py(hash(to_bytes(data)).view()); }, py::arg("data"));
    m.def(
        "prf", [](const py::bytes& seed, std::uint64_t i) { return to_py(prf(fixed<Seed>(seed), i).view()); },
        py::arg("seed"), py::arg("index"));
    m.def(
        "precursor", [](const py::bytes& seed, std::uint64_t i) {
            return to_py(derive_precursor_value(fixed<Seed>(seed), i).view());
        },
        py::arg("seed"), py::arg("index"));
    m.def(
        "otp_from_precursor", [](const py::bytes& p) { return to_py(otp_from_precursor(fixed<OtpValue>(p)).view()); },
        py::arg("precursor"));
    m.def(
        "derive_otps", [](const py::bytes& seed, std::uint64_t n) {
            py::list out;
            for (const auto& o : derive_all_otps(fixed<Seed>(seed), n)) out.append(to_py(o.view()));
            return out;
        },
        py::arg("seed"), py::arg("n"));

    m.def(
        "mnemonic_encode", [](const py::bytes& payload) { return mnemonic_encode(to_bytes(payload)).to_string(); },
        py::arg("payload"));
    m.def(
        "mnemonic_decode", [](const std::string& words) { return to_py(mnemonic_decode(Mnemonic::parse(words))); },
        py::arg("words"));

    py::class_<MerkleProof>(m, "MerkleProof")
        .def_readonly("leaf_index", &MerkleProof::leaf_index)
        .def_property_readonly("siblings", [](const MerkleProof& p) {
            py::list out;
            for (const auto& s : p.siblings) {
                out.append(py::make_tuple(to_py(s.sibling.view()), s.side == Side::left ? "left" : "right"));
            }
            return out;
        });

    py::class_<MerkleTree>(m, "MerkleTree")
        .def(py::init([](const std::vector<py::bytes>& leaves) {
                 std::vector<OtpValue> values;
                 for (const auto& l : leaves) values.push_back(fixed<OtpValue>(l));
                 return MerkleTree::build(values);
             }),
             py::arg("otps"))
        .def_property_readonly("root", [](const MerkleTree& t) { return to_py(t.root().view()); })
        .def_property_readonly("leaf_count", &MerkleTree::leaf_count)
        .def_property_readonly("depth", &MerkleTree::depth)
        .def("prove", &MerkleTree::prove, py::arg("leaf_index"))
        .def("serialize", [](const MerkleTree& t) { return to_py(t.serialize()); });

    m.def(
        "verify_proof",
        [](const py::bytes& root, const py::bytes& otp, const MerkleProof& proof, std::optional<std::uint64_t> n) {
            return verify_proof(fixed<Digest>(root), fixed<OtpValue>(otp), proof, n);
        },
        py::arg("root"), py::arg("otp"), py::arg("proof"), py::arg("leaf_count") = py::none());

    m.def("chain_profiles", [] {
        py::list out;
        for (const auto& p : ChainProfile::builtin()) out.append(p.name);
        return out;
    });
    m.def(
        "max_auth_per_second",
        [](const std::string& profile, std::uint64_t gas) {
            return max_auth_per_second(ChainProfile::by_name(profile), gas);
        },
        py::arg("profile"), py::arg("gas_per_auth") = kInsertOtpGas);
    m.def("state_storage_bytes", &state_storage_bytes, py::arg("users"), py::arg("otp_width") = OtpValue::size);

    py::class_<World>(m, "World")
        .def(py::init([](std::uint64_t seed, std::uint64_t n, const std::string& profile, std::uint64_t abandon) {
                 World::Config c;
                 c.rng_seed = seed;
                 c.n_otps = n;
                 c.profile = ChainProfile::by_name(profile);
                 c.abandon_after_blocks = abandon;
                 return std::make_unique<World>(c);
             }),
             py::arg("seed") = 1, py::arg("n_otps") = 16, py::arg("profile") = "mainnet-like",
             py::arg("abandon_after_blocks") = ServiceProvider::kDefaultAbandonAfterBlocks)
        .def("bootstrap", [](World& w, const std::string& account) { w.bootstrap(account); }, py::arg("account"))
        .def(
            "authenticate", [](World& w, const std::string& account) { return outcome_dict(w.authenticate(account)); },
            py::arg("account"))
        .def(
            "reinitialize",
            [](World& w, const std::string& account, const std::string& mode) {
                w.reinitialize(account, reinit_mode(mode));
            },
            py::arg("account"), py::arg("mode"))
        .def(
            "check_misuse",
            [](World& w, const std::string& account) -> py::object {
                const auto ev = w.check_misuse(account);
                if (!ev) return py::none();
                py::dict d;
                d["tx_id"] = to_hex(ev->tx_id);
                d["block_height"] = ev->block_height;
                d["index"] = ev->index.value_or(0);
                return d;
            },
            py::arg("account"))
        .def(
            "attack_stolen_client",
            [](World& w, const std::string& account) {
                const auto& wallet = *w.user(account).wallet;
                return attack_dict(attack_stolen_client_secrets(w.ctx(), account, wallet, w.provider()));
            },
            py::arg("account"))
        .def(
            "attack_stolen_authenticator",
            [](World& w, const std::string& account) {
                const UserDevices& u = w.user(account);
                return attack_dict(attack_stolen_authenticator(w.ctx(), account, u.authenticator->seed(),
                                                               u.wallet->capacity(), w.provider()));
            },
            py::arg("account"))
        .def(
            "attack_replay",
            [](World& w, const std::string& account) {
                return attack_dict(attack_replay_eavesdropper(w.ctx(), *w.user(account).channel, w.provider()).outcome);
            },
            py::arg("account"))
        .def(
            "attack_ledger_delay",
            [](World& w, const std::string& account, std::uint64_t blocks) {
                const DelayReport r = attack_ledger_delay(w.ctx(), w.user(account), w.provider(), blocks);
                py::dict d = outcome_dict(r.victim);
                d["extra_seals"] = r.extra_seals;
                d["detected"] = r.outcome.detected;
                return d;
            },
            py::arg("account"), py::arg("blocks"))
        .def("seal", [](World& w) { return w.ledger().seal_block().header.height; })
        .def_property_readonly("height", [](World& w) { return w.ledger().height(); })
        .def_property_readonly("registry_size",
                               [](World& w) { return w.ledger().registry(w.provider().contract()).size(); })
        .def("transcript", [](World& w) { return w.transcript().to_text(); });

    m.def(
        "_run_scenario",
        [](const std::string& text, const std::string& name, std::optional<std::uint64_t> seed) {
            ScenarioConfig cfg = parse_scenario(text, name);
            if (seed) cfg.rng_seed = *seed;
            const ScenarioResult r = run_scenario(cfg);
            return py::make_tuple(r.exit_status, scenario_json(r), scenario_text(r));
        },
        py::arg("text"), py::arg("name") = "scenario", py::arg("seed") = py::none());
    m.def(
        "_cost_report",
        [](const std::string& text) { return cost_report_json(emit_cost_report(parse_scenario(text))); },
        py::arg("text"));
}
