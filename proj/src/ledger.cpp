#include "otpchain/ledger.hpp"

#include <cmath>

#include "json.hpp"

namespace otpchain {

std::string_view to_string(TxStatus s)
{
    switch (s) {
    case TxStatus::pending: return "pending";
    case TxStatus::success: return "success";
    case TxStatus::rejected_reuse: return "rejected_reuse";
    case TxStatus::rejected_state: return "rejected_state";
    }
    return "unknown";
}

std::string_view to_string(EventKind k)
{
    switch (k) {
    case EventKind::registry_deployed: return "registry_deployed";
    case EventKind::otp_inserted: return "otp_inserted";
    case EventKind::misuse_attempt: return "misuse_attempt";
    case EventKind::state_fault: return "state_fault";
    }
    return "unknown";
}

Bytes LedgerTx::canonical_payload() const
{
    ByteWriter w;
    w.field(contract_address);
    if (const auto* d = std::get_if<DeployRegistry>(&payload)) {
        w.u8(0).field(d->provider);
    } else {
        const auto& ins = std::get<InsertOtp>(payload);
        w.u8(1).raw(ins.new_otp);
        if (ins.prev_otp) {
            w.u8(1).raw(*ins.prev_otp);
        } else {
            w.u8(0);
        }
    }
    return w.take();
}

Digest LedgerTx::compute_id(const ContractAddress& contract, const TxPayload& payload, std::uint64_t nonce)
{
    LedgerTx probe;
    probe.contract_address = contract;
    probe.payload = payload;
    return hash(ByteWriter{}.field("tx/v1").field(probe.canonical_payload()).u64(nonce).bytes());
}

Digest BlockHeader::hash() const
{
    return otpchain::hash(
        ByteWriter{}.field("block/v1").u64(height).raw(parent_hash).raw(tx_root).u32(tx_count).u64(gas_used).bytes());
}

Digest compute_tx_root(std::span<const Digest> tx_ids)
{
    if (tx_ids.empty()) return Digest{};
    std::vector<Digest> leaves(tx_ids.begin(), tx_ids.end());
    std::size_t padded = 2;
    while (padded < leaves.size()) padded *= 2;
    leaves.resize(padded, leaves.back());
    return MerkleTree::build(std::span<const Digest>(leaves)).root();
}

TxStatus RegistryContract::apply(const InsertOtp& call)
{
    if (contains(call.new_otp)) return TxStatus::rejected_reuse;
    if (call.prev_otp && !contains(*call.prev_otp)) return TxStatus::rejected_state;
    if (call.prev_otp) last_used_.erase(*call.prev_otp);
    last_used_.insert(call.new_otp);
    return TxStatus::success;
}

ChainProfile ChainProfile::mainnet_like()
{
    return {"mainnet-like", 30'000'000, 12.0};
}

ChainProfile ChainProfile::sidechain_like()
{
    return {"sidechain-like", 20'000'000, 2.0};
}

ChainProfile ChainProfile::consortium_like()
{
    return {"consortium-like", 600 * 45'000, 1.0};
}

std::vector<ChainProfile> ChainProfile::builtin()
{
    return {mainnet_like(), sidechain_like(), consortium_like()};
}

ChainProfile ChainProfile::by_name(std::string_view name)
{
    for (auto& p : builtin()) {
        if (p.name == name) return p;
    }
    throw Error("unknown chain profile '" + std::string(name) + "'");
}

std::uint64_t max_auth_per_second(const ChainProfile& profile, std::uint64_t gas_per_auth)
{
    if (profile.block_gas_limit == 0 || gas_per_auth == 0 || !(profile.block_interval_seconds > 0)) {
        throw Error("throughput inputs must be positive");
    }
    const long double per_block = static_cast<long double>(profile.block_gas_limit) / gas_per_auth;
    return static_cast<std::uint64_t>(std::floor(per_block / profile.block_interval_seconds));
}

std::uint64_t state_storage_bytes(std::uint64_t num_users, std::uint64_t otp_width)
{
    return num_users * otp_width;
}

Ledger::Ledger(ChainProfile profile) : profile_(std::move(profile))
{
    if (profile_.block_gas_limit < kDeployGas || !(profile_.block_interval_seconds > 0)) {
        throw Error("chain profile '" + profile_.name + "' cannot fit a registry deployment");
    }
    LedgerBlock genesis;
    blocks_.push_back(genesis);
}

std::pair<ContractAddress, LedgerTx> Ledger::deploy_registry(std::string_view provider)
{
    const std::uint64_t nonce = next_nonce_++;
    const Digest a = hash(ByteWriter{}.field("registry-address").field(provider).u64(nonce).bytes());
    ContractAddress address = "0x" + to_hex(ByteView(a.bytes).first(20));

    LedgerTx tx;
    tx.contract_address = address;
    tx.payload = DeployRegistry{std::string(provider)};
    tx.nonce = nonce;
    tx.gas_used = kDeployGas;
    tx.tx_id = LedgerTx::compute_id(tx.contract_address, tx.payload, nonce);
    known_addresses_.insert(address);
    pending_.push_back(tx);
    txs_[tx.tx_id] = tx;
    return {address, tx};
}

LedgerTx Ledger::submit_insert_otp(const ContractAddress& contract, const OtpValue& new_otp,
                                   std::optional<OtpValue> prev_otp)
{
    if (known_addresses_.count(contract) == 0) throw Error("no registry deployed at " + contract);
    if (kInsertOtpGas > profile_.block_gas_limit) throw Error("insert_otp exceeds the block gas limit");
    LedgerTx tx;
    tx.contract_address = contract;
    tx.payload = InsertOtp{new_otp, prev_otp};
    tx.nonce = next_nonce_++;
    tx.gas_used = kInsertOtpGas;
    tx.tx_id = LedgerTx::compute_id(tx.contract_address, tx.payload, tx.nonce);
    pending_.push_back(tx);
    txs_[tx.tx_id] = tx;
    return tx;
}

void Ledger::execute(LedgerTx& tx, std::uint64_t height)
{
    tx.block_height = height;
    if (std::holds_alternative<DeployRegistry>(tx.payload)) {
        registries_.emplace(tx.contract_address, RegistryContract(tx.contract_address));
        tx.status = TxStatus::success;
        events_.push_back({height, EventKind::registry_deployed, tx.contract_address, {}, tx.tx_id});
        return;
    }
    const auto& call = std::get<InsertOtp>(tx.payload);
    auto it = registries_.find(tx.contract_address);
    if (it == registries_.end()) {
        tx.status = TxStatus::rejected_state;
        events_.push_back({height, EventKind::state_fault, tx.contract_address, call.new_otp, tx.tx_id});
        return;
    }
    tx.status = it->second.apply(call);
    switch (tx.status) {
    case TxStatus::success:
        events_.push_back({height, EventKind::otp_inserted, tx.contract_address, call.new_otp, tx.tx_id});
        break;
    case TxStatus::rejected_reuse:
        events_.push_back({height, EventKind::misuse_attempt, tx.contract_address, call.new_otp, tx.tx_id});
        break;
    default:
        events_.push_back({height, EventKind::state_fault, tx.contract_address, call.new_otp, tx.tx_id});
        break;
    }
}

LedgerBlock Ledger::seal_block()
{
    LedgerBlock block;
    block.header.height = height() + 1;
    block.header.parent_hash = blocks_.back().header.hash();

    std::uint64_t gas = 0;
    while (!pending_.empty() && gas + pending_.front().gas_used <= profile_.block_gas_limit) {
        LedgerTx tx = std::move(pending_.front());
        pending_.pop_front();
        execute(tx, block.header.height);
        gas += tx.gas_used;
        txs_[tx.tx_id] = tx;
        block.txs.push_back(std::move(tx));
    }

    std::vector<Digest> ids;
    for (const auto& tx : block.txs) ids.push_back(tx.tx_id);
    block.header.tx_root = compute_tx_root(ids);
    block.header.tx_count = static_cast<std::uint32_t>(ids.size());
    block.header.gas_used = gas;
    blocks_.push_back(block);
    return block;
}

const LedgerTx* Ledger::find_transaction(const Digest& tx_id) const
{
    auto it = txs_.find(tx_id);
    return it == txs_.end() ? nullptr : &it->second;
}

const LedgerTx& Ledger::transaction(const Digest& tx_id) const
{
    const LedgerTx* tx = find_transaction(tx_id);
    if (tx == nullptr) throw Error("unknown transaction " + to_hex(tx_id));
    return *tx;
}

const RegistryContract& Ledger::registry(const ContractAddress& address) const
{
    auto it = registries_.find(address);
    if (it == registries_.end()) throw Error("no registry deployed at " + address);
    return it->second;
}

InclusionProof Ledger::inclusion_proof(const Digest& tx_id) const
{
    const LedgerTx& tx = transaction(tx_id);
    if (!tx.block_height) throw Error("transaction " + to_hex(tx_id) + " is not sealed yet");
    const LedgerBlock& block = blocks_.at(*tx.block_height);

    std::vector<Digest> leaves;
    std::size_t position = 0;
    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        if (block.txs[i].tx_id == tx_id) position = i;
        leaves.push_back(block.txs[i].tx_id);
    }
    std::size_t padded = 2;
    while (padded < leaves.size()) padded *= 2;
    leaves.resize(padded, leaves.back());
    const MerkleTree tree = MerkleTree::build(std::span<const Digest>(leaves));
    return {block.header.height, tree.prove(position)};
}

std::vector<BlockHeader> Ledger::headers() const
{
    std::vector<BlockHeader> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b.header);
    return out;
}

std::vector<LedgerEvent> Ledger::events_for(const ContractAddress& contract) const
{
    std::vector<LedgerEvent> out;
    for (const auto& e : events_) {
        if (e.contract == contract) out.push_back(e);
    }
    return out;
}

std::optional<LedgerEvent> Ledger::last_insertion(const ContractAddress& contract, const OtpValue& otp) const
{
    for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
        if (it->kind == EventKind::otp_inserted && it->contract == contract && it->otp == otp) return *it;
    }
    return std::nullopt;
}

bool Ledger::verify_chain() const
{
    for (std::size_t h = 0; h < blocks_.size(); ++h) {
        const LedgerBlock& b = blocks_[h];
        if (b.header.height != h) return false;
        if (h > 0 && b.header.parent_hash != blocks_[h - 1].header.hash()) return false;
        std::vector<Digest> ids;
        std::uint64_t gas = 0;
        for (const auto& tx : b.txs) {
            if (!tx.id_matches()) return false;
            ids.push_back(tx.tx_id);
            gas += tx.gas_used;
        }
        if (compute_tx_root(ids) != b.header.tx_root) return false;
        if (ids.size() != b.header.tx_count || gas != b.header.gas_used) return false;
        if (gas > profile_.block_gas_limit) return false;
    }
    return true;
}

std::string Ledger::dump() const
{
    std::string out;
    for (const auto& b : blocks_) {
        nlohmann::ordered_json rec;
        rec["height"] = b.header.height;
        rec["hash"] = to_hex(b.header.hash());
        rec["parent_hash"] = to_hex(b.header.parent_hash);
        rec["tx_root"] = to_hex(b.header.tx_root);
        rec["gas_used"] = b.header.gas_used;
        auto txs = nlohmann::ordered_json::array();
        for (const auto& tx : b.txs) {
            nlohmann::ordered_json t;
            t["tx_id"] = to_hex(tx.tx_id);
            t["contract"] = tx.contract_address;
            t["nonce"] = tx.nonce;
            if (const auto* d = std::get_if<DeployRegistry>(&tx.payload)) {
                t["kind"] = "deploy_registry";
                t["provider"] = d->provider;
            } else {
                const auto& ins = std::get<InsertOtp>(tx.payload);
                t["kind"] = "insert_otp";
                t["new_otp"] = to_hex(ins.new_otp);
                t["prev_otp"] = ins.prev_otp ? nlohmann::ordered_json(to_hex(*ins.prev_otp)) : nlohmann::ordered_json();
            }
            t["gas_used"] = tx.gas_used;
            t["status"] = to_string(tx.status);
            txs.push_back(std::move(t));
        }
        rec["txs"] = std::move(txs);
        out += rec.dump();
        out.push_back('\n');
    }
    return out;
}

bool light_verify(std::span<const BlockHeader> header_store, const LedgerTx& tx, const InclusionProof& proof)
{
    const BlockHeader* header = nullptr;
    for (const auto& h : header_store) {
        if (h.height == proof.block_height) {
            header = &h;
            break;
        }
    }
    if (header == nullptr || header->tx_count == 0) return false;
    if (!tx.id_matches()) return false;
    if (proof.merkle_proof.leaf_index >= header->tx_count) return false;
    std::uint64_t padded = 2;
    while (padded < header->tx_count) padded *= 2;
    return verify_proof(header->tx_root, tx.tx_id, proof.merkle_proof, padded);
}

bool LightClient::sync(std::span<const BlockHeader> headers)
{
    std::vector<BlockHeader> next = headers_;
    for (const auto& h : headers) {
        if (!next.empty() && h.height <= next.back().height) {
            // Already known; must match what we hold.
            if (h.height >= next.size() || next[h.height] != h) return false;
            continue;
        }
        const std::uint64_t expected = next.empty() ? 0 : next.back().height + 1;
        if (h.height != expected) return false;
        if (!next.empty() && h.parent_hash != next.back().hash()) return false;
        next.push_back(h);
    }
    headers_ = std::move(next);
    return true;
}

}  // namespace otpchain
