#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "otpchain/crypto.hpp"
#include "otpchain/merkle.hpp"

namespace otpchain {

/// Gas charged for deploying a provider's registry contract.
inline constexpr std::uint64_t kDeployGas = 292'000;
/// Gas charged for every insert_otp call, whatever its result.
inline constexpr std::uint64_t kInsertOtpGas = 48'000;

using ContractAddress = std::string;

enum class TxStatus : std::uint8_t { pending, success, rejected_reuse, rejected_state };
std::string_view to_string(TxStatus s);

struct DeployRegistry {
    std::string provider;
    bool operator==(const DeployRegistry&) const = default;
};

/// Registry write. Carries only OTP values: no key, DID or index.
struct InsertOtp {
    OtpValue new_otp;
    std::optional<OtpValue> prev_otp;
    bool operator==(const InsertOtp&) const = default;
};

using TxPayload = std::variant<DeployRegistry, InsertOtp>;

struct LedgerTx {
    Digest tx_id;
    ContractAddress contract_address;
    TxPayload payload;
    /// Ledger-wide submission sequence number, salts the id.
    std::uint64_t nonce = 0;
    std::uint64_t gas_used = 0;
    TxStatus status = TxStatus::pending;
    std::optional<std::uint64_t> block_height;

    /// Contract address and payload, length-prefixed, with a type tag.
    Bytes canonical_payload() const;
    static Digest compute_id(const ContractAddress& contract, const TxPayload& payload, std::uint64_t nonce);
    bool id_matches() const { return compute_id(contract_address, payload, nonce) == tx_id; }

    bool operator==(const LedgerTx&) const = default;
};

enum class EventKind : std::uint8_t { registry_deployed, otp_inserted, misuse_attempt, state_fault };
std::string_view to_string(EventKind k);

/// One record of the public event stream any actor can follow.
struct LedgerEvent {
    std::uint64_t height = 0;
    EventKind kind = EventKind::otp_inserted;
    ContractAddress contract;
    OtpValue otp;
    Digest tx_id;
};

struct BlockHeader {
    std::uint64_t height = 0;
    Digest parent_hash;
    Digest tx_root;
    std::uint32_t tx_count = 0;
    std::uint64_t gas_used = 0;

    Digest hash() const;
    bool operator==(const BlockHeader&) const = default;
};

struct LedgerBlock {
    BlockHeader header;
    std::vector<LedgerTx> txs;
};

/// Merkle root over tx ids, padded to a power of two (>= 2) by repeating the
/// last id. All-zero digest for an empty block.
Digest compute_tx_root(std::span<const Digest> tx_ids);

/// Per-provider registry of each user's last used OTP.
class RegistryContract {
public:
    explicit RegistryContract(ContractAddress address) : address_(std::move(address)) {}

    const ContractAddress& address() const { return address_; }
    std::uint64_t deploy_gas() const { return kDeployGas; }
    std::size_t size() const { return last_used_.size(); }
    bool contains(const OtpValue& otp) const { return last_used_.count(otp) != 0; }
    const std::set<OtpValue>& last_used() const { return last_used_; }

    /// Reuse check, then replace prev_otp with new_otp. The registry is only
    /// mutated on success.
    TxStatus apply(const InsertOtp& call);

private:
    ContractAddress address_;
    std::set<OtpValue> last_used_;
};

struct InclusionProof {
    std::uint64_t block_height = 0;
    MerkleProof merkle_proof;
    bool operator==(const InclusionProof&) const = default;
};

struct ChainProfile {
    std::string name;
    std::uint64_t block_gas_limit = 0;
    double block_interval_seconds = 0;

    /// 30M gas per 12 s block.
    static ChainProfile mainnet_like();
    /// 20M gas per 2 s block.
    static ChainProfile sidechain_like();
    /// 600 invocations/s of a 45k-gas call, expressed as a 27M-gas, 1 s block.
    static ChainProfile consortium_like();
    static std::vector<ChainProfile> builtin();
    static ChainProfile by_name(std::string_view name);
};

/// floor(block_gas_limit / gas_per_auth / block_interval_seconds).
std::uint64_t max_auth_per_second(const ChainProfile& profile, std::uint64_t gas_per_auth);
/// num_users * otp_width.
std::uint64_t state_storage_bytes(std::uint64_t num_users, std::uint64_t otp_width);

/// Single-writer simulated chain. Transactions queue FIFO and execute when a
/// block is sealed; a block never exceeds the profile's gas limit.
class Ledger {
public:
    explicit Ledger(ChainProfile profile = ChainProfile::mainnet_like());

    const ChainProfile& profile() const { return profile_; }

    std::pair<ContractAddress, LedgerTx> deploy_registry(std::string_view provider);
    LedgerTx submit_insert_otp(const ContractAddress& contract, const OtpValue& new_otp,
                               std::optional<OtpValue> prev_otp);
    LedgerBlock seal_block();

    /// Throws Error for unknown or not-yet-sealed transactions.
    InclusionProof inclusion_proof(const Digest& tx_id) const;

    const LedgerTx& transaction(const Digest& tx_id) const;
    const LedgerTx* find_transaction(const Digest& tx_id) const;
    bool has_registry(const ContractAddress& address) const { return registries_.count(address) != 0; }
    const RegistryContract& registry(const ContractAddress& address) const;

    /// Height of the last sealed block; the genesis block is height 0.
    std::uint64_t height() const { return blocks_.back().header.height; }
    const std::vector<LedgerBlock>& blocks() const { return blocks_; }
    std::vector<BlockHeader> headers() const;
    std::size_t pending_count() const { return pending_.size(); }

    const std::vector<LedgerEvent>& events() const { return events_; }
    std::vector<LedgerEvent> events_for(const ContractAddress& contract) const;
    /// Most recent successful insertion of `otp` into `contract`, if any.
    std::optional<LedgerEvent> last_insertion(const ContractAddress& contract, const OtpValue& otp) const;

    /// Recomputes every tx id, tx root, parent link and block gas total.
    bool verify_chain() const;

    /// One JSON object per line, one line per block.
    std::string dump() const;

private:
    void execute(LedgerTx& tx, std::uint64_t height);

    ChainProfile profile_;
    std::uint64_t next_nonce_ = 0;
    std::vector<LedgerBlock> blocks_;
    std::deque<LedgerTx> pending_;
    std::map<Digest, LedgerTx> txs_;
    std::set<ContractAddress> known_addresses_;
    std::map<ContractAddress, RegistryContract> registries_;
    std::vector<LedgerEvent> events_;
};

/// Header-only verification: the tx id must recompute from the tx contents
/// and its Merkle path must reach the tx_root of the stored header at the
/// claimed height.
bool light_verify(std::span<const BlockHeader> header_store, const LedgerTx& tx, const InclusionProof& proof);

/// Keeps a validated header chain.
class LightClient {
public:
    /// Appends headers that extend the stored chain. Returns false (and keeps
    /// the stored chain) if any header fails to link.
    bool sync(std::span<const BlockHeader> headers);
    bool verify(const LedgerTx& tx, const InclusionProof& proof) const { return light_verify(headers_, tx, proof); }
    const std::vector<BlockHeader>& headers() const { return headers_; }

private:
    std::vector<BlockHeader> headers_;
};

}  // namespace otpchain
