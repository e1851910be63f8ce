#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "otpchain/crypto.hpp"

namespace otpchain {

/// Which side of the running hash a sibling sits on.
enum class Side : std::uint8_t { left = 0, right = 1 };

struct ProofStep {
    Digest sibling;
    Side side;

    bool operator==(const ProofStep&) const = default;
};

/// Sibling path from the leaf level up to (not including) the root.
struct MerkleProof {
    std::uint64_t leaf_index = 0;
    std::vector<ProofStep> siblings;

    bool operator==(const MerkleProof&) const = default;
};

/// Full binary Merkle tree stored as a level-ordered node array: nodes[0] is
/// the root, the children of node k are 2k+1 and 2k+2, and leaf i lives at
/// nodes[leaf_count - 1 + i]. Leaf nodes are hash(leaf bytes); internal nodes
/// are hash(left || right).
class MerkleTree {
public:
    /// Throws Error unless leaves.size() is a power of two and at least 2.
    static MerkleTree build(std::span<const OtpValue> leaves);
    static MerkleTree build(std::span<const Digest> leaves);

    std::uint64_t leaf_count() const { return leaf_count_; }
    std::size_t depth() const;
    const Digest& root() const { return nodes_.front(); }
    std::span<const Digest> nodes() const { return nodes_; }
    const Digest& leaf_node(std::uint64_t i) const { return nodes_.at(leaf_count_ - 1 + i); }

    MerkleProof prove(std::uint64_t leaf_index) const;

    /// magic "OTMT", u16 version, u64 N, then 2N-1 digests; integers little-endian.
    Bytes serialize() const;
    /// Rejects bad headers and any node array whose internal nodes do not
    /// recompute from their children.
    static MerkleTree deserialize(ByteView data);

    bool operator==(const MerkleTree&) const = default;

private:
    static MerkleTree from_leaf_nodes(std::vector<Digest> leaf_nodes);

    std::uint64_t leaf_count_ = 0;
    std::vector<Digest> nodes_;
};

Digest merkle_leaf_hash(ByteView leaf);
Digest merkle_node_hash(const Digest& left, const Digest& right);

bool is_power_of_two(std::uint64_t n);

/// True iff the path from hash(leaf) reaches root, each side flag agrees with
/// the corresponding bit of proof.leaf_index, and (when given) the proof depth
/// matches expected_leaf_count.
bool verify_proof(const Digest& root, const OtpValue& leaf, const MerkleProof& proof,
                  std::optional<std::uint64_t> expected_leaf_count = std::nullopt);
bool verify_proof(const Digest& root, const Digest& leaf, const MerkleProof& proof,
                  std::optional<std::uint64_t> expected_leaf_count = std::nullopt);

}  // namespace otpchain
