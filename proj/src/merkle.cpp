#include "otpchain/merkle.hpp"

#include <bit>
#include <cstring>

namespace otpchain {

namespace {

constexpr std::array<std::uint8_t, 4> kTreeMagic = {'O', 'T', 'M', 'T'};
constexpr std::uint16_t kTreeVersion = 1;

bool verify_leaf_node(const Digest& root, Digest running, const MerkleProof& proof,
                      std::optional<std::uint64_t> expected_leaf_count)
{
    const std::size_t depth = proof.siblings.size();
    if (depth == 0 || depth >= 64) return false;
    if (expected_leaf_count) {
        if (!is_power_of_two(*expected_leaf_count) || std::uint64_t{1} << depth != *expected_leaf_count) return false;
    }
    if (proof.leaf_index >> depth != 0) return false;

    std::uint64_t index = proof.leaf_index;
    for (const auto& step : proof.siblings) {
        // An even position means we are the left child, so the sibling is on the right.
        const Side expected = (index & 1) ? Side::left : Side::right;
        if (step.side != expected) return false;
        running = step.side == Side::left ? merkle_node_hash(step.sibling, running) : merkle_node_hash(running, step.sibling);
        index >>= 1;
    }
    return running == root;
}

}  // namespace

bool is_power_of_two(std::uint64_t n)
{
    return std::has_single_bit(n);
}

Digest merkle_leaf_hash(ByteView leaf)
{
    return hash(leaf);
}

Digest merkle_node_hash(const Digest& left, const Digest& right)
{
    return hash(left.view(), right.view());
}

MerkleTree MerkleTree::from_leaf_nodes(std::vector<Digest> leaf_nodes)
{
    const std::uint64_t n = leaf_nodes.size();
    if (n < 2 || !is_power_of_two(n)) {
        throw Error("merkle tree needs a power-of-two leaf count >= 2, got " + std::to_string(n));
    }
    MerkleTree t;
    t.leaf_count_ = n;
    t.nodes_.resize(2 * n - 1);
    std::move(leaf_nodes.begin(), leaf_nodes.end(), t.nodes_.begin() + static_cast<std::ptrdiff_t>(n - 1));
    for (std::size_t k = n - 1; k-- > 0;) {
        t.nodes_[k] = merkle_node_hash(t.nodes_[2 * k + 1], t.nodes_[2 * k + 2]);
    }
    return t;
}

MerkleTree MerkleTree::build(std::span<const OtpValue> leaves)
{
    std::vector<Digest> leaf_nodes;
    leaf_nodes.reserve(leaves.size());
    for (const auto& l : leaves) leaf_nodes.push_back(merkle_leaf_hash(l.view()));
    return from_leaf_nodes(std::move(leaf_nodes));
}

MerkleTree MerkleTree::build(std::span<const Digest> leaves)
{
    std::vector<Digest> leaf_nodes;
    leaf_nodes.reserve(leaves.size());
    for (const auto& l : leaves) leaf_nodes.push_back(merkle_leaf_hash(l.view()));
    return from_leaf_nodes(std::move(leaf_nodes));
}

std::size_t MerkleTree::depth() const
{
    return static_cast<std::size_t>(std::countr_zero(leaf_count_));
}

MerkleProof MerkleTree::prove(std::uint64_t leaf_index) const
{
    if (leaf_index >= leaf_count_) {
        throw Error("leaf index " + std::to_string(leaf_index) + " out of range for " + std::to_string(leaf_count_) + " leaves");
    }
    MerkleProof proof;
    proof.leaf_index = leaf_index;
    std::size_t k = leaf_count_ - 1 + leaf_index;
    while (k > 0) {
        // Odd heap positions are left children.
        const bool is_left = (k % 2) == 1;
        const std::size_t sibling = is_left ? k + 1 : k - 1;
        proof.siblings.push_back({nodes_[sibling], is_left ? Side::right : Side::left});
        k = (k - 1) / 2;
    }
    return proof;
}

Bytes MerkleTree::serialize() const
{
    Bytes out(kTreeMagic.begin(), kTreeMagic.end());
    out.push_back(static_cast<std::uint8_t>(kTreeVersion & 0xff));
    out.push_back(static_cast<std::uint8_t>(kTreeVersion >> 8));
    write_u64_le(out, leaf_count_);
    out.reserve(out.size() + nodes_.size() * Digest::size);
    for (const auto& d : nodes_) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
    return out;
}

MerkleTree MerkleTree::deserialize(ByteView data)
{
    constexpr std::size_t header = 4 + 2 + 8;
    if (data.size() < header || !std::equal(kTreeMagic.begin(), kTreeMagic.end(), data.begin())) {
        throw Error("not a serialized merkle tree");
    }
    const std::uint16_t version = static_cast<std::uint16_t>(data[4] | (data[5] << 8));
    if (version != kTreeVersion) throw Error("unsupported merkle tree version " + std::to_string(version));
    const std::uint64_t n = read_u64_le(data.subspan(6, 8));
    if (n < 2 || !is_power_of_two(n) || n > (std::uint64_t{1} << 40)) throw Error("invalid merkle leaf count");
    const std::size_t node_count = 2 * n - 1;
    if (data.size() != header + node_count * Digest::size) throw Error("merkle tree payload has wrong length");

    std::vector<Digest> leaf_nodes;
    leaf_nodes.reserve(n);
    ByteView body = data.subspan(header);
    for (std::size_t i = n - 1; i < node_count; ++i) {
        leaf_nodes.push_back(Digest::from(body.subspan(i * Digest::size, Digest::size)));
    }
    MerkleTree t = from_leaf_nodes(std::move(leaf_nodes));
    for (std::size_t i = 0; i < n - 1; ++i) {
        if (std::memcmp(t.nodes_[i].bytes.data(), body.data() + i * Digest::size, Digest::size) != 0) {
            throw Error("merkle node " + std::to_string(i) + " does not match its children");
        }
    }
    return t;
}

bool verify_proof(const Digest& root, const OtpValue& leaf, const MerkleProof& proof,
                  std::optional<std::uint64_t> expected_leaf_count)
{
    return verify_leaf_node(root, merkle_leaf_hash(leaf.view()), proof, expected_leaf_count);
}

bool verify_proof(const Digest& root, const Digest& leaf, const MerkleProof& proof,
                  std::optional<std::uint64_t> expected_leaf_count)
{
    return verify_leaf_node(root, merkle_leaf_hash(leaf.view()), proof, expected_leaf_count);
}

}  // namespace otpchain
