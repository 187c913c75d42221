#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "repufed/common.hpp"

namespace repufed {

enum class TxKind { ModelShare, ReputationUpdate, DataShareEvent };

std::string to_string(TxKind kind);

struct DagTransaction {
    std::uint64_t id = 0;  // content hash
    TxKind kind = TxKind::DataShareEvent;
    std::string payload;
    std::vector<std::uint64_t> approves;  // <= 2 parents
    int author = 0;
    int slot = 0;
};

// 64-bit truncation of SHA-256 over the canonical serialization.
std::uint64_t transaction_hash(TxKind kind, const std::string& payload,
                               const std::vector<std::uint64_t>& approves,
                               int author, int slot);

inline constexpr std::size_t kMaxPayloadBytes = 1 << 16;

class LocalDag {
  public:
    // Fresh DAG containing only the genesis transaction.
    static LocalDag with_genesis();

    // Appends a transaction approving the two oldest tips (oldest by
    // (slot, id); a single tip when only one exists).
    DagTransaction append(TxKind kind, const std::string& payload, int author,
                          int slot);

    // Set-union merge by id; commutative, associative, idempotent.
    void merge(const LocalDag& other);

    bool contains(std::uint64_t id) const { return txs_.count(id) > 0; }
    const DagTransaction& at(std::uint64_t id) const { return txs_.at(id); }
    std::size_t size() const { return txs_.size(); }
    std::uint64_t genesis_id() const { return genesis_id_; }

    // Ids with no approver, sorted by (slot, id).
    std::vector<std::uint64_t> tips() const;

    // All ids in a canonical order (sorted); used for equality checks.
    std::vector<std::uint64_t> ids() const;

    bool same_transactions(const LocalDag& other) const;

    // One JSON object per line: id, kind, approves, author, slot.
    std::string dump_jsonl() const;

    const std::map<std::uint64_t, DagTransaction>& transactions() const {
        return txs_;
    }

  private:
    std::map<std::uint64_t, DagTransaction> txs_;
    std::uint64_t genesis_id_ = 0;
};

// One synchronized gossip round over immutable snapshots: each vehicle
// sends its transactions to `fanout` seeded-random neighbors; receivers
// union-merge. dags is indexed by vehicle; topology[i] lists i's
// neighbors.
void gossip_round(std::vector<LocalDag>& dags,
                  const std::vector<std::vector<int>>& topology, int fanout,
                  std::uint64_t seed);

}  // namespace repufed
