#include "repufed/dag.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <sstream>

#include "repufed/rng.hpp"

namespace repufed {

std::string to_string(TxKind kind) {
    switch (kind) {
        case TxKind::ModelShare: return "model-share";
        case TxKind::ReputationUpdate: return "reputation-update";
        case TxKind::DataShareEvent: return "data-share-event";
    }
    return "?";
}

std::uint64_t transaction_hash(TxKind kind, const std::string& payload,
                               const std::vector<std::uint64_t>& approves,
                               int author, int slot) {
    std::ostringstream canon;
    canon << to_string(kind) << '\x1f' << payload << '\x1f';
    for (auto a : approves) canon << a << ',';
    canon << '\x1f' << author << '\x1f' << slot;
    std::string data = canon.str();

    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(),
           digest);
    std::uint64_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | digest[i];
    return h;
}

LocalDag LocalDag::with_genesis() {
    LocalDag dag;
    DagTransaction genesis;
    genesis.kind = TxKind::DataShareEvent;
    genesis.payload = "genesis";
    genesis.author = -1;
    genesis.slot = -1;
    genesis.id = transaction_hash(genesis.kind, genesis.payload, {},
                                  genesis.author, genesis.slot);
    dag.genesis_id_ = genesis.id;
    dag.txs_.emplace(genesis.id, std::move(genesis));
    return dag;
}

std::vector<std::uint64_t> LocalDag::tips() const {
    std::map<std::uint64_t, bool> approved;
    for (const auto& [id, tx] : txs_) {
        approved.emplace(id, false);
        (void)tx;
    }
    for (const auto& [id, tx] : txs_)
        for (auto parent : tx.approves)
            if (auto it = approved.find(parent); it != approved.end())
                it->second = true;
    std::vector<std::uint64_t> out;
    for (const auto& [id, is_approved] : approved)
        if (!is_approved) out.push_back(id);
    std::sort(out.begin(), out.end(), [this](std::uint64_t a, std::uint64_t b) {
        const auto& ta = txs_.at(a);
        const auto& tb = txs_.at(b);
        if (ta.slot != tb.slot) return ta.slot < tb.slot;
        return a < b;
    });
    return out;
}

DagTransaction LocalDag::append(TxKind kind, const std::string& payload,
                                int author, int slot) {
    if (payload.size() > kMaxPayloadBytes)
        throw ValidationError("append: payload exceeds size cap");
    auto tip_ids = tips();
    std::vector<std::uint64_t> approves(
        tip_ids.begin(),
        tip_ids.begin() + std::min<std::size_t>(2, tip_ids.size()));
    DagTransaction tx;
    tx.kind = kind;
    tx.payload = payload;
    tx.approves = approves;
    tx.author = author;
    tx.slot = slot;
    tx.id = transaction_hash(kind, payload, approves, author, slot);
    txs_.emplace(tx.id, tx);
    return tx;
}

void LocalDag::merge(const LocalDag& other) {
    for (const auto& [id, tx] : other.txs_) txs_.emplace(id, tx);
}

std::vector<std::uint64_t> LocalDag::ids() const {
    std::vector<std::uint64_t> out;
    out.reserve(txs_.size());
    for (const auto& [id, tx] : txs_) {
        out.push_back(id);
        (void)tx;
    }
    return out;
}

bool LocalDag::same_transactions(const LocalDag& other) const {
    return ids() == other.ids();
}

std::string LocalDag::dump_jsonl() const {
    std::ostringstream out;
    for (const auto& [id, tx] : txs_) {
        out << "{\"id\":" << id << ",\"kind\":\"" << to_string(tx.kind)
            << "\",\"approves\":[";
        for (std::size_t i = 0; i < tx.approves.size(); ++i) {
            if (i) out << ',';
            out << tx.approves[i];
        }
        out << "],\"author\":" << tx.author << ",\"slot\":" << tx.slot
            << "}\n";
    }
    return out.str();
}

void gossip_round(std::vector<LocalDag>& dags,
                  const std::vector<std::vector<int>>& topology, int fanout,
                  std::uint64_t seed) {
    if (topology.size() != dags.size())
        throw ValidationError("gossip_round: topology must cover all vehicles");
    if (fanout <= 0) return;

    const std::vector<LocalDag> snapshot = dags;
    for (std::size_t v = 0; v < snapshot.size(); ++v) {
        const auto& neighbors = topology[v];
        if (neighbors.empty()) continue;
        // Sample fanout distinct neighbors with a per-sender stream.
        std::vector<int> pool = neighbors;
        Rng rng(derive_seed(seed, 0x905511ULL, v));
        std::size_t picks =
            std::min<std::size_t>(static_cast<std::size_t>(fanout), pool.size());
        for (std::size_t i = 0; i < picks; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            dags[static_cast<std::size_t>(pool[i])].merge(snapshot[v]);
        }
    }
}

}  // namespace repufed
