#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "lmz/pmf.hpp"

namespace lmz {

// Symbol counts for every suffix context up to max_order, stored as a
// reverse-context trie: the child of a node is keyed by the symbol that
// precedes its context, so one root-to-leaf walk visits the order-0, 1, ...
// contexts of the current position.
class ContextStats {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kNone = std::numeric_limits<NodeId>::max();
  static constexpr NodeId kRoot = 0;

  ContextStats(unsigned max_order, std::uint32_t alphabet_size);

  unsigned max_order() const { return max_order_; }
  std::uint32_t alphabet_size() const { return alphabet_size_; }

  // Counts `symbol` under every suffix of `context` of length <= max_order.
  void update(std::span<const Symbol> context, Symbol symbol);

  // Fills path[k] with the order-k context node for k = 0..order, stopping
  // at the first context never seen. Returns the number of nodes written.
  unsigned context_path(std::span<const Symbol> context, unsigned order,
                        NodeId* path) const;

  std::uint32_t total(NodeId node) const { return total_[node]; }
  std::uint32_t distinct(NodeId node) const { return distinct_[node]; }
  std::uint32_t count(NodeId node, Symbol symbol) const;

  template <class Fn>
  void for_each_entry(NodeId node, Fn&& fn) const {
    for (auto e = first_entry_[node]; e != kNone; e = entry_next_[e])
      fn(entry_symbol_[e], entry_count_[e]);
  }

  std::size_t node_count() const { return total_.size(); }
  std::size_t entry_count() const { return entry_count_.size(); }

  // Canonical dump truncated to contexts of length <= depth.
  std::vector<std::uint8_t> serialize(unsigned depth) const;
  std::vector<std::uint8_t> serialize() const { return serialize(max_order_); }
  // Size of serialize(depth) without materializing it.
  std::size_t serialized_size(unsigned depth) const;
  static ContextStats deserialize(std::span<const std::uint8_t> bytes);

  void clear();

 private:
  NodeId child(NodeId node, Symbol symbol) const;
  NodeId child_or_create(NodeId node, Symbol symbol);
  void bump(NodeId node, Symbol symbol, std::uint32_t by);
  NodeId new_node(Symbol symbol);

  std::vector<NodeId> sorted_children(NodeId node) const;
  std::vector<std::uint32_t> sorted_entries(NodeId node) const;
  void serialize_node(NodeId node, unsigned depth, unsigned limit,
                      std::vector<std::uint8_t>& out) const;
  std::size_t node_size(NodeId node, unsigned depth, unsigned limit) const;

  static std::uint64_t key(NodeId node, Symbol symbol) {
    return (static_cast<std::uint64_t>(node) << 16) | symbol;
  }

  unsigned max_order_;
  std::uint32_t alphabet_size_;

  // Context nodes.
  std::vector<std::uint32_t> total_;
  std::vector<std::uint32_t> distinct_;
  std::vector<NodeId> first_entry_;
  std::vector<NodeId> first_child_;
  std::vector<NodeId> next_sibling_;
  std::vector<Symbol> node_symbol_;
  absl::flat_hash_map<std::uint64_t, NodeId> children_;

  // (context, next symbol) counts.
  std::vector<std::uint32_t> entry_count_;
  std::vector<std::uint32_t> entry_next_;
  std::vector<Symbol> entry_symbol_;
  absl::flat_hash_map<std::uint64_t, std::uint32_t> entries_;
};

// Blended escape-method-C probability over one or two count sources whose
// counts are summed per context (a frozen trained table plus in-chunk
// counts, for example):
//   P_k(y|s) = c_{s,y}/(n_s+d_s) + d_s/(n_s+d_s) * P_{k-1}(y|s')
// with P_{-1} uniform. Contexts with no observations defer to P_{k-1}.
double backoff_probability(std::span<const ContextStats* const> sources,
                           std::span<const Symbol> context, Symbol symbol,
                           unsigned order);
double backoff_probability(const ContextStats& stats,
                           std::span<const Symbol> context, Symbol symbol,
                           unsigned order);

// Full next-symbol distribution under the same recursion.
void backoff_distribution(std::span<const ContextStats* const> sources,
                          std::span<const Symbol> context, unsigned order,
                          std::span<double> out);

// Probabilities of `symbol` at every order 0..max_order in one walk;
// out[k] = P_k. Used by the scaling sweep to score a whole model family in a
// single pass.
void backoff_probabilities_by_order(const ContextStats& stats,
                                    std::span<const Symbol> context,
                                    Symbol symbol, std::span<double> out);

// Counts a symbol stream with contexts that restart every chunk_size
// symbols, the way chunked coding sees them.
ContextStats train_context_stats(std::span<const Symbol> symbols, unsigned order,
                                 std::uint32_t alphabet_size, std::size_t chunk_size = 2048);

}  // namespace lmz
