#include "lmz/context_stats.hpp"

#include <algorithm>
#include <string>

#include "lmz/byte_io.hpp"
#include "lmz/errors.hpp"

namespace lmz {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'M', 'Z', 'T'};
constexpr std::uint8_t kTrieVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 4 + 8;

}  // namespace

ContextStats::ContextStats(unsigned max_order, std::uint32_t alphabet_size)
    : max_order_(max_order), alphabet_size_(alphabet_size) {
  if (alphabet_size < 2 || alphabet_size > 65536)
    fail(ErrorKind::invalid_argument, "alphabet size must be in [2, 65536]");
  if (max_order > 255) fail(ErrorKind::invalid_argument, "order too large");
  new_node(0);
}

void ContextStats::clear() {
  total_.clear();
  distinct_.clear();
  first_entry_.clear();
  first_child_.clear();
  next_sibling_.clear();
  node_symbol_.clear();
  children_.clear();
  entry_count_.clear();
  entry_next_.clear();
  entry_symbol_.clear();
  entries_.clear();
  new_node(0);
}

ContextStats::NodeId ContextStats::new_node(Symbol symbol) {
  const auto id = static_cast<NodeId>(total_.size());
  total_.push_back(0);
  distinct_.push_back(0);
  first_entry_.push_back(kNone);
  first_child_.push_back(kNone);
  next_sibling_.push_back(kNone);
  node_symbol_.push_back(symbol);
  return id;
}

ContextStats::NodeId ContextStats::child(NodeId node, Symbol symbol) const {
  auto it = children_.find(key(node, symbol));
  return it == children_.end() ? kNone : it->second;
}

ContextStats::NodeId ContextStats::child_or_create(NodeId node, Symbol symbol) {
  auto [it, inserted] = children_.try_emplace(key(node, symbol), kNone);
  if (inserted) {
    const NodeId id = new_node(symbol);
    next_sibling_[id] = first_child_[node];
    first_child_[node] = id;
    it->second = id;
  }
  return it->second;
}

void ContextStats::bump(NodeId node, Symbol symbol, std::uint32_t by) {
  auto [it, inserted] = entries_.try_emplace(key(node, symbol), 0);
  if (inserted) {
    const auto e = static_cast<std::uint32_t>(entry_count_.size());
    entry_count_.push_back(0);
    entry_symbol_.push_back(symbol);
    entry_next_.push_back(first_entry_[node]);
    first_entry_[node] = e;
    ++distinct_[node];
    it->second = e;
  }
  entry_count_[it->second] += by;
  total_[node] += by;
}

std::uint32_t ContextStats::count(NodeId node, Symbol symbol) const {
  auto it = entries_.find(key(node, symbol));
  return it == entries_.end() ? 0 : entry_count_[it->second];
}

void ContextStats::update(std::span<const Symbol> context, Symbol symbol) {
  if (symbol >= alphabet_size_)
    fail(ErrorKind::invalid_argument, "symbol outside alphabet");
  const std::size_t depth = std::min<std::size_t>(max_order_, context.size());
  NodeId node = kRoot;
  bump(node, symbol, 1);
  for (std::size_t k = 1; k <= depth; ++k) {
    node = child_or_create(node, context[context.size() - k]);
    bump(node, symbol, 1);
  }
}

unsigned ContextStats::context_path(std::span<const Symbol> context,
                                    unsigned order, NodeId* path) const {
  const std::size_t depth = std::min<std::size_t>(
      std::min(order, max_order_), context.size());
  path[0] = kRoot;
  unsigned found = 1;
  NodeId node = kRoot;
  for (std::size_t k = 1; k <= depth; ++k) {
    node = child(node, context[context.size() - k]);
    if (node == kNone) break;
    path[found++] = node;
  }
  return found;
}

std::vector<ContextStats::NodeId> ContextStats::sorted_children(NodeId node) const {
  std::vector<NodeId> out;
  for (auto c = first_child_[node]; c != kNone; c = next_sibling_[c])
    out.push_back(c);
  std::sort(out.begin(), out.end(), [this](NodeId a, NodeId b) {
    return node_symbol_[a] < node_symbol_[b];
  });
  return out;
}

std::vector<std::uint32_t> ContextStats::sorted_entries(NodeId node) const {
  std::vector<std::uint32_t> out;
  for (auto e = first_entry_[node]; e != kNone; e = entry_next_[e])
    out.push_back(e);
  std::sort(out.begin(), out.end(), [this](std::uint32_t a, std::uint32_t b) {
    return entry_symbol_[a] < entry_symbol_[b];
  });
  return out;
}

// Node layout: varint entry count, then (symbol gap, count) varint pairs in
// ascending symbol order; varint child count, then (symbol gap, child node)
// in ascending symbol order. A gap is the symbol for the first item and
// symbol - previous - 1 afterwards.
void ContextStats::serialize_node(NodeId node, unsigned depth, unsigned limit,
                                  std::vector<std::uint8_t>& out) const {
  const auto entries = sorted_entries(node);
  put_varint(out, entries.size());
  int previous = -1;
  for (auto e : entries) {
    put_varint(out, static_cast<std::uint64_t>(entry_symbol_[e] - previous - 1));
    put_varint(out, entry_count_[e]);
    previous = entry_symbol_[e];
  }
  if (depth == limit) {
    put_varint(out, 0);
    return;
  }
  const auto kids = sorted_children(node);
  put_varint(out, kids.size());
  previous = -1;
  for (auto c : kids) {
    put_varint(out, static_cast<std::uint64_t>(node_symbol_[c] - previous - 1));
    previous = node_symbol_[c];
    serialize_node(c, depth + 1, limit, out);
  }
}

std::size_t ContextStats::node_size(NodeId node, unsigned depth,
                                    unsigned limit) const {
  std::size_t size = varint_size(distinct_[node]);
  const auto entries = sorted_entries(node);
  int previous = -1;
  for (auto e : entries) {
    size += varint_size(static_cast<std::uint64_t>(entry_symbol_[e] - previous - 1));
    size += varint_size(entry_count_[e]);
    previous = entry_symbol_[e];
  }
  if (depth == limit) return size + 1;
  const auto kids = sorted_children(node);
  size += varint_size(kids.size());
  previous = -1;
  for (auto c : kids) {
    size += varint_size(static_cast<std::uint64_t>(node_symbol_[c] - previous - 1));
    previous = node_symbol_[c];
    size += node_size(c, depth + 1, limit);
  }
  return size;
}

std::vector<std::uint8_t> ContextStats::serialize(unsigned depth) const {
  const unsigned limit = std::min(depth, max_order_);
  std::vector<std::uint8_t> body;
  serialize_node(kRoot, 0, limit, body);
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kTrieVersion);
  out.push_back(static_cast<std::uint8_t>(limit));
  put_le<std::uint32_t>(out, alphabet_size_);
  put_le<std::uint64_t>(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::size_t ContextStats::serialized_size(unsigned depth) const {
  return kHeaderSize + node_size(kRoot, 0, std::min(depth, max_order_));
}

ContextStats ContextStats::deserialize(std::span<const std::uint8_t> bytes) {
  ByteCursor in(bytes);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic))
    fail(ErrorKind::corrupt_stream, "not a trie dump");
  const std::uint8_t version = in.take(1)[0];
  if (version != kTrieVersion)
    fail(ErrorKind::unknown_version,
         "unsupported trie version " + std::to_string(version));
  const unsigned order = in.take(1)[0];
  const auto alphabet = in.le<std::uint32_t>();
  const auto body_length = in.le<std::uint64_t>();
  if (body_length != in.remaining())
    fail(ErrorKind::corrupt_stream, "trie body length mismatch");

  ContextStats stats(order, alphabet);
  auto read_symbol = [&](int& previous) {
    const std::uint64_t gap = in.varint();
    const std::uint64_t symbol = static_cast<std::uint64_t>(previous + 1) + gap;
    if (symbol >= alphabet) fail(ErrorKind::corrupt_stream, "symbol out of range");
    previous = static_cast<int>(symbol);
    return static_cast<Symbol>(symbol);
  };
  auto read_node = [&](NodeId node, unsigned depth) {
    const std::uint64_t entries = in.varint();
    if (entries > alphabet) fail(ErrorKind::corrupt_stream, "too many entries");
    int previous = -1;
    for (std::uint64_t i = 0; i < entries; ++i) {
      const Symbol symbol = read_symbol(previous);
      const std::uint64_t count = in.varint();
      if (count == 0 || count > 0xFFFFFFFFull)
        fail(ErrorKind::corrupt_stream, "bad count");
      stats.bump(node, symbol, static_cast<std::uint32_t>(count));
    }
    const std::uint64_t kids = in.varint();
    if (kids > alphabet || (kids > 0 && depth >= order))
      fail(ErrorKind::corrupt_stream, "bad child count");
    return kids;
  };
  // Iterative depth-first walk so corrupt deep input cannot overflow the stack.
  struct Walk {
    NodeId node;
    unsigned depth;
    std::uint64_t left;
    int previous;
  };
  std::vector<Walk> walk;
  walk.push_back({kRoot, 0, read_node(kRoot, 0), -1});
  while (!walk.empty()) {
    Walk& top = walk.back();
    if (top.left == 0) {
      walk.pop_back();
      continue;
    }
    --top.left;
    const Symbol symbol = read_symbol(top.previous);
    const NodeId kid = stats.child_or_create(top.node, symbol);
    const unsigned depth = top.depth + 1;
    const std::uint64_t kids = read_node(kid, depth);
    walk.push_back({kid, depth, kids, -1});
  }
  if (in.remaining() != 0) fail(ErrorKind::corrupt_stream, "trailing trie bytes");
  return stats;
}

double backoff_probability(std::span<const ContextStats* const> sources,
                           std::span<const Symbol> context, Symbol symbol,
                           unsigned order) {
  if (sources.empty() || sources.size() > 2)
    fail(ErrorKind::invalid_argument, "expected one or two count sources");
  const double alphabet = sources[0]->alphabet_size();
  ContextStats::NodeId paths[2][256];
  unsigned lengths[2] = {0, 0};
  for (std::size_t s = 0; s < sources.size(); ++s)
    lengths[s] = sources[s]->context_path(context, order, paths[s]);
  const unsigned levels = std::max(lengths[0], lengths[1]);

  double p = 1.0 / alphabet;
  for (unsigned k = 0; k < levels; ++k) {
    double n = 0, c = 0, d = 0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (k >= lengths[s]) continue;
      const auto node = paths[s][k];
      n += sources[s]->total(node);
      d += sources[s]->distinct(node);
      c += sources[s]->count(node, symbol);
    }
    if (sources.size() == 2 && k < lengths[0] && k < lengths[1]) {
      // Symbols present in both sources are distinct only once.
      const auto a = paths[0][k];
      const auto b = paths[1][k];
      sources[1]->for_each_entry(b, [&](Symbol y, std::uint32_t) {
        if (sources[0]->count(a, y) > 0) d -= 1;
      });
    }
    if (n == 0) continue;
    p = (c + d * p) / (n + d);
  }
  return p;
}

double backoff_probability(const ContextStats& stats,
                           std::span<const Symbol> context, Symbol symbol,
                           unsigned order) {
  const ContextStats* sources[1] = {&stats};
  return backoff_probability(sources, context, symbol, order);
}

void backoff_distribution(std::span<const ContextStats* const> sources,
                          std::span<const Symbol> context, unsigned order,
                          std::span<double> out) {
  if (sources.empty() || sources.size() > 2)
    fail(ErrorKind::invalid_argument, "expected one or two count sources");
  const std::size_t alphabet = sources[0]->alphabet_size();
  if (out.size() != alphabet)
    fail(ErrorKind::invalid_argument, "output size differs from alphabet");
  ContextStats::NodeId paths[2][256];
  unsigned lengths[2] = {0, 0};
  for (std::size_t s = 0; s < sources.size(); ++s)
    lengths[s] = sources[s]->context_path(context, order, paths[s]);
  const unsigned levels = std::max(lengths[0], lengths[1]);

  // Unrolled recursion, deepest context first: each level adds its counts
  // scaled by the escape mass of every deeper level, and the uniform base
  // gets the product of all escapes. Cost is O(alphabet + entries).
  std::fill(out.begin(), out.end(), 0.0);
  double carry = 1.0;
  for (unsigned k = levels; k-- > 0;) {
    double n = 0, d = 0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (k >= lengths[s]) continue;
      n += sources[s]->total(paths[s][k]);
      d += sources[s]->distinct(paths[s][k]);
    }
    if (n == 0) continue;
    if (sources.size() == 2 && k < lengths[0] && k < lengths[1]) {
      const auto a = paths[0][k];
      sources[1]->for_each_entry(paths[1][k], [&](Symbol y, std::uint32_t) {
        if (sources[0]->count(a, y) > 0) d -= 1;
      });
    }
    const double scale = carry / (n + d);
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (k >= lengths[s]) continue;
      sources[s]->for_each_entry(paths[s][k], [&](Symbol y, std::uint32_t c) {
        out[y] += c * scale;
      });
    }
    carry *= d / (n + d);
  }
  const double base = carry / static_cast<double>(alphabet);
  for (auto& p : out) p += base;
}

void backoff_probabilities_by_order(const ContextStats& stats,
                                    std::span<const Symbol> context,
                                    Symbol symbol, std::span<double> out) {
  ContextStats::NodeId path[256];
  const unsigned order = static_cast<unsigned>(out.size()) - 1;
  const unsigned found = stats.context_path(context, order, path);
  double p = 1.0 / stats.alphabet_size();
  for (unsigned k = 0; k <= order; ++k) {
    if (k < found) {
      const auto node = path[k];
      const double n = stats.total(node);
      if (n > 0) {
        const double d = stats.distinct(node);
        p = (stats.count(node, symbol) + d * p) / (n + d);
      }
    }
    out[k] = p;
  }
}

ContextStats train_context_stats(std::span<const Symbol> symbols, unsigned order,
                                 std::uint32_t alphabet_size, std::size_t chunk_size) {
  if (chunk_size == 0) fail(ErrorKind::invalid_argument, "chunk size must be positive");
  ContextStats stats(order, alphabet_size);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const std::size_t chunk_start = i - i % chunk_size;
    const std::size_t start = std::max(chunk_start, i >= order ? i - order : std::size_t{0});
    stats.update(symbols.subspan(start, i - start), symbols[i]);
  }
  return stats;
}

}  // namespace lmz
