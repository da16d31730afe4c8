#include "lmz/tokenize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>
#include <tuple>

#include "lmz/context_stats.hpp"
#include "lmz/errors.hpp"

namespace lmz {

namespace {

constexpr Symbol kDead = 0xFFFF;
constexpr std::int64_t kNoLink = -1;

std::uint32_t pair_key(Symbol left, Symbol right) {
  return (static_cast<std::uint32_t>(left) << 16) | right;
}

// Doubly linked token sequence; merged-away positions become kDead.
struct TokenList {
  std::vector<Symbol> token;
  std::vector<std::int64_t> prev, next;

  explicit TokenList(std::span<const std::uint8_t> bytes)
      : token(bytes.begin(), bytes.end()), prev(bytes.size()), next(bytes.size()) {
    const auto n = static_cast<std::int64_t>(bytes.size());
    for (std::int64_t i = 0; i < n; ++i) {
      prev[i] = i - 1;
      next[i] = i + 1 < n ? i + 1 : kNoLink;
    }
  }

  // Joins position p with its successor into `merged`.
  void merge(std::int64_t p, Symbol merged) {
    const auto q = next[p];
    token[p] = merged;
    token[q] = kDead;
    next[p] = next[q];
    if (next[q] != kNoLink) prev[next[q]] = p;
  }

  std::vector<Symbol> alive() const {
    std::vector<Symbol> out;
    if (token.empty()) return out;
    for (std::int64_t i = 0; i != kNoLink; i = next[i]) out.push_back(token[i]);
    return out;
  }
};

}  // namespace

BpeVocab::BpeVocab() : BpeVocab(std::vector<std::pair<Symbol, Symbol>>{}) {}

BpeVocab::BpeVocab(std::vector<std::pair<Symbol, Symbol>> merges) : merges_(std::move(merges)) {
  if (vocab_size() > kMaxVocabSize) fail(ErrorKind::invalid_argument, "vocabulary too large");
  expansions_.reserve(vocab_size());
  for (int b = 0; b < 256; ++b) expansions_.push_back({static_cast<std::uint8_t>(b)});
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const auto [left, right] = merges_[i];
    if (left >= 256 + i || right >= 256 + i)
      fail(ErrorKind::corrupt_stream, "merge refers to a later token");
    auto bytes = expansions_[left];
    bytes.insert(bytes.end(), expansions_[right].begin(), expansions_[right].end());
    expansions_.push_back(std::move(bytes));
    // A repeated pair can never fire again; the first rank wins.
    rank_.try_emplace(pair_key(left, right), static_cast<std::uint32_t>(i));
  }
}

std::vector<Symbol> BpeVocab::encode(std::span<const std::uint8_t> bytes) const {
  TokenList list(bytes);
  if (merges_.empty() || bytes.size() < 2) return list.alive();
  using Entry = std::pair<std::uint32_t, std::int64_t>;  // (rank, position)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto rank_at = [&](std::int64_t p) -> std::int64_t {
    const auto q = list.next[p];
    if (q == kNoLink) return -1;
    const auto it = rank_.find(pair_key(list.token[p], list.token[q]));
    return it == rank_.end() ? std::int64_t{-1} : std::int64_t{it->second};
  };
  auto offer = [&](std::int64_t p) {
    if (p == kNoLink) return;
    const auto rank = rank_at(p);
    if (rank >= 0) heap.emplace(static_cast<std::uint32_t>(rank), p);
  };
  for (std::int64_t p = 0; p + 1 < static_cast<std::int64_t>(bytes.size()); ++p) offer(p);
  // New tokens only pair into higher ranks, so ranks are applied in
  // training order and each rank left to right.
  while (!heap.empty()) {
    const auto [rank, p] = heap.top();
    heap.pop();
    if (list.token[p] == kDead || rank_at(p) != rank) continue;
    list.merge(p, static_cast<Symbol>(256 + rank));
    offer(list.prev[p]);
    offer(p);
  }
  return list.alive();
}

std::vector<std::uint8_t> BpeVocab::decode(std::span<const Symbol> tokens) const {
  std::vector<std::uint8_t> out;
  for (auto t : tokens) {
    if (t >= vocab_size()) fail(ErrorKind::corrupt_stream, "unknown token id " + std::to_string(t));
    out.insert(out.end(), expansions_[t].begin(), expansions_[t].end());
  }
  return out;
}

std::string BpeVocab::to_text() const {
  std::string out = "lmz-bpe 1\nmerges " + std::to_string(merges_.size()) + "\n";
  char hex[3];
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    out += std::to_string(merges_[i].first) + " " + std::to_string(merges_[i].second) + " # ";
    for (auto b : expansions_[256 + i]) {
      std::snprintf(hex, sizeof hex, "%02x", b);
      out += hex;
    }
    out += "\n";
  }
  return out;
}

BpeVocab BpeVocab::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic, keyword;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != "lmz-bpe")
    fail(ErrorKind::corrupt_stream, "not a BPE vocabulary file");
  if (version != 1) fail(ErrorKind::unknown_version, "unknown BPE vocabulary version");
  if (!(in >> keyword >> count) || keyword != "merges" || count + 256 > kMaxVocabSize)
    fail(ErrorKind::corrupt_stream, "bad BPE vocabulary header");
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<Symbol, Symbol>> merges;
  merges.reserve(count);
  while (merges.size() < count && std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream fields(line);
    unsigned left = 0, right = 0;
    std::string extra;
    if (!(fields >> left >> right) || (fields >> extra))
      fail(ErrorKind::corrupt_stream, "bad merge line '" + line + "'");
    if (left > kMaxVocabSize || right > kMaxVocabSize)
      fail(ErrorKind::corrupt_stream, "merge token out of range");
    merges.emplace_back(static_cast<Symbol>(left), static_cast<Symbol>(right));
  }
  if (merges.size() != count) fail(ErrorKind::corrupt_stream, "BPE vocabulary is truncated");
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      fail(ErrorKind::corrupt_stream, "trailing data in BPE vocabulary");
  return BpeVocab(std::move(merges));
}

BpeVocab train_bpe(std::span<const std::uint8_t> corpus, std::size_t vocab_size) {
  if (corpus.size() < 2) fail(ErrorKind::invalid_argument, "BPE corpus needs at least 2 bytes");
  if (vocab_size < 256 || vocab_size > kMaxVocabSize)
    fail(ErrorKind::invalid_argument, "vocab size must be in [256, 65535]");

  TokenList list(corpus);
  absl::flat_hash_map<std::uint32_t, std::int64_t> counts;
  absl::flat_hash_map<std::uint32_t, std::vector<std::uint32_t>> positions;
  for (std::size_t p = 0; p + 1 < corpus.size(); ++p) {
    const auto key = pair_key(corpus[p], corpus[p + 1]);
    ++counts[key];
    positions[key].push_back(static_cast<std::uint32_t>(p));
  }

  // Max-heap on count, then smaller left, then smaller right. Entries go
  // stale when counts drop and are refreshed when popped.
  using Entry = std::tuple<std::int64_t, std::uint32_t>;  // (count, key)
  auto worse = [](const Entry& a, const Entry& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) > std::get<1>(b);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  for (const auto& [key, count] : counts) heap.emplace(count, key);

  std::vector<std::pair<Symbol, Symbol>> merges;
  std::vector<std::uint32_t> touched;
  while (256 + merges.size() < vocab_size && !heap.empty()) {
    const auto [stale, key] = heap.top();
    heap.pop();
    const auto it = counts.find(key);
    const std::int64_t current = it == counts.end() ? 0 : it->second;
    if (current != stale) {
      if (current >= 2) heap.emplace(current, key);
      continue;
    }
    if (current < 2) break;

    const auto left = static_cast<Symbol>(key >> 16), right = static_cast<Symbol>(key & 0xFFFF);
    const auto merged = static_cast<Symbol>(256 + merges.size());
    merges.emplace_back(left, right);

    auto where = std::move(positions[key]);
    positions.erase(key);
    std::sort(where.begin(), where.end());
    where.erase(std::unique(where.begin(), where.end()), where.end());
    touched.clear();
    auto drop = [&](Symbol a, Symbol b) { --counts[pair_key(a, b)]; };
    auto add = [&](Symbol a, Symbol b, std::int64_t at) {
      const auto k = pair_key(a, b);
      ++counts[k];
      positions[k].push_back(static_cast<std::uint32_t>(at));
      touched.push_back(k);
    };
    for (const auto p32 : where) {
      const std::int64_t p = p32;
      const auto q = list.next[p];
      if (list.token[p] != left || q == kNoLink || list.token[q] != right) continue;
      const auto before = list.prev[p];
      const auto after = list.next[q];
      if (before != kNoLink) drop(list.token[before], left);
      drop(left, right);
      if (after != kNoLink) drop(right, list.token[after]);
      list.merge(p, merged);
      if (before != kNoLink) add(list.token[before], merged, before);
      if (after != kNoLink) add(merged, list.token[after], p);
    }
    counts.erase(key);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (const auto k : touched)
      if (const auto c = counts[k]; c >= 2) heap.emplace(c, k);
  }
  return BpeVocab(std::move(merges));
}

std::vector<TokenizedRate> tokenized_rate(std::span<const std::uint8_t> train,
                                          std::span<const std::uint8_t> test,
                                          std::span<const std::size_t> vocab_sizes,
                                          const TokenizedRateOptions& options) {
  if (test.empty()) fail(ErrorKind::invalid_argument, "empty evaluation corpus");
  if (options.chunk_size == 0) fail(ErrorKind::invalid_argument, "chunk size must be positive");
  std::vector<TokenizedRate> table;
  for (const auto requested : vocab_sizes) {
    const auto vocab = train_bpe(train, requested);
    const auto alphabet = static_cast<std::uint32_t>(vocab.vocab_size());
    const auto train_tokens = vocab.encode(train);
    ContextStats trained(options.order, alphabet);
    for (std::size_t i = 0; i < train_tokens.size(); ++i) {
      const std::size_t start = i > options.order ? i - options.order : 0;
      trained.update(std::span(train_tokens).subspan(start, i - start), train_tokens[i]);
    }

    ContextStats live(options.order, alphabet);
    const ContextStats* sources[] = {&trained, &live};
    double bits = 0;
    std::size_t tokens = 0, chunks = 0;
    for (std::size_t pos = 0; pos < test.size(); pos += options.chunk_size, ++chunks) {
      const auto chunk = test.subspan(pos, std::min(options.chunk_size, test.size() - pos));
      const auto symbols = vocab.encode(chunk);
      live.clear();
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        const std::size_t start = i > options.order ? i - options.order : 0;
        const auto context = std::span(symbols).subspan(start, i - start);
        bits -= std::log2(backoff_probability(sources, context, symbols[i], options.order));
        live.update(context, symbols[i]);
      }
      bits += 2;
      tokens += symbols.size();
    }
    table.push_back({vocab.vocab_size(), static_cast<double>(tokens) / static_cast<double>(chunks),
                     100.0 * bits / (8.0 * static_cast<double>(test.size()))});
  }
  return table;
}

}  // namespace lmz
