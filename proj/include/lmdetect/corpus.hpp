#pragma once

// Text ingestion: tokenizers, alphabets and n-gram counting.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmdetect/error.hpp"

namespace lmdetect {

using Symbol = std::uint32_t;
/// Integer-coded token sequence; every entry is an index into an Alphabet.
using TokenSeq = std::vector<Symbol>;

enum class Scheme { byte, chr, word };
enum class OovPolicy { error, map_to_reserved };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::byte: return "byte";
    case Scheme::chr: return "char";
    case Scheme::word: return "word";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "byte") return Scheme::byte;
  if (name == "char") return Scheme::chr;
  if (name == "word" || name == "whitespace-word") return Scheme::word;
  fail(ErrorKind::invalid_argument, "unknown tokenizer scheme '" + std::string(name) + "'");
}

/// Ordered set of distinct token strings with a bijective index mapping.
class Alphabet {
 public:
  static constexpr std::string_view kReserved = "<unk>";

  Alphabet() = default;

  explicit Alphabet(std::vector<std::string> symbols, OovPolicy policy = OovPolicy::error)
      : symbols_(std::move(symbols)), policy_(policy) {
    require(symbols_.size() >= 2, "alphabet: need at least two symbols");
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      const bool fresh = index_.emplace(symbols_[i], static_cast<Symbol>(i)).second;
      require(fresh, "alphabet: duplicate symbol '" + symbols_[i] + "'");
    }
    if (policy_ == OovPolicy::map_to_reserved) {
      require(index_.count(std::string(kReserved)) == 1,
              "alphabet: map-to-reserved policy needs the reserved symbol");
    }
  }

  /// Symbols "a", "b", ... (or "s0", "s1", ... beyond 26) for synthetic sources.
  static Alphabet synthetic(std::size_t n) {
    std::vector<std::string> symbols;
    symbols.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      symbols.push_back(n <= 26 ? std::string(1, static_cast<char>('a' + i)) : "s" + std::to_string(i));
    }
    return Alphabet(std::move(symbols));
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbol(Symbol i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  OovPolicy oov_policy() const noexcept { return policy_; }

  std::optional<Symbol> find(std::string_view s) const {
    auto it = index_.find(std::string(s));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Index of `s`, applying the OOV policy for unknown symbols.
  Symbol encode(std::string_view s) const {
    if (auto i = find(s)) return *i;
    if (policy_ == OovPolicy::map_to_reserved) return *find(kReserved);
    fail(ErrorKind::invalid_text, "out-of-vocabulary token '" + std::string(s) + "'");
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.symbols_ == b.symbols_ && a.policy_ == b.policy_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Symbol> index_;
  OovPolicy policy_ = OovPolicy::error;
};

namespace detail {

// Splits UTF-8 text into code-point substrings; rejects overlong forms,
// surrogates and values above U+10FFFF.
inline std::vector<std::string_view> split_utf8(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto bad = [&](std::size_t at) {
    fail(ErrorKind::invalid_text, "invalid UTF-8 at byte offset " + std::to_string(at));
  };
  while (i < text.size()) {
    const auto c0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c0 < 0x80) {
      len = 1;
      cp = c0;
    } else if ((c0 & 0xE0) == 0xC0) {
      len = 2;
      cp = c0 & 0x1F;
    } else if ((c0 & 0xF0) == 0xE0) {
      len = 3;
      cp = c0 & 0x0F;
    } else if ((c0 & 0xF8) == 0xF0) {
      len = 4;
      cp = c0 & 0x07;
    } else {
      bad(i);
    }
    if (i + len > text.size()) bad(i);
    for (std::size_t j = 1; j < len; ++j) {
      const auto c = static_cast<unsigned char>(text[i + j]);
      if ((c & 0xC0) != 0x80) bad(i + j);
      cp = (cp << 6) | (c & 0x3F);
    }
    static constexpr std::uint32_t kMinForLength[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad(i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view text, Scheme scheme) {
  switch (scheme) {
    case Scheme::byte: {
      std::vector<std::string_view> out;
      out.reserve(text.size());
      for (std::size_t i = 0; i < text.size(); ++i) out.push_back(text.substr(i, 1));
      return out;
    }
    case Scheme::chr:
      return split_utf8(text);
    case Scheme::word:
      return split_words(text);
  }
  return {};
}

}  // namespace detail

struct TokenizeOptions {
  /// Word scheme only: maximum alphabet size including the reserved symbol;
  /// 0 disables the cap.
  std::size_t vocab_cap = 50000;
};

struct Tokenized {
  Alphabet alphabet;
  TokenSeq tokens;
};

/// Builds an alphabet from `text` (symbols in byte-lexicographic order) and
/// encodes the text against it. With the word scheme and more distinct words
/// than `vocab_cap`, the rarest words map to the reserved symbol, which is
/// appended last.
inline Tokenized tokenize(std::string_view text, Scheme scheme, const TokenizeOptions& options = {}) {
  if (scheme != Scheme::byte) {
    require(!text.empty(), "tokenize: empty text");
  }
  const auto pieces = detail::split(text, scheme);
  if (pieces.empty()) fail(ErrorKind::invalid_text, "tokenize: text contains no tokens");

  std::map<std::string_view, std::size_t> freq;
  for (auto p : pieces) ++freq[p];

  std::vector<std::string> symbols;
  OovPolicy policy = OovPolicy::error;
  if (scheme == Scheme::word && options.vocab_cap > 0 && freq.size() > options.vocab_cap) {
    require(options.vocab_cap >= 3, "tokenize: vocab cap must be >= 3");
    std::vector<std::pair<std::string_view, std::size_t>> ranked(freq.begin(), freq.end());
    // most frequent first; ties broken lexicographically
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    ranked.resize(options.vocab_cap - 1);
    for (const auto& [w, c] : ranked) symbols.emplace_back(w);
    std::sort(symbols.begin(), symbols.end());
    symbols.emplace_back(Alphabet::kReserved);
    policy = OovPolicy::map_to_reserved;
  } else {
    for (const auto& [w, c] : freq) symbols.emplace_back(w);
  }
  if (symbols.size() < 2) fail(ErrorKind::invalid_text, "tokenize: fewer than two distinct symbols");

  Tokenized out{Alphabet(std::move(symbols), policy), {}};
  out.tokens.reserve(pieces.size());
  for (auto p : pieces) out.tokens.push_back(out.alphabet.encode(p));
  return out;
}

/// Encodes `text` against a fixed alphabet (e.g. a trained model's).
inline TokenSeq encode(std::string_view text, Scheme scheme, const Alphabet& alphabet) {
  TokenSeq out;
  for (auto p : detail::split(text, scheme)) out.push_back(alphabet.encode(p));
  return out;
}

/// Inverse of tokenize for the byte and char schemes; words are joined by a
/// single space.
inline std::string detokenize(std::span<const Symbol> tokens, const Alphabet& alphabet, Scheme scheme) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (scheme == Scheme::word && i > 0) out.push_back(' ');
    out += alphabet.symbol(tokens[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Context packing

/// Base-|A| packing of fixed-length symbol tuples (first symbol most
/// significant). Appending symbol a to context c gives (c * |A| + a) mod |A|^k.
class ContextCodec {
 public:
  ContextCodec() = default;
  ContextCodec(std::size_t alphabet_size, std::size_t length) : base_(alphabet_size), length_(length) {
    require(alphabet_size >= 1, "context codec: empty alphabet");
    count_ = 1;
    for (std::size_t i = 0; i < length; ++i) {
      if (count_ > std::numeric_limits<std::uint64_t>::max() / base_) {
        fail(ErrorKind::capacity, "context codec: |A|^" + std::to_string(length) + " exceeds 64-bit packing");
      }
      count_ *= base_;
    }
  }

  std::size_t base() const noexcept { return base_; }
  std::size_t length() const noexcept { return length_; }
  /// |A|^length
  std::uint64_t count() const noexcept { return count_; }

  std::uint64_t encode(std::span<const Symbol> ctx) const {
    std::uint64_t code = 0;
    for (Symbol s : ctx) code = code * base_ + s;
    return code;
  }

  TokenSeq decode(std::uint64_t code) const {
    TokenSeq out(length_);
    for (std::size_t i = length_; i-- > 0;) {
      out[i] = static_cast<Symbol>(code % base_);
      code /= base_;
    }
    return out;
  }

  std::uint64_t shift(std::uint64_t code, Symbol a) const {
    if (length_ == 0) return 0;
    return (code % (count_ / base_)) * base_ + a;
  }

 private:
  std::size_t base_ = 0;
  std::size_t length_ = 0;
  std::uint64_t count_ = 1;
};

/// Overflow-checked |A|^m.
inline std::uint64_t atom_count(std::size_t alphabet_size, std::size_t m) {
  return ContextCodec(alphabet_size, m).count();
}

// ---------------------------------------------------------------------------
// N-gram counting

/// Counts of length-(k+1) windows. Absent tuples have count zero.
struct NgramCounts {
  std::size_t k = 0;
  std::map<TokenSeq, std::uint64_t> table;
  std::uint64_t total_positions = 0;

  std::uint64_t operator[](const TokenSeq& t) const {
    auto it = table.find(t);
    return it == table.end() ? 0 : it->second;
  }
};

/// Occurrences of every (k+1)-gram among the fully contained windows of
/// `seq`; windows never wrap or pad.
inline NgramCounts count_ngrams(std::span<const Symbol> seq, std::size_t k) {
  NgramCounts out;
  out.k = k;
  const std::size_t w = k + 1;
  if (seq.size() < w) return out;
  out.total_positions = seq.size() - k;

  Symbol max_symbol = 0;
  for (Symbol s : seq) max_symbol = std::max(max_symbol, s);
  const std::size_t base = static_cast<std::size_t>(max_symbol) + 1;

  bool packable = true;
  ContextCodec codec;
  try {
    codec = ContextCodec(base, w);
  } catch (const Error&) {
    packable = false;
  }

  if (packable) {
    std::unordered_map<std::uint64_t, std::uint64_t> packed;
    const std::uint64_t keep = codec.count() / base;
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      code = (code % keep) * base + seq[i];
      if (i + 1 >= w) ++packed[code];
    }
    for (const auto& [c, n] : packed) out.table.emplace(codec.decode(c), n);
  } else {
    for (std::size_t i = 0; i + w <= seq.size(); ++i) {
      ++out.table[TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(i),
                           seq.begin() + static_cast<std::ptrdiff_t>(i + w))];
    }
  }
  return out;
}

}  // namespace lmdetect
