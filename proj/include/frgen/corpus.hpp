#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace frgen {

using Tokens = std::vector<std::string>;
using Tokenizer = std::function<Tokens(std::string_view)>;

Tokens whitespace_tokenize(std::string_view text);
// One token per UTF-8 code point, whitespace dropped. Suitable for Chinese.
Tokens char_tokenize(std::string_view text);
Tokenizer tokenizer_by_name(std::string_view name);  // "whitespace" | "char"
std::string join_tokens(std::span<const std::string> tokens);

// Multi-label forward-reference vector, positional against the configured
// taxonomy.
class FrLabelVector {
 public:
  enum class Mode { kSoft, kHard };

  FrLabelVector() = default;
  FrLabelVector(std::vector<double> values, Mode mode);
  static FrLabelVector hard(const std::vector<int>& bits);

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] Mode mode() const { return mode_; }
  // Thresholds at 0.5 (inclusive).
  [[nodiscard]] FrLabelVector to_hard() const;
  [[nodiscard]] bool any_active() const;

 private:
  std::vector<double> values_;
  Mode mode_ = Mode::kHard;
};

struct NewsPair {
  std::string id;
  Tokens fake_headline;
  Tokens verified_headline;
  Tokens content;
  FrLabelVector fake_fr;
  FrLabelVector verified_fr;
};

// Throws std::invalid_argument when the NewsPair invariants do not hold.
void validate(const NewsPair& pair);

// A record-level ingestion failure; carries the 1-based line number.
class RecordError : public std::runtime_error {
 public:
  RecordError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Reads PANCO-format JSON lines: fake_title, verified_title, content,
// fake_fr, verified_fr (0/1 arrays) and an optional id. Blank lines are
// skipped. When `taxonomy_size` is set every FR vector must have that length.
std::vector<NewsPair> load_panco(const std::filesystem::path& path,
                                 const Tokenizer& tokenize = whitespace_tokenize,
                                 std::optional<std::size_t> taxonomy_size = std::nullopt);
void save_panco(const std::filesystem::path& path, std::span<const NewsPair> pairs);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;
  static const std::vector<std::string>& special_tokens();

  Vocabulary();

  // Keeps tokens seen at least `min_freq` times, most frequent first with
  // lexicographic tie-break, until the vocabulary holds `max_size` entries
  // (specials included; 0 = unlimited).
  static Vocabulary build(std::span<const Tokens> corpus, int min_freq,
                          std::size_t max_size);

  [[nodiscard]] int id(std::string_view token) const;  // kUnk when absent
  [[nodiscard]] bool contains(std::string_view token) const;
  [[nodiscard]] const std::string& token(int id) const;
  [[nodiscard]] std::size_t size() const { return tokens_.size(); }
  [[nodiscard]] std::vector<int> encode(std::span<const std::string> tokens) const;
  // FNV-1a over the token list; identifies a vocabulary in checkpoints.
  [[nodiscard]] std::uint64_t hash() const;

  // One token per line, line number (0-based) = id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void push(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Free-function form of Vocabulary::build.
Vocabulary build_vocab(std::span<const Tokens> corpus, int min_freq, std::size_t max_size);

// Source encoding for the copy mechanism. Source OOV tokens receive
// per-example ids |V|, |V|+1, ... in first-occurrence order.
struct CopyEncoding {
  std::vector<int> base_ids;      // OOV -> UNK
  std::vector<int> extended_ids;  // OOV -> |V| + k
  std::vector<std::string> oov_tokens;
  std::size_t base_size = 0;

  [[nodiscard]] std::size_t extended_size() const { return base_size + oov_tokens.size(); }
  [[nodiscard]] std::size_t length() const { return extended_ids.size(); }
  // Target-side id: base id, else the source OOV slot, else UNK.
  [[nodiscard]] int target_id(std::string_view token, const Vocabulary& vocab) const;
  [[nodiscard]] std::string surface(int extended_id, const Vocabulary& vocab) const;
};

CopyEncoding encode_with_copy(std::span<const std::string> source, const Vocabulary& vocab);
std::vector<int> encode_target(std::span<const std::string> target, const CopyEncoding& enc,
                               const Vocabulary& vocab);
// Inverse of the extended encoding; EOS/PAD/BOS are dropped.
Tokens decode_with_copy(std::span<const int> extended_ids, const CopyEncoding& enc,
                        const Vocabulary& vocab);

// Whitespace-separated "token v1 ... vd" lines.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, std::vector<std::vector<double>> vectors);
  static EmbeddingTable load(const std::filesystem::path& path);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return vectors_.size(); }
  // Vector for `token`, falling back to "<unk>" and then to nullptr.
  [[nodiscard]] const std::vector<double>* find(std::string_view token) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> vectors_;
};

}  // namespace frgen
