#include "frgen/corpus.hpp"

#include "frgen/nn/archive.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace frgen {

Tokens whitespace_tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

Tokens char_tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    if (!(len == 1 && std::isspace(lead))) out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Tokenizer tokenizer_by_name(std::string_view name) {
  if (name == "whitespace") return whitespace_tokenize;
  if (name == "char") return char_tokenize;
  throw std::invalid_argument("unknown tokenizer '" + std::string(name) + "'");
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// ---- FR label vectors -----------------------------------------------------

FrLabelVector::FrLabelVector(std::vector<double> values, Mode mode)
    : values_(std::move(values)), mode_(mode) {
  for (double v : values_) {
    if (mode_ == Mode::kHard && v != 0.0 && v != 1.0) {
      throw std::invalid_argument("hard FR label vector entries must be 0 or 1");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("FR label vector entries must lie in [0,1]");
    }
  }
}

FrLabelVector FrLabelVector::hard(const std::vector<int>& bits) {
  std::vector<double> v(bits.begin(), bits.end());
  return FrLabelVector(std::move(v), Mode::kHard);
}

FrLabelVector FrLabelVector::to_hard() const {
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] >= 0.5 ? 1.0 : 0.0;
  return FrLabelVector(std::move(v), Mode::kHard);
}

bool FrLabelVector::any_active() const {
  return std::any_of(values_.begin(), values_.end(), [](double v) { return v >= 0.5; });
}

void validate(const NewsPair& p) {
  if (p.fake_headline.empty()) throw std::invalid_argument("empty fake headline");
  if (p.verified_headline.empty()) throw std::invalid_argument("empty verified headline");
  if (p.content.empty()) throw std::invalid_argument("empty content");
  if (p.fake_fr.size() != p.verified_fr.size()) {
    throw std::invalid_argument("fake_fr and verified_fr lengths differ (" +
                                std::to_string(p.fake_fr.size()) + " vs " +
                                std::to_string(p.verified_fr.size()) + ")");
  }
  if (p.fake_fr.mode() != FrLabelVector::Mode::kHard ||
      p.verified_fr.mode() != FrLabelVector::Mode::kHard) {
    throw std::invalid_argument("news pair FR labels must be hard");
  }
}

// ---- PANCO JSONL ------------------------------------------------------------

namespace {

FrLabelVector parse_fr(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
  std::vector<int> bits;
  for (const auto& v : j) {
    if (!v.is_number_integer() && !v.is_boolean()) {
      throw std::invalid_argument(std::string(field) + " entries must be 0/1");
    }
    const int b = v.is_boolean() ? static_cast<int>(v.get<bool>()) : v.get<int>();
    if (b != 0 && b != 1) throw std::invalid_argument(std::string(field) + " entries must be 0/1");
    bits.push_back(b);
  }
  return FrLabelVector::hard(bits);
}

const nlohmann::json& field(const nlohmann::json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field ") + name);
  return *it;
}

std::vector<int> as_bits(const FrLabelVector& v) {
  std::vector<int> out;
  for (double x : v.values()) out.push_back(x >= 0.5 ? 1 : 0);
  return out;
}

}  // namespace

std::vector<NewsPair> load_panco(const std::filesystem::path& path, const Tokenizer& tokenize,
                                 std::optional<std::size_t> taxonomy_size) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open PANCO file " + path.string());
  std::vector<NewsPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (whitespace_tokenize(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
      NewsPair p;
      p.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                              : "line-" + std::to_string(lineno);
      p.fake_headline = tokenize(field(j, "fake_title").get<std::string>());
      p.verified_headline = tokenize(field(j, "verified_title").get<std::string>());
      p.content = tokenize(field(j, "content").get<std::string>());
      p.fake_fr = parse_fr(field(j, "fake_fr"), "fake_fr");
      p.verified_fr = parse_fr(field(j, "verified_fr"), "verified_fr");
      validate(p);
      if (taxonomy_size && p.fake_fr.size() != *taxonomy_size) {
        throw std::invalid_argument("FR vectors have length " + std::to_string(p.fake_fr.size()) +
                                    ", taxonomy has " + std::to_string(*taxonomy_size));
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(lineno, e.what());
    } catch (const std::invalid_argument& e) {
      throw RecordError(lineno, e.what());
    }
  }
  return out;
}

void save_panco(const std::filesystem::path& path, std::span<const NewsPair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    nlohmann::json j = {
        {"id", p.id},
        {"fake_title", join_tokens(p.fake_headline)},
        {"verified_title", join_tokens(p.verified_headline)},
        {"content", join_tokens(p.content)},
        {"fake_fr", as_bits(p.fake_fr)},
        {"verified_fr", as_bits(p.verified_fr)},
    };
    out += j.dump() + "\n";
  }
  nn::write_file_atomic(path, out);
}

// ---- vocabulary ---------------------------------------------------------------

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> specials = {"<pad>", "<unk>", "<s>", "</s>"};
  return specials;
}

Vocabulary::Vocabulary() {
  for (const auto& s : special_tokens()) push(s);
}

void Vocabulary::push(std::string token) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const Tokens> corpus, int min_freq, std::size_t max_size) {
  if (corpus.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(min_freq)) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [tok, n] : kept) {
    if (max_size != 0 && v.size() >= max_size) break;
    if (v.contains(tok)) continue;  // a literal special token
    v.push(tok);
  }
  return v;
}

Vocabulary build_vocab(std::span<const Tokens> corpus, int min_freq, std::size_t max_size) {
  return Vocabulary::build(corpus, min_freq, max_size);
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0x0A;
    h *= 1099511628211ULL;
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  nn::write_file_atomic(path, out);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  const auto& specials = special_tokens();
  if (lines.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), lines.begin())) {
    throw std::runtime_error("vocabulary " + path.string() + " does not start with the special tokens");
  }
  Vocabulary v;
  for (std::size_t i = specials.size(); i < lines.size(); ++i) {
    if (v.contains(lines[i])) {
      throw std::runtime_error("duplicate token '" + lines[i] + "' in " + path.string());
    }
    v.push(lines[i]);
  }
  return v;
}

// ---- copy encoding ------------------------------------------------------------

CopyEncoding encode_with_copy(std::span<const std::string> source, const Vocabulary& vocab) {
  if (source.empty()) throw std::invalid_argument("cannot encode an empty source");
  CopyEncoding enc;
  enc.base_size = vocab.size();
  std::unordered_map<std::string, int> oov;
  for (const auto& t : source) {
    if (vocab.contains(t)) {
      const int id = vocab.id(t);
      enc.base_ids.push_back(id);
      enc.extended_ids.push_back(id);
      continue;
    }
    auto [it, inserted] = oov.emplace(t, static_cast<int>(enc.base_size + enc.oov_tokens.size()));
    if (inserted) enc.oov_tokens.push_back(t);
    enc.base_ids.push_back(Vocabulary::kUnk);
    enc.extended_ids.push_back(it->second);
  }
  return enc;
}

int CopyEncoding::target_id(std::string_view token, const Vocabulary& vocab) const {
  if (vocab.contains(token)) return vocab.id(token);
  for (std::size_t k = 0; k < oov_tokens.size(); ++k) {
    if (oov_tokens[k] == token) return static_cast<int>(base_size + k);
  }
  return Vocabulary::kUnk;
}

std::string CopyEncoding::surface(int extended_id, const Vocabulary& vocab) const {
  if (extended_id < 0 || static_cast<std::size_t>(extended_id) >= extended_size()) {
    throw std::out_of_range("extended id " + std::to_string(extended_id) + " out of range");
  }
  if (static_cast<std::size_t>(extended_id) < base_size) return vocab.token(extended_id);
  return oov_tokens[static_cast<std::size_t>(extended_id) - base_size];
}

std::vector<int> encode_target(std::span<const std::string> target, const CopyEncoding& enc,
                               const Vocabulary& vocab) {
  std::vector<int> out;
  out.reserve(target.size());
  for (const auto& t : target) out.push_back(enc.target_id(t, vocab));
  return out;
}

Tokens decode_with_copy(std::span<const int> extended_ids, const CopyEncoding& enc,
                        const Vocabulary& vocab) {
  Tokens out;
  for (int id : extended_ids) {
    if (id == Vocabulary::kEos || id == Vocabulary::kPad || id == Vocabulary::kBos) continue;
    out.push_back(enc.surface(id, vocab));
  }
  return out;
}

// ---- embeddings ---------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens,
                               std::vector<std::vector<double>> vectors) {
  if (tokens.size() != vectors.size()) throw std::invalid_argument("token/vector count mismatch");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == 0) dim_ = vectors[0].size();
    if (vectors[i].size() != dim_) throw std::invalid_argument("ragged embedding vectors");
    index_.emplace(tokens[i], i);
  }
  vectors_ = std::move(vectors);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings " + path.string());
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto parts = whitespace_tokenize(line);
    if (parts.empty()) continue;
    if (parts.size() < 2) throw RecordError(lineno, "embedding line has no values");
    std::vector<double> v;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      try {
        v.push_back(std::stod(parts[i]));
      } catch (const std::exception&) {
        throw RecordError(lineno, "bad embedding value '" + parts[i] + "'");
      }
    }
    if (!vectors.empty() && v.size() != vectors[0].size()) {
      throw RecordError(lineno, "embedding dimension differs from first line");
    }
    tokens.push_back(parts[0]);
    vectors.push_back(std::move(v));
  }
  return EmbeddingTable(std::move(tokens), std::move(vectors));
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) it = index_.find("<unk>");
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

}  // namespace frgen
