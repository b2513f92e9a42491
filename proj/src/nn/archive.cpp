#include "frgen/nn/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace frgen::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint archive assumes a little-endian host");

constexpr char kMagic[4] = {'F', 'R', 'G', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kFormat = "frgen-checkpoint-v1";

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("truncated tensor archive");
  }
  return v;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& dir, nlohmann::json manifest,
                     const ParameterCollection& params) {
  std::filesystem::create_directories(dir);
  std::string blob(kMagic, sizeof(kMagic));
  put<std::uint32_t>(blob, kVersion);
  put<std::uint64_t>(blob, params.all().size());
  nlohmann::json listing = nlohmann::json::array();
  for (const Parameter& p : params.all()) {
    const Matrix& m = p.value();
    put<std::uint32_t>(blob, static_cast<std::uint32_t>(p.name().size()));
    blob += p.name();
    put<std::int64_t>(blob, m.rows());
    put<std::int64_t>(blob, m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(blob, m(r, c));
    }
    listing.push_back({{"name", p.name()}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  manifest["format"] = kFormat;
  manifest["tensors"] = std::move(listing);
  write_file_atomic(dir / "tensors.bin", blob);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint ck;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no checkpoint manifest in " + dir.string());
    try {
      ck.manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("bad manifest in " + dir.string() + ": " + e.what());
    }
  }
  if (ck.manifest.value("format", "") != kFormat) {
    throw std::runtime_error("unsupported checkpoint format in " + dir.string());
  }
  std::ifstream in(dir / "tensors.bin", std::ios::binary);
  if (!in) throw std::runtime_error("no tensor archive in " + dir.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad tensor archive magic in " + dir.string());
  }
  if (get<std::uint32_t>(in) != kVersion) {
    throw std::runtime_error("unsupported tensor archive version");
  }
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw std::runtime_error("truncated tensor archive");
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0) throw std::runtime_error("corrupt tensor shape for " + name);
    Matrix m(rows, cols);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < cols; ++c) m(r, c) = get<double>(in);
    }
    ck.tensors.emplace(std::move(name), std::move(m));
  }
  return ck;
}

}  // namespace frgen::nn
