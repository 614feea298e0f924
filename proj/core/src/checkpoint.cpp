#include "flapfoil/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "flapfoil/errors.hpp"

namespace flapfoil {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'F', 'C', 'K'};
constexpr std::uint64_t kMaxArray = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw RecordError("cannot open " + path + " for writing");
  }
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw RecordError("write failed: " + path);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw RecordError("cannot open checkpoint " + path);
  }
  template <typename T>
  T pod() {
    T v{};
    read(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (n > (1u << 24)) fail("string field too long");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& why) {
    throw RecordError("corrupt checkpoint " + path_ + ": " + why);
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

std::int64_t Checkpoint::integer(const std::string& name) const {
  for (const auto& [k, v] : ints)
    if (k == name) return v;
  throw RecordError("checkpoint has no integer '" + name + "'");
}

const std::string& Checkpoint::text(const std::string& name) const {
  for (const auto& [k, v] : texts)
    if (k == name) return v;
  throw RecordError("checkpoint has no text '" + name + "'");
}

const std::vector<double>& Checkpoint::array(const std::string& name) const {
  for (const auto& [k, v] : arrays)
    if (k == name) return v;
  throw RecordError("checkpoint has no array '" + name + "'");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.raw(kMagic, sizeof(kMagic));
  w.pod(ckpt.version);
  w.str(ckpt.arch);
  w.pod(static_cast<std::uint32_t>(ckpt.ints.size()));
  for (const auto& [k, v] : ckpt.ints) {
    w.str(k);
    w.pod(v);
  }
  w.pod(static_cast<std::uint32_t>(ckpt.texts.size()));
  for (const auto& [k, v] : ckpt.texts) {
    w.str(k);
    w.str(v);
  }
  w.pod(static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [k, v] : ckpt.arrays) {
    w.str(k);
    w.pod(static_cast<std::uint64_t>(v.size()));
    w.raw(v.data(), v.size() * sizeof(double));
  }
  w.finish(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) r.fail("bad magic");
  Checkpoint c;
  c.version = r.pod<std::uint32_t>();
  if (c.version != kCheckpointVersion)
    r.fail("unsupported version " + std::to_string(c.version));
  c.arch = r.str();
  const auto n_ints = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_ints; ++i) {
    auto k = r.str();
    c.ints.emplace_back(std::move(k), r.pod<std::int64_t>());
  }
  const auto n_texts = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_texts; ++i) {
    auto k = r.str();
    c.texts.emplace_back(std::move(k), r.str());
  }
  const auto n_arrays = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    auto k = r.str();
    const auto len = r.pod<std::uint64_t>();
    if (len > kMaxArray) r.fail("array '" + k + "' too long");
    std::vector<double> v(len);
    r.read(v.data(), len * sizeof(double));
    c.arrays.emplace_back(std::move(k), std::move(v));
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return c;
}

}  // namespace flapfoil
