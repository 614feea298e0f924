#ifndef FLAPFOIL_CHECKPOINT_HPP_
#define FLAPFOIL_CHECKPOINT_HPP_

// Versioned binary container; layout documented in docs/formats.md.
//
//   magic "FFCK" | u32 version | str arch
//   u32 n_ints   | n x (str name, i64 value)
//   u32 n_texts  | n x (str name, str value)
//   u32 n_arrays | n x (str name, u64 length, length x f64)
//
// str = u32 byte count followed by the bytes; all integers and doubles are
// little-endian.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace flapfoil {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string arch;
  std::vector<std::pair<std::string, std::int64_t>> ints;
  std::vector<std::pair<std::string, std::string>> texts;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  // Lookups throw RecordError when the entry is missing.
  std::int64_t integer(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const std::vector<double>& array(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace flapfoil

#endif  // FLAPFOIL_CHECKPOINT_HPP_
