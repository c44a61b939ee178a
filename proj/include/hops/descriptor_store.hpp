#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hops {

/// One condition's (or traverse's) descriptors: `count` rows of `dim` floats,
/// row-major, plus one frame identifier per row.
///
/// Construction validates every invariant (finite values, unique frame ids,
/// matching sizes), so a live DescriptorSet is always well formed. Instances
/// are immutable and safe to share across threads.
class DescriptorSet {
 public:
  DescriptorSet(std::string dataset_id, std::string condition_id, std::size_t count, std::size_t dim,
                std::vector<float> data, std::vector<std::string> frame_ids);

  // Frame ids default to "0", "1", ... when not supplied.
  static DescriptorSet from_rows(std::string dataset_id, std::string condition_id, std::size_t dim,
                                 std::vector<float> data);

  const std::string& dataset_id() const noexcept { return dataset_id_; }
  const std::string& condition_id() const noexcept { return condition_id_; }
  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
  }
  const std::vector<std::string>& frame_ids() const noexcept { return frame_ids_; }

  DescriptorSet with_ids(std::string dataset_id, std::string condition_id) const;

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;

 private:
  std::string dataset_id_;
  std::string condition_id_;
  std::size_t count_;
  std::size_t dim_;
  std::vector<float> data_;
  std::vector<std::string> frame_ids_;
};

enum class Correspondence { index_aligned, place_grouped };

struct ManifestEntry {
  std::string condition_id;
  std::filesystem::path path;
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<ManifestEntry> sets;
  std::int64_t tolerance_frames = 0;
  Correspondence correspondence = Correspondence::index_aligned;
  std::optional<std::map<std::string, std::vector<std::string>>> place_groups;

  const ManifestEntry& entry(const std::string& condition_id) const;
};

// Binary format, little-endian throughout:
//   "HOPS" | u16 version (=1) | u16 flags (=0) | u32 rows | u32 cols
//   rows x (u32 byte length, UTF-8 frame id)
//   rows*cols IEEE-754 binary32, row-major
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;

// The file carries no ids; condition_id defaults to the file stem.
DescriptorSet load_set(const std::filesystem::path& path, std::string dataset_id = {},
                       std::optional<std::string> condition_id = std::nullopt);
void save_set(const DescriptorSet& set, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_set(const DescriptorSet& set);
DescriptorSet decode_set(std::span<const std::uint8_t> bytes, std::string dataset_id,
                         std::string condition_id);

struct NormalizedSet {
  DescriptorSet set;
  std::size_t zero_rows = 0;
};

// Unit-normalizes every non-zero row (norm accumulated in double); zero rows stay zero.
NormalizedSet l2_normalize(const DescriptorSet& set);

// Checks that every set has the same count and dim and returns them in
// manifest order. Rows are never reordered.
std::vector<DescriptorSet> align_sets(const DatasetManifest& manifest, std::vector<DescriptorSet> sets);

// Same-shape check without a manifest; used by fusion and pooling.
void require_aligned(std::span<const DescriptorSet> sets);

DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Loads a manifest entry and L2-normalizes it, as every pipeline stage expects.
DescriptorSet load_normalized(const DatasetManifest& manifest, const ManifestEntry& entry);

}  // namespace hops
