#include "hops/descriptor_store.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hops/errors.hpp"

namespace hops {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xffu));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what, pos_);
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

DescriptorSet::DescriptorSet(std::string dataset_id, std::string condition_id, std::size_t count,
                             std::size_t dim, std::vector<float> data, std::vector<std::string> frame_ids)
    : dataset_id_(std::move(dataset_id)),
      condition_id_(std::move(condition_id)),
      count_(count),
      dim_(dim),
      data_(std::move(data)),
      frame_ids_(std::move(frame_ids)) {
  if (count_ == 0) throw ValidationError("descriptor set '" + condition_id_ + "' has no rows");
  if (dim_ == 0) throw ValidationError("descriptor set '" + condition_id_ + "' has zero dimension");
  if (data_.size() != count_ * dim_) {
    throw ValidationError("descriptor set '" + condition_id_ + "' expects " + std::to_string(count_ * dim_) +
                          " values, got " + std::to_string(data_.size()));
  }
  if (frame_ids_.size() != count_) {
    throw ValidationError("descriptor set '" + condition_id_ + "' has " + std::to_string(count_) + " rows but " +
                          std::to_string(frame_ids_.size()) + " frame ids");
  }
  for (std::size_t i = 0; i < count_; ++i) {
    for (float v : row(i)) {
      if (!std::isfinite(v)) {
        throw ValidationError("descriptor set '" + condition_id_ + "' has a non-finite value in row " +
                              std::to_string(i));
      }
    }
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(frame_ids_.size());
  for (const auto& id : frame_ids_) {
    if (!seen.insert(id).second) {
      throw ValidationError("descriptor set '" + condition_id_ + "' has duplicate frame id '" + id + "'");
    }
  }
}

DescriptorSet DescriptorSet::from_rows(std::string dataset_id, std::string condition_id, std::size_t dim,
                                       std::vector<float> data) {
  if (dim == 0) throw ValidationError("descriptor set '" + condition_id + "' has zero dimension");
  const std::size_t count = data.size() / dim;
  std::vector<std::string> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = std::to_string(i);
  return DescriptorSet(std::move(dataset_id), std::move(condition_id), count, dim, std::move(data),
                       std::move(ids));
}

DescriptorSet DescriptorSet::with_ids(std::string dataset_id, std::string condition_id) const {
  DescriptorSet copy = *this;
  copy.dataset_id_ = std::move(dataset_id);
  copy.condition_id_ = std::move(condition_id);
  return copy;
}

const ManifestEntry& DatasetManifest::entry(const std::string& condition_id) const {
  for (const auto& e : sets) {
    if (e.condition_id == condition_id) return e;
  }
  throw LookupError("manifest '" + dataset_id + "' has no condition '" + condition_id + "'");
}

std::vector<std::uint8_t> encode_set(const DescriptorSet& set) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + set.count() * 8 + set.data().size() * 4);
  out.insert(out.end(), {'H', 'O', 'P', 'S'});
  put_u16(out, kFormatVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(set.count()));
  put_u32(out, static_cast<std::uint32_t>(set.dim()));
  for (const auto& id : set.frame_ids()) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
  }
  for (float v : set.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

DescriptorSet decode_set(std::span<const std::uint8_t> bytes, std::string dataset_id, std::string condition_id) {
  ByteReader in(bytes);
  const auto magic = in.take(4, "magic");
  if (!(magic[0] == 'H' && magic[1] == 'O' && magic[2] == 'P' && magic[3] == 'S')) {
    throw FormatError("bad magic, expected \"HOPS\"", 0);
  }
  if (const auto version = in.u16("version"); version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version), 4);
  }
  if (const auto flags = in.u16("flags"); flags != 0) {
    throw FormatError("unsupported flags " + std::to_string(flags), 6);
  }
  const std::uint32_t rows = in.u32("row count");
  const std::uint32_t cols = in.u32("column count");
  if (rows == 0) throw FormatError("row count is zero", 8);
  if (cols == 0) throw FormatError("column count is zero", 12);

  std::vector<std::string> frame_ids;
  frame_ids.reserve(rows);
  for (std::uint32_t i = 0; i < rows; ++i) {
    const std::uint32_t len = in.u32("frame id length");
    const auto raw = in.take(len, "frame id");
    frame_ids.emplace_back(raw.begin(), raw.end());
  }

  const std::size_t values = static_cast<std::size_t>(rows) * cols;
  const auto payload_offset = in.offset();
  if ((bytes.size() - payload_offset) / 4 < values) {
    throw FormatError("truncated payload: need " + std::to_string(values) + " floats", payload_offset);
  }
  std::vector<float> data(values);
  for (std::size_t i = 0; i < values; ++i) data[i] = std::bit_cast<float>(in.u32("payload"));
  if (!in.at_end()) throw FormatError("trailing bytes after payload", in.offset());

  return DescriptorSet(std::move(dataset_id), std::move(condition_id), rows, cols, std::move(data),
                       std::move(frame_ids));
}

DescriptorSet load_set(const std::filesystem::path& path, std::string dataset_id,
                       std::optional<std::string> condition_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open descriptor file", path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed", path.string());
  return decode_set(bytes, std::move(dataset_id), condition_id ? *condition_id : path.stem().string());
}

void save_set(const DescriptorSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_set(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

NormalizedSet l2_normalize(const DescriptorSet& set) {
  std::vector<float> data(set.data().begin(), set.data().end());
  std::size_t zero_rows = 0;
  const std::size_t dim = set.dim();
  for (std::size_t i = 0; i < set.count(); ++i) {
    float* row = data.data() + i * dim;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) sq += static_cast<double>(row[j]) * row[j];
    if (sq == 0.0) {
      ++zero_rows;
      continue;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(row[j] * inv);
  }
  return {DescriptorSet(set.dataset_id(), set.condition_id(), set.count(), dim, std::move(data), set.frame_ids()),
          zero_rows};
}

void require_aligned(std::span<const DescriptorSet> sets) {
  if (sets.empty()) return;
  const auto& first = sets.front();
  for (const auto& s : sets.subspan(1)) {
    if (s.dim() != first.dim()) {
      throw DimensionError("set '" + s.condition_id() + "' has dim " + std::to_string(s.dim()) + ", expected " +
                           std::to_string(first.dim()));
    }
    if (s.count() != first.count()) {
      throw AlignmentError("set '" + s.condition_id() + "' has " + std::to_string(s.count()) + " rows, expected " +
                           std::to_string(first.count()));
    }
  }
}

std::vector<DescriptorSet> align_sets(const DatasetManifest& manifest, std::vector<DescriptorSet> sets) {
  if (manifest.correspondence != Correspondence::index_aligned) {
    throw ConfigError("align_sets requires an index_aligned manifest");
  }
  std::vector<DescriptorSet> ordered;
  ordered.reserve(sets.size());
  std::vector<bool> used(sets.size(), false);
  for (const auto& entry : manifest.sets) {
    bool found = false;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (!used[i] && sets[i].condition_id() == entry.condition_id) {
        ordered.push_back(std::move(sets[i]));
        used[i] = true;
        found = true;
        break;
      }
    }
    if (!found) continue;  // manifests may list sets the caller did not load
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (!used[i]) throw LookupError("set '" + sets[i].condition_id() + "' is not listed in the manifest");
  }
  require_aligned(ordered);
  return ordered;
}

DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    for (const auto& s : j.at("sets")) {
      std::filesystem::path p = s.at("path").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      m.sets.push_back({s.at("condition_id").get<std::string>(), p});
    }
    m.tolerance_frames = j.at("tolerance_frames").get<std::int64_t>();
    const auto corr = j.at("correspondence").get<std::string>();
    if (corr == "index_aligned") {
      m.correspondence = Correspondence::index_aligned;
    } else if (corr == "place_grouped") {
      m.correspondence = Correspondence::place_grouped;
    } else {
      throw ConfigError("unknown correspondence '" + corr + "'");
    }
    if (j.contains("place_groups")) {
      std::map<std::string, std::vector<std::string>> groups;
      for (const auto& [place, frames] : j.at("place_groups").items()) {
        std::vector<std::string> ids;
        for (const auto& f : frames) ids.push_back(f.is_string() ? f.get<std::string>() : f.dump());
        groups.emplace(place, std::move(ids));
      }
      m.place_groups = std::move(groups);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }

  if (m.tolerance_frames < 0) throw ConfigError("tolerance_frames must be non-negative");
  if (m.sets.empty()) throw ConfigError("manifest lists no sets");
  std::set<std::string> conditions;
  for (const auto& e : m.sets) {
    if (!conditions.insert(e.condition_id).second) {
      throw ConfigError("manifest lists condition '" + e.condition_id + "' twice");
    }
  }
  if (m.correspondence == Correspondence::place_grouped) {
    if (!m.place_groups) throw ConfigError("place_grouped manifest requires place_groups");
    std::set<std::string> frames;
    for (const auto& [place, ids] : *m.place_groups) {
      if (ids.empty()) throw ConfigError("place group '" + place + "' is empty");
      for (const auto& id : ids) {
        if (!frames.insert(id).second) throw ConfigError("frame '" + id + "' appears in more than one place group");
      }
    }
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::ordered_json j;
  j["dataset_id"] = manifest.dataset_id;
  j["sets"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.sets) {
    j["sets"].push_back({{"condition_id", e.condition_id}, {"path", e.path.generic_string()}});
  }
  j["tolerance_frames"] = manifest.tolerance_frames;
  j["correspondence"] =
      manifest.correspondence == Correspondence::index_aligned ? "index_aligned" : "place_grouped";
  if (manifest.place_groups) j["place_groups"] = *manifest.place_groups;
  return j.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out << manifest_to_json(manifest);
  if (!out) throw IoError("write failed", path.string());
}

DescriptorSet load_normalized(const DatasetManifest& manifest, const ManifestEntry& entry) {
  return l2_normalize(load_set(entry.path, manifest.dataset_id, entry.condition_id)).set;
}

}  // namespace hops
