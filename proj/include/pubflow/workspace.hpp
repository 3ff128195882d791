#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pubflow/dataset.hpp"

namespace pubflow {

using Json = nlohmann::json;

enum class DatasetStage { Absent, Acquiring, Ready, Dropped };

inline const char* to_string(DatasetStage s) {
  switch (s) {
    case DatasetStage::Absent: return "absent";
    case DatasetStage::Acquiring: return "acquiring";
    case DatasetStage::Ready: return "ready";
    case DatasetStage::Dropped: return "dropped";
  }
  return "?";
}

inline DatasetStage parse_stage(const std::string& s) {
  if (s == "absent") return DatasetStage::Absent;
  if (s == "acquiring") return DatasetStage::Acquiring;
  if (s == "ready") return DatasetStage::Ready;
  if (s == "dropped") return DatasetStage::Dropped;
  throw FormatError("unknown dataset stage '" + s + "'");
}

struct DatasetRecord {
  std::string dataset_id;
  Json acquisition_params = Json::object();
  std::optional<Checksum> checksum;  // set only while Ready
  DatasetStage stage = DatasetStage::Absent;

  bool operator==(const DatasetRecord&) const = default;
};

inline Json record_to_json(const DatasetRecord& r) {
  return Json{{"dataset_id", r.dataset_id},
              {"acquisition_params", r.acquisition_params},
              {"checksum", r.checksum ? Json(checksum_hex(*r.checksum)) : Json(nullptr)},
              {"stage", to_string(r.stage)}};
}

/// Dataset store shared by the workers of one run. Stage transitions are
/// serialized; when a root directory is given every dataset is mirrored as
/// `<root>/<id>` plus a `<root>/<id>.meta.json` sidecar.
class Workspace {
 public:
  Workspace() = default;
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(*root_);
  }

  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  Checksum put(const std::string& id, std::string bytes, Json acquisition_params = Json::object()) {
    std::lock_guard lock(mu_);
    auto& e = entries_[id];
    e.record.dataset_id = id;
    e.record.acquisition_params = std::move(acquisition_params);
    e.record.checksum = fnv1a64(bytes);
    e.record.stage = DatasetStage::Ready;
    e.bytes = std::move(bytes);
    persist(e);
    return *e.record.checksum;
  }

  Checksum put_array(const std::string& id, std::span<const double> values, Json acquisition_params = Json::object()) {
    return put(id, encode_doubles(values), std::move(acquisition_params));
  }

  std::string get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.record.stage != DatasetStage::Ready)
      throw MissingInput("dataset '" + id + "' is not ready");
    return it->second.bytes;
  }

  std::vector<double> get_array(const std::string& id) const { return decode_doubles(get(id)); }

  DatasetRecord record(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return DatasetRecord{id, Json::object(), std::nullopt, DatasetStage::Absent};
    return it->second.record;
  }

  bool ready(const std::string& id) const { return record(id).stage == DatasetStage::Ready; }

  /// Atomic stage transition; false when the current stage is not `expected`.
  bool compare_and_set_stage(const std::string& id, DatasetStage expected, DatasetStage desired) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    DatasetStage current = it == entries_.end() ? DatasetStage::Absent : it->second.record.stage;
    if (current != expected) return false;
    auto& e = entries_[id];
    e.record.dataset_id = id;
    e.record.stage = desired;
    if (desired != DatasetStage::Ready) e.record.checksum.reset();
    persist(e);
    return true;
  }

  /// Ready -> Dropped, discarding the bytes.
  void drop(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.record.stage != DatasetStage::Ready)
      throw InvalidStage("cannot drop dataset '" + id + "': not ready");
    it->second.bytes.clear();
    it->second.record.stage = DatasetStage::Dropped;
    it->second.record.checksum.reset();
    if (root_) std::filesystem::remove(*root_ / id);
    persist(it->second);
  }

  /// Forget acquisition metadata of a dropped dataset.
  void remove_metadata(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.record.stage != DatasetStage::Dropped)
      throw InvalidStage("cannot remove metadata of '" + id + "': not dropped");
    it->second.record.acquisition_params = Json::object();
    if (root_) std::filesystem::remove(*root_ / (id + ".meta.json"));
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
  }

  std::map<std::string, Checksum> checksums() const {
    std::lock_guard lock(mu_);
    std::map<std::string, Checksum> out;
    for (const auto& [id, e] : entries_)
      if (e.record.checksum) out[id] = *e.record.checksum;
    return out;
  }

  const std::optional<std::filesystem::path>& root() const { return root_; }

 private:
  struct Entry {
    DatasetRecord record;
    std::string bytes;
  };

  void persist(const Entry& e) const {
    if (!root_) return;
    if (e.record.stage == DatasetStage::Ready) {
      std::ofstream out(*root_ / e.record.dataset_id, std::ios::binary | std::ios::trunc);
      out.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
    }
    std::ofstream meta(*root_ / (e.record.dataset_id + ".meta.json"), std::ios::trunc);
    meta << record_to_json(e.record).dump() << '\n';
  }

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> root_;
  std::map<std::string, Entry> entries_;
};

}  // namespace pubflow
