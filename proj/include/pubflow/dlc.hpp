#pragma once

// Data life cycle policy. v1 handles one event, a transmission failure, with
// the fixed reaction drop -> remove metadata -> reacquire.

#include <functional>
#include <string>
#include <vector>

#include "pubflow/em.hpp"
#include "pubflow/workspace.hpp"

namespace pubflow {

enum class DlcEvent { TransmissionFailure };

inline const char* to_string(DlcEvent) { return "transmission_failure"; }

inline DlcEvent parse_dlc_event(const std::string& s) {
  if (s == "transmission_failure") return DlcEvent::TransmissionFailure;
  throw SchemaError("unknown DLC event '" + s + "'");
}

struct DlcAction {
  enum class Kind { Drop, RemoveMetadata, Reacquire };
  Kind kind;
  std::string dataset_id;
  Json params = Json::object();  // acquisition parameters for Reacquire

  bool operator==(const DlcAction&) const = default;
};

inline const char* to_string(DlcAction::Kind k) {
  switch (k) {
    case DlcAction::Kind::Drop: return "drop";
    case DlcAction::Kind::RemoveMetadata: return "remove_metadata";
    case DlcAction::Kind::Reacquire: return "reacquire";
  }
  return "?";
}

/// Plans the reaction to `event` and moves the record ready -> dropped ->
/// acquiring. Throws InvalidStage unless the dataset is ready.
inline std::vector<DlcAction> dlc_apply(DatasetRecord& record, DlcEvent event) {
  (void)event;
  if (record.stage != DatasetStage::Ready)
    throw InvalidStage("dataset '" + record.dataset_id + "' is " + to_string(record.stage) + ", expected ready");
  std::vector<DlcAction> plan{
      {DlcAction::Kind::Drop, record.dataset_id, Json::object()},
      {DlcAction::Kind::RemoveMetadata, record.dataset_id, Json::object()},
      {DlcAction::Kind::Reacquire, record.dataset_id, record.acquisition_params},
  };
  record.stage = DatasetStage::Dropped;
  record.checksum.reset();
  record.stage = DatasetStage::Acquiring;
  return plan;
}

/// Re-creates a dataset from its acquisition parameters, writing it back into
/// the workspace.
using Reacquirer = std::function<void(const std::string& dataset_id, const Json& params, Workspace&)>;

struct DlcOutcome {
  std::vector<DlcAction> actions;
  Checksum before = 0;
  std::optional<Checksum> after;
  bool restored() const { return after && *after == before; }
};

/// Runs the whole cycle against a workspace. The reacquirer is optional: when
/// absent the dataset is left in stage acquiring for a later producer.
inline DlcOutcome dlc_cycle(Workspace& ws, const std::string& dataset_id, DlcEvent event,
                            const Reacquirer& reacquire = {}) {
  DatasetRecord rec = ws.record(dataset_id);
  DlcOutcome out;
  out.actions = dlc_apply(rec, event);
  out.before = *ws.record(dataset_id).checksum;
  for (const auto& a : out.actions) {
    switch (a.kind) {
      case DlcAction::Kind::Drop: ws.drop(a.dataset_id); break;
      case DlcAction::Kind::RemoveMetadata:
        ws.remove_metadata(a.dataset_id);
        ws.compare_and_set_stage(a.dataset_id, DatasetStage::Dropped, DatasetStage::Acquiring);
        break;
      case DlcAction::Kind::Reacquire:
        if (reacquire) {
          reacquire(a.dataset_id, a.params, ws);
          out.after = ws.record(a.dataset_id).checksum;
        }
        break;
    }
  }
  return out;
}

}  // namespace pubflow
