/*
 * Copyright 2026 The PPOD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Deterministic discrete-event simulation of the owner / fog / cloud tiers.
//
// Owners perturb locally and upload vertical shards to fog nodes; fog nodes
// keep a copy and forward to the cloud; the cloud reassembles, trains once
// every expected shard is in, and answers classification requests, which
// travel owner -> fog -> cloud -> fog -> owner. Owners and the cloud never
// exchange messages directly.
//
// Links serialize their messages: a message starts transmitting when both it
// has been sent and the link is idle, and is delivered latency + size/bandwidth
// after it starts. On an idle link that is exactly TransferTime(); under
// contention it keeps every link FIFO.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include "ppod/classifier.hpp"
#include "ppod/data_model.hpp"
#include "ppod/dataset.hpp"
#include "ppod/dp_core.hpp"
#include "ppod/errors.hpp"

namespace ppod {

enum class Role { kOwner, kFog, kCloud };

struct NodeId {
  Role role = Role::kOwner;
  int index = 1;

  static NodeId Owner(int i) { return {Role::kOwner, i}; }
  static NodeId Fog(int j) { return {Role::kFog, j}; }
  static NodeId Cloud() { return {Role::kCloud, 1}; }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline std::string ToString(const NodeId& id) {
  switch (id.role) {
    case Role::kOwner:
      return "owner:" + std::to_string(id.index);
    case Role::kFog:
      return "fog:" + std::to_string(id.index);
    case Role::kCloud:
      return "cloud:" + std::to_string(id.index);
  }
  return "?";
}

enum class MessageKind {
  kUploadShard,
  kLabelShard,
  kForwardShard,
  kTrainComplete,
  kClassifyRequest,
  kClassifyForward,
  kClassifyResponse,
  kResponseForward,
};

inline const char* ToString(MessageKind kind) {
  switch (kind) {
    case MessageKind::kUploadShard:
      return "UPLOAD_SHARD";
    case MessageKind::kLabelShard:
      return "LABEL_SHARD";
    case MessageKind::kForwardShard:
      return "FORWARD_SHARD";
    case MessageKind::kTrainComplete:
      return "TRAIN_COMPLETE";
    case MessageKind::kClassifyRequest:
      return "CLASSIFY_REQUEST";
    case MessageKind::kClassifyForward:
      return "CLASSIFY_FORWARD";
    case MessageKind::kClassifyResponse:
      return "CLASSIFY_RESPONSE";
    case MessageKind::kResponseForward:
      return "RESPONSE_FORWARD";
  }
  return "?";
}

// The slice of one (already perturbed) classification query that passes
// through a single fog node. Queries are split by column exactly like
// training data, so no fog node ever sees more columns of a query than it
// stores of the training set.
struct QueryPart {
  std::uint64_t request_id = 0;
  int owner_id = 0;  // return address
  std::vector<std::size_t> columns;
  std::vector<double> values;
};

struct QueryAnswer {
  std::uint64_t request_id = 0;
  int owner_id = 0;
  ClassificationResult result;
};

struct TrainSummary {
  std::size_t training_rows = 0;
};

using Payload = std::variant<std::monostate, Shard, LabelShard, TrainSummary, QueryPart, QueryAnswer>;

inline constexpr std::uint64_t kHeaderBytes = 64;
inline constexpr std::uint64_t kCellBytes = 8;

// 64-byte header plus 8 bytes per numeric cell carried.
inline std::uint64_t MessageSize(const Payload& payload) {
  std::uint64_t cells = 0;
  if (const auto* shard = std::get_if<Shard>(&payload)) {
    cells = shard->row_keys.size() * shard->column_indices.size();
  } else if (const auto* labels = std::get_if<LabelShard>(&payload)) {
    cells = labels->labels.size();
  } else if (const auto* part = std::get_if<QueryPart>(&payload)) {
    cells = part->values.size();
  } else if (std::holds_alternative<QueryAnswer>(payload)) {
    cells = 1;
  }
  return kHeaderBytes + kCellBytes * cells;
}

struct Message {
  std::uint64_t msg_id = 0;  // assigned by the simulator when sent
  NodeId src;
  NodeId dst;
  MessageKind kind = MessageKind::kUploadShard;
  std::shared_ptr<const Payload> payload;
  std::uint64_t size_bytes = 0;
  double sent_at = 0.0;
  double delivered_at = 0.0;
};

inline Message MakeMessage(NodeId src, NodeId dst, MessageKind kind, Payload payload) {
  Message m;
  m.src = src;
  m.dst = dst;
  m.kind = kind;
  m.size_bytes = MessageSize(payload);
  m.payload = std::make_shared<const Payload>(std::move(payload));
  return m;
}

// Owners talk only to fog nodes, the cloud only to fog nodes.
inline bool TopologyAllows(const NodeId& src, const NodeId& dst) {
  const bool owner_fog = (src.role == Role::kOwner && dst.role == Role::kFog) ||
                         (src.role == Role::kFog && dst.role == Role::kOwner);
  const bool fog_cloud = (src.role == Role::kFog && dst.role == Role::kCloud) ||
                         (src.role == Role::kCloud && dst.role == Role::kFog);
  return owner_fog || fog_cloud;
}

struct LinkModel {
  double latency_s = 0.0;
  double bandwidth_Bps = 1.0;

  static LinkModel Create(double latency_s, double bandwidth_Bps) {
    if (!(latency_s >= 0.0) || !std::isfinite(latency_s)) {
      throw InvalidArgument("link latency must be a nonnegative finite number of seconds");
    }
    if (!(bandwidth_Bps > 0.0)) throw InvalidArgument("link bandwidth must be positive");
    return LinkModel{latency_s, bandwidth_Bps};
  }
};

inline double TransferTime(std::uint64_t size_bytes, const LinkModel& link) {
  return link.latency_s + static_cast<double>(size_bytes) / link.bandwidth_Bps;
}

enum class LabelMode { kOff, kRandomizedResponse };

struct ScenarioConfig {
  SchemaPtr schema;
  std::vector<OwnerDataset> owners;  // training records; owners[i].owner_id == i + 1
  std::size_t fog_count = 1;
  double epsilon_total = kInfiniteEpsilon;
  std::uint64_t seed = 0;
  double split_fraction = 0.7;
  LabelMode label_mode = LabelMode::kOff;
  LinkModel owner_fog{0.005, 12.5e6};    // 5 ms, 100 Mbit/s
  LinkModel fog_cloud{0.040, 125.0e6};   // 40 ms, 1 Gbit/s
  // When unset, owners issue their queries once the upload phase has drained.
  std::optional<double> query_issue_time;
  double horizon_s = std::numeric_limits<double>::infinity();

  std::size_t owner_count() const { return owners.size(); }
  std::size_t feature_count() const { return schema ? schema->feature_count() : 0; }
  // Feature shards per owner that actually carry columns.
  std::size_t shards_per_owner() const { return std::min(feature_count(), fog_count); }

  void Validate() const {
    if (!schema) throw ConfigError("scenario has no schema");
    if (owners.empty()) throw ConfigError("scenario needs at least one owner");
    if (fog_count == 0) throw ConfigError("scenario needs at least one fog node");
    if (!(epsilon_total > 0.0)) throw ConfigError("epsilon_total must be positive");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
      throw ConfigError("split fraction must lie in (0, 1)");
    }
    if (schema->class_labels().size() < 2) {
      throw ConfigError("classification needs at least two class labels");
    }
    LinkModel::Create(owner_fog.latency_s, owner_fog.bandwidth_Bps);
    LinkModel::Create(fog_cloud.latency_s, fog_cloud.bandwidth_Bps);
    for (std::size_t i = 0; i < owners.size(); ++i) {
      const auto& owner = owners[i];
      if (owner.owner_id != static_cast<int>(i) + 1) {
        throw ConfigError("owners must be listed with ids 1..n in order");
      }
      if (!SameSchema(owner.schema, schema)) {
        throw ConfigError("owner " + std::to_string(owner.owner_id) +
                          " does not use the scenario schema");
      }
    }
  }
};

// Budget an owner spends per record: split over the features, plus one
// share for the label when labels go through randomized response.
inline PrivacyBudget OwnerBudget(const ScenarioConfig& config) {
  const std::size_t m = config.feature_count();
  if (config.label_mode == LabelMode::kOff) return SplitBudget(config.epsilon_total, m);
  const PrivacyBudget with_label = SplitBudget(config.epsilon_total, m + 1);
  const auto shares = with_label.per_feature();
  return PrivacyBudget::Create(config.epsilon_total,
                               std::vector<double>(shares.begin(), shares.begin() + m));
}

inline double LabelEpsilon(const ScenarioConfig& config) {
  if (IsInfiniteEpsilon(config.epsilon_total)) return kInfiniteEpsilon;
  return config.epsilon_total / static_cast<double>(config.feature_count() + 1);
}

// Stream identifiers for DeriveSeed(seed, owner, stream).
inline constexpr std::uint64_t kUploadStream = 1;
inline constexpr std::uint64_t kQueryStream = 2;
inline constexpr std::uint64_t kLabelStream = 3;

// Owner-side upload: clip and perturb first, then split by column. Emits one
// UPLOAD_SHARD per fog node that receives columns and one LABEL_SHARD to
// fog 1.
inline std::vector<Message> OwnerPrepareUpload(const OwnerDataset& owner,
                                               const ScenarioConfig& config, std::uint64_t seed) {
  if (!SameSchema(owner.schema, config.schema)) {
    throw ConfigError("owner " + std::to_string(owner.owner_id) +
                      " does not use the scenario schema");
  }
  if (config.fog_count == 0) throw ConfigError("scenario needs at least one fog node");
  const auto& bounds = config.schema->feature_bounds();
  auto perturbed = PerturbDataset(owner, OwnerBudget(config), bounds,
                                  DeriveSeed(seed, static_cast<std::uint64_t>(owner.owner_id),
                                             kUploadStream));

  if (config.label_mode == LabelMode::kRandomizedResponse) {
    VariateStream variates(
        DeriveSeed(seed, static_cast<std::uint64_t>(owner.owner_id), kLabelStream));
    const double eps = LabelEpsilon(config);
    for (auto& label : perturbed.noisy.labels) {
      label = RandomizedResponse(label, *config.schema, eps, variates.Next());
    }
  }

  Partition partition = VerticalPartition(perturbed.noisy, config.fog_count);
  const NodeId self = NodeId::Owner(owner.owner_id);
  std::vector<Message> out;
  for (auto& shard : partition.shards) {
    if (shard.empty()) continue;
    shard.owner_id = owner.owner_id;
    const NodeId fog = NodeId::Fog(shard.fog_id);
    out.push_back(MakeMessage(self, fog, MessageKind::kUploadShard, std::move(shard)));
  }
  partition.labels.owner_id = owner.owner_id;
  out.push_back(MakeMessage(self, NodeId::Fog(partition.labels.fog_id), MessageKind::kLabelShard,
                            std::move(partition.labels)));
  return out;
}

// Splits an already perturbed query vector into per-fog request messages.
inline std::vector<Message> OwnerPrepareQuery(int owner_id, std::uint64_t request_id,
                                              std::span<const double> noisy_features,
                                              std::size_t fog_count) {
  std::vector<QueryPart> parts(fog_count);
  for (std::size_t c = 0; c < noisy_features.size(); ++c) {
    auto& part = parts[static_cast<std::size_t>(FogForColumn(c, fog_count)) - 1];
    part.columns.push_back(c);
    part.values.push_back(noisy_features[c]);
  }
  std::vector<Message> out;
  for (std::size_t f = 0; f < fog_count; ++f) {
    if (parts[f].columns.empty()) continue;
    parts[f].request_id = request_id;
    parts[f].owner_id = owner_id;
    out.push_back(MakeMessage(NodeId::Owner(owner_id), NodeId::Fog(static_cast<int>(f) + 1),
                              MessageKind::kClassifyRequest, std::move(parts[f])));
  }
  return out;
}

struct NodeOutput {
  std::vector<Message> messages;
  std::vector<std::string> diagnostics;
};

// Tier-2 store-and-forward node. Keeps every shard it is handed and forwards
// it to the cloud on receipt.
class FogNode {
 public:
  explicit FogNode(int fog_id) : id_(fog_id) {}

  int id() const { return id_; }
  const std::vector<Shard>& stored_shards() const { return shards_; }
  const std::vector<LabelShard>& stored_labels() const { return labels_; }
  bool training_complete() const { return training_complete_; }

  NodeOutput Handle(const Message& msg) {
    NodeOutput out;
    const NodeId self = NodeId::Fog(id_);
    if (msg.dst != self) {
      out.diagnostics.push_back("protocol violation: " + ToString(self) + " received message " +
                                std::to_string(msg.msg_id) + " addressed to " + ToString(msg.dst));
      return out;
    }
    const bool from_owner = msg.src.role == Role::kOwner;
    const bool from_cloud = msg.src.role == Role::kCloud;
    const Payload& payload = *msg.payload;
    switch (msg.kind) {
      case MessageKind::kUploadShard:
        if (from_owner && std::holds_alternative<Shard>(payload)) {
          shards_.push_back(std::get<Shard>(payload));
          out.messages.push_back(Forward(msg, NodeId::Cloud(), MessageKind::kForwardShard));
          return out;
        }
        break;
      case MessageKind::kLabelShard:
        if (from_owner && std::holds_alternative<LabelShard>(payload)) {
          labels_.push_back(std::get<LabelShard>(payload));
          out.messages.push_back(Forward(msg, NodeId::Cloud(), MessageKind::kForwardShard));
          return out;
        }
        break;
      case MessageKind::kClassifyRequest:
        if (from_owner && std::holds_alternative<QueryPart>(payload)) {
          out.messages.push_back(Forward(msg, NodeId::Cloud(), MessageKind::kClassifyForward));
          return out;
        }
        break;
      case MessageKind::kTrainComplete:
        if (from_cloud) {
          training_complete_ = true;
          return out;
        }
        break;
      case MessageKind::kClassifyResponse:
        if (from_cloud && std::holds_alternative<QueryAnswer>(payload)) {
          const auto& answer = std::get<QueryAnswer>(payload);
          out.messages.push_back(
              Forward(msg, NodeId::Owner(answer.owner_id), MessageKind::kResponseForward));
          return out;
        }
        break;
      default:
        break;
    }
    out.diagnostics.push_back("protocol violation: " + ToString(self) + " cannot handle " +
                              ToString(msg.kind) + " from " + ToString(msg.src) + " (message " +
                              std::to_string(msg.msg_id) + ")");
    return out;
  }

 private:
  Message Forward(const Message& in, NodeId dst, MessageKind kind) const {
    Message m;
    m.src = NodeId::Fog(id_);
    m.dst = dst;
    m.kind = kind;
    m.payload = in.payload;
    m.size_bytes = in.size_bytes;
    return m;
  }

  int id_;
  std::vector<Shard> shards_;
  std::vector<LabelShard> labels_;
  bool training_complete_ = false;
};

// Tier-3 node. Trains exactly once, when every owner's shards and labels are
// in, then serves classification requests (queued until then).
class CloudNode {
 public:
  CloudNode(SchemaPtr schema, std::size_t owner_count, std::size_t fog_count)
      : schema_(std::move(schema)), owner_count_(owner_count), fog_count_(fog_count) {
    if (!schema_) throw ConfigError("cloud node needs a schema");
  }

  bool trained() const { return model_.has_value(); }
  const std::optional<GaussianNBModel>& model() const { return model_; }
  std::size_t fit_count() const { return fit_count_; }
  std::size_t training_rows() const { return training_rows_; }
  std::size_t queued_requests() const { return ready_.size(); }

  NodeOutput Handle(const Message& msg) {
    NodeOutput out;
    if (msg.dst.role != Role::kCloud || msg.src.role != Role::kFog) {
      out.diagnostics.push_back("protocol violation: cloud received message " +
                                std::to_string(msg.msg_id) + " from " + ToString(msg.src));
      return out;
    }
    const Payload& payload = *msg.payload;
    if (msg.kind == MessageKind::kForwardShard) {
      if (const auto* shard = std::get_if<Shard>(&payload)) {
        AcceptShard(*shard, out);
      } else if (const auto* labels = std::get_if<LabelShard>(&payload)) {
        AcceptLabels(*labels, out);
      } else {
        out.diagnostics.push_back("protocol violation: FORWARD_SHARD without a shard payload");
      }
      return out;
    }
    if (msg.kind == MessageKind::kClassifyForward) {
      if (const auto* part = std::get_if<QueryPart>(&payload)) {
        AcceptQueryPart(*part, msg.src.index, out);
      } else {
        out.diagnostics.push_back("protocol violation: CLASSIFY_FORWARD without a query payload");
      }
      return out;
    }
    out.diagnostics.push_back("protocol violation: cloud cannot handle " +
                              std::string(ToString(msg.kind)) + " (message " +
                              std::to_string(msg.msg_id) + ")");
    return out;
  }

 private:
  struct PendingQuery {
    std::vector<double> features;
    std::vector<bool> seen;
    std::size_t parts = 0;
    int owner_id = 0;
    int reply_fog = 0;  // fog that carried column 0
  };

  bool KnownOwner(int owner_id) const {
    return owner_id >= 1 && static_cast<std::size_t>(owner_id) <= owner_count_;
  }

  void AcceptShard(const Shard& shard, NodeOutput& out) {
    if (!KnownOwner(shard.owner_id)) {
      out.diagnostics.push_back("assembly error: shard from unknown owner " +
                                std::to_string(shard.owner_id));
      return;
    }
    if (trained() || !received_columns_.insert({shard.owner_id, shard.column_indices}).second) {
      out.diagnostics.push_back("assembly error: duplicate shard for owner " +
                                std::to_string(shard.owner_id) + " from fog " +
                                std::to_string(shard.fog_id) + " ignored");
      return;
    }
    shards_[shard.owner_id].push_back(shard);
    MaybeTrain(out);
  }

  void AcceptLabels(const LabelShard& labels, NodeOutput& out) {
    if (!KnownOwner(labels.owner_id)) {
      out.diagnostics.push_back("assembly error: label shard from unknown owner " +
                                std::to_string(labels.owner_id));
      return;
    }
    if (trained() || labels_.contains(labels.owner_id)) {
      out.diagnostics.push_back("assembly error: duplicate label shard for owner " +
                                std::to_string(labels.owner_id) + " ignored");
      return;
    }
    labels_.emplace(labels.owner_id, labels);
    MaybeTrain(out);
  }

  void MaybeTrain(NodeOutput& out) {
    if (trained() || failed_ || labels_.size() != owner_count_) return;
    const std::size_t expected = std::min(schema_->feature_count(), fog_count_);
    for (std::size_t i = 1; i <= owner_count_; ++i) {
      auto it = shards_.find(static_cast<int>(i));
      if (it == shards_.end() || it->second.size() != expected) return;
    }

    std::vector<NoisyDataset> per_owner;
    try {
      for (std::size_t i = 1; i <= owner_count_; ++i) {
        const int owner = static_cast<int>(i);
        per_owner.push_back(Reassemble(shards_.at(owner), labels_.at(owner), schema_));
      }
      const NoisyDataset all = UnionOwners(per_owner);
      training_rows_ = all.rows();
      model_ = FitGaussianNB(all);
      ++fit_count_;
    } catch (const std::exception& e) {
      out.diagnostics.push_back(std::string("assembly error: training aborted: ") + e.what());
      failed_ = true;
      return;
    }
    for (std::size_t f = 1; f <= fog_count_; ++f) {
      out.messages.push_back(MakeMessage(NodeId::Cloud(), NodeId::Fog(static_cast<int>(f)),
                                         MessageKind::kTrainComplete,
                                         TrainSummary{training_rows_}));
    }
    for (std::uint64_t request_id : ready_) Answer(request_id, out);
    ready_.clear();
  }

  void AcceptQueryPart(const QueryPart& part, int via_fog, NodeOutput& out) {
    const std::size_t m = schema_->feature_count();
    auto& pending = pending_[part.request_id];
    if (pending.features.empty()) {
      pending.features.assign(m, 0.0);
      pending.seen.assign(m, false);
      pending.owner_id = part.owner_id;
    }
    if (part.owner_id != pending.owner_id || part.columns.size() != part.values.size()) {
      out.diagnostics.push_back("protocol violation: inconsistent query part for request " +
                                std::to_string(part.request_id));
      return;
    }
    for (std::size_t k = 0; k < part.columns.size(); ++k) {
      const std::size_t c = part.columns[k];
      if (c >= m || pending.seen[c]) {
        out.diagnostics.push_back("protocol violation: bad or repeated column " +
                                  std::to_string(c) + " in request " +
                                  std::to_string(part.request_id));
        return;
      }
      pending.seen[c] = true;
      pending.features[c] = part.values[k];
      if (c == 0) pending.reply_fog = via_fog;
    }
    ++pending.parts;
    if (std::find(pending.seen.begin(), pending.seen.end(), false) != pending.seen.end()) return;
    if (trained()) {
      Answer(part.request_id, out);
    } else {
      ready_.push_back(part.request_id);
    }
  }

  void Answer(std::uint64_t request_id, NodeOutput& out) {
    auto node = pending_.extract(request_id);
    const PendingQuery& q = node.mapped();
    QueryAnswer answer{request_id, q.owner_id, PredictGaussianNB(*model_, q.features, request_id)};
    out.messages.push_back(MakeMessage(NodeId::Cloud(), NodeId::Fog(q.reply_fog),
                                       MessageKind::kClassifyResponse, std::move(answer)));
  }

  SchemaPtr schema_;
  std::size_t owner_count_;
  std::size_t fog_count_;
  std::map<int, std::vector<Shard>> shards_;
  std::map<int, LabelShard> labels_;
  std::set<std::pair<int, std::vector<std::size_t>>> received_columns_;
  std::map<std::uint64_t, PendingQuery> pending_;
  std::vector<std::uint64_t> ready_;
  std::optional<GaussianNBModel> model_;
  std::size_t fit_count_ = 0;
  std::size_t training_rows_ = 0;
  bool failed_ = false;
};

struct LogRecord {
  double sim_time_s = 0.0;  // send time
  Message message;
};

struct Diagnostic {
  double sim_time_s = 0.0;
  std::uint64_t msg_id = 0;
  std::string text;
};

struct EventLog {
  std::vector<LogRecord> records;
  std::vector<Diagnostic> diagnostics;
};

struct Query {
  int owner_id = 1;
  std::vector<double> features;  // raw; perturbed by the owner before sending
};

struct TransportStats {
  std::uint64_t bytes_owner_to_fog = 0;
  std::uint64_t bytes_fog_to_owner = 0;
  std::uint64_t bytes_fog_to_cloud = 0;
  std::uint64_t bytes_cloud_to_fog = 0;
  // Summed per-message transfer times across each tier boundary.
  double seconds_owner_fog = 0.0;
  double seconds_fog_cloud = 0.0;
  std::uint64_t messages = 0;
  double makespan_s = 0.0;  // last delivery time
};

struct SimulationResult {
  EventLog log;
  std::vector<ClassificationResult> results;  // ordered by request id
  TransportStats stats;
  std::size_t fit_count = 0;
};

namespace sim_detail {

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, std::span<const Query> queries)
      : config_(config),
        queries_(queries.begin(), queries.end()),
        cloud_(config.schema, config.owner_count(), config.fog_count) {
    for (std::size_t f = 1; f <= config.fog_count; ++f) fogs_.emplace_back(static_cast<int>(f));
    for (const auto& q : queries_) {
      if (q.owner_id < 1 || static_cast<std::size_t>(q.owner_id) > config.owner_count()) {
        throw ConfigError("query from unknown owner " + std::to_string(q.owner_id));
      }
      if (q.features.size() != config.feature_count()) {
        throw ConfigError("query has " + std::to_string(q.features.size()) + " features, schema " +
                          std::to_string(config.feature_count()));
      }
    }
    for (const auto& owner : config.owners) {
      query_variates_.emplace_back(
          DeriveSeed(config.seed, static_cast<std::uint64_t>(owner.owner_id), kQueryStream));
    }
  }

  SimulationResult Run() {
    for (const auto& owner : config_.owners) {
      for (auto& m : OwnerPrepareUpload(owner, config_, config_.seed)) Send(std::move(m), 0.0);
    }
    if (config_.query_issue_time) {
      const double t = std::max(0.0, *config_.query_issue_time);
      Drain([t](double when) { return when < t; });
      if (now_ < t) now_ = t;
      IssueQueries();
    } else {
      Drain([](double) { return true; });
      IssueQueries();
    }
    Drain([](double) { return true; });
    return Finish();
  }

 private:
  using QueueKey = std::pair<double, std::uint64_t>;

  const LinkModel& LinkFor(const NodeId& a, const NodeId& b) const {
    return (a.role == Role::kCloud || b.role == Role::kCloud) ? config_.fog_cloud
                                                               : config_.owner_fog;
  }

  void Send(Message m, double now) {
    if (!TopologyAllows(m.src, m.dst)) {
      throw ProtocolError("topology violation: " + ToString(m.src) + " -> " + ToString(m.dst));
    }
    m.msg_id = next_id_++;
    m.sent_at = now;
    const LinkModel& link = LinkFor(m.src, m.dst);
    double& idle_at = link_idle_at_[{m.src, m.dst}];
    const double start = std::max(now, idle_at);
    idle_at = start + static_cast<double>(m.size_bytes) / link.bandwidth_Bps;
    m.delivered_at = start + TransferTime(m.size_bytes, link);

    const double seconds = TransferTime(m.size_bytes, link);
    if (m.src.role == Role::kOwner) {
      stats_.bytes_owner_to_fog += m.size_bytes;
      stats_.seconds_owner_fog += seconds;
    } else if (m.dst.role == Role::kOwner) {
      stats_.bytes_fog_to_owner += m.size_bytes;
      stats_.seconds_owner_fog += seconds;
    } else if (m.dst.role == Role::kCloud) {
      stats_.bytes_fog_to_cloud += m.size_bytes;
      stats_.seconds_fog_cloud += seconds;
    } else {
      stats_.bytes_cloud_to_fog += m.size_bytes;
      stats_.seconds_fog_cloud += seconds;
    }
    ++stats_.messages;

    log_.records.push_back(LogRecord{now, m});
    queue_.push(QueueKey{m.delivered_at, m.msg_id});
    in_flight_.emplace(m.msg_id, std::move(m));
  }

  void IssueQueries() {
    for (std::size_t i = 0; i < queries_.size(); ++i) {
      const auto& q = queries_[i];
      const std::uint64_t request_id = i + 1;
      auto& variates = query_variates_[static_cast<std::size_t>(q.owner_id) - 1];
      const auto noisy = PerturbRow(q.features, OwnerBudget(config_),
                                    config_.schema->feature_bounds(), variates);
      for (auto& m : OwnerPrepareQuery(q.owner_id, request_id, noisy, config_.fog_count)) {
        Send(std::move(m), now_);
      }
    }
  }

  template <typename Pred>
  void Drain(Pred keep_going) {
    while (!queue_.empty()) {
      const auto [when, id] = queue_.top();
      if (when > config_.horizon_s || !keep_going(when)) return;
      queue_.pop();
      now_ = when;
      stats_.makespan_s = std::max(stats_.makespan_s, when);
      auto node = in_flight_.extract(id);
      Deliver(node.mapped());
    }
  }

  void Deliver(const Message& m) {
    NodeOutput out;
    switch (m.dst.role) {
      case Role::kFog:
        out = fogs_.at(static_cast<std::size_t>(m.dst.index) - 1).Handle(m);
        break;
      case Role::kCloud:
        out = cloud_.Handle(m);
        break;
      case Role::kOwner:
        out = OwnerHandle(m);
        break;
    }
    for (auto& text : out.diagnostics) {
      log_.diagnostics.push_back(Diagnostic{now_, m.msg_id, std::move(text)});
    }
    for (auto& reply : out.messages) Send(std::move(reply), now_);
  }

  NodeOutput OwnerHandle(const Message& m) {
    NodeOutput out;
    const auto* answer = std::get_if<QueryAnswer>(m.payload.get());
    if (m.kind != MessageKind::kResponseForward || m.src.role != Role::kFog || !answer ||
        answer->owner_id != m.dst.index) {
      out.diagnostics.push_back("protocol violation: " + ToString(m.dst) + " cannot handle " +
                                ToString(m.kind) + " from " + ToString(m.src));
      return out;
    }
    if (!results_.emplace(answer->request_id, answer->result).second) {
      out.diagnostics.push_back("duplicate response for request " +
                                std::to_string(answer->request_id));
    }
    return out;
  }

  SimulationResult Finish() {
    if (!queue_.empty()) {
      std::string pending;
      for (const auto& [id, m] : in_flight_) {
        pending += "\n  msg " + std::to_string(id) + " " + ToString(m.kind) + " " +
                   ToString(m.src) + " -> " + ToString(m.dst) + " due " +
                   std::to_string(m.delivered_at);
      }
      throw SimulationError("undelivered messages at horizon " +
                            std::to_string(config_.horizon_s) + ":" + pending);
    }
    std::string missing;
    for (std::uint64_t r = 1; r <= queries_.size(); ++r) {
      if (!results_.contains(r)) missing += " " + std::to_string(r);
    }
    if (!missing.empty()) {
      std::string why;
      for (const auto& d : log_.diagnostics) why += "\n  " + d.text;
      throw SimulationError("simulation quiesced with unanswered requests:" + missing + why);
    }
    SimulationResult result;
    result.log = std::move(log_);
    result.stats = stats_;
    result.fit_count = cloud_.fit_count();
    for (auto& [id, r] : results_) result.results.push_back(std::move(r));
    return result;
  }

  const ScenarioConfig& config_;
  std::vector<Query> queries_;
  std::vector<FogNode> fogs_;
  CloudNode cloud_;
  std::vector<VariateStream> query_variates_;

  std::priority_queue<QueueKey, std::vector<QueueKey>, std::greater<>> queue_;
  std::map<std::uint64_t, Message> in_flight_;
  std::map<std::pair<NodeId, NodeId>, double> link_idle_at_;
  std::map<std::uint64_t, ClassificationResult> results_;
  EventLog log_;
  TransportStats stats_;
  std::uint64_t next_id_ = 1;
  double now_ = 0.0;
};

}  // namespace sim_detail

// Runs one scenario to quiescence. Throws SimulationError if messages remain
// undelivered at the horizon or any request goes unanswered.
inline SimulationResult Simulate(const ScenarioConfig& config, std::span<const Query> queries) {
  config.Validate();
  return sim_detail::Simulation(config, queries).Run();
}

struct ExposureAudit {
  std::map<int, std::set<std::size_t>> columns_by_fog;  // every fog 1..s present
  std::size_t column_bound = 0;                         // ceil(m / s)
  std::size_t cells_checked = 0;
  std::size_t pre_noise_matches = 0;
  std::size_t owner_cloud_messages = 0;

  bool within_bound() const {
    for (const auto& [fog, cols] : columns_by_fog) {
      if (cols.size() > column_bound) return false;
    }
    return true;
  }
};

// Which feature columns each fog node handled, and whether any uploaded
// cell equals its owner's clipped pre-noise value. The equality check only
// runs for finite epsilon; at infinite epsilon equality is expected.
inline ExposureAudit AuditFogExposure(const EventLog& log, const ScenarioConfig& config) {
  ExposureAudit audit;
  const std::size_t m = config.feature_count();
  const std::size_t s = config.fog_count;
  audit.column_bound = s == 0 ? m : (m + s - 1) / s;
  for (std::size_t f = 1; f <= s; ++f) audit.columns_by_fog[static_cast<int>(f)];

  const bool check_values = !IsInfiniteEpsilon(config.epsilon_total);
  std::vector<Matrix> clipped;
  if (check_values && config.schema) {
    for (const auto& owner : config.owners) {
      clipped.push_back(ClipFeatures(owner.features, config.schema->feature_bounds()));
    }
  }

  for (const auto& record : log.records) {
    const Message& msg = record.message;
    if (!TopologyAllows(msg.src, msg.dst)) ++audit.owner_cloud_messages;
    const NodeId* fog = msg.src.role == Role::kFog   ? &msg.src
                        : msg.dst.role == Role::kFog ? &msg.dst
                                                     : nullptr;
    if (!msg.payload) continue;
    if (const auto* shard = std::get_if<Shard>(msg.payload.get())) {
      if (fog) {
        audit.columns_by_fog[fog->index].insert(shard->column_indices.begin(),
                                                shard->column_indices.end());
      }
      if (check_values && msg.kind == MessageKind::kUploadShard && shard->owner_id >= 1 &&
          static_cast<std::size_t>(shard->owner_id) <= clipped.size()) {
        const Matrix& truth = clipped[static_cast<std::size_t>(shard->owner_id) - 1];
        for (std::size_t i = 0; i < shard->row_keys.size(); ++i) {
          const std::size_t row = shard->row_keys[i].row_index;
          if (row >= truth.rows()) continue;
          for (std::size_t k = 0; k < shard->column_indices.size(); ++k) {
            ++audit.cells_checked;
            if (shard->values(i, k) == truth(row, shard->column_indices[k])) {
              ++audit.pre_noise_matches;
            }
          }
        }
      }
    } else if (const auto* part = std::get_if<QueryPart>(msg.payload.get())) {
      if (fog) audit.columns_by_fog[fog->index].insert(part->columns.begin(), part->columns.end());
    }
  }
  return audit;
}

namespace sim_detail {

inline nlohmann::ordered_json PayloadJson(const Payload& payload) {
  nlohmann::ordered_json j;
  if (const auto* shard = std::get_if<Shard>(&payload)) {
    j["fog_id"] = shard->fog_id;
    j["owner_id"] = shard->owner_id;
    j["columns"] = shard->column_indices;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < shard->row_keys.size(); ++i) {
      const auto r = shard->values.row(i);
      rows.push_back({{"row", shard->row_keys[i].row_index},
                      {"values", std::vector<double>(r.begin(), r.end())}});
    }
    j["rows"] = std::move(rows);
  } else if (const auto* labels = std::get_if<LabelShard>(&payload)) {
    j["owner_id"] = labels->owner_id;
    j["labels"] = labels->labels;
  } else if (const auto* summary = std::get_if<TrainSummary>(&payload)) {
    j["training_rows"] = summary->training_rows;
  } else if (const auto* part = std::get_if<QueryPart>(&payload)) {
    j["request_id"] = part->request_id;
    j["owner_id"] = part->owner_id;
    j["columns"] = part->columns;
    j["values"] = part->values;
  } else if (const auto* answer = std::get_if<QueryAnswer>(&payload)) {
    j["request_id"] = answer->request_id;
    j["owner_id"] = answer->owner_id;
    j["predicted_label"] = answer->result.predicted_label;
  }
  return j;
}

}  // namespace sim_detail

// One record per line (JSON Lines) with sim_time_s, msg_id, src, dst, kind
// and size_bytes. Payload contents only when `verbose`. Fields in `context`
// are prepended to every line.
inline void ExportEventLog(const EventLog& log, std::ostream& out, bool verbose = false,
                           const nlohmann::ordered_json& context = nlohmann::ordered_json::object()) {
  for (const auto& record : log.records) {
    nlohmann::ordered_json line = context;
    const Message& m = record.message;
    line["sim_time_s"] = record.sim_time_s;
    line["msg_id"] = m.msg_id;
    line["src"] = ToString(m.src);
    line["dst"] = ToString(m.dst);
    line["kind"] = ToString(m.kind);
    line["size_bytes"] = m.size_bytes;
    if (verbose && m.payload) line["payload"] = sim_detail::PayloadJson(*m.payload);
    out << line.dump() << '\n';
  }
}

}  // namespace ppod
