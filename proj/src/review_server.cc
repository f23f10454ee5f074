// Copyright 2026 The RefSeg Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "refseg/review_server.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "refseg/image_io.h"

namespace refseg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

HttpReply JsonReply(int status, const ordered_json& body) {
  return {status, "application/json", body.dump()};
}

HttpReply ErrorReply(int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return JsonReply(status, j);
}

const std::string* QueryValue(const std::multimap<std::string, std::string>& query,
                              const std::string& key) {
  auto it = query.find(key);
  return it == query.end() ? nullptr : &it->second;
}

// Strict positive-integer parse; no sign, no trailing text.
std::optional<long> ParsePositive(const std::string& s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  if (v < 1) return std::nullopt;
  return v;
}

// Character ranges of the three template slots inside the canonical text.
ordered_json SpansJson(const Expression& e) {
  ordered_json spans = ordered_json::array();
  std::size_t pos = 0;
  auto add = [&](SpanRole role, const std::string& phrase) {
    const std::size_t at = e.text.find(phrase, pos);
    if (at == std::string::npos) return;
    spans.push_back({{"role", SpanRoleName(role)}, {"start", at}, {"end", at + phrase.size()}});
    pos = at + phrase.size();
  };
  if (e.attribute) add(SpanRole::kAttribute, *e.attribute);
  add(SpanRole::kCategory, e.category);
  if (e.relation) add(SpanRole::kRelation, *e.relation);
  return spans;
}

ordered_json Counts(std::int64_t pending, std::int64_t keep, std::int64_t discard) {
  ordered_json j;
  j["total"] = pending + keep + discard;
  j["pending"] = pending;
  j["keep"] = keep;
  j["discard"] = discard;
  return j;
}

std::string DefaultLog(const std::string& manifest_path) {
  return manifest_path + ".verdicts.jsonl";
}

std::string DefaultExport(const std::string& manifest_path) {
  return (std::filesystem::path(manifest_path).parent_path() / "manifest.filtered.jsonl")
      .string();
}

}  // namespace

RgbImage CompositeOverlay(const RgbImage& image, const BinaryMask& mask, double alpha,
                          std::array<std::uint8_t, 3> tint) {
  if (image.width != mask.width || image.height != mask.height) {
    throw Error(ErrorCode::kDimMismatch, "overlay image and mask sizes differ");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  RgbImage out = image;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i]) continue;
    for (int c = 0; c < 3; ++c) {
      const double v = (1.0 - alpha) * image.rgb[3 * i + c] + alpha * tint[c];
      out.rgb[3 * i + c] = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

ReviewService::ReviewService(ReviewOptions options) : options_(std::move(options)) {
  if (options_.verdict_log.empty()) options_.verdict_log = DefaultLog(options_.manifest_path);
  if (options_.export_path.empty()) {
    options_.export_path = DefaultExport(options_.manifest_path);
  }
  const Manifest loaded = LoadManifest(options_.manifest_path);
  manifest_ = ApplyVerdicts(loaded, LoadVerdictLog(options_.verdict_log));
  std::sort(manifest_.records.begin(), manifest_.records.end(),
            [](const TripletRecord& a, const TripletRecord& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < manifest_.records.size(); ++i) {
    index_[manifest_.records[i].id] = i;
  }
}

Manifest ReviewService::Snapshot() const {
  std::shared_lock lock(mu_);
  return manifest_;
}

HttpReply ReviewService::ListTriplets(
    const std::multimap<std::string, std::string>& query) const {
  std::optional<Split> split;
  std::optional<Verdict> status;
  long page = 1, page_size = 50;
  if (const std::string* v = QueryValue(query, "split")) {
    split = SplitFromName(*v);
    if (!split) return ErrorReply(400, "unknown split '" + *v + "'");
  }
  if (const std::string* v = QueryValue(query, "status")) {
    status = VerdictFromName(*v);
    if (!status) return ErrorReply(400, "unknown status '" + *v + "'");
  }
  if (const std::string* v = QueryValue(query, "page")) {
    const auto p = ParsePositive(*v);
    if (!p) return ErrorReply(400, "page must be a positive integer");
    page = *p;
  }
  if (const std::string* v = QueryValue(query, "page_size")) {
    const auto p = ParsePositive(*v);
    if (!p || *p > 1000) return ErrorReply(400, "page_size must be in [1, 1000]");
    page_size = *p;
  }

  std::shared_lock lock(mu_);
  std::vector<const TripletRecord*> matched;
  for (const TripletRecord& r : manifest_.records) {
    if (split && r.split != *split) continue;
    if (status && r.verdict != *status) continue;
    matched.push_back(&r);
  }
  const long total = static_cast<long>(matched.size());
  ordered_json body;
  body["page"] = page;
  body["page_size"] = page_size;
  body["total"] = total;
  body["pages"] = (total + page_size - 1) / page_size;
  ordered_json items = ordered_json::array();
  for (long i = (page - 1) * page_size; i < std::min(total, page * page_size); ++i) {
    ordered_json item = ordered_json::parse(SerializeRecord(*matched[i]));
    item["expression"]["spans"] = SpansJson(matched[i]->expression);
    items.push_back(std::move(item));
  }
  body["items"] = std::move(items);
  return JsonReply(200, body);
}

HttpReply ReviewService::Overlay(const std::string& id,
                                 const std::multimap<std::string, std::string>& query) const {
  double alpha = 0.5;
  if (const std::string* v = QueryValue(query, "alpha")) {
    char* end = nullptr;
    alpha = std::strtod(v->c_str(), &end);
    if (v->empty() || *end != '\0' || !(alpha >= 0.0 && alpha <= 1.0)) {
      return ErrorReply(400, "alpha must be a number in [0, 1]");
    }
  }
  std::string image_path, mask_path;
  {
    std::shared_lock lock(mu_);
    auto it = index_.find(id);
    if (it == index_.end()) return ErrorReply(404, "unknown triplet '" + id + "'");
    const TripletRecord& r = manifest_.records[it->second];
    image_path = manifest_.Resolve(r.image_path);
    mask_path = manifest_.Resolve(r.mask_path);
  }
  try {
    const RgbImage image = ReadRgbPng(image_path);
    const BinaryMask mask = ReadMaskPng(mask_path);
    return {200, "image/png",
            EncodeRgbPng(CompositeOverlay(image, mask, alpha, options_.tint))};
  } catch (const Error& e) {
    return ErrorReply(500, e.what());
  }
}

HttpReply ReviewService::PostVerdict(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return ErrorReply(400, "body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
      !j.contains("verdict") || !j["verdict"].is_string()) {
    return ErrorReply(400, "body needs string fields 'id' and 'verdict'");
  }
  VerdictEvent event;
  event.id = j["id"].get<std::string>();
  const auto verdict = VerdictFromName(j["verdict"].get<std::string>());
  if (!verdict) return ErrorReply(400, "verdict must be keep, discard or pending");
  event.verdict = *verdict;
  if (j.contains("reason") && !j["reason"].is_null()) {
    if (!j["reason"].is_string()) return ErrorReply(400, "reason must be a string");
    event.reason = j["reason"].get<std::string>();
  }
  event.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();

  std::unique_lock lock(mu_);
  auto it = index_.find(event.id);
  if (it == index_.end()) return ErrorReply(404, "unknown triplet '" + event.id + "'");
  try {
    AppendVerdict(options_.verdict_log, event);
  } catch (const Error& e) {
    return ErrorReply(500, e.what());
  }
  manifest_.records[it->second].verdict = event.verdict;
  return {204, "", ""};
}

HttpReply ReviewService::Export(const std::string& body) {
  bool include_pending = false;
  if (!body.empty()) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception&) {
      return ErrorReply(400, "body is not valid JSON");
    }
    if (j.is_object() && j.contains("include_pending")) {
      if (!j["include_pending"].is_boolean()) {
        return ErrorReply(400, "include_pending must be a boolean");
      }
      include_pending = j["include_pending"].get<bool>();
    }
  }
  std::unique_lock lock(mu_);
  try {
    const Manifest view = ExportView(manifest_, include_pending);
    ValidateManifest(view);
    SaveManifest(view, options_.export_path);
    ordered_json reply;
    reply["path"] = options_.export_path;
    reply["records"] = view.records.size();
    return JsonReply(200, reply);
  } catch (const Error& e) {
    return ErrorReply(500, e.what());
  }
}

HttpReply ReviewService::Stats() const {
  std::shared_lock lock(mu_);
  std::map<Split, std::array<std::int64_t, 3>> per_split;
  std::array<std::int64_t, 3> all{};
  for (const TripletRecord& r : manifest_.records) {
    const int k = static_cast<int>(r.verdict);
    ++all[k];
    ++per_split[r.split][k];
  }
  ordered_json body = Counts(all[0], all[1], all[2]);
  ordered_json splits = ordered_json::object();
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kUnassigned}) {
    auto it = per_split.find(s);
    if (it == per_split.end()) continue;
    splits[std::string(SplitName(s))] = Counts(it->second[0], it->second[1], it->second[2]);
  }
  body["splits"] = std::move(splits);
  return JsonReply(200, body);
}

struct ReviewServer::Impl {
  std::shared_ptr<ReviewService> service;
  ServeOptions options;
  httplib::Server server;
  std::thread thread;
  bool bound = false;
  int port = 0;

  static void Send(httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    if (!reply.body.empty() || !reply.content_type.empty()) {
      res.set_content(reply.body, reply.content_type.c_str());
    }
  }

  void Routes() {
    server.Get("/api/triplets", [this](const httplib::Request& req, httplib::Response& res) {
      Send(res, service->ListTriplets(req.params));
    });
    server.Get(R"(/api/overlay/(.+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Send(res, service->Overlay(req.matches[1], req.params));
               });
    server.Post("/api/verdicts", [this](const httplib::Request& req, httplib::Response& res) {
      Send(res, service->PostVerdict(req.body));
    });
    server.Post("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
      Send(res, service->Export(req.body));
    });
    server.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
      Send(res, service->Stats());
    });
    if (!options.static_dir.empty() && !server.set_mount_point("/", options.static_dir)) {
      throw Error(ErrorCode::kIoError, "static directory '" + options.static_dir +
                                           "' does not exist");
    }
  }

  int Bind() {
    if (bound) return port;
    if (options.port == 0) {
      port = server.bind_to_any_port(options.host);
    } else {
      port = server.bind_to_port(options.host, options.port) ? options.port : -1;
    }
    if (port <= 0) {
      throw Error(ErrorCode::kIoError,
                  "cannot bind " + options.host + ":" + std::to_string(options.port));
    }
    bound = true;
    return port;
  }
};

ReviewServer::ReviewServer(std::shared_ptr<ReviewService> service, ServeOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  impl_->options = std::move(options);
  impl_->Routes();
}

ReviewServer::~ReviewServer() { Stop(); }

int ReviewServer::Bind() { return impl_->Bind(); }

int ReviewServer::Start() {
  const int port = impl_->Bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void ReviewServer::Run() {
  impl_->Bind();
  impl_->server.listen_after_bind();
}

void ReviewServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace refseg
