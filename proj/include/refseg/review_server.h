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

#ifndef REFSEG_REVIEW_SERVER_H_
#define REFSEG_REVIEW_SERVER_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "refseg/dataset.h"
#include "refseg/raster.h"

namespace refseg {

// Blends `tint` into the pixels under the mask: round((1 - alpha) * src +
// alpha * tint) per channel. Pixels outside the mask are copied unchanged.
RgbImage CompositeOverlay(const RgbImage& image, const BinaryMask& mask, double alpha,
                          std::array<std::uint8_t, 3> tint);

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ReviewOptions {
  std::string manifest_path;
  std::string verdict_log;  // default: <manifest>.verdicts.jsonl
  std::string export_path;  // default: <manifest dir>/manifest.filtered.jsonl
  std::array<std::uint8_t, 3> tint = {255, 0, 0};
};

// Curation state behind the HTTP API: the manifest plus the verdict log
// replayed over it. Handlers take a query or body and return a reply, so the
// logic is testable without sockets. Reads share a lock; verdict writes and
// exports hold it exclusively, and each verdict is fsynced to the log before
// the in-memory state changes.
class ReviewService {
 public:
  explicit ReviewService(ReviewOptions options);

  HttpReply ListTriplets(const std::multimap<std::string, std::string>& query) const;
  HttpReply Overlay(const std::string& id, const std::multimap<std::string, std::string>& query) const;
  HttpReply PostVerdict(const std::string& body);
  HttpReply Export(const std::string& body);
  HttpReply Stats() const;

  // Current manifest with every logged verdict applied.
  Manifest Snapshot() const;
  const ReviewOptions& options() const { return options_; }

 private:
  ReviewOptions options_;
  mutable std::shared_mutex mu_;
  Manifest manifest_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string static_dir;
};

// HTTP front end. Start() binds and serves on a background thread.
class ReviewServer {
 public:
  ReviewServer(std::shared_ptr<ReviewService> service, ServeOptions options);
  ~ReviewServer();

  // Binds the socket and returns the port. Throws IoError on failure.
  int Bind();
  // Binds if needed and serves on a background thread; returns the port.
  int Start();
  // Binds if needed and serves in the calling thread until Stop().
  void Run();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace refseg

#endif  // REFSEG_REVIEW_SERVER_H_
