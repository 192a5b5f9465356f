/*
 * Copyright 2026 The Adaptex Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "adaptex/service.h"

#include "httplib.h"
#include "json.hpp"

namespace adaptex {

using nlohmann::json;

namespace {

ServiceResponse Fail(int status, const std::string& kind, const std::string& message) {
  return {status, json{{"error", kind}, {"message", message}}.dump()};
}

json ArmToJson(const Arm& a) {
  return {{"respondent_level", a.respondent_level}, {"headline_level", a.headline_level}};
}

OutcomeRecord ParseOutcome(const json& j) {
  OutcomeRecord o;
  o.completed = j.value("completed", true);
  if (j.contains("channel_detail") && !j["channel_detail"].is_null()) {
    const auto cells = j["channel_detail"].get<std::vector<int>>();
    if (cells.size() != kChannelDetailSize) ThrowData("channel_detail must have 16 cells");
    ChannelDetail d{};
    for (int i = 0; i < kChannelDetailSize; ++i) {
      if (cells[i] != 0 && cells[i] != 1) ThrowData("channel_detail cells must be 0 or 1");
      d[i] = static_cast<std::uint8_t>(cells[i]);
    }
    o = OutcomeRecord::FromDetail(d, o.completed);
  } else {
    o.m_pre = j.at("M_pre").get<int>();
    o.t_pre = j.at("T_pre").get<int>();
    if (o.completed) {
      o.m_post = j.at("M_post").get<int>();
      o.t_post = j.at("T_post").get<int>();
    }
  }
  return o;
}

RawCovariates ParseCovariates(const json& j) {
  RawCovariates raw;
  if (j.is_null()) return raw;
  if (!j.is_object()) ThrowData("covariates must be an object");
  for (const auto& [name, value] : j.items()) {
    if (value.is_null()) {
      raw[name] = std::nullopt;
    } else {
      raw[name] = value.get<double>();
    }
  }
  return raw;
}

ServiceResponse Dispatch(Experiment& experiment, const std::string& method,
                         const std::string& path, const json& body) {
  if (method == "POST" && path == "/assign") {
    const AssignmentEvent e = experiment.AssignRaw(
        body.at("unit_id").get<std::int64_t>(), ParseCovariates(body.value("covariates", json())),
        body.value("M_pre", 0), body.value("T_pre", 0));
    const int index = experiment.config().arms.IndexOf(e.arm);
    return {200, json{{"unit_id", e.unit_id},
                      {"arm", ArmToJson(e.arm)},
                      {"arm_name", experiment.config().arms.name(index)},
                      {"probabilities", e.probabilities},
                      {"batch", e.batch_index}}
                     .dump()};
  }
  if (method == "POST" && path == "/outcome") {
    experiment.RecordOutcome(body.at("unit_id").get<std::int64_t>(), ParseOutcome(body));
    return {200, json{{"ok", true}}.dump()};
  }
  if (method == "POST" && path == "/advance-batch") {
    const int batch = experiment.AdvanceBatch(body.value("force", false));
    return {200, json{{"batch", batch}}.dump()};
  }
  if (method == "GET" && path == "/state") {
    const ExperimentSnapshot s = experiment.Snapshot();
    return {200, json{{"batch", s.batch},
                      {"n_assigned", s.n_assigned},
                      {"n_completed", s.n_completed}}
                     .dump()};
  }
  return Fail(404, "not_found", method + " " + path);
}

}  // namespace

ServiceResponse HandleRequest(Experiment& experiment, const std::string& method,
                              const std::string& path, const std::string& body) {
  try {
    json parsed = json::object();
    if (!body.empty()) {
      parsed = json::parse(body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        return Fail(400, "data", "request body is not a JSON object");
      }
    }
    return Dispatch(experiment, method, path, parsed);
  } catch (const Error& e) {
    return Fail(400, e.kind() == ErrorKind::kUsage ? "usage" : "data", e.what());
  } catch (const json::exception& e) {
    return Fail(400, "data", e.what());
  } catch (const std::exception& e) {
    return Fail(500, "internal", e.what());
  }
}

void Serve(Experiment& experiment, const std::string& host, int port) {
  httplib::Server server;
  auto handler = [&experiment](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = HandleRequest(experiment, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/assign", handler);
  server.Post("/outcome", handler);
  server.Post("/advance-batch", handler);
  server.Get("/state", handler);
  if (!server.listen(host, port)) {
    ThrowUsage("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace adaptex
