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

#ifndef ADAPTEX_SERVICE_H_
#define ADAPTEX_SERVICE_H_

#include <string>

#include "adaptex/experiment.h"

namespace adaptex {

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON
};

// Routes one request to the experiment:
//   POST /assign          {"unit_id", "covariates": {...}, "M_pre", "T_pre"}
//                         -> {"arm", "probabilities", "batch"}
//   POST /outcome         {"unit_id", "M_pre", "T_pre", "M_post", "T_post",
//                          "completed", "channel_detail"} -> {"ok": true}
//   POST /advance-batch   {"force"} -> {"batch"}
//   GET  /state           -> {"batch", "n_assigned", "n_completed"}
// Errors map to 400 (bad request or data), 404 (unknown route) or 500, with
// body {"error": kind, "message": text}.
ServiceResponse HandleRequest(Experiment& experiment, const std::string& method,
                              const std::string& path, const std::string& body);

// Blocks serving HTTP until the process is stopped.
void Serve(Experiment& experiment, const std::string& host, int port);

}  // namespace adaptex

#endif  // ADAPTEX_SERVICE_H_
