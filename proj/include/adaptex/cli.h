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

#ifndef ADAPTEX_CLI_H_
#define ADAPTEX_CLI_H_

#include <iosfwd>

namespace adaptex {

// Command-line entry point. Returns the process exit code: 0 ok, 1 usage,
// 2 data error, 3 internal error. Failures print one JSON line
// {"error": kind, "message": text} to `err`.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adaptex

#endif  // ADAPTEX_CLI_H_
