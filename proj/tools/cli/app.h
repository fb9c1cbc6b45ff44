// Copyright 2026 The OutlierNet Authors.
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

#ifndef OUTLIERNET_TOOLS_CLI_APP_H_
#define OUTLIERNET_TOOLS_CLI_APP_H_

#include <iosfwd>

namespace outliernet::cli {

// Parses argv and runs the selected subcommand. Returns the process exit
// status: 0 when every artifact was written.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace outliernet::cli

#endif  // OUTLIERNET_TOOLS_CLI_APP_H_
