// Copyright 2026 The pairsync Authors
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

#ifndef PAIRSYNC_TOOLS_CLI_HPP_
#define PAIRSYNC_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace pairsync::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAlgorithm = 3;
inline constexpr int kExitIo = 4;

inline constexpr const char * kReportSchema = "pairsync.report/1";
inline constexpr const char * kTruthSchema = "pairsync.truth/1";

/// Runs one command line (without the program name) and returns the exit code.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace pairsync::cli

#endif  // PAIRSYNC_TOOLS_CLI_HPP_
