// Copyright (c) 2026 The prsd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRSD_HARNESS_CLI_H_
#define PRSD_HARNESS_CLI_H_

#include <ostream>

namespace prsd::harness {

// prsd <synthdata|extract|train-diffusion|train-prosody|sample|evaluate|experiment>
//      [--config PATH] [--out DIR] [--seed N]
// Exit status: 0 success, 1 runtime failure, 2 usage or config error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prsd::harness

#endif  // PRSD_HARNESS_CLI_H_
