/* Copyright (c) 2026 The mapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mapseg::cli {

/// Runs the `mapseg` command line. `args` excludes the program name.
/// Regular output goes to `out`, progress and errors to `err`. Failures
/// print a single line `mapseg: error[<kind>]: <message>` and return the
/// kind's exit code (1 usage/config, 2 data, 3 numeric, 4 I/O).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mapseg::cli
