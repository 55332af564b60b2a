// Copyright 2026 The leuda Authors
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

// Logging facade over spdlog. Lives in its own target so translation units
// that see the libtorch include tree never include spdlog or fmt headers.

#ifndef LEUDA_LOG_HPP_
#define LEUDA_LOG_HPP_

#include <string>
#include <string_view>

namespace leuda::log {

/// Accepts spdlog level names (trace, debug, info, warn, error, critical,
/// off); throws InvalidInput otherwise.
void set_level(std::string_view level);

void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);
void error(std::string_view message);

/// printf-style formatting into a std::string.
std::string sprintf(const char* format, ...) __attribute__((format(printf, 1, 2)));

}  // namespace leuda::log

#endif  // LEUDA_LOG_HPP_
