/* Copyright 2026 The semask Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEMASK_LOG_HPP_
#define SEMASK_LOG_HPP_

#include <string_view>

namespace semask {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Writes to stderr when level >= the configured threshold.
void log_message(LogLevel level, std::string_view message);

inline void log_warning(std::string_view message) { log_message(LogLevel::kWarning, message); }
inline void log_info(std::string_view message) { log_message(LogLevel::kInfo, message); }

}  // namespace semask

#endif  // SEMASK_LOG_HPP_
