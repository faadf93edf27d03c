// Copyright 2026 The eqex Authors
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

#include "eqex/log.hpp"

#include <cstdlib>
#include <cstring>

namespace eqex::log {

namespace {

Level initial_level() {
  const char* env = std::getenv("EQEX_LOG");
  if (env == nullptr) return Level::kInfo;
  if (std::strcmp(env, "silent") == 0) return Level::kSilent;
  if (std::strcmp(env, "warn") == 0) return Level::kWarn;
  if (std::strcmp(env, "info") == 0) return Level::kInfo;
  if (std::strcmp(env, "debug") == 0) return Level::kDebug;
  return Level::kInfo;
}

Level& slot() {
  static Level lvl = initial_level();
  return lvl;
}

void emit(const char* tag, const std::string& msg) {
  std::fprintf(stderr, "[eqex %s] %s\n", tag, msg.c_str());
}

}  // namespace

Level level() { return slot(); }
void set_level(Level lvl) { slot() = lvl; }

void warn(const std::string& msg) {
  if (level() >= Level::kWarn) emit("warn", msg);
}

void info(const std::string& msg) {
  if (level() >= Level::kInfo) emit("info", msg);
}

void debug(const std::string& msg) {
  if (level() >= Level::kDebug) emit("debug", msg);
}

}  // namespace eqex::log
