// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <string>

namespace gsc::log {

enum class Level : int { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Current threshold; initialized once from the GSC_LOG environment variable
// (debug|info|warn|error|off). Defaults to Warn.
Level level();
void set_level(Level lvl);

void write(Level lvl, const std::string& msg);

template <typename... Args>
void emit(Level lvl, Args&&... args) {
    if (lvl < level())
        return;
    std::ostringstream oss;
    (oss << ... << args);
    write(lvl, oss.str());
}

template <typename... Args>
void debug(Args&&... args) { emit(Level::Debug, std::forward<Args>(args)...); }
template <typename... Args>
void info(Args&&... args) { emit(Level::Info, std::forward<Args>(args)...); }
template <typename... Args>
void warn(Args&&... args) { emit(Level::Warn, std::forward<Args>(args)...); }
template <typename... Args>
void error(Args&&... args) { emit(Level::Error, std::forward<Args>(args)...); }

} // namespace gsc::log
