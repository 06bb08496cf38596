// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace gsc::log {

namespace {

Level parse_env() {
    const char* env = std::getenv("GSC_LOG");
    if (!env)
        return Level::Warn;
    if (std::strcmp(env, "debug") == 0)
        return Level::Debug;
    if (std::strcmp(env, "info") == 0)
        return Level::Info;
    if (std::strcmp(env, "warn") == 0)
        return Level::Warn;
    if (std::strcmp(env, "error") == 0)
        return Level::Error;
    if (std::strcmp(env, "off") == 0)
        return Level::Off;
    return Level::Warn;
}

Level g_level = parse_env();
std::mutex g_mutex;

const char* tag(Level lvl) {
    switch (lvl) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    default: return "?";
    }
}

} // namespace

Level level() { return g_level; }

void set_level(Level lvl) { g_level = lvl; }

void write(Level lvl, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[gsc:%s] %s\n", tag(lvl), msg.c_str());
}

} // namespace gsc::log
