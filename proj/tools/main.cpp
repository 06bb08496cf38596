// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/cli.hpp"

int main(int argc, char** argv) { return gsc::cli::run(argc, argv); }
