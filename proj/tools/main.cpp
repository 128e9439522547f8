// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "decorstory/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return decorstory::cli::run_cli(args, std::cout, std::cerr);
}
