// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return svfap::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
