// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/cli.hpp"

int main(int argc, char** argv) { return rvvtune::run_cli(argc, argv); }
