// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

use clap::Parser;

fn main() {
    let cli = magnus_core::cli::Cli::parse();
    std::process::exit(magnus_core::cli::run(cli));
}
