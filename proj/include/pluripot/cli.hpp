#pragma once

#include <cstdint>
#include <string>

namespace pluripot::cli {

enum Exit { ok = 0, config_error = 1, no_convergence = 2 };

// Runs one command on a JSON config text, writing artifacts into out_dir.
// On failure `diag` holds a single-line diagnostic.
int run(const std::string& command, const std::string& config_text, const std::string& out_dir, std::uint64_t seed,
        std::string& diag);

int main(int argc, char** argv);

}  // namespace pluripot::cli
