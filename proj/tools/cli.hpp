#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tdesign::cli {

enum ExitCode : int { ok = 0, uncertified = 1, input_error = 2, numerical_error = 3 };

// args excludes the program name. Artifacts go to --output, else
// $TDESIGN_OUTPUT_DIR, else the working directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tdesign::cli
