#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace topodistill {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int cli_dispatch(int argc, char** argv);
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topodistill
