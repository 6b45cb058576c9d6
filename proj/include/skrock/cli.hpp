#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skrock {

/// Run the command-line tool. Exit codes: 0 success, 1 configuration error,
/// 2 divergence during integration.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace skrock
