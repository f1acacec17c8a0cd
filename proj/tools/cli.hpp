#ifndef ECHOMEM_TOOLS_CLI_HPP
#define ECHOMEM_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace echomem::cli {

/// Entry point of the `echomem` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace echomem::cli

#endif
