#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rad {

/// Entry point behind the `rad` binary. `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors and 1 on any other failure, in
/// which case `err` gets one line of the form "error: <Code>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rad
