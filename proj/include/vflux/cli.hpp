#pragma once

#include <string>
#include <vector>

namespace vflux::cli {

/// Entry point behind main(). Exit codes: 0 success, 1 partial batch failure,
/// 2 parameter/format/data errors, 3 validation errors.
int run(int argc, const char* const* argv);

/// Convenience for in-process invocation (tests).
int run(const std::vector<std::string>& args);

} // namespace vflux::cli
