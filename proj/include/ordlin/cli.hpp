#pragma once

#include <iosfwd>

namespace ordlin {

/// Exit codes of the `ordlin` tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitCheckFailed = 3;  // verify or bench --check found a violation

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ordlin
