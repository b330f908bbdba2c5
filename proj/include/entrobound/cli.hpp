#pragma once

namespace entrobound::cli {

/// Entry point shared by the binary and the tests. Exit codes:
/// 0 success, 2 configuration error, 3 numerical failure, 4 guard violation.
int run(int argc, const char* const* argv);

}  // namespace entrobound::cli
