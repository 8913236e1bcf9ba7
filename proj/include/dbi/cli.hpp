#pragma once

namespace dbi {

// Command-line entry point. Exit codes: 0 success, 2 configuration error,
// 3 data error, 64 usage error.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace dbi
