#pragma once

#include <ostream>

namespace propopt::cli {

/// Entry point behind the `propopt` executable. Returns 0 on success, 1 on failed
/// certificates or runtime errors, 2 on usage errors.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace propopt::cli
