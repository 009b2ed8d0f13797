#pragma once

namespace rare_reach {

/// Toolkit version, "major.minor.patch".
const char* version();

}  // namespace rare_reach
