#include "rare_reach/version.hpp"

namespace rare_reach {

const char* version() { return RARE_REACH_VERSION_STRING; }

}  // namespace rare_reach
