#include "epicausal/version.hpp"

#ifndef EPICAUSAL_VERSION
#define EPICAUSAL_VERSION "0.0.0"
#endif

namespace epicausal {

const char* version() { return EPICAUSAL_VERSION; }

}  // namespace epicausal
