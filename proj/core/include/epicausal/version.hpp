#pragma once

namespace epicausal {

/// Library version as configured by the build ("major.minor.patch").
const char* version();

}  // namespace epicausal
