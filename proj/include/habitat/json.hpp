#pragma once
// Single include point and alias for nlohmann::json across the library.

#include <json.hpp>

namespace habitat {
using json = nlohmann::json;
}
