#pragma once

#include <stdexcept>
#include <string>

namespace backbone_lens {

// Every user-facing failure in the library throws this; the message is the
// diagnostic (node id, CSV line number, ...) and needs no further decoding.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace backbone_lens
