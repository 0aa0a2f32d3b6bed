#pragma once

#include <stdexcept>
#include <string>

namespace tkre {

/// Problems with input data: unreadable files, schema mismatches, bad cells.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Problems with serialized artifacts: bad magic, unsupported versions,
/// truncated payloads.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tkre
