#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "qcflow/error.hpp"
#include "qcflow/mesh.hpp"
#include "fixtures.hpp"

namespace qcflow::test {

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qcflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidArgument;
}

}  // namespace qcflow::test
