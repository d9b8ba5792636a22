#pragma once

#include <filesystem>
#include <string>

#include "doctest.h"
#include "stvar/error.hpp"

// Evaluates `expr` and checks that it throws stvar::Error with `code`.
#define CHECK_FAILS_WITH(expr, code_)                            \
  do {                                                           \
    bool thrown_ = false;                                        \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const stvar::Error& e_) {                           \
      thrown_ = true;                                            \
      CHECK_MESSAGE(e_.code() == (code_), e_.what());            \
    }                                                            \
    CHECK_MESSAGE(thrown_, "expected " #code_ " from " #expr);   \
  } while (0)

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("stvar_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}
