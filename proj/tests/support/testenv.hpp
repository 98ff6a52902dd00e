#pragma once

#include <cstdlib>
#include <string>

inline std::string test_data_dir() {
  if (const char* env = std::getenv("STARSEM_DATA")) return env;
#ifdef STARSEM_TEST_DATA_DIR
  return STARSEM_TEST_DATA_DIR;
#else
  return "data";
#endif
}

inline std::string test_fixture_dir() {
#ifdef STARSEM_TEST_FIXTURE_DIR
  return STARSEM_TEST_FIXTURE_DIR;
#else
  return "tests/fixtures";
#endif
}
