#pragma once

#include <doctest.h>

#include <aesurv/error.hpp>

#include <string>
#include <utility>

namespace test_support {

// Runs fn, requires it to throw aesurv::Error with the given code, and hands
// back the message for further content checks.
template <typename Fn>
std::string expect_error(Fn&& fn, aesurv::ErrorCode code) {
  try {
    std::forward<Fn>(fn)();
  } catch (const aesurv::Error& e) {
    CHECK(e.code() == code);
    return e.what();
  }
  FAIL_CHECK("expected an aesurv::Error with code " << aesurv::to_string(code));
  return "";
}

}  // namespace test_support
