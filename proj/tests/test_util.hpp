#pragma once

#include <doctest.h>

#include <oodspec/error.hpp>

// Asserts that evaluating `expr` throws oodspec::Error carrying exactly
// `expected_code`.
#define CHECK_FAILS_WITH(expr, expected_code)                              \
    do {                                                                   \
        bool caught_expected_ = false;                                     \
        try {                                                              \
            (void)(expr);                                                  \
        } catch (const ::oodspec::Error& err_) {                           \
            caught_expected_ = true;                                       \
            CHECK(::oodspec::errc_name(err_.code()) ==                     \
                  ::oodspec::errc_name(expected_code));                    \
        }                                                                  \
        CHECK_MESSAGE(caught_expected_,                                    \
                      "expected Error with code " #expected_code);         \
    } while (0)
