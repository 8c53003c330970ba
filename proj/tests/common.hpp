#pragma once

#include <gtest/gtest.h>

#include "wmmd/error.hpp"

#define EXPECT_ERRC(stmt, errc)                                              \
  do {                                                                       \
    try {                                                                    \
      stmt;                                                                  \
      ADD_FAILURE() << "no exception from " #stmt;                           \
    } catch (const ::wmmd::Error& e_) {                                      \
      EXPECT_EQ(e_.code(), errc) << e_.what();                               \
    }                                                                        \
  } while (0)
