// Copyright 2026 The lpsnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

#include "lpsnet/config.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value left the artifact's configured range (depth, width, ratio, k cap).
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (spec files, profiles, CSV fixtures).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Mismatched or unrealizable tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Inputs that violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace lpsnet
