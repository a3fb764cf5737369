/* Copyright 2026 The Roadeval Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ROADEVAL_ERRORS_HPP_
#define ROADEVAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace roadeval {

// Base of every error caused by bad input (files, flags, geometry). The CLI
// maps these to exit code 2; anything else is an internal error.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// A record cites an image or class that does not exist.
class ReferenceError : public InputError {
 public:
  using InputError::InputError;
};

class GeometryError : public InputError {
 public:
  using InputError::InputError;
};

class RangeError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class CorruptMaskError : public InputError {
 public:
  using InputError::InputError;
};

// Rescaling an RLE-only mask would need resampling; refused unless forced.
class LossyRescaleError : public InputError {
 public:
  using InputError::InputError;
};

// Oracle instance exceeds the exhaustive-search limit.
class SizeError : public InputError {
 public:
  using InputError::InputError;
};

class NonTerminationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace roadeval

#endif  // ROADEVAL_ERRORS_HPP_
