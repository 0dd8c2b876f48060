// Copyright 2026 The vqu Authors
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

namespace vqu {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidDimensionError : public Error {
public:
  using Error::Error;
};

/// Matrix or state failed a numerical validity check (unitarity, norm, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class PlacementError : public Error {
public:
  using Error::Error;
};

/// Wrong number of parameters supplied to a parameterized circuit.
class ArityError : public Error {
public:
  using Error::Error;
};

class CapacityError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

/// Photon number differs between input and output occupation vectors.
class ConservationError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent persisted data (records files, JSON).
class DataError : public Error {
public:
  using Error::Error;
};

} // namespace vqu
