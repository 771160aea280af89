/*
   Copyright 2026 The kmix Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace kmix {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Iteration, quadrature or bracketing failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

// Grid, FFT or sample budget would exceed the configured memory limit.
class ResourceError : public Error {
public:
    ResourceError(const std::string& what, std::size_t advisory_cells)
        : Error(what), advisory_cells_(advisory_cells) {}
    std::size_t advisory_cells() const noexcept { return advisory_cells_; }

private:
    std::size_t advisory_cells_;
};

// Invalid user configuration; field() names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace kmix
