/*
 * Copyright 2026 The Synapse Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SYNAPSE_ERRORS_HPP_
#define SYNAPSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace synapse {

/// Base class for every error raised by the simulator library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input: malformed files, illegal configuration, preconditions violated
/// by the caller. The CLI maps this to exit code 2.
class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// An internal protocol invariant was broken (unknown request id, double
/// completion, NOT_FOUND reaching the action unit). Always a simulator bug.
class ProtocolFault : public Error {
  public:
    explicit ProtocolFault(const std::string& msg) : Error(msg) {}
};

/// Parameter outside the domain of a model (e.g. non-positive USL denominator).
class DomainError : public Error {
  public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

class FitError : public Error {
  public:
    explicit FitError(const std::string& msg) : Error(msg) {}
};

/// The run did not drain within the timeout. `diagnostics()` carries a
/// human-readable dump of queue occupancies and FSM states.
class DeadlockError : public Error {
  public:
    DeadlockError(const std::string& msg, std::string diagnostics)
        : Error(msg), diagnostics_(std::move(diagnostics)) {}
    const std::string& diagnostics() const noexcept { return diagnostics_; }

  private:
    std::string diagnostics_;
};

} // namespace synapse

#endif // SYNAPSE_ERRORS_HPP_
