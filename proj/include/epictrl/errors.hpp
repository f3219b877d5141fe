/*
 * Copyright (C) 2022 epictrl contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef EPICTRL_ERRORS_HPP
#define EPICTRL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epictrl {

/// Base class of all engine errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameter value or combination.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Horizon too short for the requested object (empty support, short series).
class HorizonError : public Error {
public:
    using Error::Error;
};

/// Requested tests exceed the eligible pool, or an empty pool.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// A state is outside its admissible region.
class StateError : public Error {
public:
    using Error::Error;
};

/// An accounting identity or mass balance was violated.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Mismatched bin counts or array lengths.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Near-singular linear system in a multiplier solve.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// An iterative sweep hit its iteration cap. Carries the last distance so
/// callers can report how far from the fixed point the iteration stopped.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, int iterations, double last_distance)
        : Error(msg), iterations(iterations), last_distance(last_distance) {}
    int iterations;
    double last_distance;
};

/// File could not be read, parsed or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace epictrl

#endif
