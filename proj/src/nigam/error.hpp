#pragma once

#include <stdexcept>
#include <string>

namespace nigam {

// Base of everything the core throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, out-of-span data, invalid configuration.
class InputError : public Error {
public:
    using Error::Error;
};

// A numerical failure inside the sampler (non-finite state, indefinite precision).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace nigam
