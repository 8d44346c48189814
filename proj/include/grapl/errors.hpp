#pragma once

#include <stdexcept>
#include <string>

namespace grapl {

// Malformed or unreadable input data (files, formats, dimensions).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace grapl
