#pragma once

#include <stdexcept>
#include <string>

namespace bfvae {

// Exit-code mapping lives in the CLI: usage/shape -> 2, io -> 3, numeric -> 4.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace bfvae
