#pragma once

#include <stdexcept>
#include <string>

namespace explika {

// Error taxonomy mirrored by the CLI exit codes: config 1, data 2, numeric 3.

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace explika
